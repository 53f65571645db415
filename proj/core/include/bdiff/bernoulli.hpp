#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bdiff {

/// Time-dependent growth rate mu(t) > 0 for t >= 0.
class GrowthRate {
public:
    struct Constant {
        double mu0;
    };
    /// a / (1 + t)
    struct RationalDecay {
        double a;
    };
    /// mu0 * exp(-beta t)
    struct ExpDecay {
        double mu0;
        double beta;
    };
    /// mu0 * (1 + cos(2 pi t))
    struct Seasonal {
        double mu0;
    };
    /// Piecewise-linear through (t, mu) samples, constant outside the range.
    struct Tabulated {
        std::vector<double> t;
        std::vector<double> mu;
        std::vector<double> cumulative;  // integral of mu from t[0] to t[k]
    };
    using Kind = std::variant<Constant, RationalDecay, ExpDecay, Seasonal, Tabulated>;

    static GrowthRate constant(double mu0);
    static GrowthRate rational(double a);
    static GrowthRate exponential(double mu0, double beta);
    static GrowthRate seasonal(double mu0);
    static GrowthRate tabulated(std::vector<std::pair<double, double>> samples);

    /// Parses `constant:1.0`, `rational:0.3`, `exp:1.0,0.5`, `seasonal:1.0`
    /// or `table:<path.csv>` (two columns t,mu; `#` lines ignored).
    static GrowthRate parse(const std::string& spec);

    double operator()(double t) const;
    /// Integral of mu over [0, t].
    double integral(double t) const;
    /// sup of mu over [0, t].
    double running_max(double t) const;

    const Kind& kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return std::holds_alternative<Constant>(kind_); }
    /// Canonical spec string; round-trips through parse() except for tables,
    /// which render inline as `table[t:mu;...]`.
    std::string describe() const;

private:
    explicit GrowthRate(Kind k) : kind_(std::move(k)) {}
    Kind kind_;
};

struct BernoulliParams {
    double alpha;  // diffusion exponent, > 1
    double gamma;  // S(0), > 0
    GrowthRate mu;
};

void validate(const BernoulliParams& p);

/// Integral of mu over [0, t]; t < 0 raises DomainError.
double integral_mu(const GrowthRate& mu, double t);

/// Closed-form temporal factor S(t) solving S' + S^alpha = mu(t) S, S(0) = gamma.
///
/// With a = alpha - 1 and I(t) the integral of mu,
///   S(t)^{-a} = e^{-a I(t)} (gamma^{-a} + a * int_0^t e^{a I(tau)} dtau).
/// The time integral is scaled by e^{-a I(t)} inside the quadrature so the
/// integrand stays in (0, 1] for nondecreasing I.
double eval_S(const BernoulliParams& p, double t);

/// Stationary value mu0^{1/(alpha-1)}; only defined for constant mu.
double equilibrium(const BernoulliParams& p);

/// Classical RK4 march of S' = mu S - S^alpha from S(0) = gamma. The last
/// step is shortened to land exactly on t.
double rk4_oracle(const BernoulliParams& p, double t, double dt);
/// One march sampling S at each of the nondecreasing times.
std::vector<double> rk4_oracle(const BernoulliParams& p, const std::vector<double>& times,
                               double dt);

}  // namespace bdiff
