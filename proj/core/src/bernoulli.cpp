#include "bdiff/bernoulli.hpp"

#include <cmath>
#include <sstream>

#include "bdiff/errors.hpp"

namespace bdiff {

namespace {

constexpr double kSimpsonRelTol = 1e-13;
constexpr std::size_t kSimpsonMaxPanels = std::size_t{1} << 20;

// Composite Simpson on [0, t], doubling the panel count until two successive
// estimates agree to kSimpsonRelTol, then returns the Richardson-corrected
// value. Interior samples are reused between levels.
template <class F>
double adaptive_simpson(F&& f, double t)
{
    std::size_t n = 8;
    double h = t / static_cast<double>(n);
    const double ends = f(0.0) + f(t);
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        (k % 2 ? odd : even) += f(static_cast<double>(k) * h);
    }
    double estimate = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    while (n < kSimpsonMaxPanels) {
        n *= 2;
        h *= 0.5;
        even += odd;
        odd = 0.0;
        for (std::size_t k = 1; k < n; k += 2) {
            odd += f(static_cast<double>(k) * h);
        }
        const double refined = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
        if (std::abs(refined - estimate) <= kSimpsonRelTol * std::abs(refined)) {
            return refined + (refined - estimate) / 15.0;
        }
        estimate = refined;
    }
    std::ostringstream os;
    os << "eval_S: quadrature did not converge on [0, " << t << "] with " << kSimpsonMaxPanels
       << " panels";
    throw ConvergenceError(os.str());
}

}  // namespace

void validate(const BernoulliParams& p)
{
    if (!(p.alpha > 1.0) || !std::isfinite(p.alpha)) {
        throw ValidationError("alpha must be finite and greater than 1");
    }
    if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) {
        throw ValidationError("gamma must be finite and positive");
    }
}

double integral_mu(const GrowthRate& mu, double t)
{
    if (!(t >= 0.0)) {
        throw DomainError("integral_mu: t must be nonnegative");
    }
    return mu.integral(t);
}

double eval_S(const BernoulliParams& p, double t)
{
    validate(p);
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw DomainError("eval_S: t must be finite and nonnegative");
    }
    if (t == 0.0) {
        return p.gamma;
    }
    const double a = p.alpha - 1.0;
    const double top = a * integral_mu(p.mu, t);
    const double scaled = adaptive_simpson(
        [&](double tau) { return std::exp(a * p.mu.integral(tau) - top); }, t);
    const double bracket = std::exp(-a * std::log(p.gamma) - top) + a * scaled;
    if (!(bracket > 0.0) || !std::isfinite(bracket)) {
        std::ostringstream os;
        os << "eval_S: closed-form bracket is " << bracket << " at t = " << t;
        throw SingularityError(os.str(), t);
    }
    return std::exp(-std::log(bracket) / a);
}

double equilibrium(const BernoulliParams& p)
{
    validate(p);
    const auto* c = std::get_if<GrowthRate::Constant>(&p.mu.kind());
    if (c == nullptr) {
        throw UnsupportedError("equilibrium: only defined for a constant growth rate");
    }
    return std::pow(c->mu0, 1.0 / (p.alpha - 1.0));
}

std::vector<double> rk4_oracle(const BernoulliParams& p, const std::vector<double>& times,
                               double dt)
{
    validate(p);
    if (!(dt > 0.0)) {
        throw DomainError("rk4_oracle: dt must be positive");
    }
    const auto rhs = [&](double t, double s) { return p.mu(t) * s - std::pow(s, p.alpha); };
    std::vector<double> out;
    out.reserve(times.size());
    double t = 0.0;
    double s = p.gamma;
    for (double target : times) {
        if (!(target >= t)) {
            throw DomainError("rk4_oracle: times must be nonnegative and nondecreasing");
        }
        while (t < target) {
            const double step = std::min(dt, target - t);
            const double k1 = rhs(t, s);
            const double k2 = rhs(t + 0.5 * step, s + 0.5 * step * k1);
            const double k3 = rhs(t + 0.5 * step, s + 0.5 * step * k2);
            const double k4 = rhs(t + step, s + step * k3);
            s += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            // Snap to the target so accumulated rounding cannot leave a sliver step.
            t = (target - (t + step) < 1e-3 * dt) ? target : t + step;
            if (!(s > 0.0) || !std::isfinite(s)) {
                std::ostringstream os;
                os << "rk4_oracle: S left (0, inf) at t = " << t << "; reduce dt";
                throw InstabilityError(os.str());
            }
        }
        out.push_back(s);
    }
    return out;
}

double rk4_oracle(const BernoulliParams& p, double t, double dt)
{
    return rk4_oracle(p, std::vector<double>{t}, dt).front();
}

}  // namespace bdiff
