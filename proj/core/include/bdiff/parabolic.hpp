#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bdiff/bernoulli.hpp"
#include "bdiff/elliptic.hpp"
#include "bdiff/errors.hpp"
#include "bdiff/grid.hpp"

namespace bdiff {

/// Sign of the reaction term: +mu v for the population model, -mu v for the
/// absorbing variant used by the denoiser.
enum class ReactionSign { Growth, Absorption };

std::string to_string(ReactionSign sign);
ReactionSign reaction_sign_from_string(const std::string& s);

struct EvolutionTrace {
    std::vector<double> times;
    std::vector<Grid2D> snapshots;
    double dt = 0.0;
    double alpha = 1.0;
    GrowthRate mu = GrowthRate::constant(1.0);
    ReactionSign sign = ReactionSign::Growth;
    std::size_t steps = 0;  // explicit steps taken
};

/// Thrown when a step is refused mid-run; carries everything computed so far.
class EvolutionAborted : public InstabilityError {
public:
    EvolutionAborted(const std::string& what, EvolutionTrace partial)
        : InstabilityError(what), partial_(std::move(partial)) {}
    const EvolutionTrace& partial() const noexcept { return partial_; }

private:
    EvolutionTrace partial_;
};

/// h^2 / (4 alpha max(v)^{alpha-1} + 1e-12): the explicit-Euler bound for the
/// linearised diffusivity alpha v^{alpha-1}.
double cfl_max_dt(const Grid2D& v, double alpha);

/// v + dt (Lap_h(v^alpha) +/- mu(t) v), clipped below at 0. The Laplacian
/// follows v's boundary mode. Refuses (InstabilityError) when dt exceeds
/// cfl_max_dt(v, alpha).
Grid2D step_explicit(const Grid2D& v, double t, double dt, double alpha, const GrowthRate& mu,
                     ReactionSign sign);

/// S(t) u^{1/alpha}.
Grid2D separable_solution(const Grid2D& u, const BernoulliParams& p, double t);

/// Forward-Euler march to T. Snapshots at t = 0, every `snapshot_every` steps
/// and at T. A T that is not a multiple of dt gets a shortened final step.
EvolutionTrace evolve(const Grid2D& v0, double T, double dt, double alpha, const GrowthRate& mu,
                      ReactionSign sign, std::size_t snapshot_every);

struct Location {
    std::size_t i = 0;
    std::size_t j = 0;
    double t = 0.0;
};

struct ComparisonReport {
    double max_violation = 0.0;  // max over snapshots and points of v - w (clamped at 0)
    std::size_t violations = 0;  // points with v > w + tolerance
    Location worst;
    std::size_t snapshots_checked = 0;
    double tolerance = 1e-10;
    bool ordered() const noexcept { return violations == 0; }
};

/// Checks v <= w + 1e-10 at every snapshot. Rejects (ValidationError) traces
/// that do not share grid, times and dt, or whose inputs are not ordered
/// (v0 <= w0, mu_v <= mu_w sampled across the horizon).
ComparisonReport verify_comparison(const EvolutionTrace& v, const EvolutionTrace& w);

struct SandwichReport {
    double max_lower_violation = 0.0;  // max of S sub^{1/alpha} - v, clamped at 0
    double max_upper_violation = 0.0;  // max of v - S sup^{1/alpha}, clamped at 0
    double min_lower_margin = 0.0;     // min of v - S sub^{1/alpha}
    double min_upper_margin = 0.0;     // min of S sup^{1/alpha} - v
    Location lower_argmax;
    Location upper_argmax;
    std::size_t snapshots_checked = 0;
    double tolerance = 1e-8;
    bool sandwiched() const noexcept
    {
        return max_lower_violation <= tolerance && max_upper_violation <= tolerance;
    }
};

/// Checks S(t) sub^{1/alpha} - 1e-8 <= v <= S(t) sup^{1/alpha} + 1e-8 at every
/// snapshot, with S from eval_S. Verification covers snapshots only.
SandwichReport verify_sandwich(const EvolutionTrace& trace, const EllipticSolution& sol,
                               const BernoulliParams& p);

/// (1 - weight) S(0) sub^{1/alpha} + weight S(0) sup^{1/alpha}; weight may be a
/// scalar or, through the Grid2D overload, a field with values in [0, 1].
Grid2D blended_initial_data(const EllipticSolution& sol, const BernoulliParams& p, double weight);
Grid2D blended_initial_data(const EllipticSolution& sol, const BernoulliParams& p,
                            const Grid2D& weight);

struct MonotoneSequence {
    EvolutionTrace trace;            // converged iterate
    int iterations = 0;
    std::vector<double> gap_history;  // sup over snapshots of |v^(m) - v^(m-1)|
    // Ordering diagnostics over every stored step. For a sequence seeded from
    // the subsolution worst_step = min (v^(m) - v^(m-1)) should stay >= 0; for
    // the supersolution seed it is the max and should stay <= 0.
    double worst_step = 0.0;
};

enum class Seed { Lower, Upper };

/// Monotone linearised iteration
///   d/dt v^(m) = Lap((v^(m))^alpha) - c(t) v^(m) + (c(t) + mu(t)) v^(m-1),
///   v^(m)(0) = v0, c(t) = sup_{s<=t} mu(s),
/// each iterate marched explicitly with the source lagged. The seed iterate is
/// S_n profile^{1/alpha} where S_n is the forward-Euler recursion of the
/// Bernoulli ODE on the same time grid, so that it is an exact sub- or
/// supersolution of the discrete march. Stops when the sup over snapshots of
/// successive differences falls below tol; otherwise ConvergenceError carrying
/// the gap history.
MonotoneSequence monotone_iterate(const Grid2D& v0, double T, double dt, const BernoulliParams& p,
                                  const EllipticSolution& barriers, Seed seed,
                                  std::size_t snapshot_every, int m_max, double tol);

struct MonotoneBracket {
    MonotoneSequence lower;
    MonotoneSequence upper;
    double limit_gap = 0.0;  // sup over snapshots of |upper - lower| at convergence
    double min_order_gap = 0.0;  // min over snapshots of upper - lower at convergence
};

/// Runs both sequences, concurrently when `threads` > 1.
MonotoneBracket monotone_bracket(const Grid2D& v0, double T, double dt, const BernoulliParams& p,
                                 const EllipticSolution& barriers, std::size_t snapshot_every,
                                 int m_max, double tol, int threads = 1);

}  // namespace bdiff
