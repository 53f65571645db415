#include "bdiff/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "bdiff/numeric.hpp"

namespace bdiff {

namespace {

constexpr double kCflEpsilon = 1e-12;
constexpr double kOrderSlack = 1e-12;

void require_nonnegative(const Grid2D& v, const char* where)
{
    for (double x : v.values()) {
        if (x < -1e-14 || std::isnan(x)) {
            std::ostringstream os;
            os << where << ": field has negative or NaN entry " << x;
            throw DomainError(os.str());
        }
    }
}

// max(0, v + dt (Lap(v^alpha) + linear v + source_coeff source)).
Grid2D advance(const Grid2D& v, double dt, double alpha, double linear, const Grid2D* source,
               double source_coeff)
{
    Grid2D powered = v;
    for (double& x : powered.values()) {
        x = power_nonneg(std::max(x, 0.0), alpha);
    }
    Grid2D out = laplacian(powered);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double rate = out[k] + linear * v[k];
        if (source != nullptr) {
            rate += source_coeff * (*source)[k];
        }
        out[k] = std::max(0.0, v[k] + dt * rate);
    }
    return out;
}

void require_stable(const Grid2D& v, double dt, double alpha, double t)
{
    const double bound = cfl_max_dt(v, alpha);
    if (dt > bound) {
        std::ostringstream os;
        os << "explicit step refused at t = " << t << ": dt = " << dt
           << " exceeds the stability bound " << bound;
        throw InstabilityError(os.str());
    }
}

struct TimeGrid {
    std::size_t steps;
    double dt;
    double T;
    double time(std::size_t n) const { return n == steps ? T : static_cast<double>(n) * dt; }
    double width(std::size_t n) const { return time(n + 1) - time(n); }
};

TimeGrid make_time_grid(double T, double dt)
{
    if (!(T >= 0.0) || !std::isfinite(T)) {
        throw ValidationError("final time T must be finite and nonnegative");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ValidationError("time step dt must be positive");
    }
    std::size_t steps = 0;
    if (T > 0.0) {
        steps = static_cast<std::size_t>(std::ceil(T / dt * (1.0 - 1e-12)));
        steps = std::max<std::size_t>(steps, 1);
    }
    return TimeGrid{steps, dt, T};
}

bool is_snapshot(std::size_t n, const TimeGrid& tg, std::size_t every)
{
    return n == 0 || n == tg.steps || n % every == 0;
}

void check_barrier_ordering(const Grid2D& v0, const Grid2D& lower, const Grid2D& upper,
                            const char* where)
{
    require_same_layout(v0, lower, where);
    for (std::size_t k = 0; k < v0.size(); ++k) {
        if (v0[k] < lower[k] - kOrderSlack || v0[k] > upper[k] + kOrderSlack) {
            std::ostringstream os;
            os << where << ": initial data leaves the barrier interval at index " << k << " (v0 = "
               << v0[k] << ", bounds [" << lower[k] << ", " << upper[k] << "])";
            throw ValidationError(os.str());
        }
    }
}

Grid2D scaled(const Grid2D& g, double s)
{
    Grid2D out = g;
    for (double& x : out.values()) {
        x *= s;
    }
    return out;
}

}  // namespace

std::string to_string(ReactionSign sign)
{
    return sign == ReactionSign::Growth ? "growth" : "absorption";
}

ReactionSign reaction_sign_from_string(const std::string& s)
{
    if (s == "growth") {
        return ReactionSign::Growth;
    }
    if (s == "absorption") {
        return ReactionSign::Absorption;
    }
    throw ValidationError("unknown reaction sign '" + s + "' (expected growth|absorption)");
}

double cfl_max_dt(const Grid2D& v, double alpha)
{
    const double peak = std::max(max_value(v), 0.0);
    const double diffusivity = alpha * (alpha == 1.0 ? 1.0 : std::pow(peak, alpha - 1.0));
    return v.h() * v.h() / (4.0 * diffusivity + kCflEpsilon);
}

Grid2D step_explicit(const Grid2D& v, double t, double dt, double alpha, const GrowthRate& mu,
                     ReactionSign sign)
{
    require_nonnegative(v, "step_explicit");
    require_stable(v, dt, alpha, t);
    const double rate = sign == ReactionSign::Growth ? mu(t) : -mu(t);
    return advance(v, dt, alpha, rate, nullptr, 0.0);
}

Grid2D separable_solution(const Grid2D& u, const BernoulliParams& p, double t)
{
    return scaled(nonneg_power(u, 1.0 / p.alpha), eval_S(p, t));
}

EvolutionTrace evolve(const Grid2D& v0, double T, double dt, double alpha, const GrowthRate& mu,
                      ReactionSign sign, std::size_t snapshot_every)
{
    if (!(alpha >= 1.0)) {
        throw ValidationError("evolve: alpha must be at least 1");
    }
    if (snapshot_every == 0) {
        throw ValidationError("evolve: snapshot_every must be positive");
    }
    require_nonnegative(v0, "evolve");
    const TimeGrid tg = make_time_grid(T, dt);

    EvolutionTrace trace;
    trace.dt = dt;
    trace.alpha = alpha;
    trace.mu = mu;
    trace.sign = sign;
    trace.times.push_back(0.0);
    trace.snapshots.push_back(v0);

    Grid2D v = v0;
    for (std::size_t n = 0; n < tg.steps; ++n) {
        try {
            v = step_explicit(v, tg.time(n), tg.width(n), alpha, mu, sign);
        } catch (const NumericalError& e) {
            throw EvolutionAborted(e.what(), std::move(trace));
        }
        trace.steps = n + 1;
        if (is_snapshot(n + 1, tg, snapshot_every)) {
            trace.times.push_back(tg.time(n + 1));
            trace.snapshots.push_back(v);
        }
    }
    return trace;
}

ComparisonReport verify_comparison(const EvolutionTrace& v, const EvolutionTrace& w)
{
    if (v.snapshots.empty() || w.snapshots.empty()) {
        throw ValidationError("verify_comparison: empty trace");
    }
    require_same_layout(v.snapshots.front(), w.snapshots.front(), "verify_comparison");
    if (v.times != w.times || v.dt != w.dt) {
        throw ValidationError("verify_comparison: traces must share snapshot times and dt");
    }
    if (v.alpha != w.alpha || v.sign != w.sign) {
        throw ValidationError("verify_comparison: traces must share alpha and reaction sign");
    }
    const Grid2D& v0 = v.snapshots.front();
    const Grid2D& w0 = w.snapshots.front();
    for (std::size_t k = 0; k < v0.size(); ++k) {
        if (v0[k] > w0[k]) {
            std::ostringstream os;
            os << "verify_comparison: initial data not ordered at index " << k << " (" << v0[k]
               << " > " << w0[k] << ")";
            throw ValidationError(os.str());
        }
    }
    // For +mu v a larger rate dominates; for -mu v the order flips.
    const double T = v.times.back();
    constexpr int kSamples = 1000;
    for (int s = 0; s <= kSamples; ++s) {
        const double t = T * s / kSamples;
        const double lhs = v.mu(t);
        const double rhs = w.mu(t);
        const bool ok = v.sign == ReactionSign::Growth ? lhs <= rhs : lhs >= rhs;
        if (!ok) {
            std::ostringstream os;
            os << "verify_comparison: growth rates not ordered at t = " << t << " (" << lhs
               << " vs " << rhs << ")";
            throw ValidationError(os.str());
        }
    }

    ComparisonReport report;
    for (std::size_t s = 0; s < v.snapshots.size(); ++s) {
        const Grid2D& a = v.snapshots[s];
        const Grid2D& b = w.snapshots[s];
        for (std::size_t j = 0; j < a.ny(); ++j) {
            for (std::size_t i = 0; i < a.nx(); ++i) {
                const double excess = a(i, j) - b(i, j);
                if (excess > report.max_violation) {
                    report.max_violation = excess;
                    report.worst = Location{i, j, v.times[s]};
                }
                if (excess > report.tolerance) {
                    ++report.violations;
                }
            }
        }
        ++report.snapshots_checked;
    }
    return report;
}

SandwichReport verify_sandwich(const EvolutionTrace& trace, const EllipticSolution& sol,
                               const BernoulliParams& p)
{
    validate(p);
    if (trace.snapshots.empty()) {
        throw ValidationError("verify_sandwich: empty trace");
    }
    if (trace.alpha != p.alpha) {
        throw ValidationError("verify_sandwich: trace alpha differs from the barrier alpha");
    }
    if (trace.sign != ReactionSign::Growth) {
        throw ValidationError("verify_sandwich: barriers apply to the growth sign only");
    }
    const Grid2D lower = nonneg_power(sol.sub, 1.0 / p.alpha);
    const Grid2D upper = nonneg_power(sol.sup, 1.0 / p.alpha);
    check_barrier_ordering(trace.snapshots.front(), scaled(lower, p.gamma), scaled(upper, p.gamma),
                           "verify_sandwich");

    SandwichReport report;
    report.min_lower_margin = std::numeric_limits<double>::infinity();
    report.min_upper_margin = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < trace.snapshots.size(); ++s) {
        const double t = trace.times[s];
        const double S = eval_S(p, t);
        const Grid2D& v = trace.snapshots[s];
        for (std::size_t j = 0; j < v.ny(); ++j) {
            for (std::size_t i = 0; i < v.nx(); ++i) {
                const double lo = v(i, j) - S * lower(i, j);
                const double hi = S * upper(i, j) - v(i, j);
                if (lo < report.min_lower_margin) {
                    report.min_lower_margin = lo;
                    report.lower_argmax = Location{i, j, t};
                }
                if (hi < report.min_upper_margin) {
                    report.min_upper_margin = hi;
                    report.upper_argmax = Location{i, j, t};
                }
            }
        }
        ++report.snapshots_checked;
    }
    report.max_lower_violation = std::max(0.0, -report.min_lower_margin);
    report.max_upper_violation = std::max(0.0, -report.min_upper_margin);
    return report;
}

Grid2D blended_initial_data(const EllipticSolution& sol, const BernoulliParams& p, double weight)
{
    return blended_initial_data(sol, p, Grid2D::filled(sol.sub.nx(), sol.sub.ny(), sol.sub.h(),
                                                       sol.sub.bc(), weight));
}

Grid2D blended_initial_data(const EllipticSolution& sol, const BernoulliParams& p,
                            const Grid2D& weight)
{
    validate(p);
    require_same_layout(sol.sub, weight, "blended_initial_data");
    const Grid2D lower = nonneg_power(sol.sub, 1.0 / p.alpha);
    const Grid2D upper = nonneg_power(sol.sup, 1.0 / p.alpha);
    Grid2D out = Grid2D::zeros_like(lower);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double theta = weight[k];
        if (!(theta >= 0.0 && theta <= 1.0)) {
            throw ValidationError("blended_initial_data: weights must lie in [0, 1]");
        }
        out[k] = p.gamma * ((1.0 - theta) * lower[k] + theta * upper[k]);
    }
    return out;
}

MonotoneSequence monotone_iterate(const Grid2D& v0, double T, double dt, const BernoulliParams& p,
                                  const EllipticSolution& barriers, Seed seed,
                                  std::size_t snapshot_every, int m_max, double tol)
{
    validate(p);
    if (snapshot_every == 0 || m_max < 1 || !(tol > 0.0)) {
        throw ValidationError("monotone_iterate: need snapshot_every >= 1, m_max >= 1, tol > 0");
    }
    const double alpha = p.alpha;
    const Grid2D lower = nonneg_power(barriers.sub, 1.0 / alpha);
    const Grid2D upper = nonneg_power(barriers.sup, 1.0 / alpha);
    check_barrier_ordering(v0, scaled(lower, p.gamma), scaled(upper, p.gamma), "monotone_iterate");
    const TimeGrid tg = make_time_grid(T, dt);
    const Grid2D& profile = seed == Seed::Lower ? lower : upper;

    // Seed iterate: discrete Bernoulli factor times the barrier profile.
    std::vector<Grid2D> previous;
    previous.reserve(tg.steps + 1);
    double S = p.gamma;
    previous.push_back(scaled(profile, S));
    for (std::size_t n = 0; n < tg.steps; ++n) {
        const double t = tg.time(n);
        S += tg.width(n) * (p.mu(t) * S - std::pow(S, alpha));
        if (!(S > 0.0) || !std::isfinite(S)) {
            throw InstabilityError("monotone_iterate: discrete Bernoulli factor left (0, inf)");
        }
        previous.push_back(scaled(profile, S));
    }

    MonotoneSequence result;
    const bool rising = seed == Seed::Lower;
    result.worst_step =
        rising ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();

    std::vector<Grid2D> current(previous.size(), v0);
    for (int m = 1; m <= m_max; ++m) {
        current[0] = v0;
        for (std::size_t n = 0; n < tg.steps; ++n) {
            const double t = tg.time(n);
            const double width = tg.width(n);
            require_stable(current[n], width, alpha, t);
            const double c = p.mu.running_max(t);
            current[n + 1] = advance(current[n], width, alpha, -c, &previous[n], c + p.mu(t));
        }
        double gap = 0.0;
        for (std::size_t n = 0; n <= tg.steps; ++n) {
            const Grid2D& a = current[n];
            const Grid2D& b = previous[n];
            const bool snap = is_snapshot(n, tg, snapshot_every);
            // The seed does not satisfy v(0) = v0, so its t = 0 slice is not
            // part of the ordering chain.
            const bool order = n > 0 || m > 1;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double step = a[k] - b[k];
                if (order) {
                    result.worst_step = rising ? std::min(result.worst_step, step)
                                               : std::max(result.worst_step, step);
                }
                if (snap) {
                    gap = std::max(gap, std::abs(step));
                }
            }
        }
        result.gap_history.push_back(gap);
        result.iterations = m;
        if (gap < tol) {
            EvolutionTrace& trace = result.trace;
            trace.dt = dt;
            trace.alpha = alpha;
            trace.mu = p.mu;
            trace.sign = ReactionSign::Growth;
            trace.steps = tg.steps;
            for (std::size_t n = 0; n <= tg.steps; ++n) {
                if (is_snapshot(n, tg, snapshot_every)) {
                    trace.times.push_back(tg.time(n));
                    trace.snapshots.push_back(std::move(current[n]));
                }
            }
            return result;
        }
        std::swap(previous, current);
    }
    std::ostringstream os;
    os << "monotone_iterate: no convergence to " << tol << " in " << m_max << " iterations";
    throw ConvergenceError(os.str(), result.gap_history);
}

MonotoneBracket monotone_bracket(const Grid2D& v0, double T, double dt, const BernoulliParams& p,
                                 const EllipticSolution& barriers, std::size_t snapshot_every,
                                 int m_max, double tol, int threads)
{
    const auto run = [&](Seed seed) {
        return monotone_iterate(v0, T, dt, p, barriers, seed, snapshot_every, m_max, tol);
    };
    MonotoneBracket out;
    if (threads > 1) {
        auto upper = std::async(std::launch::async, run, Seed::Upper);
        out.lower = run(Seed::Lower);
        out.upper = upper.get();
    } else {
        out.lower = run(Seed::Lower);
        out.upper = run(Seed::Upper);
    }
    out.min_order_gap = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < out.lower.trace.snapshots.size(); ++s) {
        const Grid2D& lo = out.lower.trace.snapshots[s];
        const Grid2D& hi = out.upper.trace.snapshots[s];
        for (std::size_t k = 0; k < lo.size(); ++k) {
            out.limit_gap = std::max(out.limit_gap, std::abs(hi[k] - lo[k]));
            out.min_order_gap = std::min(out.min_order_gap, hi[k] - lo[k]);
        }
    }
    return out;
}

}  // namespace bdiff
