#include "bdiff/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bdiff/errors.hpp"

namespace bdiff {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kRelFloor = 1e-14;
constexpr int kMaxRestarts = 4;
constexpr int kMaxEigenIterations = 10000;

// y = -Lap x on a Dirichlet grid.
void apply_operator(const Grid2D& x, Grid2D& y)
{
    const std::size_t nx = x.nx();
    const std::size_t ny = x.ny();
    const double inv_h2 = 1.0 / (x.h() * x.h());
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double w = i > 0 ? x(i - 1, j) : 0.0;
            const double e = i + 1 < nx ? x(i + 1, j) : 0.0;
            const double s = j > 0 ? x(i, j - 1) : 0.0;
            const double n = j + 1 < ny ? x(i, j + 1) : 0.0;
            y(i, j) = (4.0 * x(i, j) - e - w - n - s) * inv_h2;
        }
    }
}

double dot(const Grid2D& a, const Grid2D& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

double true_residual(const Grid2D& x, const Grid2D& b, Grid2D& scratch)
{
    apply_operator(x, scratch);
    double m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        m = std::max(m, std::abs(b[k] - scratch[k]));
    }
    return m;
}

// Rounding floor of the true residual for a solution of size ||x||_inf.
double residual_noise(const Grid2D& x, double rhs_norm)
{
    return 64.0 * kEps * (rhs_norm + 8.0 * norm_inf(x) / (x.h() * x.h()));
}

void require_dirichlet(const Grid2D& g, const char* where)
{
    if (g.bc() != Boundary::DirichletZero) {
        throw ContractViolation(std::string(where) + ": grid must be in DirichletZero mode");
    }
}

}  // namespace

Domain Domain::unit_square(std::size_t n)
{
    return Domain{n, n, 1.0 / static_cast<double>(n + 1)};
}

Grid2D Domain::zeros() const
{
    return Grid2D(nx, ny, h, Boundary::DirichletZero);
}

Grid2D Domain::filled(double value) const
{
    return Grid2D::filled(nx, ny, h, Boundary::DirichletZero, value);
}

Grid2D solve_poisson(const Grid2D& rhs, double tol, const Grid2D* initial_guess)
{
    require_dirichlet(rhs, "solve_poisson");
    if (!(tol >= 0.0)) {
        throw ValidationError("solve_poisson: tol must be nonnegative");
    }
    const double rhs_norm = norm_inf(rhs);
    Grid2D x = Grid2D::zeros_like(rhs);
    if (initial_guess != nullptr) {
        require_same_layout(rhs, *initial_guess, "solve_poisson");
        x = *initial_guess;
    } else if (rhs_norm == 0.0) {
        return x;
    }

    const std::size_t n = rhs.size();
    const double inv_diag = rhs.h() * rhs.h() / 4.0;
    const double target = std::max(tol, kRelFloor * rhs_norm);
    const std::size_t cap = 10 * n;

    Grid2D r = Grid2D::zeros_like(rhs);
    Grid2D z = Grid2D::zeros_like(rhs);
    Grid2D p = Grid2D::zeros_like(rhs);
    Grid2D ap = Grid2D::zeros_like(rhs);

    std::size_t total = 0;
    for (int restart = 0; restart <= kMaxRestarts; ++restart) {
        apply_operator(x, ap);
        double r_norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            r[k] = rhs[k] - ap[k];
            z[k] = r[k] * inv_diag;
            p[k] = z[k];
            r_norm = std::max(r_norm, std::abs(r[k]));
        }
        double rz = dot(r, z);
        while (r_norm > target && total < cap && rz > 0.0) {
            apply_operator(p, ap);
            const double step = rz / dot(p, ap);
            r_norm = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                x[k] += step * p[k];
                r[k] -= step * ap[k];
                z[k] = r[k] * inv_diag;
                r_norm = std::max(r_norm, std::abs(r[k]));
            }
            const double rz_next = dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t k = 0; k < n; ++k) {
                p[k] = z[k] + beta * p[k];
            }
            ++total;
        }
        const double actual = true_residual(x, rhs, ap);
        if (actual <= std::max(tol, residual_noise(x, rhs_norm))) {
            return x;
        }
        if (total >= cap) {
            break;
        }
    }
    std::ostringstream os;
    os << "solve_poisson: no convergence to " << tol << " within " << cap << " iterations";
    throw ConvergenceError(os.str());
}

Grid2D torsion(const Domain& domain, double tol)
{
    return solve_poisson(domain.filled(1.0), tol);
}

EigenPair principal_eigenpair(const Domain& domain, double tol)
{
    if (!(tol > 0.0)) {
        throw ValidationError("principal_eigenpair: tol must be positive");
    }
    Grid2D phi = domain.filled(1.0);
    Grid2D aphi = domain.zeros();
    const double floor = 64.0 * kEps * 8.0 / (domain.h * domain.h);
    double lambda_prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= kMaxEigenIterations; ++it) {
        phi = solve_poisson(phi, 0.0, &phi);
        const double peak = max_value(phi);
        for (double& v : phi.values()) {
            v /= peak;
        }
        apply_operator(phi, aphi);
        const double lambda = dot(phi, aphi) / dot(phi, phi);
        double res = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            res = std::max(res, std::abs(aphi[k] - lambda * phi[k]));
        }
        if (std::abs(lambda - lambda_prev) < tol * lambda && res <= std::max(tol * lambda, floor)) {
            return EigenPair{lambda, std::move(phi), it, res};
        }
        lambda_prev = lambda;
    }
    throw ConvergenceError("principal_eigenpair: inverse iteration did not converge");
}

BarrierConstants barrier_constants(const EigenPair& eig, const Grid2D& w, double alpha)
{
    if (!(alpha > 1.0)) {
        throw ValidationError("barrier_constants: alpha must exceed 1");
    }
    const double phi_max = max_value(eig.phi1);
    const double sigma = 1.0 / (std::pow(eig.lambda1, alpha / (alpha - 1.0)) * phi_max);
    const double c = std::max(sigma * eig.lambda1 * phi_max, std::pow(max_value(w), 1.0 / (alpha - 1.0)));
    return BarrierConstants{sigma, c};
}

Grid2D nonneg_power(const Grid2D& u, double p)
{
    Grid2D out = u;
    for (double& v : out.values()) {
        if (v < 0.0) {
            if (v > -1e-14) {
                v = 0.0;
                continue;
            }
            std::ostringstream os;
            os << "negative value " << v << " cannot be raised to a fractional power";
            throw DomainError(os.str());
        }
        v = v == 0.0 ? 0.0 : std::pow(v, p);
    }
    return out;
}

Grid2D signed_defect(const Grid2D& u, double alpha)
{
    require_dirichlet(u, "signed_defect");
    Grid2D out = Grid2D::zeros_like(u);
    apply_operator(u, out);
    const Grid2D root = nonneg_power(u, 1.0 / alpha);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] -= root[k];
    }
    return out;
}

double residual(const Grid2D& u, double alpha)
{
    return norm_inf(signed_defect(u, alpha));
}

EllipticSolution solve_brezis_oswald(const Domain& domain, double alpha, double tol, int max_iter,
                                     StartFrom start)
{
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
        throw ValidationError("solve_brezis_oswald: alpha must be finite and exceed 1");
    }
    if (!(tol > 0.0)) {
        throw ValidationError("solve_brezis_oswald: tol must be positive");
    }
    if (max_iter < 1) {
        throw ValidationError("solve_brezis_oswald: max_iter must be at least 1");
    }

    const EigenPair eig = principal_eigenpair(domain, 1e-12);
    const Grid2D w = torsion(domain, 0.0);
    const BarrierConstants k = barrier_constants(eig, w, alpha);

    Grid2D sub = eig.phi1;
    for (double& v : sub.values()) {
        v *= k.sigma;
    }
    Grid2D sup = w;
    for (double& v : sup.values()) {
        v *= k.c;
    }

    const bool upward = start == StartFrom::Subsolution;
    Grid2D u = upward ? sub : sup;
    EllipticSolution sol{.u = u,
                         .sub = sub,
                         .sup = sup,
                         .sigma = k.sigma,
                         .c = k.c,
                         .lambda1 = eig.lambda1,
                         .residual_history = {},
                         .increment_history = {},
                         .iterations = 0,
                         .start = start,
                         .worst_step = upward ? std::numeric_limits<double>::infinity()
                                              : -std::numeric_limits<double>::infinity(),
                         .max_above_sup = -std::numeric_limits<double>::infinity(),
                         .max_below_sub = -std::numeric_limits<double>::infinity(),
                         .sub_defect = max_value(signed_defect(sub, alpha)),
                         .sup_defect = min_value(signed_defect(sup, alpha))};

    for (int it = 1; it <= max_iter; ++it) {
        Grid2D next = solve_poisson(nonneg_power(u, 1.0 / alpha), 0.0, &u);
        double increment = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            const double step = next[i] - u[i];
            increment = std::max(increment, std::abs(step));
            sol.worst_step = upward ? std::min(sol.worst_step, step) : std::max(sol.worst_step, step);
            sol.max_above_sup = std::max(sol.max_above_sup, next[i] - sup[i]);
            sol.max_below_sub = std::max(sol.max_below_sub, sub[i] - next[i]);
        }
        u = std::move(next);
        const double res = residual(u, alpha);
        sol.increment_history.push_back(increment);
        sol.residual_history.push_back(res);
        sol.iterations = it;
        if (increment < tol && res < tol) {
            sol.u = std::move(u);
            return sol;
        }
    }
    std::ostringstream os;
    os << "solve_brezis_oswald: no convergence to " << tol << " in " << max_iter
       << " iterations (last residual " << sol.residual_history.back() << ")";
    throw ConvergenceError(os.str(), sol.residual_history);
}

}  // namespace bdiff
