#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bdiff/grid.hpp"

namespace bdiff {

/// Rectangular interior lattice with homogeneous Dirichlet data.
struct Domain {
    std::size_t nx;
    std::size_t ny;
    double h;

    /// n x n interior points on the unit square, h = 1/(n+1).
    static Domain unit_square(std::size_t n);
    Grid2D zeros() const;
    Grid2D filled(double value) const;
};

struct EigenPair {
    double lambda1;
    Grid2D phi1;  // positive, max exactly 1
    int iterations;
    double residual;  // ||-Lap phi1 - lambda1 phi1||_inf
};

struct BarrierConstants {
    double sigma;
    double c;
};

enum class StartFrom { Subsolution, Supersolution };

struct EllipticSolution {
    Grid2D u;
    Grid2D sub;  // sigma * phi1
    Grid2D sup;  // c * w
    double sigma;
    double c;
    double lambda1;
    std::vector<double> residual_history;   // ||-Lap u^k - (u^k)^{1/alpha}||_inf per k
    std::vector<double> increment_history;  // ||u^k - u^{k-1}||_inf per k
    int iterations;
    StartFrom start;
    // Chain diagnostics over every iterate. For an upward run worst_step is
    // min_k min_x (u^k - u^{k-1}) and must not go negative; for a downward run
    // it is max_k max_x (u^k - u^{k-1}) and must not go positive.
    double worst_step;
    double max_above_sup;  // max_k max_x (u^k - sup)
    double max_below_sub;  // max_k max_x (sub - u^k)
    // Signed defects of the barriers: max of -Lap sub - sub^{1/alpha} (should
    // be <= 0) and min of -Lap sup - sup^{1/alpha} (should be >= 0).
    double sub_defect;
    double sup_defect;
};

/// Conjugate gradient with Jacobi preconditioning for -Lap u = rhs.
///
/// Iterates until the recursive residual drops below max(tol, 1e-14 ||rhs||_inf),
/// then confirms the true residual. Inner products are accumulated
/// sequentially in storage order, so results are bitwise reproducible.
Grid2D solve_poisson(const Grid2D& rhs, double tol, const Grid2D* initial_guess = nullptr);

/// -Lap w = 1.
Grid2D torsion(const Domain& domain, double tol);

/// Inverse power iteration with sup-norm normalisation and Rayleigh quotient.
/// Stops once successive eigenvalue estimates differ by less than tol * lambda
/// and the eigen-residual has reached tol * lambda (or the rounding floor of
/// the stencil, whichever is larger).
EigenPair principal_eigenpair(const Domain& domain, double tol);

BarrierConstants barrier_constants(const EigenPair& eig, const Grid2D& w, double alpha);

/// Monotone iteration -Lap u^k = (u^{k-1})^{1/alpha} from u^0 = sigma phi1
/// (or c w). Stops when both the increment and the residual are below tol.
EllipticSolution solve_brezis_oswald(const Domain& domain, double alpha, double tol, int max_iter,
                                     StartFrom start = StartFrom::Subsolution);

/// Pointwise -Lap u - u^{1/alpha}.
Grid2D signed_defect(const Grid2D& u, double alpha);
/// ||-Lap u - u^{1/alpha}||_inf; negative entries raise DomainError.
double residual(const Grid2D& u, double alpha);

/// Entrywise u^p for u >= 0. Entries in (-1e-14, 0) are treated as 0.
Grid2D nonneg_power(const Grid2D& u, double p);

}  // namespace bdiff
