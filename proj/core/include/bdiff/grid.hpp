#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bdiff {

enum class Boundary { DirichletZero, Periodic };

/// Scalar field on a rectangular lattice with uniform spacing h.
///
/// Storage is row-major, index = j * nx + i, with i along x. Dirichlet grids
/// store interior points only; the surrounding ghost layer is identically
/// zero and never materialised. Periodic grids wrap in both directions.
class Grid2D {
public:
    Grid2D(std::size_t nx, std::size_t ny, double h, Boundary bc);
    Grid2D(std::size_t nx, std::size_t ny, double h, Boundary bc, std::vector<double> data);

    static Grid2D filled(std::size_t nx, std::size_t ny, double h, Boundary bc, double value);
    /// Same shape, spacing and boundary mode, all zeros.
    static Grid2D zeros_like(const Grid2D& g);

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return data_.size(); }
    double h() const noexcept { return h_; }
    Boundary bc() const noexcept { return bc_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * nx_ + i]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * nx_ + i]; }
    double& operator[](std::size_t k) noexcept { return data_[k]; }
    double operator[](std::size_t k) const noexcept { return data_[k]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    /// Physical extent along x, (nx + 1) h for Dirichlet grids, nx h for periodic.
    double length_x() const noexcept;
    double length_y() const noexcept;

    bool same_layout(const Grid2D& other) const noexcept;

    friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
    std::size_t nx_;
    std::size_t ny_;
    double h_;
    Boundary bc_;
    std::vector<double> data_;
};

/// Five-point Laplacian with zero ghost values, scaled by 1/h^2.
Grid2D laplacian_dirichlet(const Grid2D& g);
/// Five-point Laplacian with wraparound neighbours, scaled by 1/h^2.
Grid2D laplacian_periodic(const Grid2D& g);
/// Dispatches on g.bc().
Grid2D laplacian(const Grid2D& g);

double norm_inf(const Grid2D& g);
/// Discrete L2 norm sqrt(h^2 * sum of squares).
double norm_l2(const Grid2D& g);
double max_value(const Grid2D& g);
double min_value(const Grid2D& g);
Grid2D clip01(const Grid2D& g);

/// Throws ShapeError unless a and b share shape, spacing and boundary mode.
void require_same_layout(const Grid2D& a, const Grid2D& b, const char* where);

std::string to_string(Boundary bc);
Boundary boundary_from_string(const std::string& s);

// CSV: a `# nx=.. ny=.. h=.. bc=..` header, then ny rows of nx values.
void write_csv(std::ostream& os, const Grid2D& g);
void write_csv(const std::string& path, const Grid2D& g);
Grid2D read_csv(std::istream& is);
Grid2D read_csv(const std::string& path);

}  // namespace bdiff
