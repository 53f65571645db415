#include "bdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bdiff/errors.hpp"

namespace bdiff {

namespace {

void check_shape(std::size_t nx, std::size_t ny, double h)
{
    if (nx < 1 || ny < 1) {
        throw ContractViolation("Grid2D: nx and ny must be at least 1");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw ContractViolation("Grid2D: spacing h must be positive and finite");
    }
}

}  // namespace

Grid2D::Grid2D(std::size_t nx, std::size_t ny, double h, Boundary bc)
    : Grid2D(nx, ny, h, bc, std::vector<double>(nx * ny, 0.0))
{
}

Grid2D::Grid2D(std::size_t nx, std::size_t ny, double h, Boundary bc, std::vector<double> data)
    : nx_(nx), ny_(ny), h_(h), bc_(bc), data_(std::move(data))
{
    check_shape(nx, ny, h);
    if (data_.size() != nx * ny) {
        throw ContractViolation("Grid2D: data length " + std::to_string(data_.size()) +
                                " does not match nx*ny = " + std::to_string(nx * ny));
    }
}

Grid2D Grid2D::filled(std::size_t nx, std::size_t ny, double h, Boundary bc, double value)
{
    return Grid2D(nx, ny, h, bc, std::vector<double>(nx * ny, value));
}

Grid2D Grid2D::zeros_like(const Grid2D& g)
{
    return Grid2D(g.nx_, g.ny_, g.h_, g.bc_);
}

double Grid2D::length_x() const noexcept
{
    return bc_ == Boundary::DirichletZero ? static_cast<double>(nx_ + 1) * h_
                                          : static_cast<double>(nx_) * h_;
}

double Grid2D::length_y() const noexcept
{
    return bc_ == Boundary::DirichletZero ? static_cast<double>(ny_ + 1) * h_
                                          : static_cast<double>(ny_) * h_;
}

bool Grid2D::same_layout(const Grid2D& other) const noexcept
{
    return nx_ == other.nx_ && ny_ == other.ny_ && h_ == other.h_ && bc_ == other.bc_;
}

void require_same_layout(const Grid2D& a, const Grid2D& b, const char* where)
{
    if (!a.same_layout(b)) {
        throw ShapeError(std::string(where) + ": grids differ in shape, spacing or boundary mode");
    }
}

Grid2D laplacian_dirichlet(const Grid2D& g)
{
    if (g.bc() != Boundary::DirichletZero) {
        throw ContractViolation("laplacian_dirichlet: grid is not in DirichletZero mode");
    }
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    Grid2D out = Grid2D::zeros_like(g);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double c = g(i, j);
            const double w = i > 0 ? g(i - 1, j) : 0.0;
            const double e = i + 1 < nx ? g(i + 1, j) : 0.0;
            const double s = j > 0 ? g(i, j - 1) : 0.0;
            const double n = j + 1 < ny ? g(i, j + 1) : 0.0;
            out(i, j) = (e + w + n + s - 4.0 * c) * inv_h2;
        }
    }
    return out;
}

Grid2D laplacian_periodic(const Grid2D& g)
{
    if (g.bc() != Boundary::Periodic) {
        throw ContractViolation("laplacian_periodic: grid is not in Periodic mode");
    }
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    Grid2D out = Grid2D::zeros_like(g);
    for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t jm = j == 0 ? ny - 1 : j - 1;
        const std::size_t jp = j + 1 == ny ? 0 : j + 1;
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t im = i == 0 ? nx - 1 : i - 1;
            const std::size_t ip = i + 1 == nx ? 0 : i + 1;
            out(i, j) = (g(ip, j) + g(im, j) + g(i, jp) + g(i, jm) - 4.0 * g(i, j)) * inv_h2;
        }
    }
    return out;
}

Grid2D laplacian(const Grid2D& g)
{
    return g.bc() == Boundary::Periodic ? laplacian_periodic(g) : laplacian_dirichlet(g);
}

double norm_inf(const Grid2D& g)
{
    double m = 0.0;
    for (double v : g.values()) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double norm_l2(const Grid2D& g)
{
    double s = 0.0;
    for (double v : g.values()) {
        s += v * v;
    }
    return std::sqrt(g.h() * g.h() * s);
}

double max_value(const Grid2D& g)
{
    return *std::max_element(g.values().begin(), g.values().end());
}

double min_value(const Grid2D& g)
{
    return *std::min_element(g.values().begin(), g.values().end());
}

Grid2D clip01(const Grid2D& g)
{
    Grid2D out = g;
    for (double& v : out.values()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

std::string to_string(Boundary bc)
{
    return bc == Boundary::Periodic ? "periodic" : "dirichlet";
}

Boundary boundary_from_string(const std::string& s)
{
    if (s == "dirichlet") {
        return Boundary::DirichletZero;
    }
    if (s == "periodic") {
        return Boundary::Periodic;
    }
    throw ValidationError("unknown boundary mode '" + s + "'");
}

void write_csv(std::ostream& os, const Grid2D& g)
{
    os << "# nx=" << g.nx() << " ny=" << g.ny() << " h=" << std::setprecision(17) << g.h()
       << " bc=" << to_string(g.bc()) << '\n';
    os << std::setprecision(17);
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            if (i > 0) {
                os << ',';
            }
            os << g(i, j);
        }
        os << '\n';
    }
}

void write_csv(const std::string& path, const Grid2D& g)
{
    std::ofstream os(path);
    if (!os) {
        throw ValidationError("cannot open '" + path + "' for writing");
    }
    write_csv(os, g);
}

Grid2D read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind('#', 0) != 0) {
        throw ValidationError("grid CSV: missing '# nx=.. ny=.. h=.. bc=..' header");
    }
    std::size_t nx = 0;
    std::size_t ny = 0;
    double h = 0.0;
    std::string bc;
    std::istringstream header(line.substr(1));
    std::string token;
    while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        const std::string key = token.substr(0, eq);
        const std::string val = token.substr(eq + 1);
        try {
            if (key == "nx") {
                nx = std::stoul(val);
            } else if (key == "ny") {
                ny = std::stoul(val);
            } else if (key == "h") {
                h = std::stod(val);
            } else if (key == "bc") {
                bc = val;
            }
        } catch (const std::logic_error&) {
            throw ValidationError("grid CSV: bad header value for '" + key + "'");
        }
    }
    if (nx == 0 || ny == 0 || bc.empty()) {
        throw ValidationError("grid CSV: header must define nx, ny, h and bc");
    }
    std::vector<double> data;
    data.reserve(nx * ny);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(row, cell, ',')) {
            try {
                data.push_back(std::stod(cell));
            } catch (const std::logic_error&) {
                throw ValidationError("grid CSV: non-numeric cell '" + cell + "'");
            }
            ++cols;
        }
        if (cols != nx) {
            throw ValidationError("grid CSV: row " + std::to_string(rows) + " has " +
                                  std::to_string(cols) + " values, expected " + std::to_string(nx));
        }
        ++rows;
    }
    if (rows != ny) {
        throw ValidationError("grid CSV: expected " + std::to_string(ny) + " rows, found " +
                              std::to_string(rows));
    }
    return Grid2D(nx, ny, h, boundary_from_string(bc), std::move(data));
}

Grid2D read_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw ValidationError("cannot open '" + path + "'");
    }
    return read_csv(is);
}

}  // namespace bdiff
