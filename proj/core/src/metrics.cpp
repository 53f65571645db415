#include <cmath>
#include <limits>
#include <vector>

#include "bdiff/denoise.hpp"
#include "bdiff/errors.hpp"

namespace bdiff {

namespace {

constexpr std::size_t kWin = 7;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kRange = 1.0;

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* where)
{
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(where) + ": images differ in shape");
    }
}

// Sums over every fully contained 7x7 window; result is (ny-6) x (nx-6).
std::vector<double> window_sums(const std::vector<double>& x, std::size_t nx, std::size_t ny)
{
    const std::size_t ox = nx - kWin + 1;
    const std::size_t oy = ny - kWin + 1;
    std::vector<double> rows(ny * ox);
    for (std::size_t j = 0; j < ny; ++j) {
        const double* src = x.data() + j * nx;
        for (std::size_t i = 0; i < ox; ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < kWin; ++d) {
                s += src[i + d];
            }
            rows[j * ox + i] = s;
        }
    }
    std::vector<double> out(oy * ox);
    for (std::size_t j = 0; j < oy; ++j) {
        for (std::size_t i = 0; i < ox; ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < kWin; ++d) {
                s += rows[(j + d) * ox + i];
            }
            out[j * ox + i] = s;
        }
    }
    return out;
}

}  // namespace

double mse(const ImageTensor& a, const ImageTensor& b)
{
    require_same_shape(a, b, "mse");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

double psnr_from_mse(double m)
{
    if (m == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 20.0 * std::log10(1.0 / std::sqrt(m));
}

double psnr(const ImageTensor& a, const ImageTensor& b)
{
    return psnr_from_mse(mse(a, b));
}

double ssim_channel(const Grid2D& a, const Grid2D& b)
{
    if (a.nx() != b.nx() || a.ny() != b.ny()) {
        throw ShapeError("ssim: channels differ in shape");
    }
    const std::size_t nx = a.nx();
    const std::size_t ny = a.ny();
    if (nx < kWin || ny < kWin) {
        throw ShapeError("ssim: image is smaller than the 7x7 window");
    }
    const std::size_t n = a.size();
    std::vector<double> xa(a.values().begin(), a.values().end());
    std::vector<double> xb(b.values().begin(), b.values().end());
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t k = 0; k < n; ++k) {
        aa[k] = xa[k] * xa[k];
        bb[k] = xb[k] * xb[k];
        ab[k] = xa[k] * xb[k];
    }
    const auto sa = window_sums(xa, nx, ny);
    const auto sb = window_sums(xb, nx, ny);
    const auto saa = window_sums(aa, nx, ny);
    const auto sbb = window_sums(bb, nx, ny);
    const auto sab = window_sums(ab, nx, ny);

    const double np = static_cast<double>(kWin * kWin);
    const double cov_norm = np / (np - 1.0);
    const double c1 = (kK1 * kRange) * (kK1 * kRange);
    const double c2 = (kK2 * kRange) * (kK2 * kRange);
    double total = 0.0;
    for (std::size_t k = 0; k < sa.size(); ++k) {
        const double ua = sa[k] / np;
        const double ub = sb[k] / np;
        const double va = cov_norm * (saa[k] / np - ua * ua);
        const double vb = cov_norm * (sbb[k] / np - ub * ub);
        const double vab = cov_norm * (sab[k] / np - ua * ub);
        const double num = (2.0 * ua * ub + c1) * (2.0 * vab + c2);
        const double den = (ua * ua + ub * ub + c1) * (va + vb + c2);
        total += num / den;
    }
    return total / static_cast<double>(sa.size());
}

double ssim(const ImageTensor& a, const ImageTensor& b)
{
    require_same_shape(a, b, "ssim");
    double s = 0.0;
    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        s += ssim_channel(a.channel(c), b.channel(c));
    }
    return s / static_cast<double>(ImageTensor::kChannels);
}

}  // namespace bdiff
