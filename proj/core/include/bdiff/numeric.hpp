#pragma once

#include <cmath>

namespace bdiff {

/// x^a for x >= 0. Small integer exponents are expanded into products, which
/// the denoising kernels hit hundreds of millions of times.
inline double power_nonneg(double x, double a)
{
    if (a == 4.0) {
        const double x2 = x * x;
        return x2 * x2;
    }
    if (a == 2.0) {
        return x * x;
    }
    if (a == 3.0) {
        return x * x * x;
    }
    if (a == 1.0) {
        return x;
    }
    return x == 0.0 ? 0.0 : std::pow(x, a);
}

}  // namespace bdiff
