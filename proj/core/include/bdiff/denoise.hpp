#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bdiff/bernoulli.hpp"
#include "bdiff/grid.hpp"
#include "bdiff/image.hpp"

namespace bdiff {

struct DenoiseParams {
    double alpha_gm = 4.0;
    double dt_gm = 0.0118;
    int steps_gm = 400;
    double dt_pm = 0.2;
    int steps_pm = 40;
    double K_pm = 0.1;
    double gamma_correction = 1.05;
    double stretch_strength = 0.9;
    double brightness_boost = 1.0;
    double sigma_noise = 0.18;
    GrowthRate mu = GrowthRate::rational(0.3);
    std::uint64_t seed = 0;
};

/// Throws ValidationError for out-of-range parameters, including a dt_gm that
/// fails cfl_max_dt for fields in [0, 1].
void validate(const DenoiseParams& p);

enum class Method { Gm, Pm, Both };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// img + sigma * N(0, 1), clipped to [0, 1]. Draws come from mt19937_64 via
/// the Marsaglia polar method, consumed in storage order.
ImageTensor add_gaussian_noise(const ImageTensor& img, double sigma, std::uint64_t seed);

/// steps_gm steps of v <- clip01(v + dt (Lap_per(v^alpha) - mu(n dt) v)).
Grid2D diffuse_gm(const Grid2D& channel, const DenoiseParams& p);

/// steps_pm Perona-Malik steps with g(s) = exp(-s^2 / K^2) on each one-sided
/// difference, clipped to [0, 1] after every step.
Grid2D diffuse_pm(const Grid2D& channel, const DenoiseParams& p);

/// Global contrast stretch, blend with the input, gamma, brightness, clip.
ImageTensor postprocess(const ImageTensor& img, const DenoiseParams& p);

double mse(const ImageTensor& a, const ImageTensor& b);
/// 20 log10(1 / sqrt(mse)); +inf when the images are identical.
double psnr(const ImageTensor& a, const ImageTensor& b);
double psnr_from_mse(double m);
/// Mean SSIM: 7x7 uniform window, K1 = 0.01, K2 = 0.03, L = 1, sample
/// covariance, averaged over valid windows and then over channels.
double ssim(const ImageTensor& a, const ImageTensor& b);
double ssim_channel(const Grid2D& a, const Grid2D& b);

struct Metrics {
    double mse = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

Metrics measure(const ImageTensor& clean, const ImageTensor& candidate);

struct DenoiseReport {
    DenoiseParams params;
    Method method = Method::Both;
    Metrics noisy;
    std::optional<Metrics> gm;
    std::optional<Metrics> pm;
};

struct DenoiseOutput {
    DenoiseReport report;
    ImageTensor noisy;
    std::optional<ImageTensor> gm;  // postprocessed
    std::optional<ImageTensor> pm;  // postprocessed
};

/// Noise, per-channel diffusion, postprocessing and metrics against `clean`.
/// With threads > 1 the channels are diffused concurrently; results do not
/// depend on the thread count.
DenoiseOutput run_pipeline(const ImageTensor& clean, const DenoiseParams& p,
                           Method method = Method::Both, int threads = 1);

}  // namespace bdiff
