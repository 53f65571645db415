#include "bdiff/denoise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "bdiff/errors.hpp"
#include "bdiff/numeric.hpp"
#include "bdiff/parabolic.hpp"

namespace bdiff {

namespace {

void require_periodic_unit(const Grid2D& g, const char* where)
{
    if (g.bc() != Boundary::Periodic) {
        throw ContractViolation(std::string(where) + ": channel must be a periodic grid");
    }
    for (double v : g.values()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << where << ": channel value " << v << " outside [0, 1]";
            throw DomainError(os.str());
        }
    }
}

// Neighbour indices with wrap-around.
struct Wrap {
    std::vector<std::size_t> prev;
    std::vector<std::size_t> next;
    explicit Wrap(std::size_t n) : prev(n), next(n)
    {
        for (std::size_t k = 0; k < n; ++k) {
            prev[k] = (k + n - 1) % n;
            next[k] = (k + 1) % n;
        }
    }
};

class PolarNormal {
public:
    explicit PolarNormal(std::uint64_t seed) : engine_(seed) {}

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double x = 0.0;
        double y = 0.0;
        double s = 0.0;
        do {
            x = 2.0 * uniform() - 1.0;
            y = 2.0 * uniform() - 1.0;
            s = x * x + y * y;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = y * f;
        has_spare_ = true;
        return x * f;
    }

private:
    // 53 random bits -> [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

void run_jobs(std::vector<std::function<void()>>& jobs, int threads)
{
    const std::size_t workers =
        std::min<std::size_t>(jobs.size(), static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (auto& job : jobs) {
            job();
        }
        return;
    }
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(jobs.size());
    auto worker = [&] {
        for (std::size_t k = cursor++; k < jobs.size(); k = cursor++) {
            try {
                jobs[k]();
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

void validate(const DenoiseParams& p)
{
    auto fail = [](const std::string& msg) { throw ValidationError("denoise parameters: " + msg); };
    if (!(p.alpha_gm >= 1.0) || !std::isfinite(p.alpha_gm)) {
        fail("alpha_gm must be finite and at least 1");
    }
    if (!(p.dt_gm > 0.0) || !(p.dt_pm > 0.0)) {
        fail("time steps must be positive");
    }
    if (p.steps_gm < 0 || p.steps_pm < 0) {
        fail("step counts must be nonnegative");
    }
    if (!(p.K_pm > 0.0)) {
        fail("K_pm must be positive");
    }
    if (!(p.gamma_correction > 0.0) || !(p.brightness_boost >= 0.0)) {
        fail("gamma_correction must be positive and brightness_boost nonnegative");
    }
    if (!(p.stretch_strength >= 0.0 && p.stretch_strength <= 1.0)) {
        fail("stretch_strength must lie in [0, 1]");
    }
    if (!(p.sigma_noise >= 0.0) || !std::isfinite(p.sigma_noise)) {
        fail("sigma must be finite and nonnegative");
    }
    const double bound = cfl_max_dt(Grid2D::filled(1, 1, 1.0, Boundary::Periodic, 1.0), p.alpha_gm);
    if (p.dt_gm > bound) {
        std::ostringstream os;
        os << "dt_gm = " << p.dt_gm << " exceeds the stability bound " << bound
           << " for fields in [0, 1]";
        fail(os.str());
    }
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::Gm:
        return "gm";
    case Method::Pm:
        return "pm";
    case Method::Both:
        return "both";
    }
    return "both";
}

Method method_from_string(const std::string& s)
{
    if (s == "gm") {
        return Method::Gm;
    }
    if (s == "pm") {
        return Method::Pm;
    }
    if (s == "both") {
        return Method::Both;
    }
    throw ValidationError("unknown method '" + s + "' (expected gm|pm|both)");
}

ImageTensor add_gaussian_noise(const ImageTensor& img, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0)) {
        throw ValidationError("add_gaussian_noise: sigma must be nonnegative");
    }
    ImageTensor out = img;
    if (sigma == 0.0) {
        return out;
    }
    PolarNormal normal(seed);
    for (double& v : out.data()) {
        v = std::clamp(v + sigma * normal(), 0.0, 1.0);
    }
    return out;
}

Grid2D diffuse_gm(const Grid2D& channel, const DenoiseParams& p)
{
    require_periodic_unit(channel, "diffuse_gm");
    const std::size_t nx = channel.nx();
    const std::size_t ny = channel.ny();
    const Wrap wx(nx);
    const Wrap wy(ny);
    const double inv_h2 = 1.0 / (channel.h() * channel.h());
    const double alpha = p.alpha_gm;
    const double dt = p.dt_gm;

    Grid2D u = channel;
    Grid2D next = channel;
    std::vector<double> pw(u.size());
    for (int n = 0; n < p.steps_gm; ++n) {
        const double m = p.mu(n * dt);
        for (std::size_t k = 0; k < pw.size(); ++k) {
            pw[k] = power_nonneg(u[k], alpha);
        }
        for (std::size_t j = 0; j < ny; ++j) {
            const double* row = pw.data() + j * nx;
            const double* south = pw.data() + wy.prev[j] * nx;
            const double* north = pw.data() + wy.next[j] * nx;
            for (std::size_t i = 0; i < nx; ++i) {
                const double lap =
                    (south[i] + north[i] + row[wx.prev[i]] + row[wx.next[i]] - 4.0 * row[i]) * inv_h2;
                const double v = u(i, j);
                next(i, j) = std::clamp(v + dt * (lap - m * v), 0.0, 1.0);
            }
        }
        std::swap(u, next);
    }
    return u;
}

Grid2D diffuse_pm(const Grid2D& channel, const DenoiseParams& p)
{
    require_periodic_unit(channel, "diffuse_pm");
    const std::size_t nx = channel.nx();
    const std::size_t ny = channel.ny();
    const Wrap wx(nx);
    const Wrap wy(ny);
    const double k2 = p.K_pm * p.K_pm;
    const auto g = [k2](double d) { return std::exp(-(d * d) / k2); };

    Grid2D u = channel;
    Grid2D next = channel;
    for (int n = 0; n < p.steps_pm; ++n) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const double c = u(i, j);
                const double xf = u(wx.next[i], j) - c;
                const double xb = c - u(wx.prev[i], j);
                const double yf = u(i, wy.next[j]) - c;
                const double yb = c - u(i, wy.prev[j]);
                const double div = g(xf) * xf - g(xb) * xb + g(yf) * yf - g(yb) * yb;
                next(i, j) = std::clamp(c + p.dt_pm * div, 0.0, 1.0);
            }
        }
        std::swap(u, next);
    }
    return u;
}

ImageTensor postprocess(const ImageTensor& img, const DenoiseParams& p)
{
    const auto& data = img.data();
    const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double s = p.stretch_strength;
    ImageTensor out = img;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double u = img[k];
        const double stretched = hi > lo ? (u - lo) / (hi - lo) : u;
        double v = s * stretched + (1.0 - s) * u;
        v = v <= 0.0 ? 0.0 : std::pow(v, p.gamma_correction);
        out[k] = std::clamp(v * p.brightness_boost, 0.0, 1.0);
    }
    return out;
}

Metrics measure(const ImageTensor& clean, const ImageTensor& candidate)
{
    const double m = mse(clean, candidate);
    return Metrics{m, psnr_from_mse(m), ssim(clean, candidate)};
}

DenoiseOutput run_pipeline(const ImageTensor& clean, const DenoiseParams& p, Method method,
                           int threads)
{
    validate(p);
    require_unit_range(clean, "run_pipeline");

    DenoiseOutput out;
    out.report.params = p;
    out.report.method = method;
    out.noisy = add_gaussian_noise(clean, p.sigma_noise, p.seed);

    const bool want_gm = method != Method::Pm;
    const bool want_pm = method != Method::Gm;
    std::vector<Grid2D> gm_channels(ImageTensor::kChannels, Grid2D(1, 1, 1.0, Boundary::Periodic));
    std::vector<Grid2D> pm_channels = gm_channels;
    std::vector<std::function<void()>> jobs;
    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        if (want_gm) {
            jobs.emplace_back([&, c] { gm_channels[c] = diffuse_gm(out.noisy.channel(c), p); });
        }
        if (want_pm) {
            jobs.emplace_back([&, c] { pm_channels[c] = diffuse_pm(out.noisy.channel(c), p); });
        }
    }
    run_jobs(jobs, threads);

    out.report.noisy = measure(clean, out.noisy);
    const auto assemble = [&](const std::vector<Grid2D>& channels) {
        ImageTensor diffused(clean.height(), clean.width());
        for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
            diffused.set_channel(c, channels[c]);
        }
        return postprocess(diffused, p);
    };
    if (want_gm) {
        out.gm = assemble(gm_channels);
        out.report.gm = measure(clean, *out.gm);
    }
    if (want_pm) {
        out.pm = assemble(pm_channels);
        out.report.pm = measure(clean, *out.pm);
    }
    return out;
}

}  // namespace bdiff
