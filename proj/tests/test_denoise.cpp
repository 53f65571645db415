#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "bdiff/denoise.hpp"
#include "bdiff/errors.hpp"
#include "bdiff/image.hpp"

using namespace bdiff;

namespace {

ImageTensor filled_image(std::size_t h, std::size_t w, double v)
{
    return ImageTensor(h, w, std::vector<double>(h * w * 3, v));
}

ImageTensor crop(const ImageTensor& img, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w)
{
    ImageTensor out(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

const ImageTensor& test_crop()
{
    static const ImageTensor img = crop(read_png(BDIFF_TEST_IMAGE), 40, 180, 96, 96);
    return img;
}

double variance(const Grid2D& g)
{
    double m = 0.0;
    for (double v : g.values()) m += v;
    m /= g.size();
    double s = 0.0;
    for (double v : g.values()) s += (v - m) * (v - m);
    return s / g.size();
}

// Exact rational test pattern (also fed to scikit-image for the reference).
ImageTensor pattern(bool second)
{
    ImageTensor img(20, 24);
    for (std::size_t y = 0; y < 20; ++y) {
        for (std::size_t x = 0; x < 24; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double a = static_cast<double>((x * 7 + y * 13 + c * 5) % 17) / 16.0;
                const double b = std::clamp(a + (static_cast<double>((x * 3 + y * 5 + c) % 7) - 3.0) / 30.0, 0.0, 1.0);
                img.at(y, x, c) = second ? b : a;
            }
        }
    }
    return img;
}

}  // namespace

TEST(Image, ChannelRoundTrip)
{
    ImageTensor img(3, 4);
    for (std::size_t k = 0; k < img.size(); ++k) img[k] = k / 36.0;
    const Grid2D g = img.channel(1);
    EXPECT_EQ(g.nx(), 4u);
    EXPECT_EQ(g.ny(), 3u);
    EXPECT_EQ(g.bc(), Boundary::Periodic);
    EXPECT_EQ(g(2, 1), img.at(1, 2, 1));
    ImageTensor copy(3, 4);
    for (std::size_t c = 0; c < 3; ++c) copy.set_channel(c, img.channel(c));
    EXPECT_EQ(copy, img);
    EXPECT_THROW(ImageTensor(2, 2, std::vector<double>(11)), ShapeError);
}

TEST(Image, PngRoundTripRoundsHalfToEven)
{
    const auto path = std::filesystem::temp_directory_path() / "bdiff_roundtrip.png";
    ImageTensor img(1, 4);
    const double in[12] = {2.5 / 255, 3.5 / 255, 0.0, 1.0, 0.5, 0.2, 100.4 / 255, 100.6 / 255, 1.0, 0.0, 0.0, 0.0};
    std::copy(std::begin(in), std::end(in), img.data().begin());
    write_png(path.string(), img);
    const ImageTensor back = read_png(path.string());
    EXPECT_EQ(back[0] * 255, 2.0);
    EXPECT_EQ(back[1] * 255, 4.0);
    EXPECT_EQ(back[3], 1.0);
    EXPECT_EQ(std::round(back[4] * 255), 128.0);  // 127.5 -> 128 (even)
    EXPECT_EQ(std::round(back[6] * 255), 100.0);
    EXPECT_EQ(std::round(back[7] * 255), 101.0);
    std::filesystem::remove(path);
}

TEST(Image, GrayscaleIsReplicated)
{
    const auto path = std::filesystem::temp_directory_path() / "bdiff_gray.png";
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = 3;
    image.height = 2;
    image.format = PNG_FORMAT_GRAY;
    const png_byte pixels[6] = {0, 51, 102, 153, 204, 255};
    ASSERT_NE(png_image_write_to_file(&image, path.string().c_str(), 0, pixels, 0, nullptr), 0);
    const ImageTensor img = read_png(path.string());
    ASSERT_EQ(img.height(), 2u);
    ASSERT_EQ(img.width(), 3u);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x)
            for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(img.at(y, x, c), pixels[y * 3 + x] / 255.0);
    std::filesystem::remove(path);
}

TEST(Image, MissingFileIsAValidationError)
{
    EXPECT_THROW(read_png("/no/such/image.png"), ValidationError);
}

TEST(Noise, ZeroSigmaIsIdentity)
{
    EXPECT_EQ(add_gaussian_noise(test_crop(), 0.0, 5), test_crop());
}

TEST(Noise, DeterministicPerSeed)
{
    const auto a = add_gaussian_noise(test_crop(), 0.18, 42);
    const auto b = add_gaussian_noise(test_crop(), 0.18, 42);
    const auto c = add_gaussian_noise(test_crop(), 0.18, 43);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Noise, EmpiricalSpreadOnMidGray)
{
    const ImageTensor gray = filled_image(128, 128, 0.5);
    const ImageTensor noisy = add_gaussian_noise(gray, 0.18, 0);
    double m = 0.0, s = 0.0;
    for (std::size_t k = 0; k < noisy.size(); ++k) m += noisy[k] - 0.5;
    m /= noisy.size();
    for (std::size_t k = 0; k < noisy.size(); ++k) s += (noisy[k] - 0.5 - m) * (noisy[k] - 0.5 - m);
    const double sd = std::sqrt(s / noisy.size());
    EXPECT_GT(sd, 0.16);
    EXPECT_LT(sd, 0.18);
    EXPECT_NEAR(m, 0.0, 0.005);
    require_unit_range(noisy, "test");
}

TEST(Gm, ConstantFieldFollowsScalarRecursion)
{
    DenoiseParams p;
    p.steps_gm = 50;
    const Grid2D in = Grid2D::filled(8, 8, 1.0, Boundary::Periodic, 0.6);
    const Grid2D out = diffuse_gm(in, p);
    double expected = 0.6;
    for (int n = 0; n < p.steps_gm; ++n) expected *= 1.0 - p.dt_gm * p.mu(n * p.dt_gm);
    for (double v : out.values()) EXPECT_NEAR(v, expected, 1e-14);
}

TEST(Gm, ZeroFieldStaysZero)
{
    const Grid2D out = diffuse_gm(Grid2D(8, 8, 1.0, Boundary::Periodic), DenoiseParams{});
    EXPECT_EQ(norm_inf(out), 0.0);
}

TEST(Gm, MatchesGenericKernel)
{
    // Fused kernel against grid::laplacian on v^alpha, clipped.
    DenoiseParams p;
    p.steps_gm = 30;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid2D v(13, 9, 1.0, Boundary::Periodic);
    for (double& x : v.values()) x = u(rng);
    const Grid2D fused = diffuse_gm(v, p);
    for (int n = 0; n < p.steps_gm; ++n) {
        Grid2D pw = v;
        for (double& x : pw.values()) x = std::pow(x, p.alpha_gm);
        const Grid2D lap = laplacian_periodic(pw);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += p.dt_gm * (lap[k] - p.mu(n * p.dt_gm) * v[k]);
        v = clip01(v);
    }
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(fused[k], v[k], 1e-14);
}

TEST(Gm, SmoothsNoise)
{
    ImageTensor img = add_gaussian_noise(filled_image(64, 64, 0.5), 0.18, 0);
    const Grid2D in = img.channel(0);
    const Grid2D out = diffuse_gm(in, DenoiseParams{});
    EXPECT_LT(variance(out), variance(in));
}

TEST(Gm, RejectsDirichletOrOutOfRangeInput)
{
    EXPECT_THROW(diffuse_gm(Grid2D(4, 4, 1.0, Boundary::DirichletZero), DenoiseParams{}), ContractViolation);
    EXPECT_THROW(diffuse_gm(Grid2D::filled(4, 4, 1.0, Boundary::Periodic, 1.5), DenoiseParams{}), DomainError);
}

TEST(Pm, ConstantFieldUnchanged)
{
    const Grid2D in = Grid2D::filled(10, 7, 1.0, Boundary::Periodic, 0.42);
    EXPECT_EQ(diffuse_pm(in, DenoiseParams{}), in);
}

TEST(Pm, SharpEdgeIsPreserved)
{
    Grid2D in(32, 16, 1.0, Boundary::Periodic);
    for (std::size_t j = 0; j < 16; ++j)
        for (std::size_t i = 8; i < 24; ++i) in(i, j) = 1.0;
    const Grid2D out = diffuse_pm(in, DenoiseParams{});
    double smear = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) smear = std::max(smear, std::abs(out[k] - in[k]));
    EXPECT_LT(smear, 1e-3);
}

TEST(Pm, GentleRampBehavesLikeLinearDiffusion)
{
    DenoiseParams p;
    p.steps_pm = 5;
    Grid2D in(64, 8, 1.0, Boundary::Periodic);
    for (std::size_t j = 0; j < 8; ++j)
        for (std::size_t i = 0; i < 64; ++i) in(i, j) = 0.5 + 0.005 * std::sin(2.0 * M_PI * i / 64.0);
    const Grid2D pm = diffuse_pm(in, p);
    Grid2D heat = in;
    for (int n = 0; n < p.steps_pm; ++n) {
        const Grid2D lap = laplacian_periodic(heat);
        for (std::size_t k = 0; k < heat.size(); ++k) heat[k] += p.dt_pm * lap[k];
    }
    // Compare the change from the input, which is what diffusion produces.
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        num = std::max(num, std::abs((pm[k] - in[k]) - (heat[k] - in[k])));
        den = std::max(den, std::abs(heat[k] - in[k]));
    }
    EXPECT_LT(num, 0.01 * den);
}

TEST(Postprocess, ConstantImageOnlyGetsGamma)
{
    const DenoiseParams p;
    const ImageTensor out = postprocess(filled_image(4, 4, 0.5), p);
    for (double v : out.data()) EXPECT_DOUBLE_EQ(v, std::pow(0.5, 1.05));
}

TEST(Postprocess, StretchAndBlendArithmetic)
{
    DenoiseParams p;
    p.gamma_correction = 1.0;
    ImageTensor img = filled_image(2, 2, 0.45);
    img[0] = 0.2;
    img[5] = 0.7;
    const ImageTensor out = postprocess(img, p);
    EXPECT_NEAR(out[0], 0.02, 1e-15);
    EXPECT_NEAR(out[5], 0.97, 1e-15);
}

TEST(Postprocess, UsesOneMinMaxForAllChannels)
{
    DenoiseParams p;
    p.gamma_correction = 1.0;
    ImageTensor img = filled_image(2, 2, 0.5);
    img.at(0, 0, 0) = 0.2;  // global min in the red channel
    img.at(1, 1, 2) = 0.7;  // global max in the blue channel
    const ImageTensor out = postprocess(img, p);
    const double stretched = (0.5 - 0.2) / 0.5;
    EXPECT_NEAR(out.at(0, 1, 1), 0.9 * stretched + 0.1 * 0.5, 1e-15);
}

TEST(Postprocess, IsNotIdempotent)
{
    const DenoiseParams p;
    const ImageTensor once = postprocess(test_crop(), p);
    EXPECT_NE(postprocess(once, p), once);
}

TEST(Metrics, IdenticalImages)
{
    EXPECT_EQ(mse(test_crop(), test_crop()), 0.0);
    EXPECT_EQ(psnr(test_crop(), test_crop()), std::numeric_limits<double>::infinity());
    EXPECT_EQ(ssim(test_crop(), test_crop()), 1.0);
}

TEST(Metrics, UniformOffset)
{
    const ImageTensor a = filled_image(16, 16, 0.3);
    const ImageTensor b = filled_image(16, 16, 0.4);
    EXPECT_NEAR(mse(a, b), 0.01, 1e-15);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
    // Constant patches: variances vanish, SSIM = (2 ab + C1) / (a^2 + b^2 + C1).
    const double c1 = 1e-4;
    EXPECT_NEAR(ssim(a, b), (2 * 0.3 * 0.4 + c1) / (0.09 + 0.16 + c1), 1e-12);
}

TEST(Metrics, SsimMatchesReferenceImplementation)
{
    // scikit-image structural_similarity(data_range=1.0) on the same pattern.
    const ImageTensor a = pattern(false);
    const ImageTensor b = pattern(true);
    EXPECT_NEAR(ssim_channel(a.channel(0), b.channel(0)), 0.9784811983256654, 1e-12);
    EXPECT_NEAR(ssim_channel(a.channel(1), b.channel(1)), 0.977184468662325, 1e-12);
    EXPECT_NEAR(ssim_channel(a.channel(2), b.channel(2)), 0.9768200032975805, 1e-12);
    EXPECT_NEAR(ssim(a, b), 0.9774952234285236, 1e-12);
}

TEST(Metrics, SymmetryAndOrdering)
{
    const ImageTensor& clean = test_crop();
    const ImageTensor n1 = add_gaussian_noise(clean, 0.05, 1);
    const ImageTensor n2 = add_gaussian_noise(clean, 0.2, 1);
    EXPECT_EQ(mse(clean, n1), mse(n1, clean));
    EXPECT_NEAR(ssim(clean, n1), ssim(n1, clean), 1e-15);
    EXPECT_LT(mse(clean, n1), mse(clean, n2));
    EXPECT_GT(psnr(clean, n1), psnr(clean, n2));
    EXPECT_GT(ssim(clean, n1), ssim(clean, n2));
    const double s = ssim(clean, n2);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
}

TEST(Metrics, ShapeChecks)
{
    EXPECT_THROW(mse(filled_image(4, 4, 0.1), filled_image(4, 5, 0.1)), ShapeError);
    EXPECT_THROW(ssim(filled_image(6, 8, 0.1), filled_image(6, 8, 0.1)), ShapeError);
}

TEST(Pipeline, OutputsStayInRangeAndAreDeterministic)
{
    DenoiseParams p;
    p.sigma_noise = 0.18;
    p.seed = 3;
    const DenoiseOutput a = run_pipeline(test_crop(), p);
    const DenoiseOutput b = run_pipeline(test_crop(), p, Method::Both, 3);
    for (const ImageTensor* img : {&a.noisy, &*a.gm, &*a.pm}) require_unit_range(*img, "test");
    EXPECT_EQ(*a.gm, *b.gm);
    EXPECT_EQ(*a.pm, *b.pm);
    EXPECT_EQ(a.report.gm->psnr_db, b.report.gm->psnr_db);
    EXPECT_EQ(a.report.pm->ssim, b.report.pm->ssim);
}

TEST(Pipeline, MethodSelection)
{
    DenoiseParams p;
    p.steps_gm = 10;
    p.steps_pm = 4;
    const DenoiseOutput gm = run_pipeline(test_crop(), p, Method::Gm);
    EXPECT_TRUE(gm.gm.has_value());
    EXPECT_FALSE(gm.pm.has_value());
    const DenoiseOutput pm = run_pipeline(test_crop(), p, Method::Pm);
    EXPECT_FALSE(pm.gm.has_value());
    EXPECT_TRUE(pm.report.pm.has_value());
}

TEST(Pipeline, ZeroNoiseIsNearlyPerfect)
{
    DenoiseParams p;
    p.sigma_noise = 0.0;
    const DenoiseOutput out = run_pipeline(test_crop(), p);
    EXPECT_EQ(out.report.noisy.mse, 0.0);
    EXPECT_EQ(out.report.noisy.ssim, 1.0);
    EXPECT_LT(out.report.gm->mse, 1e-2);
    EXPECT_LT(out.report.pm->mse, 1e-2);
}

TEST(Pipeline, ChannelPermutationCommutes)
{
    // Noise is drawn per storage position, so permute the noisy image and run
    // the diffusion stages directly.
    DenoiseParams p;
    p.steps_gm = 40;
    p.steps_pm = 10;
    const ImageTensor noisy = add_gaussian_noise(test_crop(), 0.1, 8);
    ImageTensor perm(noisy.height(), noisy.width());
    const std::size_t order[3] = {2, 0, 1};
    for (std::size_t c = 0; c < 3; ++c) perm.set_channel(c, noisy.channel(order[c]));
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(diffuse_gm(perm.channel(c), p), diffuse_gm(noisy.channel(order[c]), p));
        EXPECT_EQ(diffuse_pm(perm.channel(c), p), diffuse_pm(noisy.channel(order[c]), p));
    }
    // Global postprocessing statistics do not depend on channel order either.
    const ImageTensor pp = postprocess(perm, p);
    const ImageTensor pn = postprocess(noisy, p);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(pp.channel(c), pn.channel(order[c]));
}

TEST(Params, Validation)
{
    DenoiseParams p;
    EXPECT_NO_THROW(validate(p));
    p.dt_gm = 0.07;  // above 1/16 for alpha = 4
    EXPECT_THROW(validate(p), ValidationError);
    p = DenoiseParams{};
    p.sigma_noise = -0.1;
    EXPECT_THROW(validate(p), ValidationError);
    p = DenoiseParams{};
    p.stretch_strength = 1.5;
    EXPECT_THROW(validate(p), ValidationError);
    EXPECT_THROW(method_from_string("tv"), ValidationError);
}
