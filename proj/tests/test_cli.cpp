#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bdiff/grid.hpp"
#include "bdiff/image.hpp"
#include "cli.hpp"

using bdiff::cli::dispatch;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return Result{code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "bdiff_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

// Keys of every object appear in sorted order in the dumped text.
bool keys_sorted(const json& j)
{
    if (j.is_object()) {
        std::string prev;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first && it.key() < prev) return false;
            prev = it.key();
            first = false;
            if (!keys_sorted(it.value())) return false;
        }
    } else if (j.is_array()) {
        for (const auto& v : j) if (!keys_sorted(v)) return false;
    }
    return true;
}

fs::path small_png()
{
    const fs::path path = scratch("small.png");
    if (!fs::exists(path)) {
        const bdiff::ImageTensor full = bdiff::read_png(BDIFF_TEST_IMAGE);
        bdiff::ImageTensor img(48, 48);
        for (std::size_t y = 0; y < 48; ++y)
            for (std::size_t x = 0; x < 48; ++x)
                for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = full.at(100 + y, 200 + x, c);
        bdiff::write_png(path.string(), img);
    }
    return path;
}

}  // namespace

TEST(Cli, BernoulliEvalPrintsGammaAtZero)
{
    const Result r = run({"bernoulli-eval", "--alpha", "2", "--gamma", "0.5", "--mu", "constant:1", "--t", "0"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "0.5\n");
}

TEST(Cli, BernoulliEvalSeveralTimes)
{
    const Result r = run({"bernoulli-eval", "--alpha", "2", "--gamma", "0.5", "--mu", "constant:1", "--t", "0", "5", "--json"});
    ASSERT_EQ(r.code, 0);
    const json j = json::parse(r.out);
    ASSERT_EQ(j["S"].size(), 2u);
    EXPECT_NEAR(j["S"][1].get<double>(), 1.0 / (1.0 + std::exp(-5.0)), 1e-12);
}

TEST(Cli, UnknownFlagPrintsUsageAndExitsOne)
{
    const Result r = run({"bernoulli-eval", "--frobnicate", "--alpha", "2", "--gamma", "1", "--mu", "constant:1", "--t", "1"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--frobnicate"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, MissingSubcommandExitsOne)
{
    EXPECT_EQ(run({}).code, 1);
}

TEST(Cli, ValidationErrorExitsOne)
{
    EXPECT_EQ(run({"bernoulli-eval", "--alpha", "1", "--gamma", "0.5", "--mu", "constant:1", "--t", "1"}).code, 1);
    EXPECT_EQ(run({"bernoulli-eval", "--alpha", "2", "--gamma", "0.5", "--mu", "wobbly:1", "--t", "1"}).code, 1);
    EXPECT_EQ(run({"solve-elliptic", "--alpha", "0.5"}).code, 1);
}

TEST(Cli, NumericalFailureExitsTwo)
{
    const Result r = run({"evolve", "--nx", "7", "--ny", "7", "--T", "0.1", "--dt", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("stability"), std::string::npos);
    EXPECT_EQ(run({"solve-elliptic", "--alpha", "2", "--nx", "15", "--ny", "15", "--tol", "1e-12", "--max-iter", "2"}).code, 2);
}

TEST(Cli, SolveEllipticWritesGridAndReport)
{
    const fs::path csv = scratch("u.csv");
    const fs::path rep = scratch("elliptic.json");
    const Result r = run({"solve-elliptic", "--nx", "15", "--ny", "15", "--alpha", "4", "--tol", "1e-9", "--out",
                          csv.string(), "--report", rep.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const bdiff::Grid2D u = bdiff::read_csv(csv.string());
    EXPECT_EQ(u.nx(), 15u);
    std::ifstream f(rep);
    const json j = json::parse(f);
    EXPECT_LT(j["residual"].get<double>(), 1e-9);
    EXPECT_EQ(j["config"]["alpha"].get<double>(), 4.0);
    EXPECT_EQ(j["config"]["grid"]["h"].get<double>(), 1.0 / 16.0);
    EXPECT_TRUE(keys_sorted(j));
}

TEST(Cli, CompareReportsNoViolations)
{
    const Result r = run({"compare", "--mu1", "constant:0.5", "--mu2", "constant:1.0", "--nx", "16", "--ny", "16",
                          "--T", "0.2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["total_violations"].get<int>(), 0);
    EXPECT_TRUE(j["ordered"].get<bool>());
    EXPECT_TRUE(keys_sorted(j));
}

TEST(Cli, CompareRejectsUnorderedRates)
{
    EXPECT_EQ(run({"compare", "--mu1", "constant:2", "--mu2", "constant:1", "--nx", "8", "--ny", "8", "--T", "0.01"}).code, 1);
}

TEST(Cli, EvolveWritesSnapshots)
{
    const fs::path dir = scratch("evolve_out");
    fs::remove_all(dir);
    const Result r = run({"evolve", "--init", "blend:0.5", "--nx", "9", "--ny", "9", "--gamma", "0.5", "--T", "0.05",
                          "--snapshot-every", "50", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    const auto files = j["files"];
    ASSERT_GE(files.size(), 2u);
    const bdiff::Grid2D last = bdiff::read_csv((dir / files.back().get<std::string>()).string());
    EXPECT_EQ(last.nx(), 9u);
    EXPECT_TRUE(fs::exists(dir / "trace.json"));
    EXPECT_EQ(j["trace"]["times"].back().get<double>(), 0.05);
}

TEST(Cli, EvolveFromCsvDoesNotTouchTheInput)
{
    const fs::path in = scratch("init.csv");
    bdiff::write_csv(in.string(), bdiff::Grid2D::filled(6, 6, 0.1, bdiff::Boundary::Periodic, 0.4));
    const auto before = fs::last_write_time(in);
    const Result r = run({"evolve", "--init", in.string(), "--sign", "absorption", "--alpha", "4", "--mu",
                          "rational:0.3", "--T", "0.01"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(fs::last_write_time(in), before);
    const json j = json::parse(r.out);
    EXPECT_LT(j["trace"]["final_max"].get<double>(), 0.4);
}

TEST(Cli, VerifyBoundsReport)
{
    const Result r = run({"verify-bounds", "--nx", "11", "--ny", "11", "--gamma", "0.5", "--T", "0.3", "--monotone"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["max_lower_violation"].get<double>(), 0.0);
    EXPECT_EQ(j["max_upper_violation"].get<double>(), 0.0);
    EXPECT_TRUE(j["lower_argmax"].contains("i"));
    EXPECT_TRUE(j["upper_argmax"].contains("t"));
    EXPECT_LT(j["monotone"]["limit_gap"].get<double>(), 1e-5);
    EXPECT_TRUE(j["sandwiched"].get<bool>());
}

TEST(Cli, DenoiseReportSchemaAndDeterminism)
{
    const fs::path png = small_png();
    const fs::path dir = scratch("denoise_out");
    const std::vector<std::string> args{"denoise", "--input", png.string(), "--sigma", "0.1", "--seed", "4",
                                        "--method", "both", "--out-dir", dir.string()};
    const Result a = run(args);
    const Result b = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    json ja = json::parse(a.out);
    json jb = json::parse(b.out);
    for (const char* m : {"noisy", "gm", "pm"}) {
        for (const char* k : {"mse", "psnr_db", "ssim"}) {
            EXPECT_TRUE(ja["metrics"][m].contains(k)) << m << "." << k;
        }
    }
    EXPECT_EQ(ja["seed"].get<std::uint64_t>(), 4u);
    EXPECT_EQ(ja["params"]["alpha_gm"].get<double>(), 4.0);
    EXPECT_EQ(ja["params"]["mu"].get<std::string>(), "rational:0.3");
    ja.erase("seconds");
    jb.erase("seconds");
    EXPECT_EQ(ja, jb);
    EXPECT_TRUE(fs::exists(dir / "gm.png"));
    EXPECT_TRUE(fs::exists(dir / "pm.png"));
    EXPECT_TRUE(fs::exists(dir / "noisy.png"));
    EXPECT_TRUE(keys_sorted(ja));
}

TEST(Cli, SeedEnvironmentOverride)
{
    const fs::path png = small_png();
    const std::vector<std::string> args{"denoise", "--input", png.string(), "--method", "gm", "--seed", "1"};
    ::setenv("BERNOULLI_DIFFUSE_SEED", "99", 1);
    const Result r = run(args);
    ::setenv("BERNOULLI_DIFFUSE_SEED", "not-a-number", 1);
    const Result bad = run(args);
    ::unsetenv("BERNOULLI_DIFFUSE_SEED");
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), 99u);
    EXPECT_EQ(j["config"]["seed_source"].get<std::string>(), "env");
    EXPECT_EQ(bad.code, 1);
}

TEST(Cli, DenoiseRejectsMissingInput)
{
    EXPECT_EQ(run({"denoise", "--input", "/no/such.png"}).code, 1);
}

TEST(Cli, BenchWithoutDenoise)
{
    const Result r = run({"bench", "--n", "15", "--steps", "10", "--skip-denoise"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_GT(j["elliptic"]["iterations"].get<int>(), 0);
    EXPECT_EQ(j["parabolic"]["steps"].get<int>(), 10);
    const json again = json::parse(run({"bench", "--n", "15", "--steps", "10", "--skip-denoise"}).out);
    EXPECT_EQ(j["elliptic"]["iterations"], again["elliptic"]["iterations"]);
    EXPECT_EQ(j["parabolic"]["final_max"], again["parabolic"]["final_max"]);
}
