#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "bdiff/bernoulli.hpp"
#include "bdiff/denoise.hpp"
#include "bdiff/elliptic.hpp"
#include "bdiff/errors.hpp"
#include "bdiff/grid.hpp"
#include "bdiff/image.hpp"
#include "bdiff/parabolic.hpp"

#ifndef BDIFF_DEFAULT_IMAGE
#define BDIFF_DEFAULT_IMAGE "data/astronaut.png"
#endif

namespace bdiff::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kSeedEnv = "BERNOULLI_DIFFUSE_SEED";

// ---------------------------------------------------------------------------
// option bundles

struct Global {
    int threads = 1;
    std::string log_level = "warn";
};

struct GridOpts {
    std::size_t nx = 31;
    std::size_t ny = 31;
    double h = 0.0;  // 0: 1 / (nx + 1)

    double resolved_h() const { return h > 0.0 ? h : 1.0 / static_cast<double>(nx + 1); }
    Domain domain() const { return Domain{nx, ny, resolved_h()}; }
};

void add_grid_options(CLI::App* sub, GridOpts& g, std::size_t default_n)
{
    g.nx = g.ny = default_n;
    sub->add_option("--nx", g.nx, "interior points along x")->check(CLI::PositiveNumber);
    sub->add_option("--ny", g.ny, "interior points along y")->check(CLI::PositiveNumber);
    sub->add_option("--h", g.h, "grid spacing (default 1/(nx+1))")->check(CLI::NonNegativeNumber);
}

json grid_json(const GridOpts& g)
{
    return json{{"nx", g.nx}, {"ny", g.ny}, {"h", g.resolved_h()}};
}

struct EllipticOpts {
    GridOpts grid;
    double alpha = 2.0;
    double tol = 1e-8;
    int max_iter = 500;
    std::string start = "sub";
    std::string out;
    std::string report;
};

struct BernoulliOpts {
    double alpha = 2.0;
    double gamma = 1.0;
    std::string mu = "constant:1";
    std::vector<double> t{0.0};
    bool as_json = false;
};

struct EvolveOpts {
    GridOpts grid;
    std::string init = "separable";
    double alpha = 2.0;
    double gamma = 1.0;
    std::string mu = "constant:1";
    std::string sign = "growth";
    double T = 1.0;
    double dt = 0.0;  // 0: half the stability bound
    std::size_t snapshot_every = 10;
    double elliptic_tol = 1e-10;
    std::string out_dir;
    std::string report;
};

struct BoundsOpts {
    EvolveOpts ev;
    bool monotone = false;
    int m_max = 200;
    double mono_tol = 1e-6;
};

struct CompareOpts {
    GridOpts grid;
    std::string mu1;
    std::string mu2;
    double alpha = 2.0;
    double T = 0.5;
    double dt = 0.0;
    std::size_t snapshot_every = 10;
    std::string w0 = "bump:0.5";
    std::string v0 = "scale:0.5";
    int pairs = 0;
    std::uint64_t seed = 0;
    std::string report;
};

struct DenoiseOpts {
    std::string input;
    double sigma = 0.18;
    std::uint64_t seed = 0;
    std::string method = "both";
    std::string out_dir;
    std::string report;
    std::string mu = "rational:0.3";
    DenoiseParams params;
};

struct BenchOpts {
    std::size_t n = 63;
    double alpha = 4.0;
    double tol = 1e-8;
    int steps = 100;
    std::string input = BDIFF_DEFAULT_IMAGE;
    double sigma = 0.18;
    std::uint64_t seed = 0;
    bool skip_denoise = false;
    std::string report;
};

// ---------------------------------------------------------------------------
// helpers

json num(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

json location_json(const Location& loc)
{
    return json{{"i", loc.i}, {"j", loc.j}, {"t", loc.t}};
}

void emit(const json& report, const std::string& path, std::ostream& out)
{
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) {
        throw ValidationError("cannot write report '" + path + "'");
    }
    f << text;
    spdlog::info("report written to {}", path);
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ValidationError("cannot create directory '" + dir + "': " + ec.message());
    }
}

void refuse_overwrite(const std::string& input, const fs::path& output)
{
    std::error_code ec;
    if (!input.empty() && fs::exists(output, ec) && fs::equivalent(input, output, ec)) {
        throw ValidationError("refusing to overwrite input file '" + input + "'");
    }
}

std::uint64_t resolve_seed(std::uint64_t flag, json& config)
{
    const char* env = std::getenv(kSeedEnv);
    if (env == nullptr || *env == '\0') {
        config["seed_source"] = "flag";
        return flag;
    }
    std::uint64_t value = 0;
    std::istringstream is(env);
    if (!(is >> value) || !is.eof()) {
        throw ValidationError(std::string(kSeedEnv) + " is not an unsigned integer: '" + env + "'");
    }
    config["seed_source"] = "env";
    return value;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Grid2D bump(const GridOpts& g, double amplitude)
{
    const double h = g.resolved_h();
    Grid2D out(g.nx, g.ny, h, Boundary::DirichletZero);
    const double lx = (g.nx + 1) * h;
    const double ly = (g.ny + 1) * h;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            out(i, j) = amplitude * std::sin(M_PI * (i + 1) * h / lx) * std::sin(M_PI * (j + 1) * h / ly);
        }
    }
    return out;
}

bool starts_with(const std::string& s, const char* prefix)
{
    return s.rfind(prefix, 0) == 0;
}

double parse_real(const std::string& text, const char* what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("malformed ") + what + " '" + text + "'");
}

std::string csv_path(const std::string& spec)
{
    return starts_with(spec, "csv:") ? spec.substr(4) : spec;
}

// Initial data for evolve / verify-bounds. Elliptic barriers are solved only
// when the init needs them.
struct InitialData {
    Grid2D v0;
    std::optional<EllipticSolution> sol;
};

EllipticSolution solve_barriers(const EvolveOpts& o)
{
    spdlog::info("solving the elliptic problem on {}x{} (alpha = {})", o.grid.nx, o.grid.ny, o.alpha);
    return solve_brezis_oswald(o.grid.domain(), o.alpha, o.elliptic_tol, 1000);
}

InitialData build_initial_data(const EvolveOpts& o, const BernoulliParams& p, bool need_barriers)
{
    if (o.init == "separable" || starts_with(o.init, "blend:")) {
        EllipticSolution sol = solve_barriers(o);
        Grid2D v0 = Grid2D(1, 1, 1.0, Boundary::DirichletZero);
        if (o.init == "separable") {
            v0 = separable_solution(sol.u, p, 0.0);
        } else {
            const std::string w = o.init.substr(6);
            if (w == "x") {
                // theta(x) = x / L across the domain.
                Grid2D theta = Grid2D::zeros_like(sol.u);
                const double L = theta.length_x();
                for (std::size_t j = 0; j < theta.ny(); ++j) {
                    for (std::size_t i = 0; i < theta.nx(); ++i) {
                        theta(i, j) = (i + 1) * theta.h() / L;
                    }
                }
                v0 = blended_initial_data(sol, p, theta);
            } else {
                v0 = blended_initial_data(sol, p, parse_real(w, "blend weight"));
            }
        }
        return InitialData{std::move(v0), std::move(sol)};
    }
    Grid2D v0 = read_csv(csv_path(o.init));
    if (!need_barriers) {
        return InitialData{std::move(v0), std::nullopt};
    }
    if (v0.bc() != Boundary::DirichletZero) {
        throw ValidationError("barrier checks need a Dirichlet initial field");
    }
    EvolveOpts matched = o;
    matched.grid = GridOpts{v0.nx(), v0.ny(), v0.h()};
    return InitialData{std::move(v0), solve_barriers(matched)};
}

double auto_dt(const Grid2D& v0, double alpha, const GrowthRate& mu, ReactionSign sign, double T)
{
    // max v(t) <= max v0 * exp(int_0^t mu) under the growth sign.
    const double growth = sign == ReactionSign::Growth ? std::exp(integral_mu(mu, T)) : 1.0;
    Grid2D envelope = Grid2D::filled(1, 1, v0.h(), v0.bc(), std::max(max_value(v0), 0.0) * growth);
    return 0.5 * cfl_max_dt(envelope, alpha);
}

json evolve_config(const EvolveOpts& o, const Global& g)
{
    return json{{"init", o.init},
                {"grid", grid_json(o.grid)},
                {"alpha", o.alpha},
                {"gamma", o.gamma},
                {"mu", GrowthRate::parse(o.mu).describe()},
                {"sign", o.sign},
                {"T", o.T},
                {"dt", o.dt},
                {"snapshot_every", o.snapshot_every},
                {"elliptic_tol", o.elliptic_tol},
                {"out_dir", o.out_dir},
                {"report", o.report},
                {"threads", g.threads},
                {"log_level", g.log_level}};
}

void write_trace(const EvolutionTrace& trace, const std::string& dir, const std::string& protect,
                 json& files)
{
    ensure_dir(dir);
    for (std::size_t s = 0; s < trace.snapshots.size(); ++s) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(5) << std::setfill('0') << s << ".csv";
        const fs::path path = fs::path(dir) / name.str();
        refuse_overwrite(protect, path);
        write_csv(path.string(), trace.snapshots[s]);
        files.push_back(name.str());
    }
}

json trace_summary(const EvolutionTrace& trace)
{
    const Grid2D& last = trace.snapshots.back();
    return json{{"dt", trace.dt},
                {"steps", trace.steps},
                {"snapshots", trace.snapshots.size()},
                {"times", trace.times},
                {"final_max", max_value(last)},
                {"final_min", min_value(last)},
                {"final_l2", norm_l2(last)}};
}

// ---------------------------------------------------------------------------
// subcommands

int run_solve_elliptic(const EllipticOpts& o, const Global& g, std::ostream& out)
{
    if (!(o.alpha > 1.0)) {
        throw ValidationError("--alpha must exceed 1");
    }
    if (!(o.tol > 0.0) || o.max_iter < 1) {
        throw ValidationError("--tol must be positive and --max-iter at least 1");
    }
    const StartFrom start = o.start == "sup" ? StartFrom::Supersolution : StartFrom::Subsolution;
    const auto t0 = Clock::now();
    const EllipticSolution sol = solve_brezis_oswald(o.grid.domain(), o.alpha, o.tol, o.max_iter, start);
    spdlog::info("elliptic solve: {} iterations, residual {:.3e}", sol.iterations,
                 sol.residual_history.back());
    if (!o.out.empty()) {
        write_csv(o.out, sol.u);
    }
    json report{{"command", "solve-elliptic"},
                {"config",
                 {{"grid", grid_json(o.grid)},
                  {"alpha", o.alpha},
                  {"tol", o.tol},
                  {"max_iter", o.max_iter},
                  {"start", o.start},
                  {"out", o.out},
                  {"report", o.report},
                  {"threads", g.threads},
                  {"log_level", g.log_level}}},
                {"lambda1", sol.lambda1},
                {"sigma", sol.sigma},
                {"c", sol.c},
                {"iterations", sol.iterations},
                {"residual", sol.residual_history.back()},
                {"residual_history", sol.residual_history},
                {"increment_history", sol.increment_history},
                {"worst_step", sol.worst_step},
                {"max_above_sup", sol.max_above_sup},
                {"max_below_sub", sol.max_below_sub},
                {"sub_defect", sol.sub_defect},
                {"sup_defect", sol.sup_defect},
                {"max_u", max_value(sol.u)},
                {"seconds", seconds_since(t0)}};
    emit(report, o.report, out);
    return kOk;
}

int run_bernoulli_eval(const BernoulliOpts& o, std::ostream& out)
{
    const BernoulliParams p{o.alpha, o.gamma, GrowthRate::parse(o.mu)};
    validate(p);
    for (double t : o.t) {
        if (!(t >= 0.0)) {
            throw ValidationError("--t values must be nonnegative");
        }
    }
    std::vector<double> values;
    for (double t : o.t) {
        values.push_back(eval_S(p, t));
    }
    if (o.as_json) {
        json report{{"command", "bernoulli-eval"},
                    {"config", {{"alpha", o.alpha}, {"gamma", o.gamma}, {"mu", p.mu.describe()}, {"t", o.t}}},
                    {"S", values}};
        emit(report, "", out);
        return kOk;
    }
    std::ostringstream os;
    os.precision(17);
    for (double v : values) {
        os << v << '\n';
    }
    out << os.str();
    return kOk;
}

int run_evolve(const EvolveOpts& o, const Global& g, std::ostream& out)
{
    const ReactionSign sign = reaction_sign_from_string(o.sign);
    const BernoulliParams p{o.alpha, o.gamma, GrowthRate::parse(o.mu)};
    if (!(o.alpha >= 1.0) || !(o.T >= 0.0) || !(o.dt >= 0.0) || o.snapshot_every == 0) {
        throw ValidationError("need alpha >= 1, T >= 0, dt >= 0 and snapshot-every >= 1");
    }
    const bool csv_init = o.init != "separable" && !starts_with(o.init, "blend:");
    if (!csv_init) {
        validate(p);
    }
    InitialData init = build_initial_data(o, p, false);
    const double dt = o.dt > 0.0 ? o.dt : auto_dt(init.v0, o.alpha, p.mu, sign, o.T);
    spdlog::info("evolving to T = {} with dt = {}", o.T, dt);

    json config = evolve_config(o, g);
    config["dt_resolved"] = dt;
    const std::string protect = csv_init ? csv_path(o.init) : std::string();
    const auto t0 = Clock::now();
    try {
        const EvolutionTrace trace = evolve(init.v0, o.T, dt, o.alpha, p.mu, sign, o.snapshot_every);
        json report{{"command", "evolve"}, {"config", config}, {"trace", trace_summary(trace)}};
        if (!o.out_dir.empty()) {
            json files = json::array();
            write_trace(trace, o.out_dir, protect, files);
            report["files"] = files;
            emit(report, (fs::path(o.out_dir) / "trace.json").string(), out);
        }
        report["seconds"] = seconds_since(t0);
        emit(report, o.report, out);
    } catch (const EvolutionAborted& e) {
        if (!o.out_dir.empty() && !e.partial().snapshots.empty()) {
            json files = json::array();
            write_trace(e.partial(), o.out_dir, protect, files);
            json partial{{"command", "evolve"},
                         {"config", config},
                         {"aborted", e.what()},
                         {"trace", trace_summary(e.partial())},
                         {"files", files}};
            emit(partial, (fs::path(o.out_dir) / "trace.json").string(), out);
        }
        throw;
    }
    return kOk;
}

int run_verify_bounds(const BoundsOpts& b, const Global& g, std::ostream& out)
{
    const EvolveOpts& o = b.ev;
    const BernoulliParams p{o.alpha, o.gamma, GrowthRate::parse(o.mu)};
    validate(p);
    if (!(o.T >= 0.0) || !(o.dt >= 0.0) || o.snapshot_every == 0 || b.m_max < 1 || !(b.mono_tol > 0.0)) {
        throw ValidationError("need T >= 0, dt >= 0, snapshot-every >= 1, m-max >= 1, mono-tol > 0");
    }
    InitialData init = build_initial_data(o, p, true);
    const EllipticSolution& sol = *init.sol;
    // Stability for the whole run: the solution stays below the upper barrier.
    // S' <= c S - S^alpha with c = sup mu, so S stays below max(gamma, c^{1/(alpha-1)}).
    const double peak = std::max(p.gamma, std::pow(p.mu.running_max(o.T), 1.0 / (o.alpha - 1.0)));
    Grid2D envelope = nonneg_power(sol.sup, 1.0 / o.alpha);
    for (double& v : envelope.values()) {
        v *= peak;
    }
    const double dt = o.dt > 0.0 ? o.dt : 0.5 * cfl_max_dt(envelope, o.alpha);

    json config = evolve_config(o, g);
    config.erase("sign");
    config["dt_resolved"] = dt;
    config["monotone"] = b.monotone;
    config["m_max"] = b.m_max;
    config["mono_tol"] = b.mono_tol;

    const EvolutionTrace trace = evolve(init.v0, o.T, dt, o.alpha, p.mu, ReactionSign::Growth, o.snapshot_every);
    const SandwichReport sw = verify_sandwich(trace, sol, p);
    json report{{"command", "verify-bounds"},
                {"config", config},
                {"max_lower_violation", sw.max_lower_violation},
                {"max_upper_violation", sw.max_upper_violation},
                {"min_lower_margin", sw.min_lower_margin},
                {"min_upper_margin", sw.min_upper_margin},
                {"lower_argmax", location_json(sw.lower_argmax)},
                {"upper_argmax", location_json(sw.upper_argmax)},
                {"snapshots_checked", sw.snapshots_checked},
                {"tolerance", sw.tolerance},
                {"sandwiched", sw.sandwiched()},
                {"verification", "snapshots only"}};
    if (b.monotone) {
        const MonotoneBracket mb = monotone_bracket(init.v0, o.T, dt, p, sol, o.snapshot_every, b.m_max,
                                                    b.mono_tol, g.threads);
        double vs_evolve = 0.0;
        for (std::size_t s = 0; s < trace.snapshots.size(); ++s) {
            for (std::size_t k = 0; k < trace.snapshots[s].size(); ++k) {
                vs_evolve = std::max(vs_evolve, std::abs(trace.snapshots[s][k] - mb.lower.trace.snapshots[s][k]));
            }
        }
        report["monotone"] = json{{"lower_iterations", mb.lower.iterations},
                                  {"upper_iterations", mb.upper.iterations},
                                  {"lower_worst_step", mb.lower.worst_step},
                                  {"upper_worst_step", mb.upper.worst_step},
                                  {"lower_gap_history", mb.lower.gap_history},
                                  {"upper_gap_history", mb.upper.gap_history},
                                  {"limit_gap", mb.limit_gap},
                                  {"min_order_gap", mb.min_order_gap},
                                  {"max_diff_vs_evolve", vs_evolve}};
    }
    emit(report, o.report, out);
    return kOk;
}

struct Pair {
    Grid2D v0;
    Grid2D w0;
};

json compare_pair(const Pair& pair, const CompareOpts& o, const GrowthRate& mu1, const GrowthRate& mu2,
                  int threads, ComparisonReport& result)
{
    const double growth = std::exp(std::max(integral_mu(mu1, o.T), integral_mu(mu2, o.T)));
    Grid2D envelope = Grid2D::filled(1, 1, pair.w0.h(), pair.w0.bc(),
                                     std::max({max_value(pair.w0), max_value(pair.v0), 0.0}) * growth);
    const double dt = o.dt > 0.0 ? o.dt : 0.5 * cfl_max_dt(envelope, o.alpha);
    const auto run = [&](const Grid2D& init, const GrowthRate& mu) {
        return evolve(init, o.T, dt, o.alpha, mu, ReactionSign::Growth, o.snapshot_every);
    };
    EvolutionTrace tv;
    EvolutionTrace tw;
    if (threads > 1) {
        auto fw = std::async(std::launch::async, run, std::cref(pair.w0), std::cref(mu2));
        tv = run(pair.v0, mu1);
        tw = fw.get();
    } else {
        tv = run(pair.v0, mu1);
        tw = run(pair.w0, mu2);
    }
    result = verify_comparison(tv, tw);
    return json{{"dt", dt},
                {"max_violation", result.max_violation},
                {"violations", result.violations},
                {"worst", location_json(result.worst)},
                {"snapshots_checked", result.snapshots_checked}};
}

Grid2D field_from_spec(const std::string& spec, const GridOpts& g)
{
    if (starts_with(spec, "bump:")) {
        return bump(g, parse_real(spec.substr(5), "bump amplitude"));
    }
    return read_csv(csv_path(spec));
}

int run_compare(const CompareOpts& o, const Global& g, std::ostream& out)
{
    const GrowthRate mu1 = GrowthRate::parse(o.mu1);
    const GrowthRate mu2 = GrowthRate::parse(o.mu2);
    if (!(o.alpha >= 1.0) || !(o.T >= 0.0) || !(o.dt >= 0.0) || o.snapshot_every == 0 || o.pairs < 0) {
        throw ValidationError("need alpha >= 1, T >= 0, dt >= 0, snapshot-every >= 1, pairs >= 0");
    }
    json config{{"grid", grid_json(o.grid)},
                {"mu1", mu1.describe()},
                {"mu2", mu2.describe()},
                {"alpha", o.alpha},
                {"T", o.T},
                {"dt", o.dt},
                {"snapshot_every", o.snapshot_every},
                {"w0", o.w0},
                {"v0", o.v0},
                {"pairs", o.pairs},
                {"report", o.report},
                {"threads", g.threads},
                {"log_level", g.log_level}};

    std::vector<Pair> pairs;
    if (o.pairs == 0) {
        Grid2D w0 = field_from_spec(o.w0, o.grid);
        Grid2D v0 = starts_with(o.v0, "scale:") ? w0 : read_csv(csv_path(o.v0));
        if (starts_with(o.v0, "scale:")) {
            const double s = parse_real(o.v0.substr(6), "v0 scale");
            if (!(s >= 0.0 && s <= 1.0)) {
                throw ValidationError("v0 scale must lie in [0, 1]");
            }
            for (double& x : v0.values()) {
                x *= s;
            }
        }
        pairs.push_back(Pair{std::move(v0), std::move(w0)});
    } else {
        const std::uint64_t seed = resolve_seed(o.seed, config);
        config["seed"] = seed;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double h = o.grid.resolved_h();
        for (int k = 0; k < o.pairs; ++k) {
            const double amplitude = 0.05 + 0.45 * unit(rng);
            Grid2D w0(o.grid.nx, o.grid.ny, h, Boundary::DirichletZero);
            Grid2D v0 = w0;
            for (std::size_t q = 0; q < w0.size(); ++q) {
                w0[q] = amplitude * unit(rng);
                v0[q] = w0[q] * unit(rng);
            }
            pairs.push_back(Pair{std::move(v0), std::move(w0)});
        }
    }

    json results = json::array();
    std::size_t total = 0;
    double worst = 0.0;
    for (const Pair& pair : pairs) {
        ComparisonReport r;
        results.push_back(compare_pair(pair, o, mu1, mu2, g.threads, r));
        total += r.violations;
        worst = std::max(worst, r.max_violation);
    }
    json report{{"command", "compare"},
                {"config", config},
                {"pairs", results},
                {"total_violations", total},
                {"max_violation", worst},
                {"tolerance", ComparisonReport{}.tolerance},
                {"ordered", total == 0},
                {"verification", "snapshots only"}};
    emit(report, o.report, out);
    return kOk;
}

json params_json(const DenoiseParams& p)
{
    return json{{"alpha_gm", p.alpha_gm},
                {"dt_gm", p.dt_gm},
                {"steps_gm", p.steps_gm},
                {"dt_pm", p.dt_pm},
                {"steps_pm", p.steps_pm},
                {"K_pm", p.K_pm},
                {"gamma_correction", p.gamma_correction},
                {"stretch_strength", p.stretch_strength},
                {"brightness_boost", p.brightness_boost},
                {"sigma_noise", p.sigma_noise},
                {"mu", p.mu.describe()}};
}

json metrics_json(const Metrics& m)
{
    return json{{"mse", m.mse}, {"psnr_db", num(m.psnr_db)}, {"ssim", m.ssim}};
}

int run_denoise(DenoiseOpts o, const Global& g, std::ostream& out)
{
    json config{{"input", o.input},
                {"method", o.method},
                {"out_dir", o.out_dir},
                {"report", o.report},
                {"threads", g.threads},
                {"log_level", g.log_level}};
    const Method method = method_from_string(o.method);
    DenoiseParams p = o.params;
    p.sigma_noise = o.sigma;
    p.mu = GrowthRate::parse(o.mu);
    p.seed = resolve_seed(o.seed, config);
    validate(p);

    const ImageTensor clean = read_png(o.input);
    spdlog::info("denoising {} ({}x{}), sigma = {}, seed = {}", o.input, clean.width(), clean.height(),
                 p.sigma_noise, p.seed);
    const auto t0 = Clock::now();
    const DenoiseOutput result = run_pipeline(clean, p, method, g.threads);
    const double elapsed = seconds_since(t0);

    if (!o.out_dir.empty()) {
        ensure_dir(o.out_dir);
        const auto save = [&](const char* name, const ImageTensor& img) {
            const fs::path path = fs::path(o.out_dir) / name;
            refuse_overwrite(o.input, path);
            write_png(path.string(), img);
        };
        save("noisy.png", result.noisy);
        if (result.gm) {
            save("gm.png", *result.gm);
        }
        if (result.pm) {
            save("pm.png", *result.pm);
        }
    }
    json metrics{{"noisy", metrics_json(result.report.noisy)}};
    if (result.report.gm) {
        metrics["gm"] = metrics_json(*result.report.gm);
    }
    if (result.report.pm) {
        metrics["pm"] = metrics_json(*result.report.pm);
    }
    json report{{"command", "denoise"},
                {"config", config},
                {"params", params_json(p)},
                {"seed", p.seed},
                {"metrics", metrics},
                {"seconds", elapsed}};
    emit(report, o.report, out);
    return kOk;
}

int run_bench(const BenchOpts& o, const Global& g, std::ostream& out)
{
    if (!(o.alpha > 1.0) || !(o.tol > 0.0) || o.steps < 0 || o.n == 0) {
        throw ValidationError("bench: need alpha > 1, tol > 0, steps >= 0, n >= 1");
    }
    json config{{"n", o.n},
                {"alpha", o.alpha},
                {"tol", o.tol},
                {"steps", o.steps},
                {"input", o.input},
                {"sigma", o.sigma},
                {"skip_denoise", o.skip_denoise},
                {"report", o.report},
                {"threads", g.threads},
                {"log_level", g.log_level}};
    const std::uint64_t seed = resolve_seed(o.seed, config);
    config["seed"] = seed;

    const Domain domain = Domain::unit_square(o.n);
    auto t0 = Clock::now();
    const EllipticSolution sol = solve_brezis_oswald(domain, o.alpha, o.tol, 1000);
    json elliptic{{"seconds", seconds_since(t0)},
                  {"iterations", sol.iterations},
                  {"residual", sol.residual_history.back()}};

    const BernoulliParams p{o.alpha, 1.0, GrowthRate::constant(1.0)};
    Grid2D v = separable_solution(sol.u, p, 0.0);
    const double dt = 0.5 * cfl_max_dt(v, o.alpha);
    t0 = Clock::now();
    for (int n = 0; n < o.steps; ++n) {
        v = step_explicit(v, n * dt, dt, o.alpha, p.mu, ReactionSign::Growth);
    }
    json parabolic{{"seconds", seconds_since(t0)}, {"steps", o.steps}, {"dt", dt}, {"final_max", max_value(v)}};

    json report{{"command", "bench"}, {"config", config}, {"elliptic", elliptic}, {"parabolic", parabolic}};
    if (!o.skip_denoise) {
        const ImageTensor clean = read_png(o.input);
        DenoiseParams dp;
        dp.sigma_noise = o.sigma;
        dp.seed = seed;
        json denoise;
        for (Method m : {Method::Gm, Method::Pm}) {
            t0 = Clock::now();
            const DenoiseOutput r = run_pipeline(clean, dp, m, g.threads);
            const Metrics& met = m == Method::Gm ? *r.report.gm : *r.report.pm;
            denoise[to_string(m)] = json{{"seconds", seconds_since(t0)},
                                         {"psnr_db", num(met.psnr_db)},
                                         {"ssim", met.ssim},
                                         {"width", clean.width()},
                                         {"height", clean.height()}};
        }
        report["denoise"] = denoise;
    }
    emit(report, o.report, out);
    return kOk;
}

void configure_logging(const std::string& level, std::ostream& err)
{
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_st>(err);
    auto logger = std::make_shared<spdlog::logger>("bernoulli-diffuse", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::from_str(level));
    spdlog::set_default_logger(logger);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Bernoulli-localised porous-medium diffusion: solvers, verification and denoising",
                 "bernoulli-diffuse"};
    app.require_subcommand(1);
    // "-h" stays free for the grid spacing flag.
    app.set_help_flag("--help", "print this help and exit");
    Global global;
    app.add_option("--threads", global.threads, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    app.add_option("--log-level", global.log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    EllipticOpts eo;
    auto* elliptic = app.add_subcommand("solve-elliptic", "solve -Lap u = u^{1/alpha} by monotone iteration");
    add_grid_options(elliptic, eo.grid, 31);
    elliptic->add_option("--alpha", eo.alpha, "exponent alpha > 1")->required();
    elliptic->add_option("--tol", eo.tol, "stop when increment and residual are below tol");
    elliptic->add_option("--max-iter", eo.max_iter, "iteration cap");
    elliptic->add_option("--start", eo.start, "sub|sup")->check(CLI::IsMember({"sub", "sup"}));
    elliptic->add_option("--out", eo.out, "write u as CSV");
    elliptic->add_option("--report", eo.report, "write the JSON report here instead of stdout");

    BernoulliOpts bo;
    auto* bern = app.add_subcommand("bernoulli-eval", "print S(t) from the closed form");
    bern->add_option("--alpha", bo.alpha)->required();
    bern->add_option("--gamma", bo.gamma)->required();
    bern->add_option("--mu", bo.mu, "constant:m | rational:a | exp:m,b | seasonal:m | table:file.csv")->required();
    bern->add_option("--t", bo.t, "one or more times")->required()->expected(1, -1);
    bern->add_flag("--json", bo.as_json, "emit JSON instead of one value per line");

    EvolveOpts ev;
    auto* evolve_cmd = app.add_subcommand("evolve", "explicit time march of dv/dt = Lap v^alpha +/- mu v");
    const auto add_evolve = [](CLI::App* sub, EvolveOpts& o) {
        add_grid_options(sub, o.grid, 31);
        sub->add_option("--init", o.init, "separable | blend:<weight> | blend:x | <file.csv>");
        sub->add_option("--alpha", o.alpha);
        sub->add_option("--gamma", o.gamma, "S(0) for separable and blended data");
        sub->add_option("--mu", o.mu);
        sub->add_option("--T", o.T, "final time");
        sub->add_option("--dt", o.dt, "time step (default: half the stability bound)");
        sub->add_option("--snapshot-every", o.snapshot_every);
        sub->add_option("--elliptic-tol", o.elliptic_tol);
        sub->add_option("--report", o.report);
    };
    add_evolve(evolve_cmd, ev);
    evolve_cmd->add_option("--sign", ev.sign, "growth|absorption")->check(CLI::IsMember({"growth", "absorption"}));
    evolve_cmd->add_option("--out-dir", ev.out_dir, "write snapshots and trace.json here");

    BoundsOpts bb;
    auto* bounds = app.add_subcommand("verify-bounds", "check the S(t) u_-/+^{1/alpha} sandwich along a run");
    add_evolve(bounds, bb.ev);
    bb.ev.init = "blend:0.125";
    bounds->add_flag("--monotone", bb.monotone, "also run both monotone iteration sequences");
    bounds->add_option("--m-max", bb.m_max);
    bounds->add_option("--mono-tol", bb.mono_tol);

    CompareOpts co;
    auto* compare = app.add_subcommand("compare", "evolve an ordered pair and check v <= w");
    add_grid_options(compare, co.grid, 32);
    compare->add_option("--mu1", co.mu1)->required();
    compare->add_option("--mu2", co.mu2)->required();
    compare->add_option("--alpha", co.alpha);
    compare->add_option("--T", co.T);
    compare->add_option("--dt", co.dt);
    compare->add_option("--snapshot-every", co.snapshot_every);
    compare->add_option("--w0", co.w0, "bump:<amplitude> | <file.csv>");
    compare->add_option("--v0", co.v0, "scale:<s> (v0 = s w0) | <file.csv>");
    compare->add_option("--pairs", co.pairs, "run this many random ordered pairs instead");
    compare->add_option("--seed", co.seed);
    compare->add_option("--report", co.report);

    DenoiseOpts dn;
    auto* denoise = app.add_subcommand("denoise", "noise, diffuse (GM and/or PM), postprocess, measure");
    denoise->add_option("--input", dn.input, "PNG image")->required()->check(CLI::ExistingFile);
    denoise->add_option("--sigma", dn.sigma);
    denoise->add_option("--seed", dn.seed);
    denoise->add_option("--method", dn.method)->check(CLI::IsMember({"gm", "pm", "both"}));
    denoise->add_option("--out-dir", dn.out_dir);
    denoise->add_option("--report", dn.report);
    denoise->add_option("--mu", dn.mu);
    denoise->add_option("--alpha-gm", dn.params.alpha_gm);
    denoise->add_option("--dt-gm", dn.params.dt_gm);
    denoise->add_option("--steps-gm", dn.params.steps_gm);
    denoise->add_option("--dt-pm", dn.params.dt_pm);
    denoise->add_option("--steps-pm", dn.params.steps_pm);
    denoise->add_option("--k-pm", dn.params.K_pm);
    denoise->add_option("--gamma-correction", dn.params.gamma_correction);
    denoise->add_option("--stretch", dn.params.stretch_strength);
    denoise->add_option("--brightness", dn.params.brightness_boost);

    BenchOpts bo2;
    auto* bench = app.add_subcommand("bench", "wall-clock timings for the main kernels");
    bench->add_option("--n", bo2.n);
    bench->add_option("--alpha", bo2.alpha);
    bench->add_option("--tol", bo2.tol);
    bench->add_option("--steps", bo2.steps);
    bench->add_option("--input", bo2.input);
    bench->add_option("--sigma", bo2.sigma);
    bench->add_option("--seed", bo2.seed);
    bench->add_flag("--skip-denoise", bo2.skip_denoise);
    bench->add_option("--report", bo2.report);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kInvalid;
    }

    try {
        configure_logging(global.log_level, err);
        if (elliptic->parsed()) {
            return run_solve_elliptic(eo, global, out);
        }
        if (bern->parsed()) {
            return run_bernoulli_eval(bo, out);
        }
        if (evolve_cmd->parsed()) {
            return run_evolve(ev, global, out);
        }
        if (bounds->parsed()) {
            return run_verify_bounds(bb, global, out);
        }
        if (compare->parsed()) {
            return run_compare(co, global, out);
        }
        if (denoise->parsed()) {
            return run_denoise(dn, global, out);
        }
        if (bench->parsed()) {
            return run_bench(bo2, global, out);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kInvalid;
}

int dispatch(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace bdiff::cli
