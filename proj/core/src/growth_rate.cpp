#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bdiff/bernoulli.hpp"
#include "bdiff/errors.hpp"

namespace bdiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError(std::string("growth rate: ") + what + " must be positive");
    }
}

double parse_number(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::logic_error&) {
        throw ValidationError("growth rate: '" + s + "' is not a number");
    }
    if (used != s.size()) {
        throw ValidationError("growth rate: trailing characters in '" + s + "'");
    }
    return v;
}

// Simpson on one linear segment is exact; kept as Simpson so the tabulated
// path shares the quadrature rule documented for it.
double simpson_segment(double fa, double fm, double fb, double width)
{
    return width / 6.0 * (fa + 4.0 * fm + fb);
}

double table_value(const GrowthRate::Tabulated& tab, double t)
{
    if (t <= tab.t.front()) {
        return tab.mu.front();
    }
    if (t >= tab.t.back()) {
        return tab.mu.back();
    }
    const auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - tab.t.begin()) - 1;
    const double w = (t - tab.t[k]) / (tab.t[k + 1] - tab.t[k]);
    return (1.0 - w) * tab.mu[k] + w * tab.mu[k + 1];
}

// Integral of the table from its first knot to t (t may lie outside).
double table_integral_from_start(const GrowthRate::Tabulated& tab, double t)
{
    if (t <= tab.t.front()) {
        return (t - tab.t.front()) * tab.mu.front();
    }
    if (t >= tab.t.back()) {
        return tab.cumulative.back() + (t - tab.t.back()) * tab.mu.back();
    }
    const auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - tab.t.begin()) - 1;
    const double fa = tab.mu[k];
    const double fb = table_value(tab, t);
    return tab.cumulative[k] + simpson_segment(fa, 0.5 * (fa + fb), fb, t - tab.t[k]);
}

}  // namespace

GrowthRate GrowthRate::constant(double mu0)
{
    require_positive(mu0, "constant rate");
    return GrowthRate(Constant{mu0});
}

GrowthRate GrowthRate::rational(double a)
{
    require_positive(a, "rational numerator");
    return GrowthRate(RationalDecay{a});
}

GrowthRate GrowthRate::exponential(double mu0, double beta)
{
    require_positive(mu0, "exponential amplitude");
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ValidationError("growth rate: exponential decay rate must be nonnegative");
    }
    return GrowthRate(ExpDecay{mu0, beta});
}

GrowthRate GrowthRate::seasonal(double mu0)
{
    require_positive(mu0, "seasonal amplitude");
    return GrowthRate(Seasonal{mu0});
}

GrowthRate GrowthRate::tabulated(std::vector<std::pair<double, double>> samples)
{
    if (samples.empty()) {
        throw ValidationError("growth rate: table needs at least one sample");
    }
    Tabulated tab;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto [t, mu] = samples[k];
        if (!std::isfinite(t) || (k > 0 && !(t > samples[k - 1].first))) {
            throw ValidationError("growth rate: table times must be strictly increasing");
        }
        require_positive(mu, "tabulated rate");
        tab.t.push_back(t);
        tab.mu.push_back(mu);
    }
    tab.cumulative.assign(tab.t.size(), 0.0);
    for (std::size_t k = 1; k < tab.t.size(); ++k) {
        const double fa = tab.mu[k - 1];
        const double fb = tab.mu[k];
        tab.cumulative[k] =
            tab.cumulative[k - 1] + simpson_segment(fa, 0.5 * (fa + fb), fb, tab.t[k] - tab.t[k - 1]);
    }
    return GrowthRate(std::move(tab));
}

GrowthRate GrowthRate::parse(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw ValidationError("growth rate: expected '<kind>:<args>', got '" + spec + "'");
    }
    const std::string kind = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    if (kind == "constant") {
        return constant(parse_number(args));
    }
    if (kind == "rational") {
        return rational(parse_number(args));
    }
    if (kind == "seasonal") {
        return seasonal(parse_number(args));
    }
    if (kind == "exp") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("growth rate: exp needs 'mu0,beta'");
        }
        return exponential(parse_number(args.substr(0, comma)), parse_number(args.substr(comma + 1)));
    }
    if (kind == "table") {
        std::ifstream is(args);
        if (!is) {
            throw ValidationError("growth rate: cannot open table '" + args + "'");
        }
        std::vector<std::pair<double, double>> samples;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') {
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                throw ValidationError("growth rate: table row '" + line + "' is not 't,mu'");
            }
            samples.emplace_back(parse_number(line.substr(0, comma)),
                                 parse_number(line.substr(comma + 1)));
        }
        return tabulated(std::move(samples));
    }
    throw ValidationError("growth rate: unknown kind '" + kind + "'");
}

double GrowthRate::operator()(double t) const
{
    return std::visit(
        overloaded{
            [](const Constant& c) { return c.mu0; },
            [t](const RationalDecay& r) { return r.a / (1.0 + t); },
            [t](const ExpDecay& e) { return e.mu0 * std::exp(-e.beta * t); },
            [t](const Seasonal& s) { return s.mu0 * (1.0 + std::cos(2.0 * std::numbers::pi * t)); },
            [t](const Tabulated& tab) { return table_value(tab, t); },
        },
        kind_);
}

double GrowthRate::integral(double t) const
{
    return std::visit(
        overloaded{
            [t](const Constant& c) { return c.mu0 * t; },
            [t](const RationalDecay& r) { return r.a * std::log1p(t); },
            [t](const ExpDecay& e) {
                return e.beta == 0.0 ? e.mu0 * t : e.mu0 * -std::expm1(-e.beta * t) / e.beta;
            },
            [t](const Seasonal& s) {
                constexpr double two_pi = 2.0 * std::numbers::pi;
                return s.mu0 * (t + std::sin(two_pi * t) / two_pi);
            },
            [t](const Tabulated& tab) {
                return table_integral_from_start(tab, t) - table_integral_from_start(tab, 0.0);
            },
        },
        kind_);
}

double GrowthRate::running_max(double t) const
{
    return std::visit(
        overloaded{
            [](const Constant& c) { return c.mu0; },
            [](const RationalDecay& r) { return r.a; },
            [](const ExpDecay& e) { return e.mu0; },
            [t](const Seasonal& s) { return t >= 0.0 ? 2.0 * s.mu0 : 0.0; },
            [t](const Tabulated& tab) {
                double m = table_value(tab, 0.0);
                for (std::size_t k = 0; k < tab.t.size() && tab.t[k] <= t; ++k) {
                    if (tab.t[k] >= 0.0) {
                        m = std::max(m, tab.mu[k]);
                    }
                }
                return std::max(m, table_value(tab, t));
            },
        },
        kind_);
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string GrowthRate::describe() const
{
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const Constant& c) { os << "constant:" << shortest(c.mu0); },
                   [&](const RationalDecay& r) { os << "rational:" << shortest(r.a); },
                   [&](const ExpDecay& e) { os << "exp:" << shortest(e.mu0) << ',' << shortest(e.beta); },
                   [&](const Seasonal& s) { os << "seasonal:" << shortest(s.mu0); },
                   [&](const Tabulated& tab) {
                       os << "table[";
                       for (std::size_t k = 0; k < tab.t.size(); ++k) {
                           os << (k ? ";" : "") << shortest(tab.t[k]) << ':' << shortest(tab.mu[k]);
                       }
                       os << ']';
                   },
               },
               kind_);
    return os.str();
}

}  // namespace bdiff
