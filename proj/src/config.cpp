#include "nlmob/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nlmob/errors.hpp"

namespace nlmob {

using nlohmann::json;

std::string to_string(StudyKind kind)
{
    switch (kind) {
    case StudyKind::Distance:
        return "distance";
    case StudyKind::Geodesic:
        return "geodesic";
    case StudyKind::Gamma:
        return "gamma";
    case StudyKind::Jko:
        return "jko";
    case StudyKind::Ftl:
        return "ftl";
    }
    return "?";
}

namespace {

StudyKind kind_from_string(const std::string& s, const std::string& field)
{
    for (auto k : {StudyKind::Distance, StudyKind::Geodesic, StudyKind::Gamma, StudyKind::Jko, StudyKind::Ftl})
        if (to_string(k) == s)
            return k;
    throw ConfigError("field '" + field + "': unknown study kind '" + s + "'");
}

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ConfigError("field '" + field + "': " + what);
}

std::string join(const std::string& parent, const std::string& key)
{
    return parent.empty() ? key : parent + "." + key;
}

const json& require(const json& obj, const std::string& key, const std::string& parent)
{
    if (!obj.is_object())
        fail(parent.empty() ? "<root>" : parent, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        fail(join(parent, key), "missing");
    return *it;
}

double number(const json& v, const std::string& field)
{
    if (!v.is_number())
        fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        fail(field, "must be finite");
    return x;
}

double positive(const json& v, const std::string& field)
{
    const double x = number(v, field);
    if (!(x > 0.0))
        fail(field, "must be positive");
    return x;
}

int integer(const json& v, const std::string& field, int lo)
{
    if (!v.is_number_integer())
        fail(field, "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > std::numeric_limits<int>::max())
        fail(field, "must be an integer >= " + std::to_string(lo));
    return static_cast<int>(x);
}

std::vector<double> numbers(const json& v, const std::string& field, std::size_t min_size)
{
    if (!v.is_array())
        fail(field, "expected an array of numbers");
    if (v.size() < min_size)
        fail(field, "needs at least " + std::to_string(min_size) + " entries");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::string text(const json& v, const std::string& field)
{
    if (!v.is_string())
        fail(field, "expected a string");
    return v.get<std::string>();
}

template <class T, class F>
T wrap(const std::string& field, F&& make)
{
    try {
        return make();
    } catch (const DomainError& e) {
        fail(field, e.what());
    } catch (const ConeViolation& e) {
        fail(field, e.what());
    }
}

Mobility parse_mobility(const json& v, const std::string& field)
{
    const std::string kind = text(require(v, "kind", field), join(field, "kind"));
    if (kind == "linear" || kind == "logistic") {
        const double M = v.contains("M") ? positive(v["M"], join(field, "M")) : 1.0;
        return kind == "linear" ? Mobility::linear(M) : Mobility::logistic(M);
    }
    if (kind == "table") {
        auto rho = numbers(require(v, "rho", field), join(field, "rho"), 2);
        auto m = numbers(require(v, "m", field), join(field, "m"), 2);
        if (v.contains("M") && std::abs(positive(v["M"], join(field, "M")) - rho.back()) > 1e-12 * rho.back())
            fail(join(field, "M"), "must equal the last rho node");
        return wrap<Mobility>(field, [&] { return Mobility::table(std::move(rho), std::move(m)); });
    }
    fail(join(field, "kind"), "unknown mobility '" + kind + "' (linear, logistic, table)");
}

Measure1D parse_measure(const json& v, const std::string& field)
{
    const std::string kind = text(require(v, "kind", field), join(field, "kind"));
    if (kind == "uniform") {
        const double a = number(require(v, "a", field), join(field, "a"));
        const double b = number(require(v, "b", field), join(field, "b"));
        return wrap<Measure1D>(field, [&] { return Measure1D::uniform(a, b); });
    }
    if (kind == "pcd") {
        auto br = numbers(require(v, "breaks", field), join(field, "breaks"), 2);
        auto h = numbers(require(v, "heights", field), join(field, "heights"), 1);
        return wrap<Measure1D>(field, [&] { return Measure1D::piecewise_constant(std::move(br), std::move(h)); });
    }
    if (kind == "quantiles") {
        auto vals = numbers(require(v, "values", field), join(field, "values"), 1);
        return wrap<Measure1D>(field, [&] { return Measure1D::empirical(std::move(vals)); });
    }
    if (kind == "gaussian") {
        const double mean = number(require(v, "mean", field), join(field, "mean"));
        const double sigma = positive(require(v, "sigma", field), join(field, "sigma"));
        const double inf = std::numeric_limits<double>::infinity();
        const double lo = v.contains("lo") ? number(v["lo"], join(field, "lo")) : -inf;
        const double hi = v.contains("hi") ? number(v["hi"], join(field, "hi")) : inf;
        return wrap<Measure1D>(field, [&] { return Measure1D::gaussian(mean, sigma, lo, hi); });
    }
    fail(join(field, "kind"), "unknown measure '" + kind + "' (uniform, pcd, quantiles, gaussian)");
}

SolverOptions parse_solver(const json& v, const std::string& field)
{
    if (!v.is_object())
        fail(field, "expected an object");
    SolverOptions o;
    for (const auto& [key, val] : v.items()) {
        const std::string f = join(field, key);
        if (key == "K")
            o.K = integer(val, f, 1);
        else if (key == "max_outer")
            o.max_outer = integer(val, f, 1);
        else if (key == "max_inner")
            o.max_inner = integer(val, f, 1);
        else if (key == "barrier0")
            o.barrier0 = positive(val, f);
        else if (key == "tol")
            o.tol = positive(val, f);
        else if (key == "lambda_floor")
            o.lambda_floor = positive(val, f);
        else if (key == "refine_tol")
            o.refine_tol = positive(val, f);
        else if (key == "state_rule")
            o.state_rule = wrap<StateRule>(f, [&] { return state_rule_from_string(text(val, f)); });
        else if (key == "midpoint") {
            if (!val.is_boolean())
                fail(f, "expected true or false");
            if (val.get<bool>())
                o.state_rule = StateRule::Midpoint;
        } else if (key == "continuation") {
            if (!val.is_boolean())
                fail(f, "expected true or false");
            o.continuation = val.get<bool>();
        } else {
            fail(f, "unknown solver option");
        }
    }
    return o;
}

EnergyFunctional parse_energy(const json& v, const std::string& field)
{
    if (v.is_string() && v.get<std::string>() == "zero")
        return EnergyFunctional::zero();
    const std::string kind = text(require(v, "kind", field), join(field, "kind"));
    if (kind == "zero")
        return EnergyFunctional::zero();
    if (kind != "potential")
        fail(join(field, "kind"), "expected 'potential' or 'zero'");
    const json& f = require(v, "f", field);
    const std::string ff = join(field, "f");
    std::optional<EnergyFunctional> e;
    if (f.is_string()) {
        const std::string name = f.get<std::string>();
        const double coef = v.contains("coef") ? number(v["coef"], join(field, "coef")) : 1.0;
        if (name == "linear")
            e = wrap<EnergyFunctional>(ff, [&] { return EnergyFunctional::linear(coef); });
        else if (name == "quadratic")
            e = wrap<EnergyFunctional>(ff, [&] { return EnergyFunctional::quadratic(coef); });
        else
            fail(ff, "unknown potential '" + name + "' (linear, quadratic, or {\"table\": ...})");
    } else if (f.is_object()) {
        const json& t = require(f, "table", ff);
        const std::string tf = join(ff, "table");
        auto xs = numbers(require(t, "x", tf), join(tf, "x"), 2);
        auto fs = numbers(require(t, "f", tf), join(tf, "f"), 2);
        e = wrap<EnergyFunctional>(tf, [&] { return EnergyFunctional::table(std::move(xs), std::move(fs)); });
    } else {
        fail(ff, "expected a potential name or a table object");
    }
    if (v.contains("C") || v.contains("D") || v.contains("s")) {
        GrowthCertificate c = e->certificate();
        if (v.contains("C"))
            c.C = number(v["C"], join(field, "C"));
        if (v.contains("D"))
            c.D = number(v["D"], join(field, "D"));
        if (v.contains("s"))
            c.s = number(v["s"], join(field, "s"));
        e = wrap<EnergyFunctional>(field, [&] { return e->with_certificate(c); });
    }
    return *e;
}

VelocityLaw parse_law(const json& v, const std::string& field)
{
    const std::string kind = text(require(v, "kind", field), join(field, "kind"));
    const double M = v.contains("M") ? positive(v["M"], join(field, "M")) : 1.0;
    if (kind == "traffic")
        return VelocityLaw::traffic(M);
    if (kind == "constant")
        return VelocityLaw::constant(number(require(v, "c", field), join(field, "c")), M);
    if (kind == "table") {
        auto rho = numbers(require(v, "rho", field), join(field, "rho"), 2);
        auto vel = numbers(require(v, "v", field), join(field, "v"), 2);
        return wrap<VelocityLaw>(field, [&] { return VelocityLaw::table(std::move(rho), std::move(vel)); });
    }
    fail(join(field, "kind"), "unknown velocity law '" + kind + "' (traffic, constant, table)");
}

std::vector<int> parse_N_list(const json& v, const std::string& field)
{
    if (!v.is_array() || v.empty())
        fail(field, "expected a nonempty array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(integer(v[i], field + "[" + std::to_string(i) + "]", 1));
        if (i > 0 && out[i] <= out[i - 1])
            fail(field, "must be strictly increasing");
    }
    return out;
}

std::uint64_t parse_seed(const json& v, const std::string& field)
{
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        fail(field, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

void refresh_hash(StudyConfig& cfg, json j)
{
    j.erase("threads");
    j["seed"] = cfg.seed;
    cfg.canonical = j.dump();
    cfg.hash = fnv1a_hex(cfg.canonical);
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

StudyConfig parse_study_config(const std::string& json_text, std::optional<StudyKind> expected)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("field '<root>': malformed JSON: ") + e.what());
    }
    if (!j.is_object())
        fail("<root>", "expected an object");

    StudyConfig cfg;
    if (j.contains("kind"))
        cfg.kind = kind_from_string(text(j["kind"], "kind"), "kind");
    else if (expected)
        cfg.kind = *expected;
    else
        fail("kind", "missing");
    if (expected && cfg.kind != *expected)
        fail("kind", "is '" + to_string(cfg.kind) + "' but the subcommand is '" + to_string(*expected) + "'");
    j["kind"] = to_string(cfg.kind);

    if (j.contains("seed"))
        cfg.seed = parse_seed(j["seed"], "seed");
    if (j.contains("threads"))
        cfg.threads = integer(j["threads"], "threads", 1);
    if (j.contains("mobility"))
        cfg.mobility = parse_mobility(j["mobility"], "mobility");
    if (j.contains("p")) {
        cfg.p = number(j["p"], "p");
        if (!(cfg.p >= 1.0))
            fail("p", "must be >= 1");
    }
    if (j.contains("q")) {
        cfg.q = number(j["q"], "q");
        if (!(cfg.q >= 1.0))
            fail("q", "must be >= 1");
    }
    cfg.rule = RhoStarRule::const_argmax_theta(cfg.mobility);
    if (j.contains("rho_star")) {
        const auto name = text(j["rho_star"], "rho_star");
        const auto kind = wrap<RhoStarKind>("rho_star", [&] { return rho_star_kind_from_string(name); });
        if (kind == RhoStarKind::LookBack)
            cfg.rule = RhoStarRule::look_back();
    }
    if (j.contains("endpoints")) {
        const auto e = text(j["endpoints"], "endpoints");
        if (e == "auto")
            cfg.endpoints = EndpointRule::Auto;
        else if (e == "clip")
            cfg.endpoints = EndpointRule::Clip;
        else
            fail("endpoints", "expected 'auto' or 'clip'");
    }
    if (j.contains("solver"))
        cfg.solver = parse_solver(j["solver"], "solver");

    const double M = cfg.mobility.max_density();
    switch (cfg.kind) {
    case StudyKind::Distance:
    case StudyKind::Geodesic:
        if (j.contains("x0") || j.contains("x1")) {
            cfg.x0 = numbers(require(j, "x0", ""), "x0", 2);
            cfg.x1 = numbers(require(j, "x1", ""), "x1", 2);
            if (cfg.x0->size() != cfg.x1->size())
                fail("x1", "must have as many particles as x0");
            for (const char* f : {"x0", "x1"}) {
                const auto& x = std::string(f) == "x0" ? *cfg.x0 : *cfg.x1;
                if (!in_cone(x, M))
                    fail(f, "not in the cone for M = " + std::to_string(M));
            }
            cfg.N = static_cast<int>(cfg.x0->size()) - 1;
        } else {
            cfg.mu0 = parse_measure(require(j, "mu0", ""), "mu0");
            cfg.mu1 = parse_measure(require(j, "mu1", ""), "mu1");
            cfg.N = integer(require(j, "N", ""), "N", 1);
        }
        break;
    case StudyKind::Gamma:
        cfg.mu0 = parse_measure(require(j, "mu0", ""), "mu0");
        cfg.mu1 = parse_measure(require(j, "mu1", ""), "mu1");
        cfg.N_list = parse_N_list(require(j, "N_list", ""), "N_list");
        break;
    case StudyKind::Jko:
        cfg.mu0 = parse_measure(require(j, "mu0", ""), "mu0");
        cfg.F = parse_energy(require(j, "F", ""), "F");
        cfg.tau = positive(require(j, "tau", ""), "tau");
        cfg.n_steps = integer(require(j, "n_steps", ""), "n_steps", 0);
        cfg.N_list = parse_N_list(require(j, "N_list", ""), "N_list");
        if (!(cfg.q < 2.0))
            fail("q", "must be < 2 for the JKO study");
        if (cfg.p != 2.0)
            fail("p", "JKO supports p = 2 only");
        if (j.contains("nested")) {
            if (!j["nested"].is_boolean())
                fail("nested", "expected true or false");
            cfg.nested = j["nested"].get<bool>();
        }
        break;
    case StudyKind::Ftl: {
        cfg.law = j.contains("law") ? parse_law(j["law"], "law") : VelocityLaw::traffic(M);
        if (!cfg.law->is_traffic())
            fail("law.kind", "the entropy comparison needs the traffic law");
        const json& r = require(j, "riemann", "");
        cfg.rho_L = number(require(r, "rho_L", "riemann"), "riemann.rho_L");
        cfg.rho_R = number(require(r, "rho_R", "riemann"), "riemann.rho_R");
        const double lawM = cfg.law->max_density();
        if (!(cfg.rho_L >= 0.0 && cfg.rho_L <= lawM))
            fail("riemann.rho_L", "must lie in [0, M]");
        if (!(cfg.rho_R >= 0.0 && cfg.rho_R <= lawM))
            fail("riemann.rho_R", "must lie in [0, M]");
        if (!(cfg.rho_L + cfg.rho_R > 0.0))
            fail("riemann", "rho_L and rho_R cannot both be zero");
        cfg.t_end = positive(require(j, "t", ""), "t");
        if (!(cfg.t_end < 1.0 / (cfg.rho_L + cfg.rho_R)))
            fail("t", "must be below the window half-width 1/(rho_L + rho_R)");
        if (j.contains("dt"))
            cfg.dt = positive(j["dt"], "dt");
        cfg.N_list = parse_N_list(require(j, "N_list", ""), "N_list");
        break;
    }
    }
    refresh_hash(cfg, j);
    return cfg;
}

StudyConfig load_study_config(const std::string& path, std::optional<StudyKind> expected)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("field '<file>': cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_study_config(ss.str(), expected);
}

void override_run_settings(StudyConfig& cfg, std::optional<std::uint64_t> seed, std::optional<int> threads)
{
    if (threads) {
        if (*threads < 1)
            throw ConfigError("field '--threads': must be >= 1");
        cfg.threads = *threads;
    }
    if (seed) {
        cfg.seed = *seed;
        refresh_hash(cfg, json::parse(cfg.canonical));
    }
}

}  // namespace nlmob
