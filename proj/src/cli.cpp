#include "nlmob/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nlmob/config.hpp"
#include "nlmob/errors.hpp"
#include "nlmob/study.hpp"

#ifndef NLMOB_VERSION
#define NLMOB_VERSION "0.0.0"
#endif

namespace nlmob {

using nlohmann::json;
namespace fs = std::filesystem;

const char* version_string() { return NLMOB_VERSION; }

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// Non-finite doubles become strings so the summary stays valid JSON.
json num(double v)
{
    if (std::isfinite(v))
        return v;
    return format_double(v);
}

class Csv {
public:
    explicit Csv(std::string header) { text_ = std::move(header) + "\n"; }

    template <class... T>
    void row(const T&... cols)
    {
        bool first = true;
        ((text_ += (first ? "" : ","), text_ += cell(cols), first = false), ...);
        text_ += "\n";
    }

    void write(const fs::path& path, const std::string& hash) const
    {
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write " + path.string());
        f << text_ << "# config_hash=" << hash << "\n";
    }

private:
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }

    std::string text_;
};

json stamp(const StudyConfig& cfg)
{
    return {{"version", version_string()},
            {"seed", cfg.seed},
            {"config_hash", cfg.hash},
            {"study", to_string(cfg.kind)},
            {"rho_star", to_string(cfg.rule.kind)},
            {"config", json::parse(cfg.canonical)}};
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

json solver_json(const SolverReport& r)
{
    json lam = json::array(), stages = json::array();
    for (double l : r.lambda_schedule)
        lam.push_back(num(l));
    for (double s : r.stage_distances)
        stages.push_back(num(s));
    return {{"iterations", r.iterations},
            {"kkt_residual", num(r.kkt_residual)},
            {"converged", r.converged},
            {"returned_initializer", r.returned_initializer},
            {"lambda_schedule", lam},
            {"stage_distances", stages}};
}

int cmd_distance(const StudyConfig& cfg, const fs::path& out_dir, std::ostream& out)
{
    const auto [a, b] = study_endpoints(cfg, cfg.N);
    const auto g = solve_geodesic_best(a, b, cfg.density(), cfg.rule, cfg.solver);
    Csv csv("N,distance,lower,upper,converged,iterations");
    csv.row(a.n(), g.distance, g.lower_bound, g.upper_bound, g.solver_report.converged,
            g.solver_report.iterations);
    csv.write(out_dir / "distance.csv", cfg.hash);
    json s = stamp(cfg);
    s["N"] = a.n();
    s["distance"] = num(g.distance);
    s["lower_bound"] = num(g.lower_bound);
    s["upper_bound"] = num(g.upper_bound);
    s["solver"] = solver_json(g.solver_report);
    write_json(out_dir / "distance.json", s);
    out << "distance N=" << a.n() << " d=" << format_double(g.distance)
        << (g.solver_report.converged ? "" : " (not converged)") << "\n";
    return kExitOk;
}

int cmd_geodesic(const StudyConfig& cfg, const fs::path& out_dir, std::ostream& out)
{
    const auto [a, b] = study_endpoints(cfg, cfg.N);
    const auto density = cfg.density();
    const auto g = solve_geodesic_best(a, b, density, cfg.rule, cfg.solver);
    const auto& path = g.path;
    const int K = path.intervals();
    const int N = a.n();
    const double dt = 1.0 / K;
    Csv csv("t,i,x,R,phi_term");
    for (int k = 0; k <= K; ++k) {
        const auto& s = path.state(k);
        const auto R = reconstruct_density(s, cfg.rule);
        for (int i = 0; i <= N; ++i) {
            double term = 0.0;
            if (k < K) {
                const double v = (path.state(k + 1)[i] - s[i]) / dt;
                term = dt * particle_action(density, R[i], v) / (N + 1);
            }
            csv.row(k * dt, i, s[i], R[i], term);
        }
    }
    csv.write(out_dir / "geodesic.csv", cfg.hash);
    json prof = json::array();
    for (double v : g.action_profile)
        prof.push_back(num(v));
    json s = stamp(cfg);
    s["N"] = N;
    s["K"] = K;
    s["distance"] = num(g.distance);
    s["lower_bound"] = num(g.lower_bound);
    s["upper_bound"] = num(g.upper_bound);
    s["action_profile"] = prof;
    s["solver"] = solver_json(g.solver_report);
    write_json(out_dir / "geodesic.json", s);
    out << "geodesic N=" << N << " K=" << K << " d=" << format_double(g.distance)
        << (g.solver_report.converged ? "" : " (not converged)") << "\n";
    return kExitOk;
}

int cmd_gamma(const StudyConfig& cfg, const fs::path& out_dir, std::ostream& out)
{
    const auto rep = run_gamma_study(cfg);
    Csv csv("N,distance,lower,upper,gap,converged,iterations");
    for (const auto& r : rep.records)
        csv.row(r.N, r.distance, r.lower, r.upper, r.gap, r.converged, r.iterations);
    csv.write(out_dir / "gamma.csv", cfg.hash);
    json s = stamp(cfg);
    s["cauchy"] = rep.cauchy;
    s["sandwiched"] = rep.sandwiched;
    s["surrogate"] = num(rep.surrogate);
    s["failures"] = rep.failures;
    s["verdict"] = rep.verdict();
    write_json(out_dir / "gamma.json", s);
    for (const auto& r : rep.records)
        out << "N=" << r.N << " d=" << format_double(r.distance) << " gap=" << format_double(r.gap) << "\n";
    for (const auto& f : rep.failures)
        out << "failed " << f << "\n";
    out << "gamma verdict: " << (rep.verdict() ? "pass" : "fail") << " (cauchy=" << rep.cauchy
        << ", sandwiched=" << rep.sandwiched << ")\n";
    return rep.verdict() ? kExitOk : kExitVerdictFailed;
}

int cmd_jko(const StudyConfig& cfg, const fs::path& out_dir, std::ostream& out)
{
    JkoOptions opt;
    opt.solver = cfg.solver;
    opt.nested = cfg.nested;
    JkoStudyConfig jc{*cfg.mu0, *cfg.F, cfg.tau, cfg.n_steps, cfg.N_list, cfg.q,
                      cfg.density(), cfg.rule, opt, cfg.threads};
    const auto rep = jko_convergence_study(jc);
    Csv csv("N,n,J,F,dist,second_moment,wq_to_ref");
    for (const auto& r : rep.records)
        csv.row(r.N, r.n, r.J, r.energy, r.dist, r.second_moment, r.wq_to_ref);
    csv.write(out_dir / "jko.csv", cfg.hash);
    json s = stamp(cfg);
    s["energy"] = cfg.F->name();
    s["monotone"] = rep.monotone;
    s["failures"] = rep.failures;
    const bool ok = rep.monotone && rep.failures.empty();
    s["verdict"] = ok;
    write_json(out_dir / "jko.json", s);
    for (const auto& f : rep.failures)
        out << "failed " << f << "\n";
    out << "jko verdict: " << (ok ? "pass" : "fail") << " (monotone=" << rep.monotone << ")\n";
    return ok ? kExitOk : kExitVerdictFailed;
}

int cmd_ftl(const StudyConfig& cfg, const fs::path& out_dir, std::ostream& out)
{
    const auto& law = *cfg.law;
    json errors = json::array();
    bool decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int N : cfg.N_list) {
        const auto rep = ftl_entropy_report(cfg.rho_L, cfg.rho_R, law, N, cfg.t_end, cfg.rule.kind, cfg.dt);
        const auto& x = rep.final_state.x;
        const auto R = ftl_densities(x, law, cfg.rule.kind);
        Csv dump("t,i,x,R");
        for (std::size_t i = 0; i < x.size(); ++i)
            dump.row(rep.final_state.t, i, x[i], R[i]);
        dump.write(out_dir / ("ftl_N" + std::to_string(N) + ".csv"), cfg.hash);

        Csv prof("x,rho_exact,rho_ftl");
        const int points = 401;
        for (int k = 0; k < points; ++k) {
            const double at = rep.compare_lo + (rep.compare_hi - rep.compare_lo) * k / (points - 1);
            prof.row(at, traffic_riemann_solution(cfg.rho_L, cfg.rho_R, law.max_density(), at, cfg.t_end),
                     piecewise_density_at(x, at));
        }
        prof.write(out_dir / ("ftl_profile_N" + std::to_string(N) + ".csv"), cfg.hash);

        errors.push_back({{"N", N}, {"l1_error", num(rep.l1_error)}});
        if (!(rep.l1_error < prev))
            decreasing = false;
        prev = rep.l1_error;
        out << "N=" << N << " L1=" << format_double(rep.l1_error) << "\n";
    }
    json s = stamp(cfg);
    s["errors"] = errors;
    s["decreasing"] = decreasing;
    s["verdict"] = decreasing;
    write_json(out_dir / "ftl.json", s);
    out << "ftl verdict: " << (decreasing ? "pass" : "fail") << "\n";
    return decreasing ? kExitOk : kExitVerdictFailed;
}

Measure1D random_pcd(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.1, 1.0), start(-2.0, 2.0);
    const int cells = 1 + static_cast<int>(rng() % 5);
    std::vector<double> breaks{start(rng)}, w;
    double total = 0.0;
    for (int c = 0; c < cells; ++c) {
        breaks.push_back(breaks.back() + u(rng));
        w.push_back(u(rng));
        total += w.back();
    }
    std::vector<double> h;
    for (int c = 0; c < cells; ++c)
        h.push_back(w[c] / total / (breaks[c + 1] - breaks[c]));
    // renormalise against round-off in the mass
    double mass = 0.0;
    for (int c = 0; c < cells; ++c)
        mass += h[c] * (breaks[c + 1] - breaks[c]);
    for (auto& v : h)
        v /= mass;
    return Measure1D::piecewise_constant(breaks, h);
}

ParticleConfig random_config(std::mt19937_64& rng, int n, double M)
{
    std::uniform_real_distribution<double> extra(0.0, 0.6), off(-1.0, 1.0);
    std::vector<double> x{off(rng)};
    for (int i = 0; i < n; ++i)
        x.push_back(x.back() + 1.0 / (n * M) + extra(rng) / n);
    return ParticleConfig(x, M);
}

}  // namespace

bool run_selftest(std::uint64_t seed, std::ostream& out)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);
    const auto lin = Mobility::linear(1.0);
    const auto lg = Mobility::logistic(1.0);
    bool all = true;
    auto report = [&](const std::string& name, auto&& check) {
        bool ok = false;
        std::string why;
        try {
            ok = check();
        } catch (const std::exception& e) {
            why = std::string(" (") + e.what() + ")";
        }
        out << name << ": " << (ok ? "pass" : "fail") << why << "\n";
        all = all && ok;
    };

    report("quantile round trip", [&] {
        for (int k = 0; k < 20; ++k) {
            const auto mu = random_pcd(rng);
            const double z = 0.01 + 0.98 * unit(rng);
            if (std::abs(mu.cdf(mu.quantile(z)) - z) > 1e-10)
                return false;
            const double c = sym(rng);
            if (std::abs(wasserstein_p(mu, mu.shifted(c), 2.0) - std::abs(c)) > 1e-10)
                return false;
        }
        return true;
    });
    report("compactification bound", [&] {
        for (int k = 0; k < 20; ++k) {
            const auto mu = random_pcd(rng);
            const double eps = 0.01 + 0.2 * unit(rng);
            if (!compactification_error_check(mu, eps, 2.0, 2.0) || !compactification_error_check(mu, eps, 2.0, 1.0))
                return false;
        }
        return true;
    });
    report("linear translation exact", [&] {
        const ActionDensity d(2.0, lin);
        const auto a = random_config(rng, 8, 1.0);
        const double c = sym(rng);
        const auto g = solve_geodesic_best(a, a.translated(c), d, RhoStarRule::const_argmax_theta(lin), {});
        return std::abs(g.distance - std::abs(c)) <= 1e-6 * std::abs(c);
    });
    report("action comparison", [&] {
        for (int k = 0; k < 20; ++k) {
            const auto& mob = k % 2 ? lg : lin;
            const ActionDensity d(2.0, mob);
            const int n = 2 + static_cast<int>(rng() % 10);
            const auto cfg = random_config(rng, n, 1.0);
            std::vector<double> v(n + 1);
            for (auto& vi : v)
                vi = sym(rng);
            const auto rule = RhoStarRule::const_argmax_theta(mob);
            const double lhs = continuous_action_of_reconstruction(cfg, v, d);
            const double rhs = (n + 1.0) / n * discrete_action(cfg, v, d, rule);
            if (!(lhs <= rhs * (1.0 + 1e-12)))
                return false;
        }
        return true;
    });
    report("distance lower bound", [&] {
        for (int k = 0; k < 4; ++k) {
            const auto& mob = k % 2 ? lg : lin;
            const ActionDensity d(2.0, mob);
            const auto a = random_config(rng, 6, 1.0), b = random_config(rng, 6, 1.0);
            SolverOptions o;
            o.K = 16;
            if (!distance_lower_bound_check(a, b, d, RhoStarRule::const_argmax_theta(mob), o, 1e-8))
                return false;
        }
        return true;
    });
    report("jko linear drift", [&] {
        const ActionDensity d(2.0, lin);
        const auto init = random_config(rng, 8, 1.0);
        const auto traj = jko_run(init, EnergyFunctional::linear(), 0.1, 2, d, RhoStarRule::const_argmax_theta(lin));
        if (!traj.complete())
            return false;
        for (std::size_t n = 0; n < traj.steps.size(); ++n)
            for (int i = 0; i <= 8; ++i)
                if (std::abs(traj.steps[n].config[i] - (init[i] - 0.1 * static_cast<double>(n))) > 1e-6)
                    return false;
        return descent_holds(traj);
    });
    report("ftl maximum principle", [&] {
        const auto law = VelocityLaw::traffic(1.0);
        const auto cfg = random_config(rng, 16, 1.0);
        const auto traj = ftl_integrate({0.0, cfg.positions()}, law, RhoStarKind::ConstArgmaxTheta, 0.5, 0.01);
        return ftl_maximum_principle(traj, law);
    });
    return all;
}

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Particle discretisations of nonlinear-mobility transport", "nlmob"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version_string()));

    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    struct Sub {
        const char* name;
        const char* help;
        std::optional<StudyKind> kind;
    };
    const Sub subs[] = {
        {"distance", "discrete distance between two configurations", StudyKind::Distance},
        {"geodesic", "discrete geodesic with a full path dump", StudyKind::Geodesic},
        {"gamma", "distance across N_list with the Cauchy and sandwich verdict", StudyKind::Gamma},
        {"jko", "minimizing movements across N_list", StudyKind::Jko},
        {"ftl", "follow-the-leader against the exact Riemann solution", StudyKind::Ftl},
        {"selftest", "embedded invariant checks", std::nullopt},
    };
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        if (s.kind) {
            sc->add_option("--config", config_path, "study configuration (JSON)")->required();
            sc->add_option("--out", out_dir, "output directory");
            sc->add_option("--threads", threads, "worker threads");
        }
        sc->add_option("--seed", seed, "overrides the configured seed");
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version_string() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    }

    const auto* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    if (name == "selftest") {
        const bool ok = run_selftest(seed.value_or(0), out);
        out << "selftest: " << (ok ? "pass" : "fail") << "\n";
        return ok ? kExitOk : kExitVerdictFailed;
    }

    StudyKind kind = StudyKind::Distance;
    for (const auto& s : subs)
        if (name == s.name)
            kind = *s.kind;

    StudyConfig cfg;
    try {
        cfg = load_study_config(config_path, kind);
        override_run_settings(cfg, seed, threads);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        fs::create_directories(out_dir);
        switch (kind) {
        case StudyKind::Distance:
            return cmd_distance(cfg, out_dir, out);
        case StudyKind::Geodesic:
            return cmd_geodesic(cfg, out_dir, out);
        case StudyKind::Gamma:
            return cmd_gamma(cfg, out_dir, out);
        case StudyKind::Jko:
            return cmd_jko(cfg, out_dir, out);
        case StudyKind::Ftl:
            return cmd_ftl(cfg, out_dir, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << "\n";
        return kExitVerdictFailed;
    }
    return kExitOk;
}

int run_subcommand(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run_subcommand(args, std::cout, std::cerr);
}

}  // namespace nlmob
