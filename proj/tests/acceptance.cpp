// Acceptance run: one line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlmob/config.hpp"
#include "nlmob/errors.hpp"
#include "nlmob/study.hpp"
#include "nlmob/transcription.hpp"

using namespace nlmob;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

ParticleConfig random_config(std::mt19937_64& rng, int n, double M, double spread = 0.6)
{
    std::uniform_real_distribution<double> extra(0.0, spread), off(-1.0, 1.0);
    std::vector<double> x{off(rng)};
    for (int i = 0; i < n; ++i)
        x.push_back(x.back() + 1.0 / (n * M) + extra(rng) / n);
    return ParticleConfig(x, M);
}

Measure1D random_pcd(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> w(0.1, 1.0), h(0.05, 2.0), o(-3.0, 3.0);
    const int cells = 1 + static_cast<int>(rng() % 6);
    std::vector<double> breaks{o(rng)}, heights;
    double mass = 0.0;
    for (int i = 0; i < cells; ++i) {
        breaks.push_back(breaks.back() + w(rng));
        heights.push_back(h(rng));
        mass += heights.back() * (breaks[i + 1] - breaks[i]);
    }
    for (auto& x : heights)
        x /= mass;
    return Measure1D::piecewise_constant(breaks, heights);
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome linear_exactness()
{
    std::mt19937_64 rng(101);
    const auto lin = Mobility::linear(1.0);
    const ActionDensity d(2.0, lin);
    const auto rule = RhoStarRule::const_argmax_theta(lin);
    double worst = 0.0, worst_gap = 0.0;
    for (int N : {4, 16, 64}) {
        const auto a = random_config(rng, N, 1.0);
        const double c = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        const auto g = solve_geodesic(a, a.translated(c), d, rule);
        worst = std::max(worst, std::abs(g.distance - std::abs(c)) / std::abs(c));
        worst_gap = std::max(worst_gap, std::abs(g.upper_bound - g.lower_bound) / std::abs(c));
    }
    return {worst <= 1e-6 && worst_gap <= 1e-6,
            "max rel error " + fmt("%.2e", worst) + ", bound gap " + fmt("%.2e", worst_gap)};
}

// Endpoints sampled from random piecewise-constant measures with density
// below M, as in the Gamma study.
Measure1D moderate_pcd(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> w(0.5, 1.5), h(0.3, 1.0), o(-1.0, 1.0);
    std::vector<double> breaks{o(rng)}, heights;
    double mass = 0.0;
    for (int i = 0; i < 3; ++i) {
        breaks.push_back(breaks.back() + w(rng));
        heights.push_back(h(rng));
        mass += heights.back() * (breaks[i + 1] - breaks[i]);
    }
    for (auto& x : heights)
        x /= mass;
    return Measure1D::piecewise_constant(breaks, heights);
}

struct SpeedTally {
    int converged = 0, ok = 0;
    double worst = 0.0;
};

template <class Draw>
SpeedTally speed_tally(std::mt19937_64& rng, Draw&& draw)
{
    const auto lg = Mobility::logistic(1.0);
    const ActionDensity d(2.0, lg);
    SolverOptions o;
    o.K = 32;
    o.state_rule = StateRule::Midpoint;
    SpeedTally s;
    for (int t = 0; t < 20; ++t) {
        const auto a = draw(), b = draw();
        const auto rule = t % 2 ? RhoStarRule::look_back() : RhoStarRule::const_argmax_theta(lg);
        const auto g = solve_geodesic_best(a, b, d, rule, o);
        if (!g.solver_report.converged)
            continue;
        ++s.converged;
        double mean = 0.0, dev = 0.0;
        for (double v : g.action_profile)
            mean += v / g.action_profile.size();
        for (double v : g.action_profile)
            dev = std::max(dev, std::abs(v - mean) / mean);
        s.worst = std::max(s.worst, dev);
        if (check_constant_speed(g, 1e-3))
            ++s.ok;
    }
    return s;
}

Outcome constant_speed()
{
    const auto lg = Mobility::logistic(1.0);
    std::mt19937_64 rng(202);
    const auto moderate = speed_tally(rng, [&] { return sample_from_quantile(moderate_pcd(rng), 16, lg); });
    // reported only: raw random cone points, some cells within 1e-3 of M
    std::mt19937_64 rng2(202);
    const auto jam = speed_tally(rng2, [&] { return random_config(rng2, 16, 1.0); });
    return {moderate.converged > 0 && moderate.ok == moderate.converged,
            std::to_string(moderate.ok) + "/" + std::to_string(moderate.converged) + " within 1e-3, worst " +
                fmt("%.2e", moderate.worst) + "; near-jam endpoints " + std::to_string(jam.ok) + "/" +
                std::to_string(jam.converged) + ", worst " + fmt("%.2e", jam.worst)};
}

Outcome comparison_bound()
{
    std::mt19937_64 rng(303);
    int ok = 0;
    SolverOptions o;
    o.K = 16;
    for (int t = 0; t < 100; ++t) {
        const auto mob = t % 2 ? Mobility::logistic(1.0) : Mobility::linear(1.0);
        const ActionDensity d(2.0, mob);
        const int N = 2 + static_cast<int>(rng() % 7);
        const auto a = random_config(rng, N, 1.0), b = random_config(rng, N, 1.0);
        if (distance_lower_bound_check(a, b, d, RhoStarRule::const_argmax_theta(mob), o, 1e-8))
            ++ok;
    }
    return {ok == 100, std::to_string(ok) + "/100 pairs"};
}

Outcome action_comparison()
{
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> sym(-2.0, 2.0);
    int ok = 0;
    double tightest = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto mob = t % 2 ? Mobility::logistic(1.0) : Mobility::linear(1.0);
        const ActionDensity d(2.0, mob);
        const int N = 1 + static_cast<int>(rng() % 20);
        const auto cfg = random_config(rng, N, 1.0);
        std::vector<double> v(N + 1);
        for (auto& x : v)
            x = sym(rng);
        const auto rule = t % 4 < 2 ? RhoStarRule::const_argmax_theta(mob) : RhoStarRule::look_back();
        const double lhs = continuous_action_of_reconstruction(cfg, v, d);
        const double rhs = (N + 1.0) / N * discrete_action(cfg, v, d, rule);
        // only round-off slack: both sides are closed form
        if (lhs <= rhs * (1.0 + 1e-13))
            ++ok;
        tightest = std::max(tightest, lhs / rhs);
    }
    return {ok == 100, std::to_string(ok) + "/100, max lhs/rhs " + fmt("%.6f", tightest)};
}

Outcome gamma_trend()
{
    const auto cfg = parse_study_config(R"({"kind":"gamma","mobility":{"kind":"logistic","M":1},"p":2,
      "mu0":{"kind":"uniform","a":0,"b":2},"mu1":{"kind":"uniform","a":1,"b":3},
      "N_list":[8,16,32,64],"solver":{"K":32},"threads":4})");
    const auto rep = run_gamma_study(cfg);
    if (!rep.failures.empty())
        return {false, rep.failures.front()};
    bool decreasing = true;
    std::ostringstream gaps;
    for (std::size_t k = 1; k < rep.records.size(); ++k) {
        gaps << (k > 1 ? ", " : "") << fmt("%.3e", rep.records[k].gap);
        if (k > 1 && !(rep.records[k].gap < rep.records[k - 1].gap))
            decreasing = false;
    }
    const double last = rep.surrogate;
    const bool inside = last >= 1.0 && last <= std::sqrt(2.0);
    return {decreasing && inside, "gaps " + gaps.str() + "; d^64 = " + fmt("%.6f", last)};
}

Outcome gradient_check()
{
    std::mt19937_64 rng(606);
    const auto lg = Mobility::logistic(1.0);
    const ActionTranscription tr(ActionDensity(2.0, lg), RhoStarRule::const_argmax_theta(lg), 8, 6);
    std::uniform_real_distribution<double> extra(0.3, 1.0), off(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        std::vector<double> st;
        for (int k = 0; k <= tr.intervals(); ++k) {
            double x = off(rng);
            for (int i = 0; i <= tr.n(); ++i) {
                st.push_back(x);
                x += (1.0 + extra(rng)) / tr.n();
            }
        }
        const auto g = tr.gradient(st);
        double scale = 0.0, gmax = 0.0, err = 0.0;
        for (double x : st)
            scale = std::max(scale, std::abs(x));
        const double h = 1e-6 * scale;
        for (std::size_t j = 0; j < st.size(); ++j) {
            const double keep = st[j];
            st[j] = keep + h;
            const double fp = tr.value(st);
            st[j] = keep - h;
            const double fm = tr.value(st);
            st[j] = keep;
            err = std::max(err, std::abs((fp - fm) / (2 * h) - g[j]));
            gmax = std::max(gmax, std::abs(g[j]));
        }
        worst = std::max(worst, err / gmax);
    }
    return {worst < 1e-5, "max relative error " + fmt("%.2e", worst)};
}

Outcome jko_linear_drift()
{
    const auto lin = Mobility::linear(1.0);
    const auto init = sample_from_quantile(Measure1D::uniform(0, 2), 16, lin);
    const double tau = 0.1;
    const auto traj = jko_run(init, EnergyFunctional::linear(), tau, 5, ActionDensity(2.0, lin),
                              RhoStarRule::const_argmax_theta(lin));
    if (!traj.complete())
        return {false, traj.failure};
    double worst = 0.0;
    for (std::size_t n = 0; n < traj.steps.size(); ++n)
        for (int i = 0; i <= 16; ++i)
            worst = std::max(worst, std::abs(traj.steps[n].config[i] - (init[i] - static_cast<double>(n) * tau)));
    const bool descent = descent_holds(traj);
    return {worst <= 1e-6 && descent && traj.steps.size() == 6,
            "max error " + fmt("%.2e", worst) + (descent ? ", descent holds" : ", descent FAILS")};
}

Outcome jko_quadratic()
{
    const auto lin = Mobility::linear(1.0);
    const auto init = sample_from_quantile(Measure1D::uniform(-4, 4), 16, lin);
    const double tau = 0.1;
    const auto traj = jko_run(init, EnergyFunctional::quadratic(), tau, 5, ActionDensity(2.0, lin),
                              RhoStarRule::const_argmax_theta(lin));
    if (!traj.complete())
        return {false, traj.failure};
    double worst = 0.0;
    for (std::size_t n = 1; n < traj.steps.size(); ++n)
        for (int i = 0; i <= 16; ++i)
            worst = std::max(worst,
                             std::abs(traj.steps[n].config[i] - traj.steps[n - 1].config[i] / (1.0 + tau)));
    return {worst <= 1e-6, "max error " + fmt("%.2e", worst) + " over 5 steps"};
}

Outcome jko_cross_n()
{
    const auto cfg = parse_study_config(R"({"kind":"jko","mobility":{"kind":"logistic","M":1},
      "mu0":{"kind":"uniform","a":0,"b":2},"F":{"kind":"potential","f":"linear"},
      "tau":0.25,"n_steps":3,"N_list":[8,16,32,64],"q":1.5})");
    JkoOptions opt;
    opt.solver = cfg.solver;
    const auto rep = jko_convergence_study(
        {*cfg.mu0, *cfg.F, cfg.tau, cfg.n_steps, cfg.N_list, cfg.q, cfg.density(), cfg.rule, opt, 4});
    if (!rep.failures.empty())
        return {false, rep.failures.front()};
    // independent recheck of the verdict from the records
    bool monotone = true;
    std::ostringstream last;
    for (int n = 0; n <= cfg.n_steps; ++n) {
        double prev = INFINITY;
        for (const auto& r : rep.records) {
            if (r.n != n)
                continue;
            if (r.wq_to_ref > prev + 1e-9)
                monotone = false;
            prev = r.wq_to_ref;
            if (n == cfg.n_steps && r.N != 64)
                last << (r.N == 8 ? "" : ", ") << fmt("%.4f", r.wq_to_ref);
        }
    }
    return {monotone && rep.monotone, "W_q to N=64 at n=3: " + last.str()};
}

Outcome ftl_entropy()
{
    const auto law = VelocityLaw::traffic(1.0);
    std::vector<double> err;
    for (int N : {16, 32, 64})
        err.push_back(ftl_vs_entropy(1.0, 0.0, law, N, 0.5));
    const bool ok = err[1] < err[0] && err[2] < err[1] && err[2] < 0.05;
    return {ok, "L1 " + fmt("%.4f", err[0]) + ", " + fmt("%.4f", err[1]) + ", " + fmt("%.4f", err[2])};
}

Outcome measure_utilities()
{
    std::mt19937_64 rng(1111);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int ok = 0;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto mu = random_pcd(rng);
        const double eps = 0.01 + 0.4 * unit(rng);
        if (compactification_error_check(mu, eps, 2, 2) && compactification_error_check(mu, eps, 2, 1))
            ++ok;
        // quantile and cdf invert each other; translation moves W_p by exactly |c|
        for (int k = 0; k < 5; ++k) {
            const double z = 0.001 + 0.998 * unit(rng);
            worst = std::max(worst, std::abs(mu.cdf(mu.quantile(z)) - z));
        }
        const double c = 4.0 * unit(rng) - 2.0;
        for (double p : {1.0, 2.0, 3.0})
            worst = std::max(worst, std::abs(wasserstein_p(mu, mu.shifted(c), p) - std::abs(c)));
        worst = std::max(worst, wasserstein_p(mu, mu, 2.0));
        const auto nu = random_pcd(rng);
        worst = std::max(worst, std::abs(wasserstein_p(mu, nu, 2.0) - wasserstein_p(nu, mu, 2.0)));
    }
    return {ok == 50 && worst <= 1e-10,
            std::to_string(ok) + "/50 compactification checks, round-trip error " + fmt("%.2e", worst)};
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "linear-mobility exactness", 5, linear_exactness},
        {2, "constant-speed geodesics", 120, constant_speed},
        {3, "comparison lower bound", 60, comparison_bound},
        {4, "action comparison", 10, action_comparison},
        {5, "Gamma-trend", 300, gamma_trend},
        {6, "gradient check", 60, gradient_check},
        {7, "JKO linear drift", 60, jko_linear_drift},
        {8, "JKO quadratic proximal", 60, jko_quadratic},
        {9, "JKO cross-N convergence", 600, jko_cross_n},
        {10, "FTL entropy convergence", 120, ftl_entropy},
        {11, "measure utilities", 60, measure_utilities},
    };
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("criterion %2d %-26s %s  %s [%.2fs%s]\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(),
                    secs, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
