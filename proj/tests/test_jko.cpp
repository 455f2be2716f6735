#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlmob/errors.hpp"
#include "nlmob/jko.hpp"

using namespace nlmob;

namespace {

ParticleConfig spaced(int n, double start, double gap, double M)
{
    std::vector<double> x(n + 1);
    for (int i = 0; i <= n; ++i)
        x[i] = start + gap * i;
    return ParticleConfig(x, M);
}

double max_diff(const ParticleConfig& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("energy functionals evaluate on the empirical embedding")
{
    const auto cfg = spaced(3, -1.0, 1.0, 1.0);  // -1, 0, 1, 2
    CHECK(EnergyFunctional::zero()(cfg) == 0.0);
    CHECK(EnergyFunctional::linear()(cfg) == doctest::Approx(0.5));
    CHECK(EnergyFunctional::quadratic()(cfg) == doctest::Approx((0.5 + 0 + 0.5 + 2.0) / 4.0));

    const auto t = EnergyFunctional::table({0.0, 1.0, 3.0}, {1.0, 0.0, 4.0});
    CHECK(t.f(0.5) == doctest::Approx(0.5));
    CHECK(t.f(2.0) == doctest::Approx(2.0));
    CHECK(t.f(-1.0) == doctest::Approx(2.0));  // extended with the first slope
    CHECK(t.f(4.0) == doctest::Approx(6.0));
    CHECK(t.df(2.0) == doctest::Approx(2.0));
    CHECK(t.certificate_holds());
}

TEST_CASE("growth certificates are checked on the probe grid")
{
    CHECK(EnergyFunctional::linear().certificate_holds());
    CHECK(EnergyFunctional::quadratic().certificate_holds());
    CHECK_THROWS_AS(EnergyFunctional::linear().with_certificate({0.0, 0.0, 1.0}), DomainError);
    CHECK_NOTHROW(EnergyFunctional::linear().with_certificate({0.5, 10.0, 1.5}));
    CHECK_THROWS_AS(EnergyFunctional::linear().with_certificate({1.0, 0.0, 2.0}), DomainError);
    CHECK_THROWS_AS(EnergyFunctional::quadratic(-1.0), DomainError);
    CHECK_FALSE(EnergyFunctional::linear().with_certificate_unchecked({0.0, 0.0, 1.0}).certificate_holds());
}

TEST_CASE("linear drift translates exactly")
{
    const ActionDensity d(2.0, Mobility::linear(1.0));
    const auto rule = RhoStarRule::const_argmax_theta(d.mobility());
    const auto init = spaced(16, 0.0, 0.1, 1.0);
    for (bool nested : {false, true}) {
        JkoOptions o;
        o.nested = nested;
        const auto traj = jko_run(init, EnergyFunctional::linear(), 0.1, 5, d, rule, o);
        REQUIRE(traj.complete());
        REQUIRE(traj.steps.size() == 6);
        for (std::size_t n = 0; n < traj.steps.size(); ++n) {
            std::vector<double> expect = init.positions();
            for (double& x : expect)
                x -= 0.1 * static_cast<double>(n);
            CHECK(max_diff(traj.steps[n].config, expect) < (nested ? 1e-6 : 1e-8));
        }
        // d^2 = tau^2 per step, F drops by tau.
        CHECK(traj.steps[1].transport_cost == doctest::Approx(0.01).epsilon(1e-6));
        CHECK(traj.steps[1].J == doctest::Approx(traj.steps[0].energy - 0.05).epsilon(1e-6));
        CHECK(descent_holds(traj));
        CHECK(second_moment_bound_check(traj));
    }
}

TEST_CASE("quadratic energy gives the proximal contraction")
{
    const ActionDensity d(2.0, Mobility::linear(1.0));
    const auto rule = RhoStarRule::const_argmax_theta(d.mobility());
    const auto init = spaced(8, 3.0, 1.0, 1.0);
    const double tau = 0.2;
    const auto traj = jko_run(init, EnergyFunctional::quadratic(), tau, 4, d, rule);
    REQUIRE(traj.complete());
    for (std::size_t n = 0; n < traj.steps.size(); ++n) {
        std::vector<double> expect = init.positions();
        for (double& x : expect)
            x /= std::pow(1.0 + tau, static_cast<double>(n));
        CHECK(max_diff(traj.steps[n].config, expect) < 1e-7);
    }
    CHECK(descent_holds(traj));
}

TEST_CASE("zero energy keeps the configuration")
{
    const ActionDensity d(2.0, Mobility::logistic(1.0));
    const auto init = spaced(6, 0.0, 0.5, 1.0);
    const auto traj = jko_run(init, EnergyFunctional::zero(), 0.3, 3, d, RhoStarRule::look_back());
    REQUIRE(traj.steps.size() == 4);
    for (const auto& s : traj.steps) {
        CHECK(s.config.positions() == init.positions());
        CHECK(s.J == 0.0);
    }
    CHECK(second_moment_bound_check(traj));
}

TEST_CASE("logistic drift: descent, cone and joint vs nested")
{
    const ActionDensity d(2.0, Mobility::logistic(1.0));
    const auto rule = RhoStarRule::const_argmax_theta(d.mobility());
    const auto init = sample_from_quantile(Measure1D::uniform(0.0, 2.0), 6, d.mobility());
    JkoOptions joint;
    joint.solver.K = 16;
    JkoOptions nested = joint;
    nested.nested = true;
    const auto a = jko_run(init, EnergyFunctional::linear(), 0.25, 3, d, rule, joint);
    const auto b = jko_run(init, EnergyFunctional::linear(), 0.25, 3, d, rule, nested);
    REQUIRE(a.complete());
    REQUIRE(b.complete());
    CHECK(descent_holds(a));
    CHECK(descent_holds(b));
    for (const auto& s : a.steps)
        CHECK(in_cone(s.config.x(), 1.0));
    // Congestion slows the drift below the free displacement tau.
    CHECK(a.steps[1].config[0] > init[0] - 0.25);
    CHECK(a.steps[1].energy < a.steps[0].energy);
    // Same first step from both formulations.
    CHECK(a.steps[1].J == doctest::Approx(b.steps[1].J).epsilon(1e-5));
    CHECK(max_diff(a.steps[1].config, b.steps[1].config.positions()) < 1e-4);
    CHECK(second_moment_bound_check(a));
}

TEST_CASE("second moment bound constants")
{
    const ActionDensity d(2.0, Mobility::linear(1.0));
    const auto rule = RhoStarRule::const_argmax_theta(d.mobility());
    const auto traj = jko_run(spaced(4, -2.0, 1.0, 1.0), EnergyFunctional::linear(), 0.5, 2, d, rule);
    const GrowthCertificate cert{2.0, 0.5, 1.0};
    const auto mb = second_moment_bound(traj, cert, 1.0);
    // tau = 1/2, theta = 1: a = 1, c = 1/4; D' = D + max_t (2 sqrt t - t/4) by brute force.
    CHECK(mb.c == doctest::Approx(0.25));
    double best = 0.0;
    for (int k = 0; k <= 400000; ++k) {
        const double t = k * 1e-4;
        best = std::max(best, 2.0 * std::sqrt(t) - 0.25 * t);
    }
    CHECK(mb.D_prime == doctest::Approx(0.5 + best).epsilon(1e-6));
    CHECK(mb.holds);
    CHECK(mb.moments.size() == traj.steps.size());
}

TEST_CASE("second moment check rejects an understated certificate")
{
    const ActionDensity d(2.0, Mobility::linear(1.0));
    const auto rule = RhoStarRule::const_argmax_theta(d.mobility());
    // f = -1e4 everywhere: [f]_- = 1e4, so D must be at least 1e4.
    const auto F = EnergyFunctional::table({-1.0, 1.0}, {-1e4, -1e4});
    const auto traj = jko_run(spaced(4, -0.5, 0.25, 1.0), F, 0.1, 2, d, rule);
    REQUIRE(traj.complete());
    CHECK(descent_holds(traj));
    CHECK(second_moment_bound_check(traj));
    CHECK_FALSE(second_moment_bound_check(traj, {0.0, 0.0, 1.0}, 1.0));
    CHECK_THROWS_AS(F.with_certificate({0.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("jko_run stops cleanly when a step fails")
{
    const ActionDensity d(2.0, Mobility::logistic(1.0));
    JkoOptions o;
    o.solver.max_outer = 1;
    o.solver.max_inner = 1;
    const auto init = sample_from_quantile(Measure1D::uniform(0.0, 2.0), 8, d.mobility());
    const auto traj = jko_run(init, EnergyFunctional::linear(), 0.5, 3, d, RhoStarRule::look_back(), o);
    CHECK_FALSE(traj.complete());
    CHECK(traj.failure.find("step 1") != std::string::npos);
    CHECK(traj.steps.size() == 1);
}

TEST_CASE("jko_step validates its arguments")
{
    const ActionDensity d2(2.0, Mobility::linear(1.0)), d3(3.0, Mobility::linear(1.0));
    const auto rule = RhoStarRule::look_back();
    const auto x = spaced(3, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(jko_step(x, EnergyFunctional::linear(), 0.0, d2, rule), DomainError);
    CHECK_THROWS_AS(jko_step(x, EnergyFunctional::linear(), 0.1, d3, rule), DomainError);
    CHECK_THROWS_AS(jko_step(spaced(3, 0.0, 1.0, 2.0), EnergyFunctional::linear(), 0.1, d2, rule), ConeViolation);
}

TEST_CASE("convergence study: translation keeps the sampling gaps")
{
    const ActionDensity d(2.0, Mobility::linear(1.0));
    JkoStudyConfig cfg{Measure1D::uniform(0.0, 2.0), EnergyFunctional::linear(), 0.1, 2, {4, 8, 16}, 1.5, d,
                       RhoStarRule::const_argmax_theta(d.mobility()), {}, 3};
    const auto rep = jko_convergence_study(cfg);
    CHECK(rep.failures.empty());
    CHECK(rep.monotone);
    REQUIRE(rep.records.size() == 9);
    for (const auto& r : rep.records) {
        const auto& r0 = rep.records[(&r - rep.records.data()) / 3 * 3];
        CHECK(r.wq_to_ref == doctest::Approx(r0.wq_to_ref).epsilon(1e-6));
    }
    CHECK(rep.records[0].wq_to_ref > rep.records[3].wq_to_ref);
    CHECK(rep.records[8].wq_to_ref == 0.0);
    CHECK(std::isnan(rep.records[8].wq_to_next));
}

TEST_CASE("convergence study validates N_list and q")
{
    const ActionDensity d(2.0, Mobility::linear(1.0));
    JkoStudyConfig cfg{Measure1D::uniform(0.0, 1.0), EnergyFunctional::linear(), 0.1, 1, {8, 4}, 1.5, d,
                       RhoStarRule::look_back(), {}, 1};
    CHECK_THROWS_AS(jko_convergence_study(cfg), DomainError);
    cfg.N_list = {4, 8};
    cfg.q = 2.0;
    CHECK_THROWS_AS(jko_convergence_study(cfg), DomainError);
}
