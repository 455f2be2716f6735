#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlmob/errors.hpp"
#include "nlmob/ftl.hpp"

using namespace nlmob;

TEST_CASE("velocity laws")
{
    const auto tr = VelocityLaw::traffic(2.0);
    CHECK(tr(0.0) == 1.0);
    CHECK(tr(1.0) == 0.5);
    CHECK(tr(2.0) == 0.0);
    CHECK(tr.argmax() == 0.0);
    const auto tab = VelocityLaw::table({0.0, 0.5, 1.0}, {0.5, 0.8, 0.0});
    CHECK(tab(0.25) == doctest::Approx(0.65));
    CHECK(tab(2.0) == 0.0);
    CHECK(tab.argmax() == 0.5);
    CHECK(tab.max_density() == 1.0);
    CHECK_THROWS_AS(VelocityLaw::table({0.1, 1.0}, {1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(VelocityLaw::traffic(0.0), DomainError);
}

TEST_CASE("ftl right-hand side")
{
    const auto law = VelocityLaw::traffic(1.0);
    const auto v = ftl_rhs({0.0, {0.0, 0.25, 0.5, 0.75, 1.0}}, law, RhoStarKind::ConstArgmaxTheta);
    for (int j = 0; j < 4; ++j)
        CHECK(v[j] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(v[4] == 1.0);

    const auto one = ftl_rhs({0.0, {0.0, 2.0}}, law, RhoStarKind::ConstArgmaxTheta);
    CHECK(one[0] == 0.5);
    CHECK(one[1] == 1.0);
    const auto lb = ftl_rhs({0.0, {0.0, 2.0}}, law, RhoStarKind::LookBack);
    CHECK(lb[1] == 0.5);

    for (double c : ftl_rhs({0.0, {0.0, 0.1, 3.0}}, VelocityLaw::constant(-0.7), RhoStarKind::LookBack))
        CHECK(c == -0.7);
    CHECK_THROWS_AS(ftl_rhs({0.0, {0.0, 0.0, 1.0}}, law, RhoStarKind::LookBack), ConeViolation);
}

TEST_CASE("constant velocity translates rigidly")
{
    const std::vector<double> x0{-1.0, -0.3, 0.2, 2.0};
    const auto traj = ftl_integrate({0.0, x0}, VelocityLaw::constant(0.4), RhoStarKind::LookBack, 1.3, 0.05);
    CHECK(traj.front().t == 0.0);
    CHECK(traj.back().t == 1.3);
    for (std::size_t i = 0; i < x0.size(); ++i)
        CHECK(traj.back().x[i] == doctest::Approx(x0[i] + 0.4 * 1.3).epsilon(1e-14));
}

TEST_CASE("blocked queue: only the leader moves at first")
{
    const int N = 8;
    std::vector<double> x(N + 1);
    for (int i = 0; i <= N; ++i)
        x[i] = -1.0 + static_cast<double>(i) / N;
    const auto law = VelocityLaw::traffic(1.0);
    const auto traj = ftl_integrate({0.0, x}, law, RhoStarKind::ConstArgmaxTheta, 0.5, 0.01);
    for (const auto& s : traj)
        CHECK(s.x.back() == doctest::Approx(s.t).epsilon(1e-13));
    // Jammed particles only ever move forward, and the last one barely moves:
    // the continuum fan edge reaches x = -1 at t = 1.
    for (std::size_t k = 1; k < traj.size(); ++k)
        for (int i = 0; i <= N; ++i)
            CHECK(traj[k].x[i] >= traj[k - 1].x[i]);
    CHECK(traj.back().x[0] - x[0] < 0.01);
    CHECK(ftl_maximum_principle(traj, law));
}

TEST_CASE("ordering, mass and maximum principle on random data")
{
    std::mt19937_64 rng(7);
    // Gaps at least 1/N: initial densities below M = 1.
    std::uniform_real_distribution<double> gap(1.0, 3.0);
    const auto law = VelocityLaw::traffic(1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const int N = 20;
        std::vector<double> x{0.0};
        for (int i = 0; i < N; ++i)
            x.push_back(x.back() + gap(rng) / N);
        for (auto rule : {RhoStarKind::ConstArgmaxTheta, RhoStarKind::LookBack}) {
            const auto traj = ftl_integrate({0.0, x}, law, rule, 2.0, 0.01);
            CHECK(ftl_maximum_principle(traj, law));
            for (const auto& s : traj) {
                double mass = 0.0;
                for (int j = 0; j < N; ++j) {
                    REQUIRE(s.x[j + 1] > s.x[j]);
                    mass += piecewise_density_at(s.x, 0.5 * (s.x[j] + s.x[j + 1])) * (s.x[j + 1] - s.x[j]);
                }
                CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("collision raises StepFailure")
{
    // v increasing in rho: the dense rear cell catches up with the particle ahead.
    const auto law = VelocityLaw::table({0.0, 1.0}, {0.0, 1.0});
    CHECK_THROWS_AS(ftl_integrate({0.0, {0.0, 0.5, 2.0}}, law, RhoStarKind::ConstArgmaxTheta, 2.0, 0.01),
                    StepFailure);
}

TEST_CASE("exact traffic Riemann solutions")
{
    // Rarefaction 1 -> 0: rho = (1 - x/t)/2 on |x| < t.
    CHECK(traffic_riemann_solution(1.0, 0.0, 1.0, -0.6, 0.5) == 1.0);
    CHECK(traffic_riemann_solution(1.0, 0.0, 1.0, 0.2, 0.5) == doctest::Approx(0.3));
    CHECK(traffic_riemann_solution(1.0, 0.0, 1.0, 0.6, 0.5) == 0.0);
    // Stationary shock.
    CHECK(traffic_riemann_solution(0.25, 0.75, 1.0, -1e-9, 3.0) == 0.25);
    CHECK(traffic_riemann_solution(0.25, 0.75, 1.0, 1e-9, 3.0) == 0.75);
    // Moving shock 0.1 -> 0.3: speed 0.6.
    CHECK(traffic_riemann_solution(0.1, 0.3, 1.0, 0.59, 1.0) == 0.1);
    CHECK(traffic_riemann_solution(0.1, 0.3, 1.0, 0.61, 1.0) == 0.3);
    // Flux balance across the fan edge x/t = 1 - 2 rho_L.
    CHECK(traffic_riemann_solution(0.8, 0.2, 1.0, (1.0 - 1.6) * 2.0 + 1e-9, 2.0) == doctest::Approx(0.8));
}

TEST_CASE("equal states: FTL keeps the constant profile")
{
    // The leader leaves the block at speed 1; the disturbance it sends back
    // through the chain dies off very fast in N inside the compared window.
    const auto law = VelocityLaw::traffic(1.0);
    double prev = 1.0;
    for (int N : {16, 32, 64, 128}) {
        const double e = ftl_vs_entropy(0.5, 0.5, law, N, 0.5);
        CHECK(e < prev * 0.1);
        prev = e;
    }
    CHECK(prev < 1e-11);
}

TEST_CASE("rarefaction: L1 error decreases with N")
{
    const auto law = VelocityLaw::traffic(1.0);
    double prev = 1e300;
    for (int N : {16, 32, 64}) {
        const auto rep = ftl_entropy_report(1.0, 0.0, law, N, 0.5);
        MESSAGE("N=" << N << " L1=" << rep.l1_error);
        CHECK(rep.compare_lo == doctest::Approx(-0.5));
        CHECK(rep.compare_hi == doctest::Approx(0.5));
        CHECK(rep.l1_error < prev);
        prev = rep.l1_error;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("stationary shock: L1 error decreases with N")
{
    const auto law = VelocityLaw::traffic(1.0);
    double prev = 1e300;
    for (int N : {16, 32, 64}) {
        const double e = ftl_vs_entropy(0.25, 0.75, law, N, 0.5);
        MESSAGE("N=" << N << " L1=" << e);
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("entropy comparison validates its inputs")
{
    CHECK_THROWS_AS(ftl_vs_entropy(1.0, 0.0, VelocityLaw::constant(1.0), 8, 0.5), DomainError);
    CHECK_THROWS_AS(ftl_vs_entropy(1.5, 0.0, VelocityLaw::traffic(1.0), 8, 0.5), DomainError);
    CHECK_THROWS_AS(ftl_vs_entropy(1.0, 0.0, VelocityLaw::traffic(1.0), 8, 1.0), DomainError);
}
