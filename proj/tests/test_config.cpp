#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "nlmob/config.hpp"
#include "nlmob/errors.hpp"
#include "nlmob/study.hpp"

using namespace nlmob;

namespace {

// The message of the ConfigError thrown while parsing, or "" when it parses.
std::string config_error(const std::string& text, std::optional<StudyKind> kind = std::nullopt)
{
    try {
        parse_study_config(text, kind);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kGamma = R"({"kind":"gamma","mobility":{"kind":"linear","M":1},
  "mu0":{"kind":"uniform","a":0,"b":1},"mu1":{"kind":"uniform","a":0.25,"b":1.25},
  "N_list":[4,8],"solver":{"K":8}})";

}  // namespace

TEST_CASE("fnv1a reference values")
{
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("gamma config parses")
{
    const auto cfg = parse_study_config(kGamma);
    CHECK(cfg.kind == StudyKind::Gamma);
    CHECK(cfg.mobility.max_density() == 1.0);
    CHECK(cfg.N_list == std::vector<int>{4, 8});
    CHECK(cfg.solver.K == 8);
    CHECK(cfg.solver.max_outer == SolverOptions{}.max_outer);
    CHECK(cfg.rule.kind == RhoStarKind::ConstArgmaxTheta);
    CHECK(cfg.hash.size() == 16);
}

TEST_CASE("hash ignores key order and whitespace, not values")
{
    const auto a = parse_study_config(kGamma);
    const auto b = parse_study_config(R"({"solver":{"K":8},"N_list":[4,8],
      "mu1":{"b":1.25,"a":0.25,"kind":"uniform"},"mu0":{"kind":"uniform","a":0,"b":1},
      "mobility":{"M":1,"kind":"linear"},"kind":"gamma"})");
    CHECK(a.hash == b.hash);
    CHECK(a.canonical == b.canonical);
    auto c = parse_study_config(kGamma);
    override_run_settings(c, 7, std::nullopt);
    CHECK(c.seed == 7);
    CHECK(c.hash != a.hash);
    auto d = parse_study_config(kGamma);
    override_run_settings(d, std::nullopt, 8);
    CHECK(d.threads == 8);
    CHECK(d.hash == a.hash);
}

TEST_CASE("errors name the field")
{
    CHECK(config_error("{not json").find("<root>") != std::string::npos);
    CHECK(config_error(R"({"kind":"gamma"})").find("'mu0'") != std::string::npos);
    CHECK(config_error(R"({"kind":"walk"})").find("'kind'") != std::string::npos);
    const std::string bad_M = R"({"kind":"gamma","mobility":{"kind":"linear","M":-1}})";
    CHECK(config_error(bad_M).find("'mobility.M'") != std::string::npos);
    const std::string bad_list = R"({"kind":"gamma","mu0":{"kind":"uniform","a":0,"b":1},
      "mu1":{"kind":"uniform","a":0,"b":1},"N_list":[8,4]})";
    CHECK(config_error(bad_list).find("'N_list'") != std::string::npos);
    const std::string bad_uniform = R"({"kind":"gamma","mu0":{"kind":"uniform","a":1,"b":0},
      "mu1":{"kind":"uniform","a":0,"b":1},"N_list":[4]})";
    CHECK(config_error(bad_uniform).find("'mu0'") != std::string::npos);
    const std::string bad_solver = R"({"kind":"gamma","mu0":{"kind":"uniform","a":0,"b":1},
      "mu1":{"kind":"uniform","a":0,"b":1},"N_list":[4],"solver":{"KK":3}})";
    CHECK(config_error(bad_solver).find("'solver.KK'") != std::string::npos);
    CHECK(config_error(kGamma, StudyKind::Jko).find("'kind'") != std::string::npos);
    const std::string bad_pcd = R"({"kind":"gamma","mu0":{"kind":"pcd","breaks":[0,1],"heights":[2]},
      "mu1":{"kind":"uniform","a":0,"b":1},"N_list":[4]})";
    CHECK(config_error(bad_pcd).find("'mu0'") != std::string::npos);
}

TEST_CASE("particles must lie in the cone")
{
    const std::string ok = R"({"kind":"distance","mobility":{"kind":"linear","M":1},
      "x0":[0,1,2],"x1":[0.5,1.5,2.5]})";
    const auto cfg = parse_study_config(ok);
    CHECK(cfg.N == 2);
    const std::string jammed = R"({"kind":"distance","mobility":{"kind":"linear","M":1},
      "x0":[0,0.1,2],"x1":[0.5,1.5,2.5]})";
    CHECK(config_error(jammed).find("'x0'") != std::string::npos);
}

TEST_CASE("jko and ftl configs")
{
    const auto j = parse_study_config(R"({"kind":"jko","mu0":{"kind":"uniform","a":0,"b":2},
      "F":{"kind":"potential","f":"quadratic"},"tau":0.1,"n_steps":2,"N_list":[4,8],"rho_star":"look_back"})");
    REQUIRE(j.F);
    CHECK((*j.F)(ParticleConfig({0.0, 1.0}, 1.0)) == doctest::Approx(0.25));
    CHECK(j.rule.kind == RhoStarKind::LookBack);
    CHECK(config_error(R"({"kind":"jko","mu0":{"kind":"uniform","a":0,"b":2},
      "F":{"kind":"potential","f":"linear"},"tau":0,"n_steps":2,"N_list":[4]})")
              .find("'tau'") != std::string::npos);
    // a certificate that the energy violates is rejected
    CHECK(config_error(R"({"kind":"jko","mu0":{"kind":"uniform","a":0,"b":2},
      "F":{"kind":"potential","f":"linear","C":0,"D":0,"s":1},"tau":0.1,"n_steps":2,"N_list":[4]})")
              .find("'F'") != std::string::npos);

    const auto f = parse_study_config(R"({"kind":"ftl","riemann":{"rho_L":1,"rho_R":0},"t":0.5,"N_list":[8]})");
    REQUIRE(f.law);
    CHECK(f.law->is_traffic());
    CHECK(config_error(R"({"kind":"ftl","riemann":{"rho_L":1,"rho_R":0},"t":2,"N_list":[8]})")
              .find("'t'") != std::string::npos);
    CHECK(config_error(R"({"kind":"ftl","riemann":{"rho_L":1.5,"rho_R":0},"t":0.2,"N_list":[8]})")
              .find("'riemann.rho_L'") != std::string::npos);
}

TEST_CASE("gamma study on a linear translation is flat")
{
    const auto cfg = parse_study_config(kGamma);
    const auto rep = run_gamma_study(cfg);
    REQUIRE(rep.records.size() == 2);
    for (const auto& r : rep.records) {
        CHECK(r.distance == doctest::Approx(0.25).epsilon(1e-6));
        CHECK(r.lower <= r.distance + 1e-9);
    }
    CHECK(std::isnan(rep.records[0].gap));
    CHECK(rep.cauchy);
    CHECK(rep.sandwiched);
    CHECK(rep.verdict());
}

TEST_CASE("gamma study with equal measures is zero")
{
    const auto cfg = parse_study_config(R"({"kind":"gamma","mobility":{"kind":"logistic","M":1},
      "mu0":{"kind":"uniform","a":0,"b":2},"mu1":{"kind":"uniform","a":0,"b":2},"N_list":[4,8,16],
      "solver":{"K":8},"threads":3})");
    const auto rep = run_gamma_study(cfg);
    for (const auto& r : rep.records)
        CHECK(std::abs(r.distance) < 1e-12);
    CHECK(rep.verdict());
}

TEST_CASE("gamma study is independent of the thread count")
{
    auto one = parse_study_config(kGamma);
    auto four = parse_study_config(kGamma);
    override_run_settings(four, std::nullopt, 4);
    const auto a = run_gamma_study(one), b = run_gamma_study(four);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k)
        CHECK(a.records[k].distance == b.records[k].distance);
}
