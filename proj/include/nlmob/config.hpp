#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlmob/cone.hpp"
#include "nlmob/ftl.hpp"
#include "nlmob/geodesic.hpp"
#include "nlmob/jko.hpp"
#include "nlmob/measures.hpp"
#include "nlmob/mobility.hpp"

namespace nlmob {

enum class StudyKind { Distance, Geodesic, Gamma, Jko, Ftl };

std::string to_string(StudyKind kind);

/// A parsed study configuration. Which fields are required depends on the
/// kind; everything else keeps its default.
struct StudyConfig {
    StudyKind kind = StudyKind::Distance;
    std::uint64_t seed = 0;
    int threads = 1;

    Mobility mobility = Mobility::logistic(1.0);
    double p = 2.0;
    double q = 1.5;
    RhoStarRule rule;
    EndpointRule endpoints = EndpointRule::Auto;
    SolverOptions solver;

    // distance, geodesic: either measures sampled at N, or explicit particles.
    std::optional<Measure1D> mu0, mu1;
    std::optional<std::vector<double>> x0, x1;
    int N = 0;
    // gamma, jko, ftl
    std::vector<int> N_list;

    // jko
    std::optional<EnergyFunctional> F;
    double tau = 0.0;
    int n_steps = 0;
    bool nested = false;

    // ftl
    std::optional<VelocityLaw> law;
    double rho_L = 0.0, rho_R = 0.0;
    double t_end = 0.0;
    double dt = 0.0;

    /// Canonical JSON of the configuration as given (keys sorted, seed and
    /// threads included after command-line overrides).
    std::string canonical;
    /// FNV-1a 64 of `canonical`, as 16 hex digits.
    std::string hash;

    ActionDensity density() const { return ActionDensity(p, mobility); }
};

/// Parses JSON text. Throws ConfigError naming the offending field.
StudyConfig parse_study_config(const std::string& json_text, std::optional<StudyKind> expected = std::nullopt);

StudyConfig load_study_config(const std::string& path, std::optional<StudyKind> expected = std::nullopt);

/// Applies --seed / --threads overrides and refreshes canonical and hash.
void override_run_settings(StudyConfig& cfg, std::optional<std::uint64_t> seed, std::optional<int> threads);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace nlmob
