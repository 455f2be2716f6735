#pragma once

#include <string>
#include <vector>

#include "nlmob/config.hpp"
#include "nlmob/geodesic.hpp"

namespace nlmob {

struct GammaRecord {
    int N = 0;
    double distance = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    /// |d^N - d^{N'}| against the previous entry of N_list; NaN for the first.
    double gap = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct GammaReport {
    std::vector<GammaRecord> records;
    /// One message per N that failed outright, "N=<n>: <what>".
    std::vector<std::string> failures;
    /// Successive gaps strictly decreasing (gaps inside the noise band count as zero).
    bool cauchy = false;
    /// lower <= distance <= upper for every record.
    bool sandwiched = false;
    /// The largest-N distance, used as the continuous surrogate.
    double surrogate = 0.0;

    bool verdict() const { return failures.empty() && cauchy && sandwiched; }
};

/// Samples both measures at every N of cfg.N_list, solves d^N and records the
/// bounds. Runs are spread over cfg.threads workers and merged in N order.
GammaReport run_gamma_study(const StudyConfig& cfg, double noise_band = 1e-9);

/// Endpoints of a distance or geodesic run: explicit particles when given,
/// otherwise the two measures sampled at cfg.N.
std::pair<ParticleConfig, ParticleConfig> study_endpoints(const StudyConfig& cfg, int N);

/// solve_geodesic that hands back the best path on non-convergence.
GeodesicResult solve_geodesic_best(const ParticleConfig& a, const ParticleConfig& b, const ActionDensity& density,
                                   const RhoStarRule& rule, const SolverOptions& options);

}  // namespace nlmob
