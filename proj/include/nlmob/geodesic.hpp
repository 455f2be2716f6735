#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nlmob/cone.hpp"
#include "nlmob/measures.hpp"
#include "nlmob/mobility.hpp"
#include "nlmob/transcription.hpp"

namespace nlmob {

/// Trajectory x(t_k) in K_N on the uniform grid t_k = k/K.
class ParticlePath {
public:
    ParticlePath(std::vector<ParticleConfig> states);
    /// states is (K+1) x (N+1), row-major in time; every row is cone-checked.
    static ParticlePath from_flat(std::span<const double> states, int n, double max_density);
    static ParticlePath straight_line(const ParticleConfig& a, const ParticleConfig& b, int intervals);

    int intervals() const noexcept { return static_cast<int>(states_.size()) - 1; }
    int n() const noexcept { return states_.front().n(); }
    double dt() const noexcept { return 1.0 / intervals(); }
    double time(int k) const noexcept { return static_cast<double>(k) / intervals(); }
    const std::vector<ParticleConfig>& states() const noexcept { return states_; }
    const ParticleConfig& state(int k) const { return states_[k]; }
    /// (x(t_{k+1}) - x(t_k)) / dt.
    std::vector<double> velocity(int k) const;
    std::vector<double> flat() const;

private:
    std::vector<ParticleConfig> states_;
};

struct SolverOptions {
    int K = 32;
    int max_outer = 8;
    double barrier0 = 1e-2;
    double tol = 1e-9;
    double lambda_floor = 1e-3;
    double refine_tol = 1e-4;
    int max_inner = 200;
    /// Where states enter the action inside each interval.
    StateRule state_rule = StateRule::Left;
    /// Continuation over dilated mobilities when theta(M) = 0.
    bool continuation = true;
};

struct SolverReport {
    int iterations = 0;
    double kkt_residual = 0.0;
    double barrier_final = 0.0;
    bool converged = true;
    /// Dilation factors used, in order; the last entry is 1 (the true mobility).
    std::vector<double> lambda_schedule;
    /// Distance under m^lambda at the end of each stage.
    std::vector<double> stage_distances;
    /// True when the straight-line initializer beat the optimised path.
    bool returned_initializer = false;
};

struct GeodesicResult {
    ParticlePath path;
    double distance;
    std::vector<double> action_profile;
    SolverReport solver_report;
    /// W_p(E^N(a), E^N(b)) / ||theta||_inf^{(p-1)/p}.
    double lower_bound;
    /// Straight-line action^{1/p} (may be +inf).
    double upper_bound;
};

/// Phi^N(x, v) = 1/(N+1) sum |v_i|^p / theta(R_i(x))^{p-1}; +inf when a
/// singular term has nonzero velocity.
double discrete_action(const ParticleConfig& cfg, std::span<const double> v, const ActionDensity& density,
                       const RhoStarRule& rule);

/// The same quantity through 1/(N+1) sum R_i^{p-1} phi(R_i, v_i).
double discrete_action_via_phi(const ParticleConfig& cfg, std::span<const double> v,
                               const ActionDensity& density, const RhoStarRule& rule);

/// sum_k dt Phi^N(z_k, v_k), z_k = left endpoint unless another rule is given.
double path_action(const ParticlePath& path, const ActionDensity& density, const RhoStarRule& rule,
                   StateRule state_rule = StateRule::Left);

/// Locally optimal discrete geodesic between a and b in K_N.
///
/// Never returns a path worse than the straight line. Throws ConeViolation for
/// mismatched inputs and NonConvergenceWith<GeodesicResult> carrying the best
/// path when the final barrier subproblem misses the tolerance.
GeodesicResult solve_geodesic(const ParticleConfig& a, const ParticleConfig& b, const ActionDensity& density,
                              const RhoStarRule& rule, const SolverOptions& options = {},
                              const std::optional<ParticlePath>& warm_start = std::nullopt);

/// d^N between preimages under PC^N (both piecewise) or E^N (both empirical);
/// +inf when either measure is outside the range of the same embedding.
double embedded_distance(const Measure1D& mu0, const Measure1D& mu1, const ActionDensity& density,
                         const RhoStarRule& rule, const SolverOptions& options = {});

/// Recovers x with E^N(x) = mu or PC^N(x) = mu, if any.
std::optional<ParticleConfig> decode_empirical(const Measure1D& mu, double max_density);
std::optional<ParticleConfig> decode_piecewise(const Measure1D& mu, double max_density);

/// max_k |Phi_k - mean| / mean <= tol.
bool check_constant_speed(const GeodesicResult& result, double tol);

/// Continuous action Phi_{p,m}(PC^N(x), j^N) with j^N = sum v_i R_i 1_{[x_i, x_{i+1})},
/// integrated exactly cell by cell.
double continuous_action_of_reconstruction(const ParticleConfig& cfg, std::span<const double> v,
                                           const ActionDensity& density);

/// Phi_{p,m}(PC^N(x), j^N) <= (N+1)/N Phi^N(x, v) at every time node of the path.
bool action_comparison_check(const ParticlePath& path, const ActionDensity& density, const RhoStarRule& rule);

/// d^N(a, b)^p >= W_p(E^N(a), E^N(b))^p / ||theta||_inf^{p-1} - tol.
bool distance_lower_bound_check(const ParticleConfig& a, const ParticleConfig& b, const ActionDensity& density,
                                const RhoStarRule& rule, const SolverOptions& options = {}, double tol = 1e-8);

}  // namespace nlmob
