#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nlmob/cone.hpp"
#include "nlmob/geodesic.hpp"
#include "nlmob/measures.hpp"
#include "nlmob/mobility.hpp"

namespace nlmob {

/// Lower growth bound [f(x)]_- <= C |x|^s + D with 0 < s < 2.
struct GrowthCertificate {
    double C = 0.0;
    double D = 0.0;
    double s = 1.0;
};

/// Potential energy F(mu) = int f dmu, evaluated on empirical measures as
/// F_N(x) = 1/(N+1) sum f(x_i), or the zero functional.
class EnergyFunctional {
public:
    static EnergyFunctional zero();
    /// f(x) = slope * x; default certificate C = |slope|, D = 0, s = 1.
    static EnergyFunctional linear(double slope = 1.0);
    /// f(x) = coef * x^2 / 2 with coef >= 0; certificate C = D = 0.
    static EnergyFunctional quadratic(double coef = 1.0);
    /// Piecewise linear interpolation of (x, f) nodes, extended linearly
    /// outside the table.
    static EnergyFunctional table(std::vector<double> x, std::vector<double> f);

    /// Replaces the growth certificate after checking it on a probe grid.
    /// Throws DomainError if the bound fails somewhere on the grid.
    EnergyFunctional with_certificate(GrowthCertificate cert) const;
    /// Same, without the probe check (for constructing negative controls).
    EnergyFunctional with_certificate_unchecked(GrowthCertificate cert) const;

    bool is_zero() const noexcept { return zero_; }
    const std::string& name() const noexcept { return name_; }
    const GrowthCertificate& certificate() const noexcept { return cert_; }

    double f(double x) const { return f_(x); }
    double df(double x) const { return df_(x); }
    double ddf(double x) const { return ddf_(x); }

    /// F_N(E^N(x)).
    double operator()(const ParticleConfig& cfg) const;

    /// [f(x)]_- <= C|x|^s + D on a grid of [-radius, radius].
    bool certificate_holds(double radius = 100.0, int points = 4001) const;

private:
    EnergyFunctional() = default;

    std::string name_;
    bool zero_ = false;
    GrowthCertificate cert_;
    std::function<double(double)> f_, df_, ddf_;
};

struct JkoOptions {
    SolverOptions solver;
    /// Outer quasi-Newton over the endpoint with an inner geodesic solve,
    /// instead of one joint problem over path and endpoint.
    bool nested = false;
    int nested_max_iter = 200;
    /// Outer gradient tolerance of the nested formulation, relative to the
    /// typical gradient size. Cannot go below the inner solver accuracy.
    double nested_tol = 1e-7;
};

struct JkoStepResult {
    ParticleConfig config;
    double energy;          // F_N(y)
    double transport_cost;  // d^N(prev, y)^2
    double J;               // energy + transport_cost / (2 tau)
    int iterations = 0;
    bool returned_prev = false;
};

/// One minimizing-movement step: a local minimiser of
/// y -> F_N(y) + d^N_{2,m}(prev, y)^2 / (2 tau) over K_N, warm-started at prev.
/// The result never has larger J than prev itself. Requires p = 2.
JkoStepResult jko_step(const ParticleConfig& prev, const EnergyFunctional& F, double tau, const ActionDensity& density,
                       const RhoStarRule& rule, const JkoOptions& options = {});

struct JkoRecord {
    ParticleConfig config;
    double energy;
    double transport_cost;
    double J;
};

struct JkoTrajectory {
    double tau;
    /// steps[0] is the initial datum (transport cost 0, J = F).
    std::vector<JkoRecord> steps;
    std::string mobility;
    RhoStarRule rule;
    JkoOptions options;
    GrowthCertificate certificate;
    double theta_sup;
    /// Empty when all requested steps were taken.
    std::string failure;

    bool complete() const noexcept { return failure.empty(); }
};

/// Iterates jko_step. A step that fails to converge ends the run; the
/// trajectory up to that point is returned with `failure` set.
JkoTrajectory jko_run(const ParticleConfig& init, const EnergyFunctional& F, double tau, int n_steps,
                      const ActionDensity& density, const RhoStarRule& rule, const JkoOptions& options = {});

/// F_N(y_n) + d_n^2 / (2 tau) <= F_N(y_{n-1}) at every step, with relative slack.
bool descent_holds(const JkoTrajectory& traj, double rel_tol = 1e-10);

/// Second-moment bound along the trajectory. With a = 1/(2 tau ||theta||_inf),
/// c = a/4 and D' = D + max_t (C t^{s/2} - c t),
///   E_n|x|^2 <= (F_N(y_{n-1}) + a E_{n-1}|x|^2 + D') / c.
/// For tau = 1/2 this is the coercivity estimate of the well-posedness proof.
struct MomentBound {
    double c;
    double D_prime;
    std::vector<double> moments;  // E_n|x|^2, n = 0..
    std::vector<double> bounds;   // bound for n >= 1 (bounds[0] = moments[0])
    bool holds;
};

MomentBound second_moment_bound(const JkoTrajectory& traj, const GrowthCertificate& cert, double theta_sup);
bool second_moment_bound_check(const JkoTrajectory& traj);
bool second_moment_bound_check(const JkoTrajectory& traj, const GrowthCertificate& cert, double theta_sup);

struct JkoStudyRecord {
    int N;
    int n;
    double J;
    double energy;
    double dist;
    double second_moment;
    double wq_to_ref;   // W_q(E(traj_N[n]), E(traj_ref[n]))
    double wq_to_next;  // W_q to the next N in the list at the same step (NaN for the last)
};

struct JkoStudyReport {
    std::vector<int> N_list;
    double q;
    std::vector<JkoStudyRecord> records;  // ordered by N then n
    std::vector<std::string> failures;
    /// wq_to_ref nonincreasing in N for every n (within the noise band).
    bool monotone;
};

struct JkoStudyConfig {
    Measure1D mu0;
    EnergyFunctional F;
    double tau;
    int n_steps;
    std::vector<int> N_list;
    double q = 1.5;
    ActionDensity density;
    RhoStarRule rule;
    JkoOptions options;
    int threads = 1;
    double noise_band = 1e-9;
};

JkoStudyReport jko_convergence_study(const JkoStudyConfig& config);

}  // namespace nlmob
