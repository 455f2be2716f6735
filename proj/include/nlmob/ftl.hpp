#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nlmob/cone.hpp"

namespace nlmob {

/// Eulerian velocity v(rho) = f(rho) / rho of a scalar conservation law.
class VelocityLaw {
public:
    /// v(rho) = 1 - rho / M (flux rho (1 - rho / M)). Evaluated by the same
    /// formula above M, where it turns negative.
    static VelocityLaw traffic(double max_density = 1.0);
    static VelocityLaw constant(double c, double max_density = 1.0);
    /// Piecewise linear through (rho, v) nodes starting at rho = 0; constant
    /// past the last node, which fixes M.
    static VelocityLaw table(std::vector<double> rho, std::vector<double> v);

    bool is_traffic() const noexcept { return kind_ == Kind::Traffic; }
    const std::string& name() const noexcept { return name_; }
    double max_density() const noexcept { return M_; }
    double operator()(double rho) const;
    /// Smallest maximiser of v on [0, M] (grid search for tables).
    double argmax() const noexcept { return argmax_; }

private:
    enum class Kind { Traffic, Constant, Table };
    VelocityLaw() = default;

    Kind kind_ = Kind::Traffic;
    std::string name_;
    double M_ = 1.0;
    double c_ = 0.0;
    std::shared_ptr<const std::vector<double>> rho_, v_;
    double argmax_ = 0.0;
};

/// Time and ordered particle positions. FTL needs strict ordering only, not
/// the cone constraint.
struct FtlState {
    double t;
    std::vector<double> x;
};

/// R_j = 1/(N (x_{j+1} - x_j)) for j < N; the leader's R_N is argmax v
/// (ConstArgmaxTheta) or R_{N-1} (LookBack).
std::vector<double> ftl_densities(const std::vector<double>& x, const VelocityLaw& law, RhoStarKind rule);

/// Component j is v(R_j). Throws ConeViolation if x is not strictly increasing.
std::vector<double> ftl_rhs(const FtlState& state, const VelocityLaw& law, RhoStarKind rule);

/// Classical RK4 with step dt, halved while a step would break the ordering
/// and grown back afterwards. Returns every accepted state, starting with init
/// and ending at t_end. Throws StepFailure below 1e-12 t_end.
std::vector<FtlState> ftl_integrate(const FtlState& init, const VelocityLaw& law, RhoStarKind rule, double t_end,
                                    double dt);

/// max_j R_j(t) <= max(max_j R_j(0), M) + slack over the trajectory (j < N).
bool ftl_maximum_principle(const std::vector<FtlState>& traj, const VelocityLaw& law, double slack = 1e-9);

/// Entropy solution of the Riemann problem for the traffic flux
/// rho (1 - rho / M): a rarefaction when rho_L > rho_R, a shock with speed
/// 1 - (rho_L + rho_R)/M when rho_L < rho_R.
double traffic_riemann_solution(double rho_L, double rho_R, double M, double x, double t);

struct FtlEntropyReport {
    int N;
    double t;
    double window_lo, window_hi;    // unit-mass window of the initial data
    double compare_lo, compare_hi;  // window shrunk by t (maximal wave speed 1)
    double l1_error;
    FtlState final_state;
};

/// FTL from quantile-sampled Riemann data on the unit-mass window
/// [-1/(rho_L + rho_R), 1/(rho_L + rho_R)], compared at time t with the exact
/// entropy solution in L1 on the shrunk window. The integral is exact (both
/// profiles are piecewise affine). dt <= 0 picks 0.1/N.
FtlEntropyReport ftl_entropy_report(double rho_L, double rho_R, const VelocityLaw& law, int N, double t,
                                    RhoStarKind rule = RhoStarKind::ConstArgmaxTheta, double dt = 0.0);

double ftl_vs_entropy(double rho_L, double rho_R, const VelocityLaw& law, int N, double t,
                      RhoStarKind rule = RhoStarKind::ConstArgmaxTheta);

/// Density of PC^N(x) at a point (zero outside [x_0, x_N)).
double piecewise_density_at(const std::vector<double>& x, double at);

}  // namespace nlmob
