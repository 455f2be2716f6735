#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "nlmob/cone.hpp"
#include "nlmob/mobility.hpp"

namespace nlmob {

/// Where the state is evaluated inside each time interval.
enum class StateRule {
    Left,      // z_k = x_k
    Midpoint,  // z_k = (x_k + x_{k+1}) / 2
    Gauss2,    // two-point Gauss-Legendre average along the segment
};

std::string to_string(StateRule rule);
StateRule state_rule_from_string(const std::string& name);

/// Time-discretised discrete action of a particle path.
///
/// A path is stored as K+1 states of N+1 particles, row-major in time:
/// states[k * (N+1) + i] = x_i(t_k), t_k = k/K. The action is
///
///   A = sum_k dt * Phi^N(z_k, v_k),  v_k = (x_{k+1} - x_k) / dt,
///
/// with Phi^N(x, v) = 1/(N+1) sum_i |v_i|^p / theta(R_i(x))^{p-1}. The state
/// z_k is taken along the segment [x_k, x_{k+1}] according to a StateRule.
class ActionTranscription {
public:
    ActionTranscription(ActionDensity density, RhoStarRule rule, int n, int intervals,
                        StateRule state_rule = StateRule::Left);

    int n() const noexcept { return n_; }
    int intervals() const noexcept { return K_; }
    double dt() const noexcept { return dt_; }
    StateRule state_rule() const noexcept { return state_rule_; }
    std::size_t state_size() const noexcept { return static_cast<std::size_t>(n_) + 1; }
    std::size_t size() const noexcept { return state_size() * (static_cast<std::size_t>(K_) + 1); }
    std::size_t index(int k, int i) const noexcept { return static_cast<std::size_t>(k) * state_size() + i; }
    const ActionDensity& density() const noexcept { return density_; }
    const RhoStarRule& rule() const noexcept { return rule_; }

    /// +inf if a reconstructed density leaves [0, M] or a singular term has
    /// nonzero velocity.
    double value(std::span<const double> states) const;

    /// Phi^N(z_k, v_k) for each interval.
    std::vector<double> interval_actions(std::span<const double> states) const;

    /// Adds the gradient of the action (times weight) into grad (full size).
    void add_gradient(std::span<const double> states, double weight, std::span<double> grad) const;

    /// Adds the Hessian of the action (times weight) as triplets over the full
    /// index space. Both triangles are emitted.
    void add_hessian(std::span<const double> states, double weight,
                     std::vector<Eigen::Triplet<double>>& triplets) const;

    std::vector<double> gradient(std::span<const double> states) const;

private:
    struct Term;
    template <class Visitor>
    bool visit_terms(std::span<const double> states, Visitor&& visit) const;

    ActionDensity density_;
    RhoStarRule rule_;
    int n_;
    int K_;
    double dt_;
    StateRule state_rule_;
};

}  // namespace nlmob
