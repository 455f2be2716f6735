#pragma once

#include <functional>
#include <span>
#include <vector>

#include "barrier_newton.hpp"
#include "nlmob/transcription.hpp"

namespace nlmob::detail {

// Separable potential (1/(N+1)) sum f(y_i) on the final state of a path.
struct EndpointPotential {
    std::function<double(double)> f, df, ddf;
    double weight = 1.0;
};

// Barrier subproblem over the free entries of a transcribed path.
//
// Objective: action_weight * A(states) + endpoint(final state)
//            + mu * barrier_weight * sum -log(gap - gmin)
// where the barrier runs over consecutive pairs with at least one free entry.
class PathProblem : public BarrierProblem {
public:
    PathProblem(ActionTranscription transcription, std::vector<double> base, std::vector<bool> fixed,
                double gmin, double action_weight, double barrier_weight,
                const EndpointPotential* endpoint = nullptr);

    std::size_t dim() const override { return free_.size(); }
    double value(std::span<const double> z, double mu) const override;
    void derivatives(std::span<const double> z, double mu, std::vector<double>& grad,
                     std::vector<Eigen::Triplet<double>>& hess) const override;
    double max_step(std::span<const double> z, std::span<const double> dz) const override;

    const ActionTranscription& transcription() const noexcept { return tr_; }
    std::vector<double> gather(std::span<const double> full) const;
    std::vector<double> expand(std::span<const double> z) const;

    // Minimum of gap - gmin over the barrier pairs of a full state vector.
    double min_slack(std::span<const double> full) const;

private:
    struct Pair {
        std::size_t lo, hi;
    };

    double endpoint_value(std::span<const double> full) const;

    ActionTranscription tr_;
    std::vector<double> base_;
    std::vector<int> free_of_full_;
    std::vector<std::size_t> free_;
    std::vector<Pair> pairs_;
    double gmin_;
    double action_weight_;
    double barrier_weight_;
    const EndpointPotential* endpoint_;
};

// Left rule only: fixes x_i(t_{k+1}) = x_i(t_k) wherever the term (k, i) has
// theta = 0 on a gap made of fixed entries. Returns false on a contradiction
// with an entry that is already fixed.
bool propagate_pins(std::vector<double>& full, std::vector<bool>& fixed, const ActionTranscription& tr);

// Moves the free entries of each state so that every barrier pair has slack
// at least margin * gmin, keeping fixed entries in place. Returns false if
// some state has no such point.
bool make_interior(std::vector<double>& full, const std::vector<bool>& fixed, int n, int states, double gmin,
                   double margin);

}  // namespace nlmob::detail
