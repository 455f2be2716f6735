#pragma once

#include <span>
#include <vector>

#include <Eigen/SparseCore>

namespace nlmob::detail {

// Objective with a log-barrier of weight mu over a convex feasible set.
class BarrierProblem {
public:
    virtual ~BarrierProblem() = default;
    virtual std::size_t dim() const = 0;
    // +inf outside the strictly feasible set.
    virtual double value(std::span<const double> z, double mu) const = 0;
    virtual void derivatives(std::span<const double> z, double mu, std::vector<double>& grad,
                             std::vector<Eigen::Triplet<double>>& hess) const = 0;
    // Supremum of alpha > 0 with z + alpha dz strictly feasible (may be inf).
    virtual double max_step(std::span<const double> z, std::span<const double> dz) const = 0;
};

struct BarrierOptions {
    int max_outer = 8;
    double barrier0 = 1e-2;
    double barrier_factor = 0.1;
    int max_inner = 200;
    double tol = 1e-9;
    // Objective and gradient scales used to make the stopping tests relative.
    double value_scale = 1.0;
    double gradient_scale = 1.0;
};

struct BarrierReport {
    int iterations = 0;
    int outer = 0;
    double residual = 0.0;   // scaled infinity norm of the final gradient
    double decrement = 0.0;  // Newton decrement^2 / 2 at the final iterate
    double mu = 0.0;
    bool converged = false;
};

// Sequence of barrier subproblems, each minimised by a damped Newton method
// with a Levenberg shift whenever the Hessian is not positive definite.
BarrierReport minimize_with_barrier(const BarrierProblem& problem, std::vector<double>& z,
                                    const BarrierOptions& options);

}  // namespace nlmob::detail
