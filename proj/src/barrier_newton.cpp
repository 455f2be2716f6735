#include "barrier_newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

namespace nlmob::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

struct InnerResult {
    int iterations = 0;
    double residual = kInf;
    double decrement = kInf;
    bool converged = false;
};

InnerResult newton_inner(const BarrierProblem& problem, std::vector<double>& z, double mu,
                         const BarrierOptions& opt)
{
    const std::size_t n = problem.dim();
    InnerResult out;
    std::vector<double> grad;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> dz(n), trial(n);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
    Eigen::SparseMatrix<double> H(static_cast<int>(n), static_cast<int>(n));
    double f = problem.value(z, mu);
    const double dec_tol = opt.tol * opt.value_scale;
    double shift = 0.0;

    for (int it = 0; it < opt.max_inner; ++it) {
        grad.assign(n, 0.0);
        trip.clear();
        problem.derivatives(z, mu, grad, trip);
        out.residual = inf_norm(grad) * opt.gradient_scale;
        if (out.residual <= opt.tol) {
            out.converged = true;
            out.decrement = 0.0;
            return out;
        }
        // Explicit diagonal so the Levenberg shift never changes the pattern.
        for (std::size_t i = 0; i < n; ++i)
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 0.0);
        H.setFromTriplets(trip.begin(), trip.end());
        double diag_max = 0.0;
        for (int i = 0; i < H.outerSize(); ++i)
            diag_max = std::max(diag_max, std::abs(H.coeff(i, i)));
        if (diag_max == 0.0)
            diag_max = 1.0;
        ldlt.analyzePattern(H);

        Eigen::Map<const Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd step;
        shift = shift > 0.0 ? shift * 0.1 : 0.0;
        if (shift < 1e-14 * diag_max)
            shift = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            Eigen::SparseMatrix<double> Hs = H;
            if (shift > 0.0)
                for (int i = 0; i < Hs.outerSize(); ++i)
                    Hs.coeffRef(i, i) += shift;
            ldlt.factorize(Hs);
            const bool pd = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0;
            if (!pd) {
                shift = std::max(2.0 * shift, 1e-10 * diag_max);
                continue;
            }
            step = -ldlt.solve(g);
            const double slope = g.dot(step);
            if (!(slope < 0.0) || !step.allFinite()) {
                shift = std::max(4.0 * shift, 1e-10 * diag_max);
                continue;
            }
            out.decrement = -0.5 * slope;
            std::copy(step.data(), step.data() + n, dz.begin());
            if (out.decrement <= dec_tol) {
                // Take the last Newton step anyway: it is nearly free and
                // squares the error in the iterate.
                const double alpha = std::min(1.0, 0.995 * problem.max_step(z, dz));
                for (std::size_t i = 0; i < n; ++i)
                    trial[i] = z[i] + alpha * dz[i];
                if (problem.value(trial, mu) <= f)
                    z.swap(trial);
                out.converged = true;
                return out;
            }
            double alpha = std::min(1.0, 0.995 * problem.max_step(z, dz));
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < n; ++i)
                    trial[i] = z[i] + alpha * dz[i];
                const double ft = problem.value(trial, mu);
                if (ft <= f + 1e-4 * alpha * slope) {
                    z.swap(trial);
                    f = ft;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted)
                shift = std::max(4.0 * shift, 1e-8 * diag_max);
        }
        ++out.iterations;
        if (!accepted) {
            // No representable decrease along any regularised direction: the
            // iterate is stationary to working precision.
            out.converged = out.decrement <= 1e3 * dec_tol;
            return out;
        }
    }
    return out;
}

}  // namespace

BarrierReport minimize_with_barrier(const BarrierProblem& problem, std::vector<double>& z,
                                    const BarrierOptions& options)
{
    BarrierReport report;
    double mu = options.barrier0;
    for (int outer = 0; outer < options.max_outer; ++outer) {
        const auto inner = newton_inner(problem, z, mu, options);
        report.iterations += inner.iterations;
        report.outer = outer + 1;
        report.residual = inner.residual;
        report.decrement = inner.decrement;
        report.mu = mu;
        report.converged = inner.converged;
        mu *= options.barrier_factor;
    }
    return report;
}

}  // namespace nlmob::detail
