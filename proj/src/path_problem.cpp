#include "path_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlmob::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PathProblem::PathProblem(ActionTranscription transcription, std::vector<double> base, std::vector<bool> fixed,
                         double gmin, double action_weight, double barrier_weight,
                         const EndpointPotential* endpoint)
    : tr_(std::move(transcription)),
      base_(std::move(base)),
      free_of_full_(base_.size(), -1),
      gmin_(gmin),
      action_weight_(action_weight),
      barrier_weight_(barrier_weight),
      endpoint_(endpoint)
{
    for (std::size_t j = 0; j < base_.size(); ++j) {
        if (!fixed[j]) {
            free_of_full_[j] = static_cast<int>(free_.size());
            free_.push_back(j);
        }
    }
    const int n = tr_.n();
    for (int k = 0; k <= tr_.intervals(); ++k) {
        for (int i = 0; i < n; ++i) {
            const std::size_t lo = tr_.index(k, i), hi = tr_.index(k, i + 1);
            if (!fixed[lo] || !fixed[hi])
                pairs_.push_back({lo, hi});
        }
    }
}

std::vector<double> PathProblem::gather(std::span<const double> full) const
{
    std::vector<double> z(free_.size());
    for (std::size_t f = 0; f < free_.size(); ++f)
        z[f] = full[free_[f]];
    return z;
}

std::vector<double> PathProblem::expand(std::span<const double> z) const
{
    std::vector<double> full = base_;
    for (std::size_t f = 0; f < free_.size(); ++f)
        full[free_[f]] = z[f];
    return full;
}

double PathProblem::min_slack(std::span<const double> full) const
{
    double m = kInf;
    for (const auto& pr : pairs_)
        m = std::min(m, full[pr.hi] - full[pr.lo] - gmin_);
    return m;
}

double PathProblem::endpoint_value(std::span<const double> full) const
{
    if (!endpoint_)
        return 0.0;
    double s = 0.0;
    const int K = tr_.intervals();
    for (int i = 0; i <= tr_.n(); ++i)
        s += endpoint_->f(full[tr_.index(K, i)]);
    return endpoint_->weight * s;
}

double PathProblem::value(std::span<const double> z, double mu) const
{
    const auto full = expand(z);
    double barrier = 0.0;
    for (const auto& pr : pairs_) {
        const double slack = full[pr.hi] - full[pr.lo] - gmin_;
        if (!(slack > 0.0))
            return kInf;
        barrier -= std::log(slack);
    }
    const double action = tr_.value(full);
    if (!std::isfinite(action))
        return kInf;
    return action_weight_ * action + endpoint_value(full) + mu * barrier_weight_ * barrier;
}

void PathProblem::derivatives(std::span<const double> z, double mu, std::vector<double>& grad,
                              std::vector<Eigen::Triplet<double>>& hess) const
{
    const auto full = expand(z);
    std::vector<double> g(full.size(), 0.0);
    std::vector<Eigen::Triplet<double>> trip;
    tr_.add_gradient(full, action_weight_, g);
    tr_.add_hessian(full, action_weight_, trip);

    const double bw = mu * barrier_weight_;
    for (const auto& pr : pairs_) {
        const double slack = full[pr.hi] - full[pr.lo] - gmin_;
        const double d1 = bw / slack, d2 = bw / (slack * slack);
        g[pr.hi] -= d1;
        g[pr.lo] += d1;
        trip.emplace_back(static_cast<int>(pr.hi), static_cast<int>(pr.hi), d2);
        trip.emplace_back(static_cast<int>(pr.lo), static_cast<int>(pr.lo), d2);
        trip.emplace_back(static_cast<int>(pr.hi), static_cast<int>(pr.lo), -d2);
        trip.emplace_back(static_cast<int>(pr.lo), static_cast<int>(pr.hi), -d2);
    }
    if (endpoint_) {
        const int K = tr_.intervals();
        for (int i = 0; i <= tr_.n(); ++i) {
            const std::size_t j = tr_.index(K, i);
            g[j] += endpoint_->weight * endpoint_->df(full[j]);
            trip.emplace_back(static_cast<int>(j), static_cast<int>(j), endpoint_->weight * endpoint_->ddf(full[j]));
        }
    }

    grad.assign(free_.size(), 0.0);
    for (std::size_t f = 0; f < free_.size(); ++f)
        grad[f] = g[free_[f]];
    hess.clear();
    hess.reserve(trip.size() + free_.size());
    for (const auto& t : trip) {
        const int r = free_of_full_[t.row()], c = free_of_full_[t.col()];
        if (r >= 0 && c >= 0)
            hess.emplace_back(r, c, t.value());
    }
}

double PathProblem::max_step(std::span<const double> z, std::span<const double> dz) const
{
    const auto full = expand(z);
    auto dir = [&](std::size_t j) {
        const int f = free_of_full_[j];
        return f >= 0 ? dz[f] : 0.0;
    };
    double alpha = kInf;
    for (const auto& pr : pairs_) {
        const double dg = dir(pr.hi) - dir(pr.lo);
        if (dg < 0.0)
            alpha = std::min(alpha, (full[pr.hi] - full[pr.lo] - gmin_) / -dg);
    }
    return alpha;
}

// Fixes x_i(t_{k+1}) = x_i(t_k) wherever the term (k, i) is pinned at theta = 0
// by already-fixed gap entries (left rule only). Returns false if a pin
// contradicts an entry that was already fixed (the boundary data at t = 1).
bool propagate_pins(std::vector<double>& full, std::vector<bool>& fixed, const ActionTranscription& tr)
{
    const int n = tr.n(), K = tr.intervals();
    const auto& mob = tr.density().mobility();
    const RhoStarRule& rule = tr.rule();
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i <= n; ++i) {
            int j = i;
            if (i == n) {
                if (rule.kind != RhoStarKind::LookBack)
                    continue;
                j = n - 1;
            }
            const std::size_t lo = tr.index(k, j), hi = tr.index(k, j + 1);
            if (!fixed[lo] || !fixed[hi])
                continue;
            const double rho = std::min(1.0 / (n * (full[hi] - full[lo])), mob.max_density());
            if (mob.theta(rho) > 0.0)
                continue;
            const std::size_t from = tr.index(k, i), to = tr.index(k + 1, i);
            if (fixed[to]) {
                if (full[to] != full[from])
                    return false;
                continue;
            }
            full[to] = full[from];
            fixed[to] = true;
        }
    }
    return true;
}

bool make_interior(std::vector<double>& full, const std::vector<bool>& fixed, int n, int states, double gmin,
                   double margin)
{
    const std::size_t w = static_cast<std::size_t>(n) + 1;
    const double target = gmin * (1.0 + margin);
    for (int k = 0; k < states; ++k) {
        double* x = full.data() + k * w;
        const auto fx = [&](int i) { return static_cast<bool>(fixed[k * w + i]); };
        for (int i = 0; i < n; ++i)
            if (!fx(i + 1) && x[i + 1] - x[i] < target)
                x[i + 1] = x[i] + target;
        for (int i = n - 1; i >= 0; --i)
            if (!fx(i) && x[i + 1] - x[i] < target)
                x[i] = x[i + 1] - target;
        // A free run squeezed between two fixed entries: spread it evenly.
        for (int i = 0; i < n; ++i) {
            if ((fx(i) && fx(i + 1)) || x[i + 1] - x[i] > gmin)
                continue;
            int lo = i, hi = i + 1;
            while (lo > 0 && !fx(lo))
                --lo;
            while (hi < n && !fx(hi))
                ++hi;
            if (!fx(lo) || !fx(hi))
                return false;
            const double h = (x[hi] - x[lo]) / (hi - lo);
            if (!(h > gmin))
                return false;
            for (int j = lo + 1; j < hi; ++j)
                x[j] = x[lo] + (j - lo) * h;
        }
    }
    return true;
}

}  // namespace nlmob::detail
