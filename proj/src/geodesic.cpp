#include "nlmob/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "barrier_newton.hpp"
#include "nlmob/errors.hpp"
#include "nlmob/transcription.hpp"
#include "path_problem.hpp"

namespace nlmob {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<ParticleConfig> rows_to_configs(std::span<const double> states, int n, double max_density)
{
    const std::size_t w = static_cast<std::size_t>(n) + 1;
    if (states.size() % w != 0 || states.size() < 2 * w)
        throw DomainError("path: state vector size is not a multiple of N+1 with at least two states");
    std::vector<ParticleConfig> out;
    out.reserve(states.size() / w);
    for (std::size_t off = 0; off < states.size(); off += w)
        out.emplace_back(std::vector<double>(states.begin() + off, states.begin() + off + w), max_density);
    return out;
}

}  // namespace

ParticlePath::ParticlePath(std::vector<ParticleConfig> states) : states_(std::move(states))
{
    if (states_.size() < 2)
        throw DomainError("path: need at least two states");
    for (const auto& s : states_)
        if (s.n() != states_.front().n())
            throw DomainError("path: states have different particle counts");
}

ParticlePath ParticlePath::from_flat(std::span<const double> states, int n, double max_density)
{
    return ParticlePath(rows_to_configs(states, n, max_density));
}

ParticlePath ParticlePath::straight_line(const ParticleConfig& a, const ParticleConfig& b, int intervals)
{
    if (a.n() != b.n())
        throw ConeViolation("straight_line: endpoints have different N");
    if (intervals < 1)
        throw DomainError("straight_line: K must be >= 1");
    std::vector<ParticleConfig> st;
    st.reserve(intervals + 1);
    st.push_back(a);
    for (int k = 1; k < intervals; ++k) {
        const double t = static_cast<double>(k) / intervals;
        std::vector<double> x(a.positions().size());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = (1.0 - t) * a[i] + t * b[i];
        st.emplace_back(std::move(x), a.max_density());
    }
    st.push_back(b);
    return ParticlePath(std::move(st));
}

std::vector<double> ParticlePath::velocity(int k) const
{
    const auto& x0 = states_.at(k);
    const auto& x1 = states_.at(k + 1);
    std::vector<double> v(x0.positions().size());
    const double inv = intervals();
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = (x1[i] - x0[i]) * inv;
    return v;
}

std::vector<double> ParticlePath::flat() const
{
    std::vector<double> out;
    out.reserve(states_.size() * states_.front().positions().size());
    for (const auto& s : states_)
        out.insert(out.end(), s.positions().begin(), s.positions().end());
    return out;
}

double discrete_action(const ParticleConfig& cfg, std::span<const double> v, const ActionDensity& density,
                       const RhoStarRule& rule)
{
    if (v.size() != cfg.positions().size())
        throw DomainError("discrete_action: velocity has wrong length");
    const auto R = reconstruct_density(cfg, rule);
    double s = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i)
        s += particle_action(density, R[i], v[i]);
    return s / static_cast<double>(R.size());
}

double discrete_action_via_phi(const ParticleConfig& cfg, std::span<const double> v,
                               const ActionDensity& density, const RhoStarRule& rule)
{
    if (v.size() != cfg.positions().size())
        throw DomainError("discrete_action: velocity has wrong length");
    const auto R = reconstruct_density(cfg, rule);
    const double p = density.p();
    double s = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
        if (R[i] == 0.0) {
            // R^{p-1} phi(R, v) -> |v|^p / theta(0)^{p-1} as R -> 0.
            s += std::pow(std::abs(v[i]), p) / std::pow(density.mobility().theta(0.0), p - 1.0);
            continue;
        }
        const double term = phi(density, R[i], v[i]);
        s += std::isinf(term) ? term : std::pow(R[i], p - 1.0) * term;
    }
    return s / static_cast<double>(R.size());
}

double path_action(const ParticlePath& path, const ActionDensity& density, const RhoStarRule& rule, StateRule state_rule)
{
    const ActionTranscription tr(density, rule, path.n(), path.intervals(), state_rule);
    return tr.value(path.flat());
}

namespace {

std::vector<double> stage_schedule(const ActionDensity& density, const SolverOptions& opt)
{
    if (!opt.continuation || density.mobility().theta_at_max() > 0.0)
        return {1.0};
    std::vector<double> lam;
    for (double l : {1.5, 1.2, 1.05, 1.0 + opt.lambda_floor})
        if (l > 1.0 && (lam.empty() || l < lam.back()))
            lam.push_back(l);
    lam.push_back(1.0);
    return lam;
}

GeodesicResult constant_result(const ParticleConfig& a, int K)
{
    SolverReport rep;
    rep.lambda_schedule = {1.0};
    rep.stage_distances = {0.0};
    return GeodesicResult{ParticlePath(std::vector<ParticleConfig>(K + 1, a)), 0.0, std::vector<double>(K, 0.0),
                          rep, 0.0, 0.0};
}

}  // namespace

GeodesicResult solve_geodesic(const ParticleConfig& a, const ParticleConfig& b, const ActionDensity& density,
                              const RhoStarRule& rule, const SolverOptions& opt,
                              const std::optional<ParticlePath>& warm_start)
{
    if (a.n() != b.n())
        throw ConeViolation("solve_geodesic: endpoints have different N (" + std::to_string(a.n()) + " vs " +
                            std::to_string(b.n()) + ")");
    if (a.max_density() != b.max_density())
        throw ConeViolation("solve_geodesic: endpoints live in cones with different M");
    if (opt.K < 1)
        throw DomainError("solve_geodesic: K must be >= 1");
    const int n = a.n(), K = opt.K;
    const double p = density.p();
    if (a.positions() == b.positions())
        return constant_result(a, K);

    const double gmin = a.gap_min();
    const double w_p = wasserstein_p(embed_empirical(a), embed_empirical(b), p);
    const double theta0 = density.mobility().theta_sup();
    const double lower_action = std::pow(w_p, p) / std::pow(theta0, p - 1.0);
    const double lower = std::pow(lower_action, 1.0 / p);

    const ActionTranscription tr_true(density, rule, n, K, opt.state_rule);
    const ParticlePath line = ParticlePath::straight_line(a, b, K);
    const auto line_flat = line.flat();
    const double upper_action = tr_true.value(line_flat);
    const double upper = std::pow(upper_action, 1.0 / p);

    std::vector<double> full;
    if (warm_start) {
        if (warm_start->intervals() != K || warm_start->n() != n)
            throw DomainError("solve_geodesic: warm start has the wrong shape");
        full = warm_start->flat();
        std::copy(a.positions().begin(), a.positions().end(), full.begin());
        std::copy(b.positions().begin(), b.positions().end(), full.end() - (n + 1));
    } else {
        full = line_flat;
    }

    const std::size_t w = static_cast<std::size_t>(n) + 1;
    const double scale = lower_action > 0.0 ? lower_action : 1.0;
    detail::BarrierOptions bo;
    bo.max_outer = opt.max_outer;
    bo.barrier0 = opt.barrier0 * scale;
    bo.max_inner = opt.max_inner;
    bo.tol = opt.tol;
    bo.value_scale = scale;
    bo.gradient_scale = K * static_cast<double>(n + 1) * std::max(w_p, gmin) / scale;

    SolverReport report;
    report.lambda_schedule = stage_schedule(density, opt);
    detail::BarrierReport last{};
    bool infeasible = false;
    for (std::size_t s = 0; s < report.lambda_schedule.size(); ++s) {
        const double lam = report.lambda_schedule[s];
        const ActionDensity dens = lam > 1.0 ? density.with_mobility(density.mobility().dilate(lam)) : density;
        ActionTranscription tr(dens, rule, n, K, opt.state_rule);

        std::vector<bool> fixed(full.size(), false);
        for (std::size_t i = 0; i < w; ++i) {
            fixed[i] = true;
            fixed[full.size() - w + i] = true;
        }
        if (opt.state_rule == StateRule::Left && dens.mobility().theta_at_max() == 0.0 && !detail::propagate_pins(full, fixed, tr)) {
            infeasible = true;
            break;
        }
        const double margin = s == 0 && !warm_start ? 1e-3 : 1e-6;
        if (!detail::make_interior(full, fixed, n, K + 1, gmin, margin))
            throw NonConvergence("solve_geodesic: no strictly feasible path compatible with the jammed cells");

        detail::PathProblem prob(tr, full, fixed, gmin, 1.0, 1.0 / ((n + 1.0) * K));
        auto z = prob.gather(full);
        last = detail::minimize_with_barrier(prob, z, bo);
        full = prob.expand(z);
        report.iterations += last.iterations;
        report.stage_distances.push_back(std::pow(tr.value(full), 1.0 / p));
    }

    if (infeasible) {
        // Under the left rule a jammed block that cannot dissolve within K
        // intervals forces infinite action.
        report.converged = true;
        report.returned_initializer = true;
        return GeodesicResult{line, kInf, tr_true.interval_actions(line_flat), report, lower, upper};
    }

    report.kkt_residual = last.residual;
    report.barrier_final = last.mu;
    report.converged = last.converged;

    double action = tr_true.value(full);
    if (std::isfinite(upper_action) && !(action <= upper_action)) {
        full = line_flat;
        action = upper_action;
        report.returned_initializer = true;
    }
    GeodesicResult result{ParticlePath::from_flat(full, n, a.max_density()), std::pow(action, 1.0 / p),
                          tr_true.interval_actions(full), report, lower, upper};
    if (!report.converged)
        throw NonConvergenceWith<GeodesicResult>(
            "solve_geodesic: barrier subproblem stopped at scaled residual " + std::to_string(last.residual),
            std::move(result));
    return result;
}

std::optional<ParticleConfig> decode_empirical(const Measure1D& mu, double max_density)
{
    const auto* e = std::get_if<Measure1D::Empirical>(&mu.repr());
    if (!e || e->atoms.size() < 2)
        return std::nullopt;
    try {
        return ParticleConfig(e->atoms, max_density);
    } catch (const ConeViolation&) {
        return std::nullopt;
    }
}

std::optional<ParticleConfig> decode_piecewise(const Measure1D& mu, double max_density)
{
    std::vector<double> x;
    if (const auto* u = std::get_if<Measure1D::Uniform>(&mu.repr())) {
        x = {u->a, u->b};
    } else if (const auto* pc = std::get_if<Measure1D::PiecewiseConstant>(&mu.repr())) {
        const std::size_t cells = pc->heights.size();
        for (std::size_t i = 0; i < cells; ++i) {
            const double mass = pc->heights[i] * (pc->breaks[i + 1] - pc->breaks[i]);
            if (std::abs(mass * cells - 1.0) > 1e-9)
                return std::nullopt;
        }
        x = pc->breaks;
    } else {
        return std::nullopt;
    }
    try {
        return ParticleConfig(std::move(x), max_density);
    } catch (const ConeViolation&) {
        return std::nullopt;
    }
}

double embedded_distance(const Measure1D& mu0, const Measure1D& mu1, const ActionDensity& density,
                         const RhoStarRule& rule, const SolverOptions& options)
{
    const double M = density.mobility().max_density();
    auto a = decode_empirical(mu0, M), b = decode_empirical(mu1, M);
    if (!a || !b) {
        a = decode_piecewise(mu0, M);
        b = decode_piecewise(mu1, M);
    }
    if (!a || !b || a->n() != b->n())
        return kInf;
    try {
        return solve_geodesic(*a, *b, density, rule, options).distance;
    } catch (const NonConvergenceWith<GeodesicResult>& e) {
        return e.best().distance;
    }
}

bool check_constant_speed(const GeodesicResult& result, double tol)
{
    const auto& prof = result.action_profile;
    if (prof.empty())
        return true;
    double mean = 0.0;
    for (double v : prof)
        mean += v;
    mean /= static_cast<double>(prof.size());
    if (!std::isfinite(mean))
        return false;
    if (mean == 0.0)
        return std::all_of(prof.begin(), prof.end(), [](double v) { return v == 0.0; });
    double dev = 0.0;
    for (double v : prof)
        dev = std::max(dev, std::abs(v - mean));
    return dev / mean <= tol;
}

double continuous_action_of_reconstruction(const ParticleConfig& cfg, std::span<const double> v,
                                           const ActionDensity& density)
{
    const int n = cfg.n();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double len = cfg.gap(i);
        const double R = 1.0 / (n * len);
        // PC^N and j^N are constant on the cell, so the integral is exact.
        total += len * phi(density, R, v[i] * R);
    }
    return total;
}

bool action_comparison_check(const ParticlePath& path, const ActionDensity& density, const RhoStarRule& rule)
{
    const int n = path.n();
    for (int k = 0; k < path.intervals(); ++k) {
        const auto v = path.velocity(k);
        const double cont = continuous_action_of_reconstruction(path.state(k), v, density);
        const double disc = discrete_action(path.state(k), v, density, rule);
        const double rhs = (n + 1.0) / n * disc;
        if (std::isinf(rhs))
            continue;
        if (!(cont <= rhs * (1.0 + 1e-12)))
            return false;
    }
    return true;
}

bool distance_lower_bound_check(const ParticleConfig& a, const ParticleConfig& b, const ActionDensity& density,
                                const RhoStarRule& rule, const SolverOptions& options, double tol)
{
    const double p = density.p();
    double d;
    try {
        d = solve_geodesic(a, b, density, rule, options).distance;
    } catch (const NonConvergenceWith<GeodesicResult>& e) {
        d = e.best().distance;
    }
    const double w = wasserstein_p(embed_empirical(a), embed_empirical(b), p);
    const double bound = std::pow(w, p) / std::pow(density.mobility().theta_sup(), p - 1.0);
    return std::pow(d, p) >= bound - tol;
}

}  // namespace nlmob
