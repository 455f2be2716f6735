#include "nlmob/jko.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "barrier_newton.hpp"
#include "nlmob/errors.hpp"
#include "nlmob/transcription.hpp"
#include "path_problem.hpp"

namespace nlmob {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_certificate(const GrowthCertificate& c)
{
    if (!(c.C >= 0.0) || !(c.D >= 0.0) || !std::isfinite(c.C) || !std::isfinite(c.D))
        throw DomainError("growth certificate: C and D must be finite and >= 0");
    if (!(c.s > 0.0 && c.s < 2.0))
        throw DomainError("growth certificate: s must lie in (0, 2)");
}

}  // namespace

EnergyFunctional EnergyFunctional::zero()
{
    EnergyFunctional e;
    e.name_ = "zero";
    e.zero_ = true;
    e.cert_ = {0.0, 0.0, 1.0};
    e.f_ = [](double) { return 0.0; };
    e.df_ = e.f_;
    e.ddf_ = e.f_;
    return e;
}

EnergyFunctional EnergyFunctional::linear(double slope)
{
    if (!std::isfinite(slope))
        throw DomainError("linear energy: slope must be finite");
    EnergyFunctional e;
    e.name_ = "linear";
    e.cert_ = {std::abs(slope), 0.0, 1.0};
    e.f_ = [slope](double x) { return slope * x; };
    e.df_ = [slope](double) { return slope; };
    e.ddf_ = [](double) { return 0.0; };
    return e;
}

EnergyFunctional EnergyFunctional::quadratic(double coef)
{
    if (!(coef >= 0.0) || !std::isfinite(coef))
        throw DomainError("quadratic energy: coefficient must be finite and >= 0");
    EnergyFunctional e;
    e.name_ = "quadratic";
    e.cert_ = {0.0, 0.0, 1.0};
    e.f_ = [coef](double x) { return 0.5 * coef * x * x; };
    e.df_ = [coef](double x) { return coef * x; };
    e.ddf_ = [coef](double) { return coef; };
    return e;
}

EnergyFunctional EnergyFunctional::table(std::vector<double> x, std::vector<double> f)
{
    if (x.size() < 2 || x.size() != f.size())
        throw DomainError("table energy: need at least two (x, f) nodes of equal count");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i + 1] > x[i]))
            throw DomainError("table energy: x nodes must be strictly increasing");
    for (double v : f)
        if (!std::isfinite(v))
            throw DomainError("table energy: values must be finite");

    std::vector<double> slope(x.size() - 1);
    for (std::size_t i = 0; i < slope.size(); ++i)
        slope[i] = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
    // Segment containing t, extended linearly past both ends.
    auto seg = [x](double t) {
        const auto it = std::upper_bound(x.begin() + 1, x.end() - 1, t);
        return static_cast<std::size_t>(it - x.begin()) - 1;
    };

    EnergyFunctional e;
    e.name_ = "table";
    e.f_ = [x, f, slope, seg](double t) {
        const auto i = seg(t);
        return f[i] + slope[i] * (t - x[i]);
    };
    e.df_ = [slope, seg](double t) { return slope[seg(t)]; };
    e.ddf_ = [](double) { return 0.0; };

    // |f(t)| <= |f(0)| + Lip |t|.
    double lip = 0.0;
    for (double s : slope)
        lip = std::max(lip, std::abs(s));
    e.cert_ = {lip, std::abs(e.f_(0.0)), 1.0};
    return e;
}

EnergyFunctional EnergyFunctional::with_certificate(GrowthCertificate cert) const
{
    auto e = with_certificate_unchecked(cert);
    if (!e.certificate_holds()) {
        std::ostringstream os;
        os << "growth certificate (C=" << cert.C << ", D=" << cert.D << ", s=" << cert.s
           << ") fails on the probe grid for energy '" << name_ << "'";
        throw DomainError(os.str());
    }
    return e;
}

EnergyFunctional EnergyFunctional::with_certificate_unchecked(GrowthCertificate cert) const
{
    validate_certificate(cert);
    EnergyFunctional e = *this;
    e.cert_ = cert;
    return e;
}

double EnergyFunctional::operator()(const ParticleConfig& cfg) const
{
    if (zero_)
        return 0.0;
    double s = 0.0;
    for (double x : cfg.positions())
        s += f_(x);
    return s / static_cast<double>(cfg.positions().size());
}

bool EnergyFunctional::certificate_holds(double radius, int points) const
{
    if (points < 2)
        throw DomainError("certificate_holds: need at least two probe points");
    for (int k = 0; k < points; ++k) {
        const double x = -radius + 2.0 * radius * k / (points - 1);
        const double neg = std::max(0.0, -f_(x));
        const double bound = cert_.C * std::pow(std::abs(x), cert_.s) + cert_.D;
        if (neg > bound * (1.0 + 1e-12) + 1e-12)
            return false;
    }
    return true;
}

namespace {

struct StepSetup {
    int n, K;
    double gmin, theta0, L, scale, gradient_scale;
};

StepSetup step_setup(const ParticleConfig& prev, const EnergyFunctional& F, double tau, const ActionDensity& density,
                     const SolverOptions& opt)
{
    StepSetup s;
    s.n = prev.n();
    s.K = opt.K;
    s.gmin = prev.gap_min();
    s.theta0 = density.mobility().theta_sup();
    // Displacement of a free explicit step, tau theta0 |f'|, sets the length scale.
    double ms = 0.0;
    for (double x : prev.positions())
        ms += F.df(x) * F.df(x);
    ms /= static_cast<double>(prev.positions().size());
    s.L = std::max(tau * s.theta0 * std::sqrt(ms), s.gmin);
    s.scale = s.L * s.L / (tau * s.theta0);
    s.gradient_scale = s.K * static_cast<double>(s.n + 1) * s.L / s.scale;
    return s;
}

void check_step_args(const ParticleConfig& prev, double tau, const ActionDensity& density, const SolverOptions& opt)
{
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw DomainError("jko_step: tau must be positive");
    if (density.p() != 2.0)
        throw DomainError("jko_step: only p = 2 is supported");
    if (opt.K < 1)
        throw DomainError("jko_step: K must be >= 1");
    if (std::abs(prev.max_density() - density.mobility().max_density()) > 1e-12 * prev.max_density())
        throw ConeViolation("jko_step: configuration cone and mobility have different M");
}

JkoStepResult make_result(const ParticleConfig& y, double energy, double cost, double tau, int iters, bool returned_prev)
{
    return JkoStepResult{y, energy, cost, energy + cost / (2.0 * tau), iters, returned_prev};
}

JkoStepResult joint_step(const ParticleConfig& prev, const EnergyFunctional& F, double tau,
                         const ActionDensity& density, const RhoStarRule& rule, const SolverOptions& opt)
{
    const StepSetup su = step_setup(prev, F, tau, density, opt);
    const int n = su.n, K = su.K;
    const std::size_t w = static_cast<std::size_t>(n) + 1;
    const double F_prev = F(prev);

    ActionTranscription tr(density, rule, n, K, opt.state_rule);
    std::vector<double> full;
    full.reserve(w * (K + 1));
    for (int k = 0; k <= K; ++k)
        full.insert(full.end(), prev.positions().begin(), prev.positions().end());
    std::vector<bool> fixed(full.size(), false);
    std::fill(fixed.begin(), fixed.begin() + static_cast<std::ptrdiff_t>(w), true);
    if (opt.state_rule == StateRule::Left && density.mobility().theta_at_max() == 0.0)
        detail::propagate_pins(full, fixed, tr);
    if (!detail::make_interior(full, fixed, n, K + 1, su.gmin, 1e-3))
        throw NonConvergenceWith<JkoStepResult>("jko_step: no strictly feasible starting path",
                                                make_result(prev, F_prev, 0.0, tau, 0, true));

    detail::EndpointPotential pot{[&F](double x) { return F.f(x); }, [&F](double x) { return F.df(x); },
                                  [&F](double x) { return F.ddf(x); }, 1.0 / static_cast<double>(w)};
    detail::PathProblem prob(tr, full, fixed, su.gmin, 1.0 / (2.0 * tau), 1.0 / ((n + 1.0) * K), &pot);

    detail::BarrierOptions bo;
    bo.max_outer = opt.max_outer;
    bo.barrier0 = opt.barrier0 * su.scale;
    bo.max_inner = opt.max_inner;
    bo.tol = opt.tol;
    bo.value_scale = su.scale;
    bo.gradient_scale = su.gradient_scale;

    auto z = prob.gather(full);
    const auto rep = detail::minimize_with_barrier(prob, z, bo);
    full = prob.expand(z);

    std::vector<double> y(full.end() - static_cast<std::ptrdiff_t>(w), full.end());
    const double cost = tr.value(full);
    ParticleConfig ycfg(std::move(y), prev.max_density());
    auto result = make_result(ycfg, F(ycfg), cost, tau, rep.iterations, false);
    if (!(result.J <= F_prev))
        result = make_result(prev, F_prev, 0.0, tau, rep.iterations, true);
    if (!rep.converged)
        throw NonConvergenceWith<JkoStepResult>(
            "jko_step: barrier subproblem stopped at scaled residual " + std::to_string(rep.residual), result);
    return result;
}

// Outer BFGS over the endpoint; each evaluation solves a geodesic and uses the
// envelope gradient d(d^2)/dy = gradient of the optimal path's action in its
// last state. Minimisers often sit on the cone boundary (congested cells), so
// the outer objective carries the same log barrier on the gaps of y as the
// joint problem, driven to zero on the same schedule.
JkoStepResult nested_step(const ParticleConfig& prev, const EnergyFunctional& F, double tau,
                          const ActionDensity& density, const RhoStarRule& rule, const JkoOptions& jopt)
{
    const SolverOptions& opt = jopt.solver;
    const StepSetup su = step_setup(prev, F, tau, density, opt);
    const int n = su.n, K = su.K;
    const auto w = static_cast<Eigen::Index>(n + 1);
    const double M = prev.max_density();
    const double F_prev = F(prev);
    const double bweight = 1.0 / ((n + 1.0) * K);
    ActionTranscription tr(density, rule, n, K, opt.state_rule);

    struct Eval {
        double J, cost, obj;
        Eigen::VectorXd g;
        std::optional<ParticlePath> path;
    };
    auto evaluate = [&](const Eigen::VectorXd& y, double mu, const std::optional<ParticlePath>& warm) -> Eval {
        Eval ev{kInf, kInf, kInf, Eigen::VectorXd::Zero(w), std::nullopt};
        double barrier = 0.0;
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(w);
        for (Eigen::Index i = 0; i + 1 < w; ++i) {
            const double slack = y[i + 1] - y[i] - su.gmin;
            if (!(slack > 0.0))
                return ev;
            barrier -= std::log(slack);
            gb[i] += 1.0 / slack;
            gb[i + 1] -= 1.0 / slack;
        }
        std::vector<double> yv(y.data(), y.data() + w);
        ParticleConfig ycfg(yv, M);
        GeodesicResult gr = [&] {
            try {
                return solve_geodesic(prev, ycfg, density, rule, opt, warm);
            } catch (const NonConvergenceWith<GeodesicResult>& e) {
                return e.best();
            }
        }();
        ev.cost = gr.distance * gr.distance;
        if (!std::isfinite(ev.cost))
            return ev;
        ev.J = F(ycfg) + ev.cost / (2.0 * tau);
        ev.obj = ev.J + mu * bweight * barrier;
        ev.path = gr.path;
        const auto ga = tr.gradient(gr.path.flat());
        for (Eigen::Index i = 0; i < w; ++i)
            ev.g[i] = ga[tr.index(K, static_cast<int>(i))] / (2.0 * tau) + F.df(yv[i]) / static_cast<double>(w) +
                      mu * bweight * gb[i];
        return ev;
    };
    auto max_step = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& d) {
        double a = kInf;
        for (Eigen::Index i = 0; i + 1 < w; ++i) {
            const double dg = d[i + 1] - d[i];
            if (dg < 0.0)
                a = std::min(a, (y[i + 1] - y[i] - su.gmin) / -dg);
        }
        return a;
    };

    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(prev.positions().data(), w);
    // Start strictly inside the cone.
    {
        std::vector<double> yv(y.data(), y.data() + w);
        std::vector<bool> fixed(yv.size(), false);
        detail::make_interior(yv, fixed, n, 1, su.gmin, 1e-3);
        y = Eigen::Map<const Eigen::VectorXd>(yv.data(), w);
    }
    const double H0 = tau * su.theta0 * static_cast<double>(w);
    // Relative to the typical size scale / (L (N+1)) of a gradient entry; the
    // inner solves put a floor under how small the envelope gradient can get.
    const double gtol = jopt.nested_tol * su.scale / (su.L * static_cast<double>(w));
    double mu = opt.barrier0 * su.scale;
    int iters = 0;
    bool converged = false;
    Eval cur = evaluate(y, mu, std::nullopt);
    for (int outer = 0; outer < opt.max_outer; ++outer, mu *= 0.1) {
        cur = evaluate(y, mu, cur.path);
        Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(w, w) * H0;
        converged = false;
        for (int it = 0; it < jopt.nested_max_iter; ++it, ++iters) {
            if (cur.g.lpNorm<Eigen::Infinity>() <= gtol) {
                converged = true;
                break;
            }
            Eigen::VectorXd d = -Hinv * cur.g;
            double slope = cur.g.dot(d);
            if (!(slope < 0.0)) {
                Hinv = Eigen::MatrixXd::Identity(w, w) * H0;
                d = -Hinv * cur.g;
                slope = cur.g.dot(d);
            }
            // Predicted decrease below what the inner solves resolve: take the
            // step if it does not hurt and stop.
            if (-0.5 * slope <= opt.tol * su.scale) {
                const Eigen::VectorXd ynew = y + std::min(1.0, 0.995 * max_step(y, d)) * d;
                Eval next = evaluate(ynew, mu, cur.path);
                if (next.obj <= cur.obj) {
                    y = ynew;
                    cur = std::move(next);
                }
                converged = true;
                break;
            }
            double alpha = std::min(1.0, 0.995 * max_step(y, d));
            Eval next{kInf, kInf, kInf, {}, std::nullopt};
            Eigen::VectorXd ynew;
            bool accepted = false;
            for (int ls = 0; ls < 60 && !accepted; ++ls) {
                ynew = y + alpha * d;
                next = evaluate(ynew, mu, cur.path);
                accepted = next.obj <= cur.obj + 1e-4 * alpha * slope;
                if (!accepted)
                    alpha *= 0.5;
            }
            if (!accepted) {
                // No representable decrease: stationary to working precision.
                converged = -slope <= 1e3 * opt.tol * su.scale;
                break;
            }
            const Eigen::VectorXd s = ynew - y, yk = next.g - cur.g;
            const double sy = s.dot(yk);
            if (sy > 1e-300) {
                const Eigen::VectorXd Hy = Hinv * yk;
                const double r = 1.0 / sy;
                Hinv += (1.0 + r * yk.dot(Hy)) * r * (s * s.transpose()) -
                        r * (Hy * s.transpose() + s * Hy.transpose());
            }
            y = ynew;
            cur = std::move(next);
        }
    }

    std::vector<double> yv(y.data(), y.data() + w);
    ParticleConfig ycfg(std::move(yv), M);
    auto result = make_result(ycfg, F(ycfg), cur.cost, tau, iters, false);
    if (!(result.J <= F_prev))
        result = make_result(prev, F_prev, 0.0, tau, iters, true);
    if (!converged)
        throw NonConvergenceWith<JkoStepResult>("jko_step: nested outer iteration did not converge", result);
    return result;
}

}  // namespace

JkoStepResult jko_step(const ParticleConfig& prev, const EnergyFunctional& F, double tau, const ActionDensity& density,
                       const RhoStarRule& rule, const JkoOptions& options)
{
    check_step_args(prev, tau, density, options.solver);
    if (F.is_zero())
        return make_result(prev, 0.0, 0.0, tau, 0, true);
    return options.nested ? nested_step(prev, F, tau, density, rule, options)
                          : joint_step(prev, F, tau, density, rule, options.solver);
}

JkoTrajectory jko_run(const ParticleConfig& init, const EnergyFunctional& F, double tau, int n_steps,
                      const ActionDensity& density, const RhoStarRule& rule, const JkoOptions& options)
{
    if (n_steps < 0)
        throw DomainError("jko_run: n_steps must be >= 0");
    check_step_args(init, tau, density, options.solver);
    JkoTrajectory traj{tau, {}, to_string(density.mobility().kind()), rule, options, F.certificate(),
                       density.mobility().theta_sup(), {}};
    const double F0 = F(init);
    traj.steps.push_back({init, F0, 0.0, F0});
    for (int s = 0; s < n_steps; ++s) {
        try {
            const auto r = jko_step(traj.steps.back().config, F, tau, density, rule, options);
            traj.steps.push_back({r.config, r.energy, r.transport_cost, r.J});
        } catch (const NonConvergence& e) {
            traj.failure = "step " + std::to_string(s + 1) + ": " + e.what();
            break;
        }
    }
    return traj;
}

bool descent_holds(const JkoTrajectory& traj, double rel_tol)
{
    for (std::size_t n = 1; n < traj.steps.size(); ++n) {
        const double prevF = traj.steps[n - 1].energy;
        const double J = traj.steps[n].energy + traj.steps[n].transport_cost / (2.0 * traj.tau);
        if (!(J <= prevF + rel_tol * (1.0 + std::abs(prevF))))
            return false;
    }
    return true;
}

namespace {

double second_moment(const ParticleConfig& cfg)
{
    double s = 0.0;
    for (double x : cfg.positions())
        s += x * x;
    return s / static_cast<double>(cfg.positions().size());
}

}  // namespace

MomentBound second_moment_bound(const JkoTrajectory& traj, const GrowthCertificate& cert, double theta_sup)
{
    validate_certificate(cert);
    if (!(theta_sup > 0.0))
        throw DomainError("second_moment_bound: theta_sup must be positive");
    const double a = 1.0 / (2.0 * traj.tau * theta_sup);
    const double c = a / 4.0;
    // max_t C t^{s/2} - c t, attained at t* = (C s / (2c))^{2/(2-s)}.
    double extra = 0.0;
    if (cert.C > 0.0) {
        const double ts = std::pow(cert.C * cert.s / (2.0 * c), 2.0 / (2.0 - cert.s));
        extra = std::max(0.0, cert.C * std::pow(ts, cert.s / 2.0) - c * ts);
    }
    MomentBound mb{c, cert.D + extra, {}, {}, true};
    for (std::size_t n = 0; n < traj.steps.size(); ++n) {
        mb.moments.push_back(second_moment(traj.steps[n].config));
        if (n == 0) {
            mb.bounds.push_back(mb.moments[0]);
            continue;
        }
        const double bound = (traj.steps[n - 1].energy + a * mb.moments[n - 1] + mb.D_prime) / c;
        mb.bounds.push_back(bound);
        if (!(mb.moments[n] <= bound + 1e-10 * (1.0 + std::abs(bound))))
            mb.holds = false;
    }
    return mb;
}

bool second_moment_bound_check(const JkoTrajectory& traj)
{
    return second_moment_bound(traj, traj.certificate, traj.theta_sup).holds;
}

bool second_moment_bound_check(const JkoTrajectory& traj, const GrowthCertificate& cert, double theta_sup)
{
    return second_moment_bound(traj, cert, theta_sup).holds;
}

JkoStudyReport jko_convergence_study(const JkoStudyConfig& cfg)
{
    if (!(cfg.q >= 1.0 && cfg.q < 2.0))
        throw DomainError("jko_convergence_study: q must lie in [1, 2)");
    if (cfg.N_list.empty())
        throw DomainError("jko_convergence_study: N_list is empty");
    for (std::size_t i = 0; i < cfg.N_list.size(); ++i) {
        if (cfg.N_list[i] < 1 || (i > 0 && cfg.N_list[i] <= cfg.N_list[i - 1]))
            throw DomainError("jko_convergence_study: N_list must be positive and strictly increasing");
    }
    if (cfg.n_steps < 0)
        throw DomainError("jko_convergence_study: n_steps must be >= 0");

    const std::size_t runs = cfg.N_list.size();
    std::vector<std::optional<JkoTrajectory>> trajs(runs);
    std::vector<std::string> errors(runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < runs; j = next++) {
            try {
                const auto init = sample_from_quantile(cfg.mu0, cfg.N_list[j], cfg.density.mobility());
                trajs[j] = jko_run(init, cfg.F, cfg.tau, cfg.n_steps, cfg.density, cfg.rule, cfg.options);
            } catch (const std::exception& e) {
                errors[j] = e.what();
            }
        }
    };
    const int nt = std::clamp(cfg.threads, 1, static_cast<int>(runs));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();

    JkoStudyReport rep{cfg.N_list, cfg.q, {}, {}, true};
    for (std::size_t j = 0; j < runs; ++j) {
        const std::string tag = "N=" + std::to_string(cfg.N_list[j]) + ": ";
        if (!errors[j].empty())
            rep.failures.push_back(tag + errors[j]);
        else if (!trajs[j]->complete())
            rep.failures.push_back(tag + trajs[j]->failure);
    }

    auto steps_of = [&](std::size_t j) { return trajs[j] ? trajs[j]->steps.size() : std::size_t{0}; };
    const std::size_t ref = runs - 1;
    for (std::size_t j = 0; j < runs; ++j) {
        for (std::size_t n = 0; n < steps_of(j); ++n) {
            const auto& st = trajs[j]->steps[n];
            const auto mu = embed_empirical(st.config);
            const double to_ref = n < steps_of(ref) ? wasserstein_p(mu, embed_empirical(trajs[ref]->steps[n].config), cfg.q) : kNaN;
            const double to_next = j + 1 < runs && n < steps_of(j + 1)
                                       ? wasserstein_p(mu, embed_empirical(trajs[j + 1]->steps[n].config), cfg.q)
                                       : kNaN;
            rep.records.push_back({cfg.N_list[j], static_cast<int>(n), st.J, st.energy,
                                   std::sqrt(std::max(0.0, st.transport_cost)), second_moment(st.config), to_ref,
                                   to_next});
        }
    }

    rep.monotone = rep.failures.empty();
    for (int n = 0; n <= cfg.n_steps && rep.monotone; ++n) {
        double last = kInf;
        for (const auto& r : rep.records) {
            if (r.n != n)
                continue;
            if (!(r.wq_to_ref <= last + cfg.noise_band)) {
                rep.monotone = false;
                break;
            }
            last = r.wq_to_ref;
        }
    }
    return rep;
}

}  // namespace nlmob
