#include "nlmob/ftl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlmob/errors.hpp"

namespace nlmob {

VelocityLaw VelocityLaw::traffic(double max_density)
{
    if (!(max_density > 0.0) || !std::isfinite(max_density))
        throw DomainError("traffic law: M must be positive");
    VelocityLaw v;
    v.kind_ = Kind::Traffic;
    v.name_ = "traffic";
    v.M_ = max_density;
    v.argmax_ = 0.0;
    return v;
}

VelocityLaw VelocityLaw::constant(double c, double max_density)
{
    if (!std::isfinite(c) || !(max_density > 0.0) || !std::isfinite(max_density))
        throw DomainError("constant law: c must be finite and M positive");
    VelocityLaw v;
    v.kind_ = Kind::Constant;
    v.name_ = "constant";
    v.M_ = max_density;
    v.c_ = c;
    v.argmax_ = 0.0;
    return v;
}

VelocityLaw VelocityLaw::table(std::vector<double> rho, std::vector<double> vel)
{
    if (rho.size() < 2 || rho.size() != vel.size())
        throw DomainError("velocity table: need at least two (rho, v) nodes of equal count");
    if (rho.front() != 0.0)
        throw DomainError("velocity table: first node must be at rho = 0");
    for (std::size_t i = 0; i + 1 < rho.size(); ++i)
        if (!(rho[i + 1] > rho[i]))
            throw DomainError("velocity table: rho must be strictly increasing");
    for (double x : vel)
        if (!std::isfinite(x))
            throw DomainError("velocity table: values must be finite");
    VelocityLaw v;
    v.kind_ = Kind::Table;
    v.name_ = "table";
    v.M_ = rho.back();
    // Piecewise linear: the maximum sits on a node.
    const auto best = std::max_element(vel.begin(), vel.end());
    v.argmax_ = rho[static_cast<std::size_t>(best - vel.begin())];
    v.rho_ = std::make_shared<const std::vector<double>>(std::move(rho));
    v.v_ = std::make_shared<const std::vector<double>>(std::move(vel));
    return v;
}

double VelocityLaw::operator()(double rho) const
{
    switch (kind_) {
    case Kind::Traffic:
        return 1.0 - rho / M_;
    case Kind::Constant:
        return c_;
    case Kind::Table: {
        const auto& r = *rho_;
        const auto& v = *v_;
        if (rho <= 0.0)
            return v.front();
        if (rho >= r.back())
            return v.back();
        const auto i = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), rho) - r.begin()) - 1;
        const double s = (rho - r[i]) / (r[i + 1] - r[i]);
        return v[i] + s * (v[i + 1] - v[i]);
    }
    }
    return 0.0;
}

namespace {

bool strictly_ordered(const std::vector<double>& x)
{
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i + 1] > x[i]))
            return false;
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void require_ordered(const std::vector<double>& x)
{
    if (x.size() < 2)
        throw DomainError("ftl: need at least two particles");
    if (!strictly_ordered(x))
        throw ConeViolation("ftl: particles are not strictly ordered");
}

}  // namespace

std::vector<double> ftl_densities(const std::vector<double>& x, const VelocityLaw& law, RhoStarKind rule)
{
    require_ordered(x);
    const std::size_t n = x.size() - 1;
    std::vector<double> R(x.size());
    for (std::size_t j = 0; j < n; ++j)
        R[j] = 1.0 / (static_cast<double>(n) * (x[j + 1] - x[j]));
    R[n] = rule == RhoStarKind::LookBack ? R[n - 1] : law.argmax();
    return R;
}

std::vector<double> ftl_rhs(const FtlState& state, const VelocityLaw& law, RhoStarKind rule)
{
    auto R = ftl_densities(state.x, law, rule);
    for (double& r : R)
        r = law(r);
    return R;
}

std::vector<FtlState> ftl_integrate(const FtlState& init, const VelocityLaw& law, RhoStarKind rule, double t_end,
                                    double dt)
{
    require_ordered(init.x);
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw DomainError("ftl_integrate: dt must be positive");
    if (!(t_end >= init.t) || !std::isfinite(t_end))
        throw DomainError("ftl_integrate: t_end must not precede the initial time");

    const std::size_t m = init.x.size();
    const double floor = 1e-12 * std::max(std::abs(t_end), 1e-300);
    std::vector<FtlState> out{init};
    std::vector<double> x = init.x, stage(m);
    double t = init.t, h = dt;

    // One RK4 step; false if any stage or the result leaves the ordered set.
    auto rk4 = [&](double step, std::vector<double>& result) {
        auto eval = [&](const std::vector<double>& y, std::vector<double>& k) {
            if (!strictly_ordered(y))
                return false;
            k = ftl_rhs({0.0, y}, law, rule);
            return true;
        };
        std::vector<double> k1, k2, k3, k4;
        if (!eval(x, k1))
            return false;
        for (std::size_t i = 0; i < m; ++i)
            stage[i] = x[i] + 0.5 * step * k1[i];
        if (!eval(stage, k2))
            return false;
        for (std::size_t i = 0; i < m; ++i)
            stage[i] = x[i] + 0.5 * step * k2[i];
        if (!eval(stage, k3))
            return false;
        for (std::size_t i = 0; i < m; ++i)
            stage[i] = x[i] + step * k3[i];
        if (!eval(stage, k4))
            return false;
        result.resize(m);
        for (std::size_t i = 0; i < m; ++i)
            result[i] = x[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        return strictly_ordered(result);
    };

    std::vector<double> next;
    while (t < t_end) {
        const bool last = t + h >= t_end - 1e-14 * std::max(1.0, std::abs(t_end));
        const double step = last ? t_end - t : h;
        if (rk4(step, next)) {
            x.swap(next);
            t = last ? t_end : t + step;
            out.push_back({t, x});
            h = std::min(dt, 2.0 * h);
            continue;
        }
        h = 0.5 * std::min(h, step);
        if (h < floor) {
            std::ostringstream os;
            os << "ftl_integrate: step fell below 1e-12 t_end at t = " << t;
            throw StepFailure(os.str());
        }
    }
    return out;
}

bool ftl_maximum_principle(const std::vector<FtlState>& traj, const VelocityLaw& law, double slack)
{
    if (traj.empty())
        return true;
    auto max_R = [](const std::vector<double>& x) {
        const double n = static_cast<double>(x.size() - 1);
        double r = 0.0;
        for (std::size_t j = 0; j + 1 < x.size(); ++j)
            r = std::max(r, 1.0 / (n * (x[j + 1] - x[j])));
        return r;
    };
    const double cap = std::max(max_R(traj.front().x), law.max_density()) + slack;
    return std::all_of(traj.begin(), traj.end(), [&](const FtlState& s) { return max_R(s.x) <= cap; });
}

double traffic_riemann_solution(double rho_L, double rho_R, double M, double x, double t)
{
    if (!(M > 0.0) || !(rho_L >= 0.0 && rho_L <= M) || !(rho_R >= 0.0 && rho_R <= M))
        throw DomainError("traffic_riemann_solution: states must lie in [0, M]");
    if (t <= 0.0 || rho_L == rho_R)
        return x < 0.0 ? rho_L : rho_R;
    if (rho_L < rho_R) {
        const double s = 1.0 - (rho_L + rho_R) / M;
        return x < s * t ? rho_L : rho_R;
    }
    // Characteristic speed f'(rho) = 1 - 2 rho / M.
    const double xi = x / t;
    if (xi <= 1.0 - 2.0 * rho_L / M)
        return rho_L;
    if (xi >= 1.0 - 2.0 * rho_R / M)
        return rho_R;
    return 0.5 * M * (1.0 - xi);
}

double piecewise_density_at(const std::vector<double>& x, double at)
{
    if (x.size() < 2 || at < x.front() || at >= x.back())
        return 0.0;
    const auto j = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), at) - x.begin()) - 1;
    return 1.0 / (static_cast<double>(x.size() - 1) * (x[j + 1] - x[j]));
}

namespace {

// Breakpoints of the exact Riemann profile at time t.
std::vector<double> riemann_breaks(double rho_L, double rho_R, double M, double t)
{
    if (t <= 0.0 || rho_L == rho_R)
        return {0.0};
    if (rho_L < rho_R)
        return {(1.0 - (rho_L + rho_R) / M) * t};
    return {(1.0 - 2.0 * rho_L / M) * t, (1.0 - 2.0 * rho_R / M) * t};
}

// int_a^b |g| for g affine with g(a) = ga, g(b) = gb.
double abs_affine_integral(double a, double b, double ga, double gb)
{
    const double len = b - a;
    if (ga * gb >= 0.0)
        return 0.5 * len * (std::abs(ga) + std::abs(gb));
    const double c = len * ga / (ga - gb);
    return 0.5 * (c * std::abs(ga) + (len - c) * std::abs(gb));
}

}  // namespace

FtlEntropyReport ftl_entropy_report(double rho_L, double rho_R, const VelocityLaw& law, int N, double t,
                                    RhoStarKind rule, double dt)
{
    if (!law.is_traffic())
        throw DomainError("ftl_vs_entropy: the exact oracle covers the traffic law only");
    const double M = law.max_density();
    if (!(rho_L >= 0.0 && rho_L <= M && rho_R >= 0.0 && rho_R <= M) || !(rho_L + rho_R > 0.0))
        throw DomainError("ftl_vs_entropy: need 0 <= rho_L, rho_R <= M, not both zero");
    if (N < 1)
        throw DomainError("ftl_vs_entropy: N must be >= 1");
    const double w = 1.0 / (rho_L + rho_R);
    if (!(t >= 0.0 && t < w))
        throw DomainError("ftl_vs_entropy: t must lie in [0, window half-width)");

    std::vector<double> breaks{-w}, heights;
    if (rho_L > 0.0) {
        breaks.push_back(0.0);
        heights.push_back(rho_L);
    }
    if (rho_R > 0.0) {
        breaks.push_back(w);
        heights.push_back(rho_R);
    }
    // An empty half of the window carries no particles.
    if (rho_L == 0.0)
        breaks.front() = 0.0;
    const auto mu = Measure1D::piecewise_constant(breaks, heights);
    const auto init = sample_from_quantile(mu, N, Mobility::logistic(M));
    if (dt <= 0.0)
        dt = 0.1 / N;
    const auto traj = ftl_integrate({0.0, init.positions()}, law, rule, t, dt);
    const auto& x = traj.back().x;

    const double lo = -w + t, hi = w - t;
    std::vector<double> pts{lo, hi};
    for (double p : x)
        if (p > lo && p < hi)
            pts.push_back(p);
    for (double p : riemann_breaks(rho_L, rho_R, M, t))
        if (p > lo && p < hi)
            pts.push_back(p);
    std::sort(pts.begin(), pts.end());

    // Both profiles are affine on each piece: evaluate just inside the ends.
    double err = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = pts[k], b = pts[k + 1];
        if (!(b > a))
            continue;
        const double mid = 0.5 * (a + b);
        const double rf = piecewise_density_at(x, mid);
        const double eps = 1e-12 * (b - a);
        const double ea = traffic_riemann_solution(rho_L, rho_R, M, a + eps, t);
        const double eb = traffic_riemann_solution(rho_L, rho_R, M, b - eps, t);
        err += abs_affine_integral(a, b, rf - ea, rf - eb);
    }
    return FtlEntropyReport{N, t, -w, w, lo, hi, err, traj.back()};
}

double ftl_vs_entropy(double rho_L, double rho_R, const VelocityLaw& law, int N, double t, RhoStarKind rule)
{
    return ftl_entropy_report(rho_L, rho_R, law, N, t, rule).l1_error;
}

}  // namespace nlmob
