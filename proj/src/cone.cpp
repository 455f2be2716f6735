#include "nlmob/cone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlmob/errors.hpp"

namespace nlmob {

double cone_tolerance(std::span<const double> x, double max_density)
{
    double scale = 1.0 / max_density;
    for (double v : x)
        scale = std::max(scale, std::abs(v));
    return 1e-14 * scale;
}

bool in_cone(std::span<const double> x, double max_density)
{
    if (x.size() < 2)
        return false;
    const double n = static_cast<double>(x.size() - 1);
    const double gmin = 1.0 / (n * max_density);
    const double tol = cone_tolerance(x, max_density);
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i + 1] - x[i] >= gmin - tol))
            return false;
    return true;
}

ParticleConfig::ParticleConfig(std::vector<double> x, double max_density)
    : x_(std::move(x)), max_density_(max_density)
{
    if (!(max_density > 0.0) || !std::isfinite(max_density))
        throw DomainError("ParticleConfig: maximal density must be positive");
    if (x_.size() < 2)
        throw DomainError("ParticleConfig: need N >= 1 (at least two particles)");
    for (double v : x_)
        if (!std::isfinite(v))
            throw DomainError("ParticleConfig: positions must be finite");
    if (!in_cone(x_, max_density_)) {
        std::ostringstream msg;
        msg << "ParticleConfig: gap below 1/(N M) = " << gap_min();
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            if (x_[i + 1] - x_[i] < gap_min()) {
                msg << " at i = " << i << " (gap " << x_[i + 1] - x_[i] << ")";
                break;
            }
        }
        throw ConeViolation(msg.str());
    }
}

ParticleConfig ParticleConfig::translated(double c) const
{
    auto y = x_;
    for (double& v : y)
        v += c;
    return {std::move(y), max_density_};
}

std::string to_string(RhoStarKind kind)
{
    return kind == RhoStarKind::LookBack ? "look_back" : "const_argmax_theta";
}

RhoStarKind rho_star_kind_from_string(const std::string& name)
{
    if (name == "look_back")
        return RhoStarKind::LookBack;
    if (name == "const_argmax_theta")
        return RhoStarKind::ConstArgmaxTheta;
    throw DomainError("unknown rho* rule '" + name + "'");
}

RhoStarRule RhoStarRule::const_argmax_theta(const Mobility& mobility)
{
    constexpr int grid = 1000;
    constexpr double delta = 1e-6;
    const double top = (1.0 - delta) * mobility.max_density();
    double best_rho = 0.0;
    double best = mobility.theta(0.0);
    for (int k = 1; k <= grid; ++k) {
        const double rho = top * k / grid;
        const double th = mobility.theta(rho);
        if (th > best) {
            best = th;
            best_rho = rho;
        }
    }
    return {RhoStarKind::ConstArgmaxTheta, best_rho};
}

std::vector<double> reconstruct_density(std::span<const double> x, const RhoStarRule& rule)
{
    const std::size_t n = x.size() - 1;
    std::vector<double> R(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        R[i] = 1.0 / (static_cast<double>(n) * (x[i + 1] - x[i]));
    R[n] = rule.kind == RhoStarKind::LookBack ? R[n - 1] : rule.rho_star;
    return R;
}

std::vector<double> reconstruct_density(const ParticleConfig& cfg, const RhoStarRule& rule)
{
    return reconstruct_density(cfg.x(), rule);
}

Measure1D embed_piecewise(const ParticleConfig& cfg)
{
    const auto R = reconstruct_density(cfg, RhoStarRule::look_back());
    return Measure1D::piecewise_constant(cfg.positions(), std::vector<double>(R.begin(), R.end() - 1));
}

Measure1D embed_empirical(const ParticleConfig& cfg)
{
    return Measure1D::empirical(cfg.positions());
}

ParticleConfig sample_from_quantile(const Measure1D& mu, int n, const Mobility& mobility, EndpointRule endpoints)
{
    if (n < 1)
        throw DomainError("sample_from_quantile: n must be >= 1");
    if (!mu.atomless())
        throw DomainError("sample_from_quantile: measure must be atomless");
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    for (int i = 1; i < n; ++i)
        x[i] = mu.quantile(static_cast<double>(i) / n);
    const double zeta = 0.5 / n;
    const auto [lo, hi] = mu.support();
    const bool exact_ends = endpoints == EndpointRule::Auto && std::isfinite(lo) && std::isfinite(hi);
    x[0] = exact_ends ? lo : mu.quantile(zeta);
    x[n] = exact_ends ? hi : mu.quantile(1.0 - zeta);
    return ParticleConfig(std::move(x), mobility.max_density());
}

double check_embedding_consistency(const ParticleConfig& cfg, double p)
{
    return wasserstein_p(embed_empirical(cfg), embed_piecewise(cfg), p);
}

}  // namespace nlmob
