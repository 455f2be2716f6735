#pragma once

#include <span>
#include <string>
#include <vector>

#include "nlmob/measures.hpp"
#include "nlmob/mobility.hpp"

namespace nlmob {

/// A point of the cone K_N = { x in R^{N+1} : x_{i+1} - x_i >= 1/(N M) }.
class ParticleConfig {
public:
    /// Throws ConeViolation if a gap is below 1/(N M) beyond round-off.
    ParticleConfig(std::vector<double> x, double max_density);

    int n() const noexcept { return static_cast<int>(x_.size()) - 1; }
    std::span<const double> x() const noexcept { return x_; }
    const std::vector<double>& positions() const noexcept { return x_; }
    double operator[](std::size_t i) const { return x_[i]; }
    double max_density() const noexcept { return max_density_; }
    double gap(int i) const { return x_[i + 1] - x_[i]; }
    double gap_min() const noexcept { return 1.0 / (n() * max_density_); }

    ParticleConfig translated(double c) const;

private:
    std::vector<double> x_;
    double max_density_;
};

/// Absolute round-off allowance for the gap constraint at this position scale.
double cone_tolerance(std::span<const double> x, double max_density);

bool in_cone(std::span<const double> x, double max_density);

enum class RhoStarKind { ConstArgmaxTheta, LookBack };

std::string to_string(RhoStarKind kind);
RhoStarKind rho_star_kind_from_string(const std::string& name);

/// How the leader's density R_N is reconstructed.
///
/// ConstArgmaxTheta uses the smallest grid maximiser of theta over
/// [0, (1 - 1e-6) M]; LookBack copies R_{N-1}.
struct RhoStarRule {
    RhoStarKind kind = RhoStarKind::ConstArgmaxTheta;
    double rho_star = 0.0;

    static RhoStarRule const_argmax_theta(const Mobility& mobility);
    static RhoStarRule look_back() { return {RhoStarKind::LookBack, 0.0}; }
};

/// R_i = 1 / (N (x_{i+1} - x_i)) for i < N, and R_N from the rule.
/// No cone check; used on trial points inside solvers.
std::vector<double> reconstruct_density(std::span<const double> x, const RhoStarRule& rule);

std::vector<double> reconstruct_density(const ParticleConfig& cfg, const RhoStarRule& rule);

/// Piecewise-constant embedding: density R_i on [x_i, x_{i+1}], mass 1/N per cell.
Measure1D embed_piecewise(const ParticleConfig& cfg);

/// Empirical embedding: N+1 atoms of mass 1/(N+1).
Measure1D embed_empirical(const ParticleConfig& cfg);

/// Endpoint placement for sample_from_quantile. Interior particles are always
/// x_i = X(i/n).
enum class EndpointRule {
    /// X(0+), X(1-) when finite; otherwise the half-cell clipped quantiles.
    Auto,
    /// Always X(1/(2n)) and X(1 - 1/(2n)).
    Clip,
};

ParticleConfig sample_from_quantile(const Measure1D& mu, int n, const Mobility& mobility,
                                    EndpointRule endpoints = EndpointRule::Auto);

/// W_p(E^N(x), PC^N(x)).
double check_embedding_consistency(const ParticleConfig& cfg, double p);

}  // namespace nlmob
