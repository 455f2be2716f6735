#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace nlmob {

/// Segment of a quantile function that is affine in z: X goes from x0 at z0
/// to x1 at z1. Atoms are pieces with x0 == x1.
struct QuantilePiece {
    double z0, z1;
    double x0, x1;
};

/// A probability measure on the real line, stored through its quantile
/// function X(z) = inf { a : mu(-inf, a) > z }.
class Measure1D {
public:
    struct Uniform {
        double a, b;
    };
    /// Normal(mean, sigma^2) conditioned on [lo, hi]; bounds may be infinite.
    struct Gaussian {
        double mean, sigma, lo, hi;
    };
    /// Equal-weight atoms, sorted. This is also the "K quantile values at
    /// z_k = (k + 1/2)/K" representation: X is the step function through them.
    struct Empirical {
        std::vector<double> atoms;
    };
    /// Density heights[i] on [breaks[i], breaks[i+1]).
    struct PiecewiseConstant {
        std::vector<double> breaks;
        std::vector<double> heights;
    };

    using Repr = std::variant<Uniform, Gaussian, Empirical, PiecewiseConstant>;

    static Measure1D uniform(double a, double b);
    static Measure1D gaussian(double mean, double sigma, double lo, double hi);
    static Measure1D empirical(std::vector<double> atoms);
    static Measure1D piecewise_constant(std::vector<double> breaks, std::vector<double> heights);

    const Repr& repr() const noexcept { return repr_; }

    bool atomless() const noexcept { return !std::holds_alternative<Empirical>(repr_); }

    /// Right-continuous quantile. Throws DomainError for z outside (0, 1).
    double quantile(double z) const;
    /// mu((-inf, x]).
    double cdf(double x) const;
    /// [X(0+), X(1-)], possibly infinite.
    std::pair<double, double> support() const;

    /// Affine pieces covering (0, 1), when the quantile is piecewise affine
    /// (everything except the Gaussian family).
    std::optional<std::vector<QuantilePiece>> quantile_pieces() const;

    /// E|x - center|^p.
    double moment(double p, double center = 0.0) const;

    Measure1D shifted(double c) const;
    /// Push-forward under x -> -x.
    Measure1D reflected() const;

private:
    explicit Measure1D(Repr repr) : repr_(std::move(repr)) {}

    Repr repr_;
};

double quantile_at(const Measure1D& mu, double z);

inline constexpr int kDefaultQuadPoints = 4096;

/// W_p(mu, nu) = || X_mu - X_nu ||_{L^p(0,1)}.
///
/// Integrated exactly when both quantiles are piecewise affine; otherwise a
/// midpoint rule with quad_points nodes is used.
double wasserstein_p(const Measure1D& mu, const Measure1D& nu, double p,
                     int quad_points = kDefaultQuadPoints);

/// Midpoint-rule version of wasserstein_p, regardless of representation.
double wasserstein_p_midpoint(const Measure1D& mu, const Measure1D& nu, double p,
                              int quad_points = kDefaultQuadPoints);

/// The interval [X(eps), X(1 - eps)].
std::pair<double, double> central_interval(const Measure1D& mu, double eps);

/// Restriction of mu to its central interval, renormalised by 1/(1 - 2 eps).
/// Requires an atomless measure and 0 < eps < 1/2.
Measure1D compactify(const Measure1D& mu, double eps);

struct TailReport {
    double eps;
    std::pair<double, double> interval;
    double tail_p_moment;
};

/// Integral of |x - center|^p over the complement of the central interval.
TailReport tail_moment(const Measure1D& mu, double eps, double p, double center = 0.0,
                       int quad_points = kDefaultQuadPoints);

/// Both sides of the compactification error estimate
///   diam(I)^{p-q} W_q(mu, C_eps mu)^q <= C * int_{I^c} |x - median|^p dmu
/// with C = 1 when q == p and C = 2^p otherwise.
struct CompactificationBound {
    double lhs;
    double rhs;
    bool holds;
};

CompactificationBound compactification_bound(const Measure1D& mu, double eps, double p, double q);

bool compactification_error_check(const Measure1D& mu, double eps, double p, double q);

}  // namespace nlmob
