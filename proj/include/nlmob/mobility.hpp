#pragma once

#include <memory>
#include <string>
#include <vector>

namespace nlmob {

enum class MobilityKind { Linear, Logistic, Table };

std::string to_string(MobilityKind kind);

/// A concave mobility m : [0, M] -> [0, inf) with m(0) = 0, together with
/// theta(rho) = m(rho) / rho.
///
/// Three families are supported: the linear mobility m(rho) = rho, the
/// logistic (congestion) mobility m(rho) = rho (1 - rho / M), and sampled
/// tables interpolated piecewise linearly. Any of them can be dilated,
/// m^lambda(rho) = lambda m(rho / lambda), which enlarges the maximal density
/// to lambda M. Values are immutable and cheap to copy.
class Mobility {
public:
    static Mobility linear(double max_density = 1.0);
    static Mobility logistic(double max_density = 1.0);
    /// Table nodes must start at (0, 0), be strictly increasing in rho, have
    /// m >= 0 and nonincreasing slopes. The last node fixes M.
    static Mobility table(std::vector<double> rho, std::vector<double> m);

    MobilityKind kind() const noexcept { return kind_; }
    double max_density() const noexcept { return dilation_ * base_max_; }
    double dilation() const noexcept { return dilation_; }

    /// m(rho). Throws DomainError outside [0, M].
    double operator()(double rho) const;

    /// theta(rho) = m(rho)/rho, with the right limit at rho = 0.
    double theta(double rho) const;
    double theta_derivative(double rho) const;
    double theta_second_derivative(double rho) const;

    /// sup theta = theta(0), since theta is nonincreasing.
    double theta_sup() const { return theta(0.0); }
    /// theta(M); zero means the action is singular at maximal density.
    double theta_at_max() const { return theta(max_density()); }

    /// lambda m(rho / lambda); requires lambda > 1.
    Mobility dilate(double lambda) const;

    /// The same mobility without dilation.
    Mobility undilated() const;

    const std::vector<double>& table_rho() const;
    const std::vector<double>& table_m() const;

private:
    struct Table {
        std::vector<double> rho;
        std::vector<double> m;
        std::vector<double> slope;      // on [rho_j, rho_{j+1}]
        std::vector<double> intercept;  // m = intercept + slope * rho
    };

    Mobility(MobilityKind kind, double base_max, std::shared_ptr<const Table> table)
        : kind_(kind), base_max_(base_max), table_(std::move(table)) {}

    // Maps a (possibly dilated) density onto the base domain, clamping
    // round-off excursions past the endpoints.
    double to_base(double rho) const;
    std::size_t segment(double base_rho) const;

    double base_m(double r) const;
    double base_theta(double r) const;
    double base_theta_d1(double r) const;
    double base_theta_d2(double r) const;

    MobilityKind kind_;
    double base_max_;
    double dilation_ = 1.0;
    std::shared_ptr<const Table> table_;
};

/// theta_of with strict domain checking.
double theta_of(const Mobility& mobility, double rho);

/// The pair (p, m) defining phi_{p,m}(rho, j) = |j|^p / m(rho)^{p-1}.
class ActionDensity {
public:
    ActionDensity(double p, Mobility mobility);

    double p() const noexcept { return p_; }
    const Mobility& mobility() const noexcept { return mobility_; }

    ActionDensity with_mobility(Mobility mobility) const { return {p_, std::move(mobility)}; }

private:
    double p_;
    Mobility mobility_;
};

/// phi_{p,m}(rho, j) with the singular conventions: 0 when m(rho) = 0 = j,
/// +inf when m(rho) = 0 != j or rho > M. Requires rho >= 0.
double phi(const ActionDensity& density, double rho, double j);

/// |v|^p / theta(rho)^{p-1}, the per-particle integrand of the discrete action.
/// +inf when theta(rho) = 0 and v != 0.
double particle_action(const ActionDensity& density, double rho, double v);

}  // namespace nlmob
