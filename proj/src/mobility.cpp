#include "nlmob/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlmob/errors.hpp"

namespace nlmob {

namespace {

constexpr double kDomainSlack = 1e-12;

}  // namespace

std::string to_string(MobilityKind kind)
{
    switch (kind) {
    case MobilityKind::Linear: return "linear";
    case MobilityKind::Logistic: return "logistic";
    case MobilityKind::Table: return "table";
    }
    return "unknown";
}

Mobility Mobility::linear(double max_density)
{
    if (!(max_density > 0.0) || !std::isfinite(max_density))
        throw DomainError("mobility: maximal density must be positive and finite");
    return Mobility(MobilityKind::Linear, max_density, nullptr);
}

Mobility Mobility::logistic(double max_density)
{
    if (!(max_density > 0.0) || !std::isfinite(max_density))
        throw DomainError("mobility: maximal density must be positive and finite");
    return Mobility(MobilityKind::Logistic, max_density, nullptr);
}

Mobility Mobility::table(std::vector<double> rho, std::vector<double> m)
{
    if (rho.size() != m.size() || rho.size() < 2)
        throw DomainError("mobility table: rho and m must have equal length >= 2");
    if (rho.front() != 0.0 || m.front() != 0.0)
        throw DomainError("mobility table: first node must be (0, 0)");

    auto t = std::make_shared<Table>();
    const std::size_t segments = rho.size() - 1;
    t->slope.resize(segments);
    t->intercept.resize(segments);
    double scale = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (!std::isfinite(rho[j]) || !std::isfinite(m[j]))
            throw DomainError("mobility table: non-finite entry");
        if (m[j] < 0.0)
            throw DomainError("mobility table: m must be nonnegative");
        scale = std::max(scale, std::abs(m[j]));
    }
    for (std::size_t j = 0; j < segments; ++j) {
        if (!(rho[j + 1] > rho[j]))
            throw DomainError("mobility table: rho must be strictly increasing");
        t->slope[j] = (m[j + 1] - m[j]) / (rho[j + 1] - rho[j]);
        t->intercept[j] = m[j] - t->slope[j] * rho[j];
    }
    const double slope_tol = 1e-12 * std::max(1.0, scale / rho.back());
    for (std::size_t j = 1; j < segments; ++j) {
        if (t->slope[j] > t->slope[j - 1] + slope_tol) {
            std::ostringstream msg;
            msg << "mobility table: not concave at node " << j << " (rho = " << rho[j] << ")";
            throw DomainError(msg.str());
        }
    }
    t->intercept[0] = 0.0;
    const double max_density = rho.back();
    t->rho = std::move(rho);
    t->m = std::move(m);
    return Mobility(MobilityKind::Table, max_density, std::move(t));
}

Mobility Mobility::dilate(double lambda) const
{
    if (!(lambda > 1.0) || !std::isfinite(lambda))
        throw DomainError("dilate: lambda must be > 1");
    Mobility out = *this;
    out.dilation_ = dilation_ * lambda;
    return out;
}

Mobility Mobility::undilated() const
{
    Mobility out = *this;
    out.dilation_ = 1.0;
    return out;
}

const std::vector<double>& Mobility::table_rho() const
{
    static const std::vector<double> empty;
    return table_ ? table_->rho : empty;
}

const std::vector<double>& Mobility::table_m() const
{
    static const std::vector<double> empty;
    return table_ ? table_->m : empty;
}

double Mobility::to_base(double rho) const
{
    const double r = rho / dilation_;
    if (r < 0.0) {
        if (r < -kDomainSlack * base_max_)
            throw DomainError("mobility: density below 0");
        return 0.0;
    }
    if (r > base_max_) {
        if (r > base_max_ * (1.0 + kDomainSlack))
            throw DomainError("mobility: density above maximal density");
        return base_max_;
    }
    return r;
}

std::size_t Mobility::segment(double r) const
{
    const auto& nodes = table_->rho;
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    std::size_t j = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    return std::min(j, nodes.size() - 2);
}

double Mobility::base_m(double r) const
{
    switch (kind_) {
    case MobilityKind::Linear: return r;
    case MobilityKind::Logistic: return std::max(0.0, r * (1.0 - r / base_max_));
    case MobilityKind::Table: {
        const std::size_t j = segment(r);
        return std::max(0.0, table_->intercept[j] + table_->slope[j] * r);
    }
    }
    return 0.0;
}

double Mobility::base_theta(double r) const
{
    switch (kind_) {
    case MobilityKind::Linear: return 1.0;
    case MobilityKind::Logistic: return std::max(0.0, 1.0 - r / base_max_);
    case MobilityKind::Table: {
        // The first segment passes through the origin, so theta there equals
        // the forward difference m(rho_1)/rho_1, including at r = 0.
        const std::size_t j = segment(r);
        if (j == 0)
            return std::max(0.0, table_->slope[0]);
        return std::max(0.0, table_->intercept[j] / r + table_->slope[j]);
    }
    }
    return 0.0;
}

double Mobility::base_theta_d1(double r) const
{
    switch (kind_) {
    case MobilityKind::Linear: return 0.0;
    case MobilityKind::Logistic: return -1.0 / base_max_;
    case MobilityKind::Table: {
        const std::size_t j = segment(r);
        if (j == 0)
            return 0.0;
        return -table_->intercept[j] / (r * r);
    }
    }
    return 0.0;
}

double Mobility::base_theta_d2(double r) const
{
    if (kind_ != MobilityKind::Table)
        return 0.0;
    const std::size_t j = segment(r);
    if (j == 0)
        return 0.0;
    return 2.0 * table_->intercept[j] / (r * r * r);
}

double Mobility::operator()(double rho) const
{
    return dilation_ * base_m(to_base(rho));
}

double Mobility::theta(double rho) const
{
    return base_theta(to_base(rho));
}

double Mobility::theta_derivative(double rho) const
{
    return base_theta_d1(to_base(rho)) / dilation_;
}

double Mobility::theta_second_derivative(double rho) const
{
    return base_theta_d2(to_base(rho)) / (dilation_ * dilation_);
}

double theta_of(const Mobility& mobility, double rho)
{
    if (!(rho >= 0.0) || rho > mobility.max_density() * (1.0 + kDomainSlack))
        throw DomainError("theta_of: rho outside [0, M]");
    return mobility.theta(rho);
}

ActionDensity::ActionDensity(double p, Mobility mobility) : p_(p), mobility_(std::move(mobility))
{
    if (!(p > 1.0) || !std::isfinite(p))
        throw DomainError("action density: exponent p must satisfy 1 < p < inf");
}

double phi(const ActionDensity& density, double rho, double j)
{
    if (!(rho >= 0.0))
        throw DomainError("phi: rho must be nonnegative");
    if (!std::isfinite(j))
        throw DomainError("phi: j must be finite");
    const Mobility& m = density.mobility();
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (rho > m.max_density())
        return inf;
    const double mob = m(rho);
    if (mob > 0.0)
        return std::pow(std::abs(j), density.p()) / std::pow(mob, density.p() - 1.0);
    return j == 0.0 ? 0.0 : inf;
}

double particle_action(const ActionDensity& density, double rho, double v)
{
    const double th = density.mobility().theta(rho);
    if (v == 0.0)
        return 0.0;
    if (th <= 0.0)
        return std::numeric_limits<double>::infinity();
    const double p = density.p();
    if (p == 2.0)
        return v * v / th;
    return std::pow(std::abs(v), p) / std::pow(th, p - 1.0);
}

}  // namespace nlmob
