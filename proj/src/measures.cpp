#include "nlmob/measures.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "nlmob/errors.hpp"
#include "numeric_util.hpp"

namespace nlmob {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const boost::math::normal& standard_normal()
{
    static const boost::math::normal n(0.0, 1.0);
    return n;
}

double normal_cdf(double s)
{
    if (s == -kInf)
        return 0.0;
    if (s == kInf)
        return 1.0;
    return boost::math::cdf(standard_normal(), s);
}

double normal_quantile(double u)
{
    if (u <= 0.0)
        return -kInf;
    if (u >= 1.0)
        return kInf;
    return boost::math::quantile(standard_normal(), u);
}

// Cumulative masses of a piecewise-constant density, normalised so the last
// entry is exactly 1.
std::vector<double> cumulative(const Measure1D::PiecewiseConstant& pc)
{
    std::vector<double> F(pc.breaks.size(), 0.0);
    for (std::size_t i = 0; i + 1 < pc.breaks.size(); ++i)
        F[i + 1] = F[i] + pc.heights[i] * (pc.breaks[i + 1] - pc.breaks[i]);
    const double total = F.back();
    for (double& f : F)
        f /= total;
    F.back() = 1.0;
    return F;
}

double piece_at(const QuantilePiece& piece, double z)
{
    if (piece.x0 == piece.x1 || piece.z1 <= piece.z0)
        return piece.x0;
    const double s = (z - piece.z0) / (piece.z1 - piece.z0);
    return piece.x0 + (piece.x1 - piece.x0) * s;
}

// Integral of |X(z) - center|^p over [zlo, zhi] for a piecewise affine X.
double pieces_abs_pow(const std::vector<QuantilePiece>& pieces, double zlo, double zhi, double center,
                      double p)
{
    double total = 0.0;
    for (const auto& piece : pieces) {
        const double a = std::max(piece.z0, zlo);
        const double b = std::min(piece.z1, zhi);
        if (!(b > a))
            continue;
        total += detail::abs_pow_integral(piece_at(piece, a) - center, piece_at(piece, b) - center, b - a, p);
    }
    return total;
}

double midpoint_abs_pow(const Measure1D& mu, double zlo, double zhi, double center, double p, int nodes)
{
    const double h = (zhi - zlo) / nodes;
    double total = 0.0;
    for (int k = 0; k < nodes; ++k)
        total += std::pow(std::abs(mu.quantile(zlo + (k + 0.5) * h) - center), p);
    return total * h;
}

void require_atomless(const Measure1D& mu, const char* op)
{
    if (!mu.atomless())
        throw DomainError(std::string(op) + ": measure must be atomless");
}

void require_eps(double eps, const char* op)
{
    if (!(eps > 0.0 && eps < 0.5))
        throw DomainError(std::string(op) + ": eps must lie in (0, 1/2)");
}

}  // namespace

Measure1D Measure1D::uniform(double a, double b)
{
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError("uniform: need finite a < b");
    return Measure1D(Uniform{a, b});
}

Measure1D Measure1D::gaussian(double mean, double sigma, double lo, double hi)
{
    if (!(sigma > 0.0) || !std::isfinite(mean) || !(hi > lo))
        throw DomainError("gaussian: need sigma > 0 and lo < hi");
    const double mass = normal_cdf((hi - mean) / sigma) - normal_cdf((lo - mean) / sigma);
    if (!(mass > 0.0))
        throw DomainError("gaussian: truncation interval carries no mass");
    return Measure1D(Gaussian{mean, sigma, lo, hi});
}

Measure1D Measure1D::empirical(std::vector<double> atoms)
{
    if (atoms.empty())
        throw DomainError("empirical: need at least one atom");
    for (double a : atoms)
        if (!std::isfinite(a))
            throw DomainError("empirical: atoms must be finite");
    std::sort(atoms.begin(), atoms.end());
    return Measure1D(Empirical{std::move(atoms)});
}

Measure1D Measure1D::piecewise_constant(std::vector<double> breaks, std::vector<double> heights)
{
    if (breaks.size() < 2 || heights.size() + 1 != breaks.size())
        throw DomainError("piecewise_constant: need n+1 breaks and n heights");
    double mass = 0.0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
        if (!std::isfinite(breaks[i]) || !std::isfinite(breaks[i + 1]) || !(breaks[i + 1] > breaks[i]))
            throw DomainError("piecewise_constant: breaks must be finite and strictly increasing");
        if (!(heights[i] >= 0.0) || !std::isfinite(heights[i]))
            throw DomainError("piecewise_constant: heights must be finite and nonnegative");
        mass += heights[i] * (breaks[i + 1] - breaks[i]);
    }
    if (std::abs(mass - 1.0) > 1e-12 * std::max<double>(1.0, std::sqrt(heights.size())))
        throw DomainError("piecewise_constant: total mass must be 1");
    return Measure1D(PiecewiseConstant{std::move(breaks), std::move(heights)});
}

double Measure1D::quantile(double z) const
{
    if (!(z > 0.0 && z < 1.0))
        throw DomainError("quantile: z must lie in (0, 1)");
    return std::visit(
        overloaded{
            [&](const Uniform& u) { return u.a + z * (u.b - u.a); },
            [&](const Gaussian& g) {
                const double lo = normal_cdf((g.lo - g.mean) / g.sigma);
                const double hi = normal_cdf((g.hi - g.mean) / g.sigma);
                const double x = g.mean + g.sigma * normal_quantile(lo + z * (hi - lo));
                return std::clamp(x, g.lo, g.hi);
            },
            [&](const Empirical& e) {
                const auto k = static_cast<std::size_t>(std::floor(z * static_cast<double>(e.atoms.size())));
                return e.atoms[std::min(k, e.atoms.size() - 1)];
            },
            [&](const PiecewiseConstant& pc) {
                const auto F = cumulative(pc);
                // First cell whose right cumulative mass exceeds z.
                auto it = std::upper_bound(F.begin() + 1, F.end(), z);
                if (it == F.end())
                    return support().second;
                const std::size_t i = static_cast<std::size_t>(it - F.begin()) - 1;
                const double h = pc.heights[i];
                const double x = pc.breaks[i] + (z - F[i]) / (F[i + 1] - F[i]) * (pc.breaks[i + 1] - pc.breaks[i]);
                return h > 0.0 ? std::min(x, pc.breaks[i + 1]) : pc.breaks[i + 1];
            },
        },
        repr_);
}

double Measure1D::cdf(double x) const
{
    return std::visit(
        overloaded{
            [&](const Uniform& u) { return std::clamp((x - u.a) / (u.b - u.a), 0.0, 1.0); },
            [&](const Gaussian& g) {
                if (x <= g.lo)
                    return 0.0;
                if (x >= g.hi)
                    return 1.0;
                const double lo = normal_cdf((g.lo - g.mean) / g.sigma);
                const double hi = normal_cdf((g.hi - g.mean) / g.sigma);
                return std::clamp((normal_cdf((x - g.mean) / g.sigma) - lo) / (hi - lo), 0.0, 1.0);
            },
            [&](const Empirical& e) {
                const auto count = std::upper_bound(e.atoms.begin(), e.atoms.end(), x) - e.atoms.begin();
                return static_cast<double>(count) / static_cast<double>(e.atoms.size());
            },
            [&](const PiecewiseConstant& pc) {
                if (x <= pc.breaks.front())
                    return 0.0;
                if (x >= pc.breaks.back())
                    return 1.0;
                const auto F = cumulative(pc);
                auto it = std::upper_bound(pc.breaks.begin(), pc.breaks.end(), x);
                const std::size_t i = static_cast<std::size_t>(it - pc.breaks.begin()) - 1;
                const double s = (x - pc.breaks[i]) / (pc.breaks[i + 1] - pc.breaks[i]);
                return F[i] + s * (F[i + 1] - F[i]);
            },
        },
        repr_);
}

std::pair<double, double> Measure1D::support() const
{
    return std::visit(overloaded{
                          [](const Uniform& u) { return std::pair{u.a, u.b}; },
                          [](const Gaussian& g) { return std::pair{g.lo, g.hi}; },
                          [](const Empirical& e) { return std::pair{e.atoms.front(), e.atoms.back()}; },
                          [](const PiecewiseConstant& pc) {
                              std::size_t first = 0;
                              while (pc.heights[first] <= 0.0)
                                  ++first;
                              std::size_t last = pc.heights.size() - 1;
                              while (pc.heights[last] <= 0.0)
                                  --last;
                              return std::pair{pc.breaks[first], pc.breaks[last + 1]};
                          },
                      },
                      repr_);
}

std::optional<std::vector<QuantilePiece>> Measure1D::quantile_pieces() const
{
    return std::visit(
        overloaded{
            [](const Uniform& u) -> std::optional<std::vector<QuantilePiece>> {
                return std::vector<QuantilePiece>{{0.0, 1.0, u.a, u.b}};
            },
            [](const Gaussian&) -> std::optional<std::vector<QuantilePiece>> { return std::nullopt; },
            [](const Empirical& e) -> std::optional<std::vector<QuantilePiece>> {
                const double K = static_cast<double>(e.atoms.size());
                std::vector<QuantilePiece> out;
                out.reserve(e.atoms.size());
                for (std::size_t k = 0; k < e.atoms.size(); ++k)
                    out.push_back({static_cast<double>(k) / K, static_cast<double>(k + 1) / K, e.atoms[k], e.atoms[k]});
                out.back().z1 = 1.0;
                return out;
            },
            [](const PiecewiseConstant& pc) -> std::optional<std::vector<QuantilePiece>> {
                const auto F = cumulative(pc);
                std::vector<QuantilePiece> out;
                for (std::size_t i = 0; i < pc.heights.size(); ++i) {
                    if (pc.heights[i] > 0.0 && F[i + 1] > F[i])
                        out.push_back({F[i], F[i + 1], pc.breaks[i], pc.breaks[i + 1]});
                }
                out.back().z1 = 1.0;
                return out;
            },
        },
        repr_);
}

double Measure1D::moment(double p, double center) const
{
    if (auto pieces = quantile_pieces())
        return pieces_abs_pow(*pieces, 0.0, 1.0, center, p);
    // Unbounded quantile near 0 and 1: tanh-sinh handles the endpoint growth.
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate([&](double z) { return std::pow(std::abs(quantile(z) - center), p); }, 0.0, 1.0);
}

Measure1D Measure1D::shifted(double c) const
{
    return std::visit(overloaded{
                          [&](const Uniform& u) { return Measure1D(Uniform{u.a + c, u.b + c}); },
                          [&](const Gaussian& g) { return Measure1D(Gaussian{g.mean + c, g.sigma, g.lo + c, g.hi + c}); },
                          [&](const Empirical& e) {
                              auto atoms = e.atoms;
                              for (double& a : atoms)
                                  a += c;
                              return Measure1D(Empirical{std::move(atoms)});
                          },
                          [&](const PiecewiseConstant& pc) {
                              auto breaks = pc.breaks;
                              for (double& b : breaks)
                                  b += c;
                              return Measure1D(PiecewiseConstant{std::move(breaks), pc.heights});
                          },
                      },
                      repr_);
}

Measure1D Measure1D::reflected() const
{
    return std::visit(overloaded{
                          [](const Uniform& u) { return Measure1D(Uniform{-u.b, -u.a}); },
                          [](const Gaussian& g) { return Measure1D(Gaussian{-g.mean, g.sigma, -g.hi, -g.lo}); },
                          [](const Empirical& e) {
                              std::vector<double> atoms(e.atoms.rbegin(), e.atoms.rend());
                              for (double& a : atoms)
                                  a = -a;
                              return Measure1D(Empirical{std::move(atoms)});
                          },
                          [](const PiecewiseConstant& pc) {
                              std::vector<double> breaks(pc.breaks.rbegin(), pc.breaks.rend());
                              for (double& b : breaks)
                                  b = -b;
                              std::vector<double> heights(pc.heights.rbegin(), pc.heights.rend());
                              return Measure1D(PiecewiseConstant{std::move(breaks), std::move(heights)});
                          },
                      },
                      repr_);
}

double quantile_at(const Measure1D& mu, double z)
{
    return mu.quantile(z);
}

double wasserstein_p_midpoint(const Measure1D& mu, const Measure1D& nu, double p, int quad_points)
{
    if (!(p >= 1.0))
        throw DomainError("wasserstein_p: p must be >= 1");
    if (quad_points < 1)
        throw DomainError("wasserstein_p: quad_points must be >= 1");
    const double h = 1.0 / quad_points;
    double total = 0.0;
    for (int k = 0; k < quad_points; ++k) {
        const double z = (k + 0.5) * h;
        total += std::pow(std::abs(mu.quantile(z) - nu.quantile(z)), p);
    }
    return std::pow(total * h, 1.0 / p);
}

double wasserstein_p(const Measure1D& mu, const Measure1D& nu, double p, int quad_points)
{
    if (!(p >= 1.0))
        throw DomainError("wasserstein_p: p must be >= 1");
    auto pa = mu.quantile_pieces();
    auto pb = nu.quantile_pieces();
    if (!pa || !pb)
        return wasserstein_p_midpoint(mu, nu, p, quad_points);

    // Merge the two partitions of (0, 1); on each common cell the difference
    // of the quantiles is affine.
    const auto& A = *pa;
    const auto& B = *pb;
    std::size_t i = 0, j = 0;
    double z = 0.0;
    double total = 0.0;
    while (i < A.size() && j < B.size()) {
        const double z_next = std::min(A[i].z1, B[j].z1);
        if (z_next > z) {
            const double l0 = piece_at(A[i], z) - piece_at(B[j], z);
            const double l1 = piece_at(A[i], z_next) - piece_at(B[j], z_next);
            total += detail::abs_pow_integral(l0, l1, z_next - z, p);
            z = z_next;
        }
        if (A[i].z1 <= z_next)
            ++i;
        if (j < B.size() && B[j].z1 <= z_next)
            ++j;
    }
    return std::pow(total, 1.0 / p);
}

std::pair<double, double> central_interval(const Measure1D& mu, double eps)
{
    require_eps(eps, "central_interval");
    return {mu.quantile(eps), mu.quantile(1.0 - eps)};
}

Measure1D compactify(const Measure1D& mu, double eps)
{
    require_atomless(mu, "compactify");
    require_eps(eps, "compactify");
    const auto [lo, hi] = central_interval(mu, eps);
    return std::visit(
        overloaded{
            [&](const Measure1D::Uniform&) { return Measure1D::uniform(lo, hi); },
            [&](const Measure1D::Gaussian& g) { return Measure1D::gaussian(g.mean, g.sigma, lo, hi); },
            [&](const Measure1D::Empirical&) -> Measure1D { throw DomainError("compactify: atomic measure"); },
            [&](const Measure1D::PiecewiseConstant& pc) {
                std::vector<double> breaks{lo};
                for (double b : pc.breaks)
                    if (b > lo && b < hi)
                        breaks.push_back(b);
                breaks.push_back(hi);
                std::vector<double> heights;
                heights.reserve(breaks.size() - 1);
                const double scale = 1.0 / (1.0 - 2.0 * eps);
                for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
                    const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
                    auto it = std::upper_bound(pc.breaks.begin(), pc.breaks.end(), mid);
                    const std::size_t cell = static_cast<std::size_t>(it - pc.breaks.begin()) - 1;
                    heights.push_back(pc.heights[cell] * scale);
                }
                // Renormalise away the rounding in the clipped end cells.
                double mass = 0.0;
                for (std::size_t k = 0; k < heights.size(); ++k)
                    mass += heights[k] * (breaks[k + 1] - breaks[k]);
                for (double& h : heights)
                    h /= mass;
                return Measure1D::piecewise_constant(std::move(breaks), std::move(heights));
            },
        },
        mu.repr());
}

TailReport tail_moment(const Measure1D& mu, double eps, double p, double center, int quad_points)
{
    require_atomless(mu, "tail_moment");
    require_eps(eps, "tail_moment");
    TailReport report{eps, central_interval(mu, eps), 0.0};
    if (auto pieces = mu.quantile_pieces()) {
        report.tail_p_moment = pieces_abs_pow(*pieces, 0.0, eps, center, p) +
                               pieces_abs_pow(*pieces, 1.0 - eps, 1.0, center, p);
    } else {
        report.tail_p_moment = midpoint_abs_pow(mu, 0.0, eps, center, p, quad_points) +
                               midpoint_abs_pow(mu, 1.0 - eps, 1.0, center, p, quad_points);
    }
    return report;
}

CompactificationBound compactification_bound(const Measure1D& mu, double eps, double p, double q)
{
    if (!(q <= p) || !(q >= 1.0))
        throw DomainError("compactification check: need 1 <= q <= p");
    const double median = mu.quantile(0.5);
    const auto [lo, hi] = central_interval(mu, eps);
    const Measure1D compact = compactify(mu, eps);
    const double wq = wasserstein_p(mu, compact, q);
    const double lhs = std::pow(hi - lo, p - q) * std::pow(wq, q);
    const double constant = q == p ? 1.0 : std::pow(2.0, p);
    const double rhs = constant * tail_moment(mu, eps, p, median).tail_p_moment;
    return {lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-300};
}

bool compactification_error_check(const Measure1D& mu, double eps, double p, double q)
{
    return compactification_bound(mu, eps, p, q).holds;
}

}  // namespace nlmob
