#include "nlmob/transcription.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "nlmob/errors.hpp"

namespace nlmob {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Entry {
    std::size_t index;
    double coef;
};

}  // namespace

// One summand |v|^p theta(R)^{1-p} of the action, with v and the gap d behind
// R = 1/(N d) written as linear forms in the path states.
struct ActionTranscription::Term {
    double weight;  // dt * quadrature weight / (N+1)
    double v;
    std::array<Entry, 2> v_form;
    bool has_gap;
    double gap;
    int gap_len;
    std::array<Entry, 4> gap_form;
    double rho;
};

std::string to_string(StateRule rule)
{
    switch (rule) {
    case StateRule::Left:
        return "left";
    case StateRule::Midpoint:
        return "midpoint";
    case StateRule::Gauss2:
        return "gauss2";
    }
    return "?";
}

StateRule state_rule_from_string(const std::string& name)
{
    for (auto r : {StateRule::Left, StateRule::Midpoint, StateRule::Gauss2})
        if (to_string(r) == name)
            return r;
    throw DomainError("unknown state rule '" + name + "'");
}

namespace {

struct Node {
    double s, w;
};

std::vector<Node> nodes_for(StateRule rule)
{
    switch (rule) {
    case StateRule::Left:
        return {{0.0, 1.0}};
    case StateRule::Midpoint:
        return {{0.5, 1.0}};
    case StateRule::Gauss2: {
        const double h = 0.5 / std::sqrt(3.0);
        return {{0.5 - h, 0.5}, {0.5 + h, 0.5}};
    }
    }
    return {};
}

}  // namespace

ActionTranscription::ActionTranscription(ActionDensity density, RhoStarRule rule, int n, int intervals,
                                         StateRule state_rule)
    : density_(std::move(density)), rule_(rule), n_(n), K_(intervals), dt_(1.0 / intervals), state_rule_(state_rule)
{
    if (n < 1)
        throw DomainError("transcription: N must be >= 1");
    if (intervals < 1)
        throw DomainError("transcription: K must be >= 1");
}

template <class Visitor>
bool ActionTranscription::visit_terms(std::span<const double> s, Visitor&& visit) const
{
    const auto nodes = nodes_for(state_rule_);
    const double max_rho = density_.mobility().max_density() * (1.0 + 1e-12);
    for (int k = 0; k < K_; ++k) {
        for (int i = 0; i <= n_; ++i) {
            int j = i;
            if (i == n_)
                j = rule_.kind == RhoStarKind::LookBack ? n_ - 1 : -1;
            for (const auto& node : nodes) {
                Term t{};
                t.weight = dt_ * node.w / (n_ + 1);
                const std::size_t a = index(k, i), b = index(k + 1, i);
                t.v = (s[b] - s[a]) / dt_;
                t.v_form = {Entry{a, -1.0 / dt_}, Entry{b, 1.0 / dt_}};
                if (j >= 0) {
                    t.has_gap = true;
                    const double c0 = 1.0 - node.s, c1 = node.s;
                    t.gap_len = 0;
                    t.gap = 0.0;
                    for (auto [kk, c] : {std::pair{k, c0}, std::pair{k + 1, c1}}) {
                        if (c == 0.0)
                            continue;
                        t.gap_form[t.gap_len++] = Entry{index(kk, j + 1), c};
                        t.gap_form[t.gap_len++] = Entry{index(kk, j), -c};
                        t.gap += c * (s[index(kk, j + 1)] - s[index(kk, j)]);
                    }
                    if (!(t.gap > 0.0))
                        return false;
                    t.rho = 1.0 / (n_ * t.gap);
                    if (t.rho > max_rho)
                        return false;
                } else {
                    t.has_gap = false;
                    t.gap_len = 0;
                    t.rho = rule_.rho_star;
                }
                visit(k, t);
            }
        }
    }
    return true;
}

double ActionTranscription::value(std::span<const double> states) const
{
    double total = 0.0;
    const bool ok = visit_terms(states, [&](int, const Term& t) {
        total += t.weight * particle_action(density_, t.rho, t.v);
    });
    return ok ? total : kInf;
}

std::vector<double> ActionTranscription::interval_actions(std::span<const double> states) const
{
    std::vector<double> out(K_, 0.0);
    const bool ok = visit_terms(states, [&](int k, const Term& t) {
        out[k] += t.weight / dt_ * particle_action(density_, t.rho, t.v);
    });
    if (!ok)
        std::fill(out.begin(), out.end(), kInf);
    return out;
}

namespace {

// Derivatives of w(v, d) = |v|^p theta(R(d))^{1-p}, R = 1/(N d).
struct LocalDerivatives {
    double w_v, w_d, w_vv, w_vd, w_dd;
};

LocalDerivatives local_derivatives(const ActionDensity& density, int n, double v, bool has_gap, double rho,
                                   bool second_order)
{
    const Mobility& mob = density.mobility();
    const double p = density.p();
    const double th = mob.theta(rho);
    LocalDerivatives out{};
    if (!(th > 0.0))
        return out;  // singular term, only reachable with v == 0 on fixed states
    const double av = std::abs(v);
    const double sg = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    const double th_pow = std::pow(th, 1.0 - p);  // theta^{1-p}
    const double vp = std::pow(av, p);
    const double vp1 = p == 2.0 ? av : std::pow(av, p - 1.0);
    out.w_v = p * vp1 * sg * th_pow;
    if (second_order) {
        if (p == 2.0)
            out.w_vv = 2.0 * th_pow;
        else if (av > 0.0)
            out.w_vv = p * (p - 1.0) * std::pow(av, p - 2.0) * th_pow;
        else
            out.w_vv = p < 2.0 ? 1e12 * th_pow : 0.0;
    }
    if (!has_gap)
        return out;

    const double d1 = mob.theta_derivative(rho);
    const double d2 = mob.theta_second_derivative(rho);
    const double w_R = vp * (1.0 - p) * th_pow / th * d1;
    const double R_d = -n * rho * rho;
    out.w_d = w_R * R_d;
    if (second_order) {
        const double R_dd = 2.0 * n * n * rho * rho * rho;
        const double w_vR = p * vp1 * sg * (1.0 - p) * th_pow / th * d1;
        const double w_RR = vp * (1.0 - p) * th_pow / th * (-p * d1 * d1 / th + d2);
        out.w_vd = w_vR * R_d;
        out.w_dd = w_RR * R_d * R_d + w_R * R_dd;
    }
    return out;
}

}  // namespace

void ActionTranscription::add_gradient(std::span<const double> states, double weight, std::span<double> grad) const
{
    const bool ok = visit_terms(states, [&](int, const Term& t) {
        const auto d = local_derivatives(density_, n_, t.v, t.has_gap, t.rho, false);
        const double c = weight * t.weight;
        for (const auto& e : t.v_form)
            grad[e.index] += c * d.w_v * e.coef;
        for (int l = 0; l < t.gap_len; ++l)
            grad[t.gap_form[l].index] += c * d.w_d * t.gap_form[l].coef;
    });
    if (!ok)
        throw DomainError("action gradient: path leaves the cone");
}

void ActionTranscription::add_hessian(std::span<const double> states, double weight,
                                      std::vector<Eigen::Triplet<double>>& triplets) const
{
    const bool ok = visit_terms(states, [&](int, const Term& t) {
        const auto d = local_derivatives(density_, n_, t.v, t.has_gap, t.rho, true);
        const double c = weight * t.weight;
        auto push = [&](std::size_t r, std::size_t col, double val) {
            if (val != 0.0)
                triplets.emplace_back(static_cast<int>(r), static_cast<int>(col), val);
        };
        for (const auto& e : t.v_form)
            for (const auto& f : t.v_form)
                push(e.index, f.index, c * d.w_vv * e.coef * f.coef);
        for (int l = 0; l < t.gap_len; ++l) {
            const auto& g = t.gap_form[l];
            for (const auto& e : t.v_form) {
                const double val = c * d.w_vd * e.coef * g.coef;
                push(e.index, g.index, val);
                push(g.index, e.index, val);
            }
            for (int m = 0; m < t.gap_len; ++m) {
                const auto& h = t.gap_form[m];
                push(g.index, h.index, c * d.w_dd * g.coef * h.coef);
            }
        }
    });
    if (!ok)
        throw DomainError("action hessian: path leaves the cone");
}

std::vector<double> ActionTranscription::gradient(std::span<const double> states) const
{
    std::vector<double> g(size(), 0.0);
    add_gradient(states, 1.0, g);
    return g;
}

}  // namespace nlmob
