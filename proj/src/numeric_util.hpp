#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace nlmob::detail {

// Integral over an interval of length len of |l(s)|^p, where l is affine with
// end values l0 and l1.
inline double abs_pow_integral(double l0, double l1, double len, double p)
{
    if (len <= 0.0)
        return 0.0;
    if ((l0 < 0.0 && l1 > 0.0) || (l0 > 0.0 && l1 < 0.0)) {
        const double root = len * l0 / (l0 - l1);
        return root * std::pow(std::abs(l0), p) / (p + 1.0) +
               (len - root) * std::pow(std::abs(l1), p) / (p + 1.0);
    }
    const double a0 = std::abs(l0), a1 = std::abs(l1);
    const double spread = std::abs(a1 - a0);
    if (spread <= 1e-6 * std::max(a0, a1)) {
        // Nearly constant: 5-point Gauss-Legendre is exact to round-off here.
        static constexpr std::array<double, 5> nodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                                     0.5384693101056831, 0.9061798459386640};
        static constexpr std::array<double, 5> weights{0.2369268850561891, 0.4786286704993665,
                                                       0.5688888888888889, 0.4786286704993665,
                                                       0.2369268850561891};
        double total = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double s = 0.5 * (1.0 + nodes[k]);
            total += weights[k] * std::pow(a0 + (a1 - a0) * s, p);
        }
        return 0.5 * len * total;
    }
    return len * (std::pow(a1, p + 1.0) - std::pow(a0, p + 1.0)) / ((p + 1.0) * (a1 - a0));
}

// FNV-1a, used for config hashes.
inline std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace nlmob::detail
