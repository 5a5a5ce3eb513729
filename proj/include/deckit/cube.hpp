#pragma once

// Exhaustive evaluation over the Boolean cube {-1,+1}^n.
//
// Point encoding: index b in [0, 2^n) encodes the point with
// x_i = +1 when bit i of b is 0, and x_i = -1 when bit i is 1.
// The value table is the Walsh-Hadamard transform of the coefficient
// vector (a_S placed at the bitmask of S), so all 2^n values cost
// O(n 2^n) adds instead of one evaluation per point.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "deckit/multilinear.hpp"

namespace deckit {

struct CubeEnumLimit {
    int max_vars = 22;
    CubeEnumLimit() = default;
    explicit CubeEnumLimit(int cap) : max_vars(cap) {
        if (cap < 1) throw std::invalid_argument("CubeEnumLimit: max_vars must be >= 1");
    }
};

class EnumLimitExceeded : public std::invalid_argument {
public:
    explicit EnumLimitExceeded(int n, int cap)
        : std::invalid_argument("exhaustive enumeration refused: " + std::to_string(n) +
                                " variables exceed the cap of " + std::to_string(cap) +
                                " (no silent sampling)") {}
};

inline void check_enum_cap(int n, const CubeEnumLimit& limit) {
    if (n > limit.max_vars) throw EnumLimitExceeded(n, limit.max_vars);
}

// f(x) for every cube point, indexed as described above.
inline std::vector<double> cube_values(const MultilinearPoly& p,
                                       const CubeEnumLimit& limit = {}) {
    const int n = p.var_count();
    check_enum_cap(n, limit);
    const std::size_t size = std::size_t{1} << n;
    std::vector<double> v(size, 0.0);
    for (const auto& [vars, coef] : p.terms()) {
        std::size_t mask = 0;
        for (int i : vars) mask |= std::size_t{1} << i;
        v[mask] += coef;
    }
    for (std::size_t len = 1; len < size; len <<= 1) {
        for (std::size_t i = 0; i < size; i += len << 1) {
            for (std::size_t j = i; j < i + len; ++j) {
                double a = v[j], b = v[j + len];
                v[j] = a + b;
                v[j + len] = a - b;
            }
        }
    }
    return v;
}

inline double sup_norm_cube(const MultilinearPoly& p, const CubeEnumLimit& limit = {}) {
    double best = 0.0;
    for (double x : cube_values(p, limit)) best = std::max(best, std::fabs(x));
    return best;
}

// (E |f|^p)^(1/p) under the uniform distribution on the cube; p >= 1.
inline double lp_norm_cube(const MultilinearPoly& p, double power,
                           const CubeEnumLimit& limit = {}) {
    if (!(power >= 1.0)) throw std::invalid_argument("lp_norm_cube: need p >= 1");
    const std::vector<double> v = cube_values(p, limit);
    double acc = 0.0;
    if (power == 1.0) {
        for (double x : v) acc += std::fabs(x);
    } else if (power == 2.0) {
        for (double x : v) acc += x * x;
    } else {
        for (double x : v) acc += std::pow(std::fabs(x), power);
    }
    double mean = acc / static_cast<double>(v.size());
    return power == 1.0 ? mean : std::pow(mean, 1.0 / power);
}

// Exact Pr[f(x) > t]: an integer count over 2^n, so the probability is a
// dyadic rational represented exactly.
inline double prob_gt_cube(const MultilinearPoly& p, double t,
                           const CubeEnumLimit& limit = {}) {
    const std::vector<double> v = cube_values(p, limit);
    std::size_t hits = 0;
    for (double x : v) hits += (x > t) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(v.size());
}

inline double prob_abs_gt_cube(const MultilinearPoly& p, double t,
                               const CubeEnumLimit& limit = {}) {
    const std::vector<double> v = cube_values(p, limit);
    std::size_t hits = 0;
    for (double x : v) hits += (std::fabs(x) > t) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(v.size());
}

// Pr[f(x) > t] when x_i = +1 with probability prob_plus[i], independently.
inline double prob_gt_biased_cube(const MultilinearPoly& p, double t,
                                  std::span<const double> prob_plus,
                                  const CubeEnumLimit& limit = {}) {
    const int n = p.var_count();
    if (static_cast<int>(prob_plus.size()) != n)
        throw std::invalid_argument("prob_gt_biased_cube: probability vector has wrong length");
    for (double q : prob_plus)
        if (!(q > 0.0 && q < 1.0))
            throw std::invalid_argument("prob_gt_biased_cube: probabilities must lie in (0,1)");
    const std::vector<double> v = cube_values(p, limit);
    std::vector<double> w(v.size(), 0.0);
    w[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t b = bit; b-- > 0;) {
            double base = w[b];
            w[b] = base * prob_plus[static_cast<std::size_t>(i)];
            w[b | bit] = base * (1.0 - prob_plus[static_cast<std::size_t>(i)]);
        }
    }
    double prob = 0.0;
    for (std::size_t b = 0; b < v.size(); ++b)
        if (v[b] > t) prob += w[b];
    return prob;
}

// E[f(x)] under the same product measure equals f(mu) by multilinearity.
inline double biased_mean(const MultilinearPoly& p, std::span<const double> prob_plus) {
    std::vector<double> mu(prob_plus.size());
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = 2.0 * prob_plus[i] - 1.0;
    return p.eval(mu);
}

}  // namespace deckit
