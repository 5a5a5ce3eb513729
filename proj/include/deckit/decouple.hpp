#pragma once

// The two decoupling transforms.
//
// One-block: each monomial x_S becomes sum_{i in S} y_i z_{S\i}, giving a
// polynomial over 2n variables (y block first, z block second) in which
// every monomial holds exactly one y variable.
//
// Full: each monomial x_S becomes the average over injective assignments of
// S into k blocks of n variables; block b occupies indices [b*n, b*n + n).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "deckit/multilinear.hpp"

namespace deckit {

struct BlockPoly {
    MultilinearPoly base;                      // over 2n variables
    int half_n = 0;                            // n
    std::vector<MultilinearPoly> derivatives;  // g_i over the n z-variables
};

struct FullDecoupledPoly {
    MultilinearPoly base;  // over blocks * per_block variables
    int blocks = 0;        // k
    int per_block = 0;     // n
};

inline BlockPoly one_block(const MultilinearPoly& f) {
    const int n = f.var_count();
    BlockPoly out;
    out.half_n = n;
    MultilinearPoly base(2 * n);
    for (const auto& [vars, coef] : f.terms()) {
        for (std::size_t pick = 0; pick < vars.size(); ++pick) {
            VarSet w;
            w.reserve(vars.size());
            for (std::size_t j = 0; j < vars.size(); ++j)
                w.push_back(j == pick ? vars[j] : vars[j] + n);
            std::sort(w.begin(), w.end());
            base.add_term(w, coef);
        }
    }
    out.base = std::move(base);
    out.derivatives.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.derivatives.push_back(f.derivative(i));
    return out;
}

// Var[odec f] = sum_j j * W_j where W_j is the Fourier weight at degree j.
inline double var_one_block(const MultilinearPoly& f) {
    double v = 0.0;
    for (const auto& [vars, coef] : f.terms())
        v += static_cast<double>(vars.size()) * coef * coef;
    return v;
}

namespace detail {

template <typename Fn>
void for_each_injection(int set_size, int blocks, Fn&& fn) {
    // All injective maps {0..set_size-1} -> {0..blocks-1}: choose the image
    // (combination), then every ordering of it.
    std::vector<int> image(static_cast<std::size_t>(set_size));
    std::iota(image.begin(), image.end(), 0);
    std::vector<int> perm;
    for (;;) {
        perm = image;
        std::sort(perm.begin(), perm.end());
        do {
            fn(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
        // next combination of {0..blocks-1} of size set_size
        int i = set_size - 1;
        while (i >= 0 && image[static_cast<std::size_t>(i)] == blocks - set_size + i) --i;
        if (i < 0) break;
        ++image[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < set_size; ++j)
            image[static_cast<std::size_t>(j)] = image[static_cast<std::size_t>(j - 1)] + 1;
    }
}

inline double injection_weight(int k, int set_size) {
    // (k - |S|)! / k! = 1 / (k * (k-1) * ... * (k-|S|+1))
    double w = 1.0;
    for (int m = 0; m < set_size; ++m) w /= static_cast<double>(k - m);
    return w;
}

}  // namespace detail

inline FullDecoupledPoly full_decouple(const MultilinearPoly& f, int k) {
    if (k < f.degree())
        throw std::invalid_argument("full_decouple: block count below polynomial degree");
    const int n = f.var_count();
    FullDecoupledPoly out;
    out.blocks = k;
    out.per_block = n;
    MultilinearPoly base(k * n);
    for (const auto& [vars, coef] : f.terms()) {
        const int j = static_cast<int>(vars.size());
        if (j == 0) {
            base.add_term({}, coef);
            continue;
        }
        const double w = detail::injection_weight(k, j) * coef;
        detail::for_each_injection(j, k, [&](const std::vector<int>& assign) {
            VarSet term(static_cast<std::size_t>(j));
            for (int m = 0; m < j; ++m)
                term[static_cast<std::size_t>(m)] =
                    assign[static_cast<std::size_t>(m)] * n + vars[static_cast<std::size_t>(m)];
            std::sort(term.begin(), term.end());
            base.add_term(term, w);
        });
    }
    out.base = std::move(base);
    return out;
}

inline FullDecoupledPoly full_decouple(const MultilinearPoly& f) {
    return full_decouple(f, f.degree());
}

// --- Reduction to homogeneous block-multilinear form -----------------------
//
// g = (2e)^{-k} * dec f, padded with one always-+1 dummy variable per block
// so that every monomial takes exactly one variable from each block.  Each
// block is widened to n+1 variables with the dummy last; query_map sends
// every input of g to the original coordinate it reads, or kDummyInput.

inline constexpr int kDummyInput = -1;

struct AaReduction {
    FullDecoupledPoly g;         // per_block == n + 1
    double scale = 1.0;          // (2e)^k, so f(x) = scale * g(diagonal, dummies = +1)
    std::vector<int> query_map;  // length k * (n + 1)
};

inline AaReduction aa_reduction(const MultilinearPoly& f, int k) {
    if (k < 1) throw std::invalid_argument("aa_reduction: need k >= 1");
    if (f.degree() > k)
        throw std::invalid_argument("aa_reduction: polynomial degree exceeds k");
    const int n = f.var_count();
    const int width = n + 1;
    const double inv_scale = std::pow(2.0 * std::exp(1.0), -k);

    MultilinearPoly base(k * width);
    for (const auto& [vars, coef] : f.terms()) {
        const int j = static_cast<int>(vars.size());
        const double w = detail::injection_weight(k, j) * coef * inv_scale;
        if (j == 0) {
            VarSet term;
            for (int b = 0; b < k; ++b) term.push_back(b * width + n);
            base.add_term(term, w);
            continue;
        }
        detail::for_each_injection(j, k, [&](const std::vector<int>& assign) {
            VarSet term;
            term.reserve(static_cast<std::size_t>(k));
            std::vector<char> used(static_cast<std::size_t>(k), 0);
            for (int m = 0; m < j; ++m) {
                const int b = assign[static_cast<std::size_t>(m)];
                used[static_cast<std::size_t>(b)] = 1;
                term.push_back(b * width + vars[static_cast<std::size_t>(m)]);
            }
            for (int b = 0; b < k; ++b)
                if (!used[static_cast<std::size_t>(b)]) term.push_back(b * width + n);
            std::sort(term.begin(), term.end());
            base.add_term(term, w);
        });
    }

    AaReduction out;
    out.g.base = std::move(base);
    out.g.blocks = k;
    out.g.per_block = width;
    out.scale = std::pow(2.0 * std::exp(1.0), k);
    out.query_map.resize(static_cast<std::size_t>(k * width));
    for (int b = 0; b < k; ++b)
        for (int i = 0; i <= n; ++i)
            out.query_map[static_cast<std::size_t>(b * width + i)] = (i == n) ? kDummyInput : i;
    return out;
}

// Point for g from a point for f, following the query map (dummies read +1).
inline std::vector<double> expand_queries(const AaReduction& r, std::span<const double> x) {
    std::vector<double> point(r.query_map.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const int src = r.query_map[i];
        point[i] = (src == kDummyInput) ? 1.0 : x[static_cast<std::size_t>(src)];
    }
    return point;
}

// --- Influence pullback -----------------------------------------------------
//
// For i indexing the 2n variables of odec f, the original coordinate
// i' = i mod n satisfies Inf_{i'}[f] >= Inf_i[odec f] / (k - 1).

struct InfluencePullback {
    int original_index = 0;
    double decoupled_influence = 0.0;
    double original_influence = 0.0;
    bool bound_holds = false;
};

inline InfluencePullback influence_pullback(const MultilinearPoly& f, int i) {
    const int k = f.degree();
    if (k < 2)
        throw std::invalid_argument(
            "influence_pullback: defined only for degree >= 2 (the relation divides by k-1)");
    const int n = f.var_count();
    if (i < 0 || i >= 2 * n)
        throw std::invalid_argument("influence_pullback: index out of range");
    const BlockPoly b = one_block(f);
    InfluencePullback out;
    out.original_index = i % n;
    out.decoupled_influence = b.base.influence(i);
    out.original_influence = f.influence(out.original_index);
    out.bound_holds =
        out.original_influence >= out.decoupled_influence / static_cast<double>(k - 1) -
                                      1e-12 * (1.0 + out.decoupled_influence);
    return out;
}

// --- Structure validation and JSON ------------------------------------------

inline void validate_block_structure(const MultilinearPoly& base, int n) {
    if (base.var_count() != 2 * n)
        throw std::invalid_argument("block polynomial: variable count is not 2n");
    for (const auto& [vars, coef] : base.terms()) {
        int ycount = 0;
        for (int v : vars) ycount += (v < n) ? 1 : 0;
        if (vars.empty() || ycount != 1)
            throw std::invalid_argument(
                "block polynomial: every monomial must hold exactly one y-variable");
    }
}

inline void validate_full_structure(const MultilinearPoly& base, int blocks, int per_block) {
    if (base.var_count() != blocks * per_block)
        throw std::invalid_argument("decoupled polynomial: variable count mismatch");
    for (const auto& [vars, coef] : base.terms()) {
        int last_block = -1;
        for (int v : vars) {
            const int b = per_block > 0 ? v / per_block : 0;
            if (b == last_block)
                throw std::invalid_argument(
                    "decoupled polynomial: monomial takes two variables from one block");
            last_block = b;
        }
    }
}

inline BlockPoly block_from_base(MultilinearPoly base, int n) {
    validate_block_structure(base, n);
    BlockPoly out;
    out.half_n = n;
    out.derivatives.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        MultilinearPoly g(n);
        for (const auto& [vars, coef] : base.terms()) {
            if (!std::binary_search(vars.begin(), vars.end(), i)) continue;
            VarSet rest;
            for (int v : vars)
                if (v != i) rest.push_back(v - n);
            g.add_term(rest, coef);
        }
        out.derivatives.push_back(std::move(g));
    }
    out.base = std::move(base);
    return out;
}

inline nlohmann::ordered_json block_to_json_obj(const BlockPoly& b) {
    return {{"one_block", true}, {"n", b.half_n}, {"poly", poly_to_json_obj(b.base)}};
}

inline std::string block_to_json(const BlockPoly& b) { return block_to_json_obj(b).dump(); }

inline BlockPoly block_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("block polynomial: ") + e.what());
    }
    if (!j.is_object() || j.value("one_block", false) != true || !j.contains("n") ||
        !j.contains("poly"))
        throw ParseError("block polynomial: expected {\"one_block\": true, \"n\", \"poly\"}");
    try {
        return block_from_base(poly_from_json_obj(j["poly"]), j["n"].get<int>());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("block polynomial: ") + e.what());
    }
}

inline nlohmann::ordered_json full_to_json_obj(const FullDecoupledPoly& d) {
    return {{"blocks", d.blocks}, {"per_block", d.per_block}, {"poly", poly_to_json_obj(d.base)}};
}

inline std::string full_to_json(const FullDecoupledPoly& d) { return full_to_json_obj(d).dump(); }

inline FullDecoupledPoly full_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("decoupled polynomial: ") + e.what());
    }
    if (!j.is_object() || !j.contains("blocks") || !j.contains("per_block") || !j.contains("poly"))
        throw ParseError("decoupled polynomial: expected {\"blocks\", \"per_block\", \"poly\"}");
    FullDecoupledPoly out;
    out.blocks = j["blocks"].get<int>();
    out.per_block = j["per_block"].get<int>();
    try {
        out.base = poly_from_json_obj(j["poly"]);
        validate_full_structure(out.base, out.blocks, out.per_block);
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("decoupled polynomial: ") + e.what());
    }
    return out;
}

}  // namespace deckit
