#pragma once

// Sparse multilinear polynomials f(x) = sum_S a_S prod_{i in S} x_i with
// real coefficients, indexed by strictly sorted subsets of {0,...,n-1}.
// Canonical form: zero coefficients are never stored, so equality is
// term-map equality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deckit/rng.hpp"

namespace deckit {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using VarSet = std::vector<int>;  // strictly increasing variable indices

class MultilinearPoly {
public:
    using TermMap = std::map<VarSet, double>;

    MultilinearPoly() = default;
    explicit MultilinearPoly(int n) : n_(check_var_count(n)) {}
    MultilinearPoly(int n, TermMap terms) : n_(check_var_count(n)) {
        for (auto& [vars, coef] : terms) add_term(vars, coef);
    }

    int var_count() const { return n_; }
    int degree() const { return degree_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    bool is_homogeneous() const {
        for (const auto& [vars, coef] : terms_)
            if (static_cast<int>(vars.size()) != degree_) return false;
        return true;
    }

    double coef(const VarSet& vars) const {
        auto it = terms_.find(vars);
        return it == terms_.end() ? 0.0 : it->second;
    }

    double constant_term() const { return coef({}); }

    // Accumulates into an existing term; entries that cancel to exactly
    // zero are removed to keep the form canonical.
    void add_term(const VarSet& vars, double coef) {
        validate_set(vars, n_);
        if (!std::isfinite(coef)) throw std::invalid_argument("non-finite coefficient");
        if (coef == 0.0) return;
        auto [it, inserted] = terms_.try_emplace(vars, coef);
        if (!inserted) {
            it->second += coef;
            if (it->second == 0.0) {
                terms_.erase(it);
                recompute_degree();
                return;
            }
        }
        degree_ = std::max(degree_, static_cast<int>(vars.size()));
    }

    double eval(std::span<const double> point) const {
        if (static_cast<int>(point.size()) != n_)
            throw std::invalid_argument("eval: point has wrong dimension");
        double total = 0.0;
        for (const auto& [vars, coef] : terms_) {
            double m = coef;
            for (int v : vars) m *= point[static_cast<std::size_t>(v)];
            total += m;
        }
        return total;
    }

    // Parseval quantities: Var[f] = sum_{S != {}} a_S^2, Inf_i[f] = sum_{S ni i} a_S^2.
    double variance() const {
        double v = 0.0;
        for (const auto& [vars, coef] : terms_)
            if (!vars.empty()) v += coef * coef;
        return v;
    }

    double l2_squared() const {
        double v = 0.0;
        for (const auto& [vars, coef] : terms_) v += coef * coef;
        return v;
    }

    double coef_l1() const {
        double v = 0.0;
        for (const auto& [vars, coef] : terms_) v += std::fabs(coef);
        return v;
    }

    double influence(int i) const {
        check_index(i);
        double v = 0.0;
        for (const auto& [vars, coef] : terms_)
            if (std::binary_search(vars.begin(), vars.end(), i)) v += coef * coef;
        return v;
    }

    // Ties broken by smallest index.
    std::pair<int, double> max_influence() const {
        if (n_ == 0) throw std::invalid_argument("max_influence: polynomial has no variables");
        std::vector<double> inf(static_cast<std::size_t>(n_), 0.0);
        for (const auto& [vars, coef] : terms_)
            for (int v : vars) inf[static_cast<std::size_t>(v)] += coef * coef;
        int best = 0;
        for (int i = 1; i < n_; ++i)
            if (inf[static_cast<std::size_t>(i)] > inf[static_cast<std::size_t>(best)]) best = i;
        return {best, inf[static_cast<std::size_t>(best)]};
    }

    // g_i(x) = sum_{S ni i} a_S x_{S \ i}, over the same n variables.
    MultilinearPoly derivative(int i) const {
        check_index(i);
        MultilinearPoly g(n_);
        for (const auto& [vars, coef] : terms_) {
            if (!std::binary_search(vars.begin(), vars.end(), i)) continue;
            VarSet rest;
            rest.reserve(vars.size() - 1);
            for (int v : vars)
                if (v != i) rest.push_back(v);
            g.add_term(rest, coef);
        }
        return g;
    }

    MultilinearPoly degree_part(int j) const {
        if (j < 0) throw std::invalid_argument("degree_part: negative degree");
        MultilinearPoly p(n_);
        for (const auto& [vars, coef] : terms_)
            if (static_cast<int>(vars.size()) == j) p.add_term(vars, coef);
        return p;
    }

    MultilinearPoly scaled(double s) const {
        if (!std::isfinite(s)) throw std::invalid_argument("scaled: non-finite factor");
        MultilinearPoly p(n_);
        for (const auto& [vars, coef] : terms_) p.add_term(vars, s * coef);
        return p;
    }

    bool operator==(const MultilinearPoly& other) const {
        return n_ == other.n_ && terms_ == other.terms_;
    }

    static void validate_set(const VarSet& vars, int n) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i] < 0 || vars[i] >= n)
                throw std::invalid_argument("variable index out of range");
            if (i > 0 && vars[i] <= vars[i - 1])
                throw std::invalid_argument("variable set not strictly sorted");
        }
    }

private:
    static int check_var_count(int n) {
        if (n < 0) throw std::invalid_argument("negative variable count");
        return n;
    }
    void check_index(int i) const {
        if (i < 0 || i >= n_) throw std::invalid_argument("variable index out of range");
    }
    void recompute_degree() {
        degree_ = 0;
        for (const auto& [vars, coef] : terms_)
            degree_ = std::max(degree_, static_cast<int>(vars.size()));
    }

    int n_ = 0;
    int degree_ = 0;
    TermMap terms_;
};

// Flat representation for hot evaluation loops (Monte Carlo, enumeration).
struct CompiledPoly {
    int n = 0;
    std::vector<double> coefs;
    std::vector<std::uint32_t> offsets;  // coefs.size()+1 entries into vars
    std::vector<std::uint32_t> vars;

    double eval(const double* point) const {
        double total = 0.0;
        for (std::size_t t = 0; t < coefs.size(); ++t) {
            double m = coefs[t];
            for (std::uint32_t j = offsets[t]; j < offsets[t + 1]; ++j) m *= point[vars[j]];
            total += m;
        }
        return total;
    }
};

inline CompiledPoly compile(const MultilinearPoly& p) {
    CompiledPoly c;
    c.n = p.var_count();
    c.offsets.push_back(0);
    for (const auto& [vars, coef] : p.terms()) {
        c.coefs.push_back(coef);
        for (int v : vars) c.vars.push_back(static_cast<std::uint32_t>(v));
        c.offsets.push_back(static_cast<std::uint32_t>(c.vars.size()));
    }
    return c;
}

// --- JSON round trip -------------------------------------------------------
//
// {"n": <int>, "terms": [{"vars": [<sorted ints>], "coef": <float>}, ...]}

inline nlohmann::ordered_json poly_to_json_obj(const MultilinearPoly& p) {
    nlohmann::ordered_json terms = nlohmann::ordered_json::array();
    for (const auto& [vars, coef] : p.terms())
        terms.push_back({{"vars", vars}, {"coef", coef}});
    return {{"n", p.var_count()}, {"terms", std::move(terms)}};
}

inline std::string poly_to_json(const MultilinearPoly& p) {
    return poly_to_json_obj(p).dump();
}

inline MultilinearPoly poly_from_json_obj(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("terms"))
        throw ParseError("polynomial: expected object with \"n\" and \"terms\"");
    if (!j["n"].is_number_integer() || j["n"].get<long long>() < 0)
        throw ParseError("polynomial: \"n\" must be a non-negative integer");
    MultilinearPoly p(j["n"].get<int>());
    if (!j["terms"].is_array()) throw ParseError("polynomial: \"terms\" must be an array");
    std::size_t idx = 0;
    for (const auto& t : j["terms"]) {
        if (!t.is_object() || !t.contains("vars") || !t.contains("coef"))
            throw ParseError("polynomial: term " + std::to_string(idx) +
                             " must have \"vars\" and \"coef\"");
        VarSet vars;
        for (const auto& v : t["vars"]) {
            if (!v.is_number_integer())
                throw ParseError("polynomial: term " + std::to_string(idx) +
                                 " has a non-integer variable");
            vars.push_back(v.get<int>());
        }
        if (!t["coef"].is_number())
            throw ParseError("polynomial: term " + std::to_string(idx) + " has a non-numeric coef");
        if (p.coef(vars) != 0.0)
            throw ParseError("polynomial: duplicate variable set in term " + std::to_string(idx));
        try {
            p.add_term(vars, t["coef"].get<double>());
        } catch (const std::invalid_argument& e) {
            throw ParseError("polynomial: term " + std::to_string(idx) + ": " + e.what());
        }
        ++idx;
    }
    return p;
}

inline MultilinearPoly poly_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("polynomial: ") + e.what());  // carries byte position
    }
    return poly_from_json_obj(j);
}

// --- Random polynomials ----------------------------------------------------

namespace detail {

inline void collect_subsets(int n, int size, VarSet& cur, int start,
                            std::vector<VarSet>& out) {
    if (static_cast<int>(cur.size()) == size) {
        out.push_back(cur);
        return;
    }
    for (int v = start; v <= n - (size - static_cast<int>(cur.size())); ++v) {
        cur.push_back(v);
        collect_subsets(n, size, cur, v + 1, out);
        cur.pop_back();
    }
}

inline double choose_capped(int n, int k, double cap) {
    double c = 1.0;
    for (int j = 1; j <= k; ++j) {
        c *= static_cast<double>(n - j + 1) / j;
        if (c > cap) return cap + 1.0;
    }
    return c;
}

}  // namespace detail

// Deterministic in seed.  Coefficients are i.i.d. standard normal on the
// sampled support; the support is all subsets of size <= k (respectively
// == k when homogeneous) when there are at most max_terms of them, else a
// seeded without-replacement sample of max_terms subsets.
inline MultilinearPoly random_poly(int n, int k, bool homogeneous, std::uint64_t seed,
                                   std::size_t max_terms = 512) {
    if (n < 0) throw std::invalid_argument("random_poly: negative n");
    if (k < 0 || k > n) throw std::invalid_argument("random_poly: need 0 <= k <= n");
    if (max_terms == 0) throw std::invalid_argument("random_poly: max_terms must be positive");

    double total = 0.0;
    for (int j = homogeneous ? k : 0; j <= k; ++j)
        total += detail::choose_capped(n, j, 4e6);
    if (total > 4e6)
        throw std::invalid_argument("random_poly: support space too large to enumerate");

    std::vector<VarSet> candidates;
    VarSet cur;
    for (int j = homogeneous ? k : 0; j <= k; ++j)
        detail::collect_subsets(n, j, cur, 0, candidates);

    Rng rng(seed, fnv1a64("random_poly"));
    if (candidates.size() > max_terms) {
        // Partial Fisher-Yates: the first max_terms entries are a uniform sample.
        for (std::size_t i = 0; i < max_terms; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_index(candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(max_terms);
        std::sort(candidates.begin(), candidates.end());
    }

    MultilinearPoly p(n);
    for (const auto& vars : candidates) p.add_term(vars, rng.next_gaussian());
    return p;
}

}  // namespace deckit
