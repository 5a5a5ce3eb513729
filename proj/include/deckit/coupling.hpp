#pragma once

// Synthesis of the coupling triples (alpha_i, beta_i, c_i) realizing
//
//     odec f(y, z) = sum_i c_i f(alpha_i y + beta_i z)
//
// for the three input hypotheses:
//
//   H1  standard Gaussian inputs,    alpha^2 + beta^2 = 1
//   H2  uniform +-1 inputs,          |alpha| + |beta| = 1
//   H3  uniform +-1, f homogeneous,  |alpha| + |beta| = 1
//
// The c_i come from the closed-form Vandermonde inverse.  Writing
// Delta_i = beta_i/alpha_i = M/r_i with M a power of k and r_i a small
// rational index, the solution of the moment conditions
// sum_i c_i alpha_i^{k-t} beta_i^t = [t == k-1] is
//
//     c_i = alpha_i^{-k} * M^{1-k} * (v_i - sigma) / prod_{j != i} (v_i - v_j)
//
// with v_i = 1/r_i and sigma = sum_j v_j.  Magnitudes are accumulated in the
// log domain with separate sign tracking; the pairwise differences v_i - v_j
// are formed by exact 64-bit cross multiplication, so the only rounding is
// in the final exp().  A direct linear solve would lose most digits to
// Vandermonde ill-conditioning past k of about 12.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "deckit/multilinear.hpp"

namespace deckit {

enum class Hypothesis { H1, H2, H3 };
enum class SchemeMode { homogeneous, general };

inline const char* to_string(Hypothesis h) {
    switch (h) {
        case Hypothesis::H1: return "H1";
        case Hypothesis::H2: return "H2";
        case Hypothesis::H3: return "H3";
    }
    return "?";
}

inline const char* to_string(SchemeMode m) {
    return m == SchemeMode::homogeneous ? "homogeneous" : "general";
}

inline Hypothesis hypothesis_from_string(const std::string& s) {
    if (s == "H1" || s == "h1") return Hypothesis::H1;
    if (s == "H2" || s == "h2") return Hypothesis::H2;
    if (s == "H3" || s == "h3") return Hypothesis::H3;
    throw std::invalid_argument("unknown hypothesis: " + s);
}

inline SchemeMode mode_from_string(const std::string& s) {
    if (s == "homogeneous") return SchemeMode::homogeneous;
    if (s == "general") return SchemeMode::general;
    throw std::invalid_argument("unknown mode: " + s);
}

struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    bool operator==(const Rational&) const = default;
    Rational negated() const { return {-num, den}; }
    std::string str() const {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }
    static Rational parse(const std::string& s) {
        const auto slash = s.find('/');
        if (slash == std::string::npos) return {std::stoll(s), 1};
        return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
    }
};

struct CouplingEntry {
    Rational label;
    double alpha = 0.0;
    double beta = 0.0;
    double c = 0.0;
};

struct CouplingScheme {
    Hypothesis hypothesis = Hypothesis::H1;
    int k = 0;
    SchemeMode mode = SchemeMode::homogeneous;
    std::vector<CouplingEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }

    double c1_norm() const {
        double v = 0.0;
        for (const auto& e : entries) v += std::fabs(e.c);
        return v;
    }

    double lambda_min() const {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& e : entries)
            v = std::min(v, std::min(std::fabs(e.alpha), std::fabs(e.beta)));
        return entries.empty() ? 0.0 : v;
    }
};

// Index multiset of the construction, per hypothesis and parity of k:
//   H1/H3, k odd:   {+-1, ..., +-(k-1)/2, +-1/2}
//   H1/H3, k even:  {0, +-1, ..., +-(k-2)/2, +-1/2}
//   H2, any k:      {1, 2, ..., k, 1/2}
inline std::vector<Rational> index_set(int k, Hypothesis h) {
    if (k < 1) throw std::invalid_argument("index_set: need k >= 1");
    std::vector<Rational> labels;
    if (h == Hypothesis::H2) {
        for (int i = 1; i <= k; ++i) labels.emplace_back(i, 1);
        labels.emplace_back(1, 2);
        return labels;
    }
    if (k % 2 == 0) labels.emplace_back(0, 1);
    const int top = (k % 2 == 1) ? (k - 1) / 2 : (k - 2) / 2;
    for (int i = 1; i <= top; ++i) {
        labels.emplace_back(i, 1);
        labels.emplace_back(-i, 1);
    }
    labels.emplace_back(1, 2);
    labels.emplace_back(-1, 2);
    return labels;
}

namespace detail {

struct SignedLog {
    int sign = 0;        // -1, 0, +1
    double log_mag = 0;  // meaningful only when sign != 0
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }
};

// v = 1/label for H1/H3, 1/label^2 for H2; label 0 maps to v = 0.
struct InvIndex {
    long long num = 0;
    long long den = 1;
    double dbl() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline InvIndex inv_index(const Rational& label, Hypothesis h) {
    if (label.num == 0) return {0, 1};
    if (h == Hypothesis::H2) {
        long long n = label.den * label.den, d = label.num * label.num;
        return {n, d};
    }
    long long n = label.den, d = label.num;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    return {n, d};
}

struct EntryGeometry {
    double alpha, beta;
    double log_abs_alpha;
    int sign_alpha;
};

inline EntryGeometry entry_geometry(const Rational& label, int k, Hypothesis h) {
    const double p = static_cast<double>(label.num);
    const double q = static_cast<double>(label.den);
    EntryGeometry g{};
    if (label.num == 0) {  // alpha_0 = 1, beta_0 = 0
        g.alpha = 1.0;
        g.beta = 0.0;
        g.log_abs_alpha = 0.0;
        g.sign_alpha = 1;
        return g;
    }
    const double kd = static_cast<double>(k);
    switch (h) {
        case Hypothesis::H1: {
            const double a2 = kd * kd * q * q + p * p;
            const double root = std::sqrt(a2);
            g.alpha = p / root;
            g.beta = kd * q / root;
            g.log_abs_alpha = std::log(std::fabs(p)) - 0.5 * std::log(a2);
            break;
        }
        case Hypothesis::H2: {
            const double a2 = kd * kd * q * q + p * p;
            g.alpha = p * p / a2;
            g.beta = kd * kd * q * q / a2;
            g.log_abs_alpha = 2.0 * std::log(std::fabs(p)) - std::log(a2);
            break;
        }
        case Hypothesis::H3: {
            const double m = std::pow(kd, 1.5);
            const double d = q * m + std::fabs(p);
            g.alpha = p / d;
            g.beta = q * m / d;
            g.log_abs_alpha = std::log(std::fabs(p)) - std::log(d);
            break;
        }
    }
    g.sign_alpha = (g.alpha < 0.0) ? -1 : 1;
    return g;
}

inline double log_m(int k, Hypothesis h) {
    const double lk = std::log(static_cast<double>(k));
    switch (h) {
        case Hypothesis::H1: return lk;
        case Hypothesis::H2: return 2.0 * lk;
        case Hypothesis::H3: return 1.5 * lk;
    }
    return lk;
}

// c for one label of the homogeneous construction, in the log domain.
inline SignedLog closed_form_c(std::size_t i, const std::vector<InvIndex>& v, double sigma,
                               bool sigma_is_zero, int k, Hypothesis h,
                               const EntryGeometry& geo) {
    SignedLog out;
    double log_num;
    int sign_num;
    if (sigma_is_zero) {
        if (v[i].num == 0) return out;  // c_0 = 0, dropped by the caller
        log_num = std::log(std::fabs(static_cast<double>(v[i].num))) -
                  std::log(static_cast<double>(v[i].den));
        sign_num = v[i].num < 0 ? -1 : 1;
    } else {
        const double x = v[i].dbl() - sigma;
        if (x == 0.0) return out;
        log_num = std::log(std::fabs(x));
        sign_num = x < 0.0 ? -1 : 1;
    }
    double log_den = 0.0;
    int sign_den = 1;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j == i) continue;
        const long long dn = v[i].num * v[j].den - v[j].num * v[i].den;
        const long long dd = v[i].den * v[j].den;
        log_den += std::log(std::fabs(static_cast<double>(dn))) -
                   std::log(static_cast<double>(dd));
        if (dn < 0) sign_den = -sign_den;
    }
    out.log_mag = (1.0 - k) * log_m(k, h) + log_num - log_den - k * geo.log_abs_alpha;
    out.sign = sign_num * sign_den;
    if (k % 2 == 1 && geo.sign_alpha < 0) out.sign = -out.sign;
    return out;
}

// Homogeneous-case scheme for exact degree k.  For the symmetric index sets
// (H1/H3) only labels with positive numerator are computed; the mirror
// entries are emitted as exact negations (c_{-i} = -c_i, alpha_{-i} =
// -alpha_i, beta_{-i} = beta_i), which also drops label 0 since sigma = 0
// forces c_0 = 0.
inline std::vector<CouplingEntry> synth_homogeneous(int k, Hypothesis h) {
    const std::vector<Rational> labels = index_set(k, h);
    std::vector<InvIndex> v(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) v[i] = inv_index(labels[i], h);

    const bool symmetric = (h != Hypothesis::H2);
    double sigma = 0.0;
    if (!symmetric)
        for (const auto& vi : v) sigma += vi.dbl();

    std::vector<CouplingEntry> entries;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (symmetric && labels[i].num <= 0) continue;
        const EntryGeometry geo = entry_geometry(labels[i], k, h);
        const SignedLog c = closed_form_c(i, v, sigma, symmetric, k, h, geo);
        if (c.sign == 0) continue;
        entries.push_back({labels[i], geo.alpha, geo.beta, c.value()});
        if (symmetric)
            entries.push_back({labels[i].negated(), -geo.alpha, geo.beta, -c.value()});
    }
    return entries;
}

}  // namespace detail

inline CouplingScheme synth(int k, Hypothesis h, SchemeMode mode) {
    if (k < 1) throw std::invalid_argument("synth: need k >= 1");
    if (h == Hypothesis::H3 && mode == SchemeMode::general)
        throw std::invalid_argument(
            "synth: H3 is proved only for homogeneous polynomials; use H2 for general mode");

    CouplingScheme s;
    s.hypothesis = h;
    s.k = k;
    s.mode = mode;

    if (mode == SchemeMode::homogeneous) {
        s.entries = detail::synth_homogeneous(k, h);
    } else if (h == Hypothesis::H2) {
        // alpha + beta = 1 makes the homogeneous solution telescope down to
        // every degree k' < k with a spurious (k - k') at t = k'; averaging
        // against the alpha-negated copy cancels exactly that term.
        for (const auto& e : detail::synth_homogeneous(k, h)) {
            s.entries.push_back({e.label, e.alpha, e.beta, e.c / 2.0});
            s.entries.push_back({e.label, -e.alpha, e.beta, -e.c / 2.0});
        }
    } else {
        // H1: the degree-k scheme covers exactly the degrees of k's parity,
        // so pair an odd-degree scheme with an even-degree one and split f
        // into odd and even parts via (f(w) -+ f(-w))/2.
        const int k_odd = (k % 2 == 1) ? k : k - 1;
        const int k_even = (k % 2 == 0) ? k : k - 1;
        for (const auto& e : detail::synth_homogeneous(k_odd, h)) {
            s.entries.push_back({e.label, e.alpha, e.beta, e.c / 2.0});
            s.entries.push_back({e.label, -e.alpha, -e.beta, -e.c / 2.0});
        }
        if (k_even >= 1) {
            for (const auto& e : detail::synth_homogeneous(k_even, h)) {
                s.entries.push_back({e.label, e.alpha, e.beta, e.c / 2.0});
                s.entries.push_back({e.label, -e.alpha, -e.beta, e.c / 2.0});
            }
        }
    }

    // Construction invariants.
    for (const auto& e : s.entries) {
        const double norm = (h == Hypothesis::H1)
                                ? e.alpha * e.alpha + e.beta * e.beta
                                : std::fabs(e.alpha) + std::fabs(e.beta);
        if (std::fabs(norm - 1.0) > 1e-12)
            throw std::logic_error("synth: entry normalization violated");
        if (e.c == 0.0) throw std::logic_error("synth: zero coefficient not dropped");
    }
    if (s.size() > 4 * (k + 1)) throw std::logic_error("synth: entry count exceeds 4(k+1)");
    if (!(s.lambda_min() > 0.0)) throw std::logic_error("synth: lambda_min not positive");
    if (h == Hypothesis::H1) {
        const double limit = (mode == SchemeMode::homogeneous ? 20.0 : 40.0) * k;
        if (s.c1_norm() > limit) throw std::logic_error("synth: H1 coefficient norm bound violated");
    }
    return s;
}

// --- Moment conditions -------------------------------------------------------

struct MomentRow {
    int k_prime;
    int t;
    double value;
    double target;
};

struct MomentCheck {
    double max_residual = 0.0;
    std::vector<MomentRow> rows;
};

namespace detail {

inline double moment_sum(const CouplingScheme& s, int k_prime, int t) {
    // Neumaier-compensated sum of sign * exp(log-magnitude) terms.
    double sum = 0.0, comp = 0.0;
    for (const auto& e : s.entries) {
        const int pa = k_prime - t;
        double lg = std::log(std::fabs(e.c));
        int sign = e.c < 0 ? -1 : 1;
        if (pa > 0) {
            lg += pa * std::log(std::fabs(e.alpha));
            if (e.alpha < 0 && pa % 2 == 1) sign = -sign;
        }
        if (t > 0) {
            lg += t * std::log(std::fabs(e.beta));
            if (e.beta < 0 && t % 2 == 1) sign = -sign;
        }
        const double term = sign * std::exp(lg);
        const double next = sum + term;
        comp += (std::fabs(sum) >= std::fabs(term)) ? (sum - next) + term : (term - next) + sum;
        sum = next;
    }
    return sum + comp;
}

}  // namespace detail

// Residuals of sum_i c_i alpha_i^{k'-t} beta_i^t against [t == k'-1].
// Homogeneous mode checks k' = k (plus the lower degrees of k's parity
// under H1); general mode checks every k' <= k.
inline MomentCheck verify_moment_conditions(const CouplingScheme& s, int k) {
    std::vector<int> degrees;
    if (s.mode == SchemeMode::general) {
        for (int kp = 0; kp <= k; ++kp) degrees.push_back(kp);
    } else if (s.hypothesis == Hypothesis::H1) {
        for (int kp = k; kp >= 0; kp -= 2) degrees.push_back(kp);
    } else {
        degrees.push_back(k);
    }

    MomentCheck out;
    for (int kp : degrees) {
        for (int t = 0; t <= kp; ++t) {
            const double target = (t == kp - 1) ? 1.0 : 0.0;
            const double value = detail::moment_sum(s, kp, t);
            out.rows.push_back({kp, t, value, target});
            out.max_residual = std::max(out.max_residual, std::fabs(value - target));
        }
    }
    return out;
}

// --- Applying a scheme -------------------------------------------------------

inline double apply_scheme(const CouplingScheme& s, const MultilinearPoly& f,
                           std::span<const double> y, std::span<const double> z) {
    const int n = f.var_count();
    if (static_cast<int>(y.size()) != n || static_cast<int>(z.size()) != n)
        throw std::invalid_argument("apply_scheme: point dimension mismatch");
    if (f.degree() > s.k)
        throw std::invalid_argument("apply_scheme: polynomial degree exceeds scheme degree");
    if (s.mode == SchemeMode::homogeneous) {
        if (!f.is_homogeneous())
            throw std::invalid_argument(
                "apply_scheme: homogeneous-mode scheme applied to non-homogeneous polynomial");
        if (s.hypothesis == Hypothesis::H1) {
            if ((s.k - f.degree()) % 2 != 0)
                throw std::invalid_argument(
                    "apply_scheme: H1 homogeneous scheme covers only degrees of k's parity");
        } else if (f.degree() != s.k) {
            throw std::invalid_argument(
                "apply_scheme: H2/H3 homogeneous scheme requires degree exactly k");
        }
    }

    const CompiledPoly cp = compile(f);
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (const auto& e : s.entries) {
        for (int i = 0; i < n; ++i)
            w[static_cast<std::size_t>(i)] = e.alpha * y[static_cast<std::size_t>(i)] +
                                             e.beta * z[static_cast<std::size_t>(i)];
        total += e.c * cp.eval(w.data());
    }
    return total;
}

// --- Growth table ------------------------------------------------------------

struct C1GrowthRow {
    int k;
    double c1_norm;
    double lambda_min;
    int m;
};

inline std::vector<C1GrowthRow> c1_growth_table(int k_max, Hypothesis h, SchemeMode mode) {
    if (k_max < 1) throw std::invalid_argument("c1_growth_table: need k_max >= 1");
    std::vector<C1GrowthRow> rows;
    for (int k = 1; k <= k_max; ++k) {
        const CouplingScheme s = synth(k, h, mode);  // synth enforces the explicit H1 bounds
        rows.push_back({k, s.c1_norm(), s.lambda_min(), s.size()});
    }
    return rows;
}

// --- JSON --------------------------------------------------------------------

inline nlohmann::ordered_json scheme_to_json_obj(const CouplingScheme& s) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : s.entries)
        entries.push_back({{"label", e.label.str()},
                           {"alpha", e.alpha},
                           {"beta", e.beta},
                           {"c", e.c}});
    return {{"hypothesis", to_string(s.hypothesis)},
            {"k", s.k},
            {"mode", to_string(s.mode)},
            {"entries", std::move(entries)}};
}

inline std::string scheme_to_json(const CouplingScheme& s) { return scheme_to_json_obj(s).dump(); }

inline CouplingScheme scheme_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scheme: ") + e.what());
    }
    if (!j.is_object() || !j.contains("hypothesis") || !j.contains("k") || !j.contains("mode") ||
        !j.contains("entries"))
        throw ParseError("scheme: expected {\"hypothesis\", \"k\", \"mode\", \"entries\"}");
    CouplingScheme s;
    try {
        s.hypothesis = hypothesis_from_string(j["hypothesis"].get<std::string>());
        s.mode = mode_from_string(j["mode"].get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("scheme: ") + e.what());
    }
    s.k = j["k"].get<int>();
    for (const auto& je : j["entries"]) {
        CouplingEntry e;
        try {
            e.label = Rational::parse(je.at("label").get<std::string>());
        } catch (const std::exception&) {
            throw ParseError("scheme: bad entry label");
        }
        e.alpha = je.at("alpha").get<double>();
        e.beta = je.at("beta").get<double>();
        e.c = je.at("c").get<double>();
        s.entries.push_back(e);
    }
    return s;
}

}  // namespace deckit
