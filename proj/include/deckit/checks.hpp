#pragma once

// Executable statements of the verified inequalities and identities.  Each
// check returns a structured result with the measured quantities; the
// asserted direction is always lhs <= rhs, so slack = rhs - lhs is
// non-negative exactly when the check passes.
//
// Statistical honesty: a Monte Carlo check compares confidence-interval
// endpoints in the conservative direction, and a lower bound that falls
// below 10/count is reported as indeterminate rather than pass, since the
// estimator cannot resolve it.
//
// Exact-path priority: whenever the variable count permits exhaustive
// enumeration, probabilities are exact dyadic counts and the comparison
// carries no statistical tolerance.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "deckit/coupling.hpp"
#include "deckit/cube.hpp"
#include "deckit/decouple.hpp"
#include "deckit/montecarlo.hpp"
#include "deckit/multilinear.hpp"

namespace deckit {

struct CheckResult {
    enum class Status { pass, fail, indeterminate };

    std::string name;
    Status status = Status::fail;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    std::uint64_t seed = 0;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();

    bool passed() const { return status == Status::pass; }
};

inline const char* to_string(CheckResult::Status s) {
    switch (s) {
        case CheckResult::Status::pass: return "pass";
        case CheckResult::Status::fail: return "fail";
        case CheckResult::Status::indeterminate: return "indeterminate";
    }
    return "?";
}

inline nlohmann::ordered_json check_to_json_obj(const CheckResult& r) {
    return {{"name", r.name},  {"status", to_string(r.status)}, {"lhs", r.lhs},
            {"rhs", r.rhs},    {"slack", r.slack},              {"seed", r.seed},
            {"params", r.params}};
}

namespace detail {

inline CheckResult make_result(std::string name, bool pass, double lhs, double rhs,
                               std::uint64_t seed, nlohmann::ordered_json params) {
    CheckResult r;
    r.name = std::move(name);
    r.status = pass ? CheckResult::Status::pass : CheckResult::Status::fail;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.seed = seed;
    r.params = std::move(params);
    return r;
}

}  // namespace detail

// --- Coupling identity --------------------------------------------------------
//
// odec f(y,z) = sum_i c_i f(alpha_i y + beta_i z) at random points, residual
// normalized by (sum_S |a_S|) * ||c||_1.  Points follow the scheme's input
// model: Gaussian under H1, uniform +-1 under H2/H3.

inline CheckResult check_identity(const MultilinearPoly& f, const CouplingScheme& scheme,
                                  int points, std::uint64_t seed) {
    if (points < 1) throw std::invalid_argument("check_identity: need at least one point");
    const int n = f.var_count();
    const BlockPoly block = one_block(f);
    const CompiledPoly codec = compile(block.base);
    const CompiledPoly cf = compile(f);

    // Same compatibility gate as apply_scheme.
    {
        std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
        (void)apply_scheme(scheme, f, zero, zero);
    }

    Rng rng(seed, fnv1a64("check_identity"));
    const bool gaussian = scheme.hypothesis == Hypothesis::H1;
    std::vector<double> yz(static_cast<std::size_t>(2 * n));
    std::vector<double> w(static_cast<std::size_t>(n));
    double worst = 0.0;
    for (int p = 0; p < points; ++p) {
        for (auto& x : yz) x = gaussian ? rng.next_gaussian() : rng.next_rademacher();
        const double* y = yz.data();
        const double* z = yz.data() + n;
        double combo = 0.0;
        for (const auto& e : scheme.entries) {
            for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = e.alpha * y[i] + e.beta * z[i];
            combo += e.c * cf.eval(w.data());
        }
        worst = std::max(worst, std::fabs(codec.eval(yz.data()) - combo));
    }
    const double denom = std::max(f.coef_l1() * scheme.c1_norm(), 1e-300);
    const double lhs = worst / denom;
    const double tol = 1e-9;
    return detail::make_result(
        "identity", lhs <= tol, lhs, tol, seed,
        {{"k", scheme.k},
         {"hypothesis", to_string(scheme.hypothesis)},
         {"mode", to_string(scheme.mode)},
         {"n", n},
         {"points", points},
         {"max_abs_residual", worst}});
}

// --- Tail domination ------------------------------------------------------------
//
// Pr[|odec f(y,z)| > C_k t] <= D_k Pr[|f(x)| > t] with C_k = ||c||_1 and
//   D_k = m                                 under H1,
//   D_k = m * 4 * (e^2 / (2 lambda_min))^k  under H2/H3,
// compared conservatively as LHS ci_low <= D_k * RHS ci_high.

inline CheckResult check_tail_domination(const MultilinearPoly& f, Hypothesis h, double t,
                                         std::int64_t count, std::uint64_t seed,
                                         int workers = 1) {
    if (!(t >= 0.0)) throw std::invalid_argument("check_tail_domination: need t >= 0");
    const int k = f.degree();
    if (k < 1) throw std::invalid_argument("check_tail_domination: polynomial must be nonconstant");
    const SchemeMode mode =
        (h == Hypothesis::H3 || f.is_homogeneous()) ? SchemeMode::homogeneous : SchemeMode::general;
    const CouplingScheme scheme = synth(k, h, mode);
    const double ck = scheme.c1_norm();
    const double m = static_cast<double>(scheme.size());
    const double dk = (h == Hypothesis::H1)
                          ? m
                          : m * 4.0 * std::pow(std::exp(2.0) / (2.0 * scheme.lambda_min()),
                                               static_cast<double>(k));

    const int n = f.var_count();
    const Dist dist = (h == Hypothesis::H1) ? Dist::gaussian : Dist::rademacher;
    const CompiledPoly codec = compile(one_block(f).base);
    const CompiledPoly cf = compile(f);

    SampleSpec lhs_spec;
    lhs_spec.distribution = dist;
    lhs_spec.n = 2 * n;
    lhs_spec.count = count;
    lhs_spec.master_seed = seed;
    lhs_spec.stream_id = fnv1a64("tail_domination.lhs");
    SampleSpec rhs_spec = lhs_spec;
    rhs_spec.n = n;
    rhs_spec.stream_id = fnv1a64("tail_domination.rhs");
    const TailEstimate lhs_est =
        estimate_tail([&](const double* p) { return codec.eval(p); }, lhs_spec, ck * t, workers);
    const TailEstimate rhs_est =
        estimate_tail([&](const double* p) { return cf.eval(p); }, rhs_spec, t, workers);

    const double lhs = lhs_est.ci_low;
    const double rhs = dk * rhs_est.ci_high;
    return detail::make_result("tail_domination", lhs <= rhs, lhs, rhs, seed,
                               {{"k", k},
                                {"hypothesis", to_string(h)},
                                {"mode", to_string(mode)},
                                {"t", t},
                                {"count", count},
                                {"c1_norm", ck},
                                {"d_k", dk},
                                {"m", scheme.size()},
                                {"lambda_min", scheme.lambda_min()},
                                {"lhs_p_hat", lhs_est.p_hat},
                                {"lhs_hits", lhs_est.hits},
                                {"rhs_p_hat", rhs_est.p_hat},
                                {"rhs_hits", rhs_est.hits}});
}

// --- Hypercontractive floor ------------------------------------------------------
//
// Pr[f(x) > E f] >= (1/4) e^{-2k} for nonconstant f of degree at most k,
// by exact enumeration.  Under lambda-biased bits the floor becomes
// (1/4) (e^2 / (2 lambda))^{-k}.

struct BiasSpec {
    double lambda = 0.5;
    std::vector<int> sign_pattern;  // >= 0 biases the coordinate toward +1
};

inline CheckResult check_hypercon(const MultilinearPoly& f, const CubeEnumLimit& limit = {},
                                  const std::optional<BiasSpec>& bias = std::nullopt) {
    const int k = f.degree();
    if (k < 1)
        throw std::invalid_argument("check_hypercon: the bound concerns nonconstant polynomials");
    double prob, bound, mean;
    nlohmann::ordered_json params{{"k", k}, {"n", f.var_count()}};
    if (!bias) {
        mean = f.constant_term();
        prob = prob_gt_cube(f, mean, limit);
        bound = 0.25 * std::exp(-2.0 * k);
        params["bias"] = nullptr;
    } else {
        if (!(bias->lambda > 0.0 && bias->lambda <= 0.5))
            throw std::invalid_argument("check_hypercon: lambda must lie in (0, 1/2]");
        std::vector<double> prob_plus(static_cast<std::size_t>(f.var_count()));
        for (std::size_t i = 0; i < prob_plus.size(); ++i) {
            const bool toward_plus =
                bias->sign_pattern.empty() || bias->sign_pattern[i] >= 0;
            prob_plus[i] = toward_plus ? 1.0 - bias->lambda : bias->lambda;
        }
        mean = biased_mean(f, prob_plus);
        prob = prob_gt_biased_cube(f, mean, prob_plus, limit);
        bound = 0.25 * std::pow(2.0 * bias->lambda / std::exp(2.0), static_cast<double>(k));
        params["bias"] = {{"lambda", bias->lambda}};
    }
    params["mean"] = mean;
    params["prob_above_mean"] = prob;
    return detail::make_result("hypercon", bound <= prob, bound, prob, 0, std::move(params));
}

// --- One-liner influence bound ----------------------------------------------------
//
// For a one-block function bounded by 1 on the cube:
//   sum_i ||g_i||_1 <= 1,   ||g_i||_2 <= e^{k-1} ||g_i||_1,
//   MaxInf >= e^{2-2k} Var^2.

inline CheckResult check_one_liner(const BlockPoly& block, const CubeEnumLimit& limit = {}) {
    const int n = block.half_n;
    const int k = block.base.degree();
    const std::vector<double> values = cube_values(block.base, limit);
    double sup = 0.0;
    std::size_t witness = 0;
    for (std::size_t b = 0; b < values.size(); ++b)
        if (std::fabs(values[b]) > sup) {
            sup = std::fabs(values[b]);
            witness = b;
        }
    if (sup > 1.0 + 1e-9) {
        std::string point;
        for (int i = 0; i < 2 * n; ++i)
            point += ((witness >> i) & 1) ? '-' : '+';
        throw std::invalid_argument(
            "check_one_liner: block function exceeds 1 on the cube (|f| = " +
            std::to_string(sup) + " at " + point + ")");
    }

    double sum_l1 = 0.0;
    double worst_l2_ratio = 0.0;  // max over i of ||g_i||_2 / (e^{k-1} ||g_i||_1)
    const double ek1 = std::exp(static_cast<double>(k - 1));
    for (const auto& g : block.derivatives) {
        const double l1 = lp_norm_cube(g, 1.0, limit);
        const double l2 = std::sqrt(g.l2_squared());
        sum_l1 += l1;
        if (l1 > 0.0) worst_l2_ratio = std::max(worst_l2_ratio, l2 / (ek1 * l1));
    }
    const double var = block.base.variance();
    const double maxinf = (2 * n > 0) ? block.base.max_influence().second : 0.0;
    const double floor = std::exp(2.0 - 2.0 * k) * var * var;

    const double guard = 1e-12;
    const bool ok = sum_l1 <= 1.0 + guard && worst_l2_ratio <= 1.0 + guard &&
                    floor <= maxinf + guard * (1.0 + maxinf);
    return detail::make_result("one_liner", ok, floor, maxinf, 0,
                               {{"k", k},
                                {"n", n},
                                {"sup_norm", sup},
                                {"sum_l1", sum_l1},
                                {"max_l2_over_bound", worst_l2_ratio},
                                {"variance", var},
                                {"max_influence", maxinf}});
}

// --- Gaussian tail of a one-block polynomial -----------------------------------
//
// With sigma^2 = sum_i ||g_i||_2^2 (Parseval), the tail obeys
// Pr[|f(y,z)| > u] >= (1/4) e^{-2(2k-1)} * 2 Q(u/sigma); the Monte Carlo
// upper endpoint must not contradict it.

inline CheckResult check_decoupled_tail(const BlockPoly& block, double u, std::int64_t count,
                                        std::uint64_t seed, int workers = 1) {
    if (!(u > 0.0)) throw std::invalid_argument("check_decoupled_tail: need u > 0");
    const int k = block.base.degree();
    double sigma2 = 0.0;
    for (const auto& g : block.derivatives) sigma2 += g.l2_squared();
    if (sigma2 <= 0.0)
        throw std::invalid_argument("check_decoupled_tail: block polynomial has zero variance");
    const double sigma = std::sqrt(sigma2);
    const double bound = 0.25 * std::exp(-2.0 * (2.0 * k - 1.0)) * 2.0 * normal_q(u / sigma);

    const CompiledPoly cb = compile(block.base);
    SampleSpec spec;
    spec.distribution = Dist::gaussian;
    spec.n = 2 * block.half_n;
    spec.count = count;
    spec.master_seed = seed;
    spec.stream_id = fnv1a64("decoupled_tail");
    const TailEstimate est =
        estimate_tail([&](const double* p) { return cb.eval(p); }, spec, u, workers);

    nlohmann::ordered_json params{{"k", k},       {"n", block.half_n}, {"u", u},
                                  {"sigma", sigma}, {"count", count},    {"p_hat", est.p_hat},
                                  {"hits", est.hits}};
    const double resolution = 10.0 / static_cast<double>(count);
    if (bound < resolution) {
        CheckResult r = detail::make_result("decoupled_tail", false, bound, est.ci_high, seed,
                                            std::move(params));
        r.status = CheckResult::Status::indeterminate;
        r.params["reason"] = "bound below Monte Carlo resolution (10/count)";
        return r;
    }
    return detail::make_result("decoupled_tail", bound <= est.ci_high, bound, est.ci_high, seed,
                               std::move(params));
}

// --- Sup-norm comparisons ---------------------------------------------------------
//
//   ||dec f||_inf  <= (2e)^k ||f||_inf
//   ||f^{=j}||_inf <= 2^j    ||f||_inf   for every j <= k
//   ||odec f||_inf <= ||c||_1(H2 general) ||f||_inf
// by exhaustive enumeration.

inline CheckResult check_supnorms(const MultilinearPoly& f, int k, const CubeEnumLimit& limit = {}) {
    if (k < std::max(1, f.degree()))
        throw std::invalid_argument("check_supnorms: need k >= degree(f) and k >= 1");
    const int n = f.var_count();
    check_enum_cap(std::max(n * k, 2 * n), limit);

    const double sup_f = sup_norm_cube(f, limit);
    const double sup_dec = sup_norm_cube(full_decouple(f, k).base, limit);
    const double sup_odec = sup_norm_cube(one_block(f).base, limit);
    const double c1_h2 = synth(k, Hypothesis::H2, SchemeMode::general).c1_norm();

    const double guard = 1e-12;
    double worst = -1.0;  // max violation over all sub-inequalities
    nlohmann::ordered_json parts = nlohmann::ordered_json::array();
    auto record = [&](const std::string& what, double lhs, double rhs) {
        parts.push_back({{"check", what}, {"lhs", lhs}, {"rhs", rhs}});
        worst = std::max(worst, lhs - rhs - guard * (1.0 + rhs));
    };
    record("dec_2e_k", sup_dec, std::pow(2.0 * std::exp(1.0), k) * sup_f);
    for (int j = 0; j <= f.degree(); ++j)
        record("degree_part_" + std::to_string(j), sup_norm_cube(f.degree_part(j), limit),
               std::pow(2.0, j) * sup_f);
    record("odec_c1_h2", sup_odec, c1_h2 * sup_f);

    return detail::make_result("supnorms", worst <= 0.0, worst, 0.0, 0,
                               {{"k", k},
                                {"n", n},
                                {"sup_f", sup_f},
                                {"sup_dec", sup_dec},
                                {"sup_odec", sup_odec},
                                {"c1_h2", c1_h2},
                                {"parts", std::move(parts)}});
}

// --- Gaussian anti-concentration chain ---------------------------------------------
//
// Pr[|f(x)| > t] >= D_k^{-1} Pr[|odec f(y,z)| > C_k t] with the H1 scheme,
// checked as RHS ci_low / D_k <= LHS ci_high.  The composed explicit floor
// (1/4) e^{-2(2k-1)} * 2 Q(C_k t / sigma') / D_k with sigma'^2 = Var[odec f]
// is reported alongside.

inline CheckResult check_gaussian_dfko(const MultilinearPoly& f, double t, std::int64_t count,
                                       std::uint64_t seed, int workers = 1) {
    if (!(t >= 1.0)) throw std::invalid_argument("check_gaussian_dfko: need t >= 1");
    if (f.variance() < 1.0 - 1e-9)
        throw std::invalid_argument("check_gaussian_dfko: need Var[f] >= 1");
    const int k = f.degree();
    if (k < 1) throw std::invalid_argument("check_gaussian_dfko: polynomial must be nonconstant");

    const SchemeMode mode = f.is_homogeneous() ? SchemeMode::homogeneous : SchemeMode::general;
    const CouplingScheme scheme = synth(k, Hypothesis::H1, mode);
    const double ck = scheme.c1_norm();
    const double dk = static_cast<double>(scheme.size());

    const int n = f.var_count();
    const CompiledPoly cf = compile(f);
    const CompiledPoly codec = compile(one_block(f).base);
    SampleSpec f_spec;
    f_spec.distribution = Dist::gaussian;
    f_spec.n = n;
    f_spec.count = count;
    f_spec.master_seed = seed;
    f_spec.stream_id = fnv1a64("gaussian_dfko.f");
    SampleSpec odec_spec = f_spec;
    odec_spec.n = 2 * n;
    odec_spec.stream_id = fnv1a64("gaussian_dfko.odec");
    const TailEstimate f_est =
        estimate_tail([&](const double* p) { return cf.eval(p); }, f_spec, t, workers);
    const TailEstimate odec_est =
        estimate_tail([&](const double* p) { return codec.eval(p); }, odec_spec, ck * t, workers);

    const double sigma_prime = std::sqrt(var_one_block(f));
    const double composed = 0.25 * std::exp(-2.0 * (2.0 * k - 1.0)) * 2.0 *
                            normal_q(ck * t / sigma_prime) / dk;

    nlohmann::ordered_json params{{"k", k},
                                  {"t", t},
                                  {"count", count},
                                  {"mode", to_string(mode)},
                                  {"c1_norm", ck},
                                  {"d_k", dk},
                                  {"sigma_prime", sigma_prime},
                                  {"composed_lower_bound", composed},
                                  {"f_p_hat", f_est.p_hat},
                                  {"f_hits", f_est.hits},
                                  {"odec_p_hat", odec_est.p_hat},
                                  {"odec_hits", odec_est.hits}};
    const double lhs = odec_est.ci_low / dk;
    const double rhs = f_est.ci_high;
    if (f_est.hits == 0 && odec_est.hits == 0) {
        CheckResult r = detail::make_result("gaussian_dfko", false, lhs, rhs, seed, std::move(params));
        r.status = CheckResult::Status::indeterminate;
        r.params["reason"] = "no hits on either side";
        return r;
    }
    return detail::make_result("gaussian_dfko", lhs <= rhs, lhs, rhs, seed, std::move(params));
}

// --- Fixed verification battery ------------------------------------------------------

inline std::vector<CheckResult> verification_suite(std::uint64_t seed, int workers = 1,
                                                   std::int64_t mc_count = 200000) {
    std::vector<CheckResult> results;
    auto sub_seed = [&](const char* tag) { return stream_state(seed, fnv1a64(tag)); };
    auto rename = [](CheckResult r, const std::string& name) {
        r.name = name;
        return r;
    };

    {
        MultilinearPoly f = random_poly(8, 4, true, sub_seed("poly.identity.h1hom"));
        results.push_back(rename(
            check_identity(f, synth(4, Hypothesis::H1, SchemeMode::homogeneous), 1000,
                           sub_seed("identity.h1hom")),
            "identity/h1-homogeneous-k4"));
    }
    {
        MultilinearPoly f = random_poly(8, 5, false, sub_seed("poly.identity.h2gen"));
        results.push_back(rename(
            check_identity(f, synth(5, Hypothesis::H2, SchemeMode::general), 1000,
                           sub_seed("identity.h2gen")),
            "identity/h2-general-k5"));
    }
    {
        MultilinearPoly f = random_poly(6, 3, true, sub_seed("poly.identity.h3hom"));
        results.push_back(rename(
            check_identity(f, synth(3, Hypothesis::H3, SchemeMode::homogeneous), 1000,
                           sub_seed("identity.h3hom")),
            "identity/h3-homogeneous-k3"));
    }
    {
        MultilinearPoly f = random_poly(7, 4, false, sub_seed("poly.identity.h1gen"));
        results.push_back(rename(
            check_identity(f, synth(4, Hypothesis::H1, SchemeMode::general), 1000,
                           sub_seed("identity.h1gen")),
            "identity/h1-general-k4"));
    }
    results.push_back(rename(
        check_supnorms(random_poly(5, 2, false, sub_seed("poly.supnorms.a")), 2),
        "supnorms/k2-n5"));
    results.push_back(rename(
        check_supnorms(random_poly(7, 3, false, sub_seed("poly.supnorms.b")), 3),
        "supnorms/k3-n7"));
    results.push_back(rename(
        check_hypercon(random_poly(10, 3, false, sub_seed("poly.hypercon.a"))),
        "hypercon/uniform-k3-n10"));
    results.push_back(rename(
        check_hypercon(random_poly(8, 2, false, sub_seed("poly.hypercon.b")), CubeEnumLimit{},
                       BiasSpec{0.25, {}}),
        "hypercon/biased-lambda0.25-k2-n8"));

    auto bounded_block = [&](int n, int k, const char* tag) {
        MultilinearPoly f = random_poly(n, k, false, sub_seed(tag));
        f = f.scaled(1.0 / sup_norm_cube(f));
        const double c1 = synth(k, Hypothesis::H2, SchemeMode::general).c1_norm();
        return block_from_base(one_block(f).base.scaled(1.0 / c1), n);
    };
    results.push_back(rename(check_one_liner(bounded_block(6, 3, "poly.oneliner.a")),
                             "one_liner/k3-n6"));
    results.push_back(rename(check_one_liner(bounded_block(8, 2, "poly.oneliner.b")),
                             "one_liner/k2-n8"));

    {
        MultilinearPoly f = random_poly(6, 3, false, sub_seed("poly.taildom.h1"));
        results.push_back(rename(check_tail_domination(f, Hypothesis::H1, 1.0, mc_count,
                                                       sub_seed("taildom.h1"), workers),
                                 "tail_domination/h1-k3-t1"));
    }
    {
        MultilinearPoly f = random_poly(8, 2, false, sub_seed("poly.taildom.h2"));
        results.push_back(rename(check_tail_domination(f, Hypothesis::H2, 0.5, mc_count,
                                                       sub_seed("taildom.h2"), workers),
                                 "tail_domination/h2-k2-t0.5"));
    }
    // low degrees keep the explicit floor above Monte Carlo resolution at the
    // default sample count, so these pass rather than come back indeterminate
    {
        BlockPoly b = one_block(random_poly(6, 1, false, sub_seed("poly.dectail.a")));
        double sigma = std::sqrt(b.base.variance());
        results.push_back(rename(
            check_decoupled_tail(b, sigma, mc_count, sub_seed("dectail.a"), workers),
            "decoupled_tail/k1-u-sigma"));
    }
    {
        BlockPoly b = one_block(random_poly(7, 2, false, sub_seed("poly.dectail.b")));
        double sigma = std::sqrt(b.base.variance());
        results.push_back(rename(
            check_decoupled_tail(b, 0.5 * sigma, mc_count, sub_seed("dectail.b"), workers),
            "decoupled_tail/k2-u-half-sigma"));
    }
    {
        MultilinearPoly f = random_poly(6, 2, false, sub_seed("poly.dfko"));
        f = f.scaled(1.0 / std::sqrt(f.variance()));
        results.push_back(rename(
            check_gaussian_dfko(f, 1.0, mc_count, sub_seed("dfko"), workers),
            "gaussian_dfko/k2-t1"));
    }
    return results;
}

// 0 if everything passed, 1 if anything failed, 3 if nothing failed but some
// check was indeterminate.
inline int suite_exit_code(const std::vector<CheckResult>& results) {
    bool any_fail = false, any_indet = false;
    for (const auto& r : results) {
        any_fail |= r.status == CheckResult::Status::fail;
        any_indet |= r.status == CheckResult::Status::indeterminate;
    }
    if (any_fail) return 1;
    return any_indet ? 3 : 0;
}

}  // namespace deckit
