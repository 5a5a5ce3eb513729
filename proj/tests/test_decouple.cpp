#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deckit/cube.hpp"
#include "deckit/decouple.hpp"

using namespace deckit;

namespace {

std::vector<double> gaussian_point(Rng& rng, int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = rng.next_gaussian();
    return x;
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

std::vector<double> repeat(const std::vector<double>& x, int copies) {
    std::vector<double> r;
    for (int c = 0; c < copies; ++c) r.insert(r.end(), x.begin(), x.end());
    return r;
}

}  // namespace

TEST_CASE("one_block on a single monomial") {
    MultilinearPoly f(7);
    f.add_term({0, 2, 6}, 1.0);
    const BlockPoly b = one_block(f);
    CHECK(b.half_n == 7);
    CHECK(b.base.var_count() == 14);
    REQUIRE(b.base.terms().size() == 3);
    // y0 z2 z6 + z0 y2 z6 + z0 z2 y6 with the z-block shifted by 7
    CHECK(b.base.coef({0, 9, 13}) == 1.0);
    CHECK(b.base.coef({2, 7, 13}) == 1.0);
    CHECK(b.base.coef({6, 7, 9}) == 1.0);
}

TEST_CASE("one_block of a constant is the zero block polynomial") {
    MultilinearPoly f(3);
    f.add_term({}, 5.0);
    CHECK(one_block(f).base.is_zero());
}

TEST_CASE("one_block diagonal identity for homogeneous inputs") {
    const int k = 3;
    auto f = random_poly(6, k, true, 21);
    const BlockPoly b = one_block(f);
    Rng rng(31, 7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = gaussian_point(rng, 6);
        const double lhs = b.base.eval(concat(x, x));
        const double rhs = k * f.eval(x);
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * (1.0 + std::fabs(rhs)));
    }
}

TEST_CASE("one_block base decomposes through the derivatives") {
    auto f = random_poly(5, 3, false, 8);
    const BlockPoly b = one_block(f);
    REQUIRE(b.derivatives.size() == 5);
    Rng rng(17, 3);
    const double scale = f.coef_l1();
    for (int trial = 0; trial < 50; ++trial) {
        const auto y = gaussian_point(rng, 5);
        const auto z = gaussian_point(rng, 5);
        double sum = 0.0;
        for (int i = 0; i < 5; ++i) sum += y[static_cast<std::size_t>(i)] * b.derivatives[static_cast<std::size_t>(i)].eval(z);
        CHECK(std::fabs(b.base.eval(concat(y, z)) - sum) <= 1e-10 * (1.0 + scale));
    }
}

TEST_CASE("one_block monomial count and linearity") {
    auto f = random_poly(7, 4, false, 12);
    std::size_t expected = 0;
    for (const auto& [vars, coef] : f.terms()) expected += vars.size();
    CHECK(one_block(f).base.terms().size() == expected);

    // odec(2f - 3g) = 2 odec f - 3 odec g, term for term
    auto g = random_poly(7, 4, false, 13);
    MultilinearPoly combo(7);
    for (const auto& [vars, coef] : f.terms()) combo.add_term(vars, 2.0 * coef);
    for (const auto& [vars, coef] : g.terms()) combo.add_term(vars, -3.0 * coef);
    MultilinearPoly expected_base(14);
    const auto obf = one_block(f), obg = one_block(g);
    for (const auto& [vars, coef] : obf.base.terms()) expected_base.add_term(vars, 2.0 * coef);
    for (const auto& [vars, coef] : obg.base.terms()) expected_base.add_term(vars, -3.0 * coef);
    const auto lin = one_block(combo).base;
    REQUIRE(lin.terms().size() == expected_base.terms().size());
    for (const auto& [vars, coef] : lin.terms())
        CHECK(coef == doctest::Approx(expected_base.coef(vars)).epsilon(1e-12));
}

TEST_CASE("full decoupling of x0x1x2 into three blocks") {
    MultilinearPoly f(3);
    f.add_term({0, 1, 2}, 1.0);
    const FullDecoupledPoly d = full_decouple(f, 3);
    CHECK(d.base.var_count() == 9);
    REQUIRE(d.base.terms().size() == 6);
    for (const auto& [vars, coef] : d.base.terms())
        CHECK(coef == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    validate_full_structure(d.base, 3, 3);
}

TEST_CASE("full decoupling of a single variable") {
    MultilinearPoly f(1);
    f.add_term({0}, 1.0);
    const FullDecoupledPoly d = full_decouple(f, 2);
    REQUIRE(d.base.terms().size() == 2);
    CHECK(d.base.coef({0}) == 0.5);
    CHECK(d.base.coef({1}) == 0.5);
}

TEST_CASE("full decoupling diagonal identity and preconditions") {
    auto f = random_poly(6, 4, false, 33);
    const FullDecoupledPoly d = full_decouple(f, 4);
    Rng rng(5, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = gaussian_point(rng, 6);
        CHECK(std::fabs(d.base.eval(repeat(x, 4)) - f.eval(x)) <=
              1e-10 * (1.0 + f.coef_l1()));
    }
    CHECK(d.base.coef({}) == f.coef({}));  // constant preserved
    CHECK_THROWS_AS((void)full_decouple(f, 3), std::invalid_argument);
}

TEST_CASE("partial diagonal relates the two decouplings (homogeneous)") {
    const int k = 3;
    auto f = random_poly(5, k, true, 41);
    const FullDecoupledPoly d = full_decouple(f, k);
    const BlockPoly b = one_block(f);
    Rng rng(6, 6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto y = gaussian_point(rng, 5);
        const auto z = gaussian_point(rng, 5);
        const auto point = concat(y, repeat(z, k - 1));
        const double lhs = d.base.eval(point);
        const double rhs = b.base.eval(concat(y, z)) / k;
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * (1.0 + std::fabs(rhs)));
    }
}

TEST_CASE("var_one_block") {
    MultilinearPoly f(2);
    f.add_term({0, 1}, 1.0);
    CHECK(var_one_block(f) == 2.0);

    MultilinearPoly g(2);
    g.add_term({0}, 1.0);
    g.add_term({0, 1}, 1.0);
    CHECK(var_one_block(g) == 3.0);

    auto h = random_poly(6, 3, true, 4);
    h = h.scaled(1.0 / std::sqrt(h.variance()));
    CHECK(var_one_block(h) == doctest::Approx(3.0).epsilon(1e-12));

    auto r = random_poly(7, 4, false, 9);
    CHECK(var_one_block(r) == doctest::Approx(one_block(r).base.variance()).epsilon(1e-12));
}

TEST_CASE("variance ratio between the two decouplings (homogeneous)") {
    // Var[odec f] = k * W_k and Var[dec f] = W_k / k!, so the exact ratio is
    // k * k!.  (Over uniform +-1 and Gaussians alike, by Parseval.)
    for (int k = 1; k <= 4; ++k) {
        auto f = random_poly(5, k, true, 50 + static_cast<std::uint64_t>(k));
        const double vo = one_block(f).base.variance();
        const double vd = full_decouple(f, k).base.variance();
        double kfact = 1.0;
        for (int j = 2; j <= k; ++j) kfact *= j;
        CHECK(vo / vd == doctest::Approx(k * kfact).epsilon(1e-10));
    }
}

TEST_CASE("reduction to homogeneous block-multilinear form") {
    MultilinearPoly f(2);
    f.add_term({0, 1}, 1.0);
    const AaReduction r = aa_reduction(f, 2);
    CHECK(r.g.blocks == 2);
    CHECK(r.g.per_block == 3);
    CHECK(r.scale == doctest::Approx(std::pow(2.0 * std::exp(1.0), 2)).epsilon(1e-15));
    REQUIRE(r.g.base.terms().size() == 2);
    const double w = 0.5 / std::pow(2.0 * std::exp(1.0), 2);
    CHECK(r.g.base.coef({0, 4}) == doctest::Approx(w).epsilon(1e-15));
    CHECK(r.g.base.coef({1, 3}) == doctest::Approx(w).epsilon(1e-15));
    CHECK(sup_norm_cube(r.g.base) ==
          doctest::Approx(std::pow(2.0 * std::exp(1.0), -2)).epsilon(1e-12));
}

TEST_CASE("reduction reconstructs f on the diagonal") {
    auto f = random_poly(5, 3, false, 61);
    const AaReduction r = aa_reduction(f, 3);
    Rng rng(8, 8);
    std::vector<double> x(5);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& v : x) v = rng.next_rademacher();
        const auto point = expand_queries(r, x);
        CHECK(std::fabs(r.scale * r.g.base.eval(point) - f.eval(x)) <=
              1e-10 * (1.0 + f.coef_l1()));
    }
}

TEST_CASE("reduction pads the constant term with a dummy variable") {
    MultilinearPoly f(1);
    f.add_term({}, 1.0);
    f.add_term({0}, 1.0);
    const AaReduction r = aa_reduction(f, 1);
    CHECK(r.g.per_block == 2);
    REQUIRE(r.g.base.terms().size() == 2);
    const double inv = std::pow(2.0 * std::exp(1.0), -1);
    CHECK(r.g.base.coef({0}) == doctest::Approx(inv).epsilon(1e-15));
    CHECK(r.g.base.coef({1}) == doctest::Approx(inv).epsilon(1e-15));  // padded constant
    for (const auto& [vars, coef] : r.g.base.terms()) CHECK(vars.size() == 1);  // homogeneous
    CHECK(r.query_map == std::vector<int>{0, kDummyInput});

    // diagonal identity over the whole two-variable cube, dummy forced +1
    for (double x0 : {1.0, -1.0}) {
        const std::vector<double> x{x0};
        const auto point = expand_queries(r, x);
        CHECK(point[1] == 1.0);
        CHECK(r.scale * r.g.base.eval(point) == doctest::Approx(1.0 + x0).epsilon(1e-12));
    }
}

TEST_CASE("influence pullback") {
    MultilinearPoly f(2);
    f.add_term({0, 1}, 1.0);
    const auto y0 = influence_pullback(f, 0);
    CHECK(y0.original_index == 0);
    CHECK(y0.decoupled_influence == 1.0);
    CHECK(y0.original_influence == 1.0);
    CHECK(y0.bound_holds);
    const auto z1 = influence_pullback(f, 3);
    CHECK(z1.original_index == 1);
    CHECK(z1.bound_holds);

    MultilinearPoly lin(2);
    lin.add_term({0}, 1.0);
    CHECK_THROWS_AS((void)influence_pullback(lin, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)influence_pullback(f, 4), std::invalid_argument);

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto g = random_poly(6, 3, false, 700 + seed, 24);
        if (g.degree() < 2) continue;
        for (int i = 0; i < 12; ++i) CHECK(influence_pullback(g, i).bound_holds);
        CHECK(one_block(g).base.variance() >= g.variance() - 1e-12);
    }
}

TEST_CASE("block and full structure validation") {
    MultilinearPoly two_y(4);  // n = 2: valid monomials hold exactly one of {0,1}
    two_y.add_term({0, 1}, 1.0);
    CHECK_THROWS_AS(validate_block_structure(two_y, 2), std::invalid_argument);

    MultilinearPoly no_y(4);
    no_y.add_term({2, 3}, 1.0);
    CHECK_THROWS_AS(validate_block_structure(no_y, 2), std::invalid_argument);

    MultilinearPoly with_const(4);
    with_const.add_term({}, 1.0);
    CHECK_THROWS_AS(validate_block_structure(with_const, 2), std::invalid_argument);

    MultilinearPoly same_block(4);  // blocks of width 2: {0,1} is twice block 0
    same_block.add_term({0, 1}, 1.0);
    CHECK_THROWS_AS(validate_full_structure(same_block, 2, 2), std::invalid_argument);
    MultilinearPoly ok(4);
    ok.add_term({0, 2}, 1.0);
    CHECK_NOTHROW(validate_full_structure(ok, 2, 2));
}

TEST_CASE("block and full json round trips") {
    auto f = random_poly(5, 3, false, 71);
    const BlockPoly b = one_block(f);
    const BlockPoly b2 = block_from_json(block_to_json(b));
    CHECK(b2.half_n == b.half_n);
    CHECK(b2.base == b.base);
    REQUIRE(b2.derivatives.size() == b.derivatives.size());
    for (std::size_t i = 0; i < b.derivatives.size(); ++i)
        CHECK(b2.derivatives[i] == b.derivatives[i]);

    const FullDecoupledPoly d = full_decouple(f, 3);
    const FullDecoupledPoly d2 = full_from_json(full_to_json(d));
    CHECK(d2.blocks == 3);
    CHECK(d2.per_block == 5);
    CHECK(d2.base == d.base);

    CHECK_THROWS_AS((void)block_from_json(R"({"n":2,"poly":{}})"), ParseError);
    CHECK_THROWS_AS((void)full_from_json(R"({"blocks":2})"), ParseError);
}
