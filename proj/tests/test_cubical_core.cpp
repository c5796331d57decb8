/**
 * @brief Cells, chains, boundary, mass, translation and contraction.
 */
#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace fracharge;
using namespace fracharge::testing;
using Catch::Approx;

TEST_CASE("boundary of the unit square has four unit edges", "[cubical]") {
    ChainD Q = box_chain(0, cube_box(2, 0, 0, 1), Mask(3), 1.0);
    ChainD dQ = boundary(Q);
    REQUIRE(dQ.cells.size() == 4);
    for (auto& [c, v] : dQ.cells) REQUIRE(std::fabs(v) == 1.0);
    REQUIRE(mass(dQ) == 4.0);
    REQUIRE(normal_mass(Q) == 5.0);
    REQUIRE(normal_mass(dQ) == 4.0);

    // counterclockwise: bottom edge +e1, right edge +e2, top edge -e1, left edge -e2
    REQUIRE(dQ.coeff(Cell{{0, 0}, 1}) == 1.0);
    REQUIRE(dQ.coeff(Cell{{1, 0}, 2}) == 1.0);
    REQUIRE(dQ.coeff(Cell{{0, 1}, 1}) == -1.0);
    REQUIRE(dQ.coeff(Cell{{0, 0}, 2}) == -1.0);
}

TEST_CASE("boundary of a segment is end minus start", "[cubical]") {
    ChainD S = segment(1, 3, {0}, 0, 8);
    ChainD dS = boundary(S);
    REQUIRE(dS.cells.size() == 2);
    REQUIRE(dS.coeff(Cell{{8}, 0}) == 1.0);
    REQUIRE(dS.coeff(Cell{{0}, 0}) == -1.0);
    REQUIRE(mass(S) == 1.0);
}

TEST_CASE("boundary of a 0-chain is refused", "[cubical]") {
    REQUIRE_THROWS_AS(boundary(point(2, 1, {0, 0})), DimensionError);
}

TEST_CASE("boundary of boundary vanishes on random chains", "[cubical][property]") {
    std::mt19937_64 rng(11);
    for (int d = 1; d <= 4; ++d) {
        NodeBox box = cube_box(d, 2, 0, 1);
        for (int m = 2; m <= d; ++m) {
            for (int rep = 0; rep < 40; ++rep) {
                auto c = random_chain<Rational>(rng, d, 2, m, box, 12);
                REQUIRE(boundary(boundary(c)).empty());
            }
        }
    }
}

TEST_CASE("mass examples and norms", "[cubical]") {
    REQUIRE(mass(ChainD(2, 3, 1)) == 0.0);
    ChainD e = segment(2, 2, {0, 0}, 0, 1, 3.0);
    REQUIRE(mass(e) == 0.75);
    REQUIRE(normal_mass(point(3, 2, {1, 1, 1})) == 1.0);

    // cube of side s in R^d: s^d, boundary 2d s^{d-1}
    for (int d = 1; d <= 3; ++d) {
        ChainD Q = cube_chain<double>(d, 3, Index{}, Mask((1 << d) - 1), 4, 1.0);
        double s = 0.5;
        REQUIRE(mass(Q) == Approx(std::pow(s, d)));
        REQUIRE(mass(boundary(Q)) == Approx(2 * d * std::pow(s, d - 1)));
        REQUIRE(normal_mass(Q) <= (1 + 2 * d) * std::pow(s, d - 1) + 1e-15);
    }
}

TEST_CASE("mass is homogeneous and subadditive", "[cubical][property]") {
    std::mt19937_64 rng(5);
    NodeBox box = cube_box(3, 2, 0, 1);
    for (int rep = 0; rep < 50; ++rep) {
        auto a = random_chain<Rational>(rng, 3, 2, 1 + rep % 3, box, 10);
        auto b = random_chain<Rational>(rng, 3, 2, a.m, box, 10);
        Rational s(-7, 3);
        REQUIRE(mass(s * a) == abs_of(s) * mass(a));
        REQUIRE(mass(a + b) <= mass(a) + mass(b));
        REQUIRE(normal_mass(boundary(a)) <= normal_mass(a));
    }
}

TEST_CASE("translation commutes with boundary and keeps mass", "[cubical][property]") {
    std::mt19937_64 rng(8);
    NodeBox box = cube_box(2, 3, 0, 1);
    for (int rep = 0; rep < 30; ++rep) {
        auto c = random_chain<Rational>(rng, 2, 3, 1 + rep % 2, box, 15);
        Index z{static_cast<std::int64_t>(rep % 5) - 2, static_cast<std::int64_t>(rep % 3) - 1};
        REQUIRE(translate(c, Index{}) == c);
        REQUIRE(mass(translate(c, z)) == mass(c));
        REQUIRE(boundary(translate(c, z)) == translate(boundary(c), z));
    }
}

TEST_CASE("cancellation keeps chains canonical", "[cubical]") {
    ChainD a = segment(1, 2, {0}, 0, 4);
    ChainD b = a;
    a -= b;
    REQUIRE(a.empty());
    REQUIRE(a.cells.empty());
}

TEST_CASE("contraction with the constant 0-form is the identity", "[cubical][contract]") {
    NodeBox box = cube_box(2, 3, 0, 1);
    SampledForm one = sample_form(2, 3, 0, box, {[](const auto&) { return 1.0; }});
    std::mt19937_64 rng(2);
    auto c = random_chain(rng, 2, 3, 1, box, 20);
    ChainD r = contract(c, one);
    REQUIRE(r.cells.size() == c.cells.size());
    for (auto& [cell, v] : c.cells) REQUIRE(r.coeff(cell) == Approx(v));
}

TEST_CASE("contraction pairs basis covectors with basis vectors", "[cubical][contract]") {
    int L = 3;
    NodeBox box = cube_box(2, L, 0, 1);
    ChainD Q = box_chain(L, box, Mask(3), 1.0);
    SampledForm dx1 = sample_form(2, L, 1, box, {[](const auto&) { return 1.0; }, [](const auto&) { return 0.0; }});
    SampledForm dx2 = sample_form(2, L, 1, box, {[](const auto&) { return 0.0; }, [](const auto&) { return 1.0; }});
    REQUIRE(FormCharge(dx2).evaluate(contract(Q, dx1)) == Approx(1.0));
    REQUIRE(FormCharge(dx1).evaluate(contract(Q, dx2)) == Approx(-1.0));
}

TEST_CASE("contraction by x2 dx1 against dx2 integrates x2", "[cubical][contract]") {
    // the corner-mean rule is exact for integrands linear in each cell
    for (int L : {2, 4}) {
        NodeBox box = cube_box(2, L, 0, 1);
        ChainD Q = box_chain(L, box, Mask(3), 1.0);
        SampledForm w = sample_form(2, L, 1, box, {[](const auto& x) { return x[1]; }, [](const auto&) { return 0.0; }});
        SampledForm eta = sample_form(2, L, 1, box, {[](const auto&) { return 0.0; }, [](const auto&) { return 1.0; }});
        REQUIRE(FormCharge(eta).evaluate(contract(Q, w)) == Approx(0.5).margin(1e-14));
    }
}

TEST_CASE("contraction adjunction on smooth forms tightens with resolution", "[cubical][contract][property]") {
    // |(T |_ w)(eta) - T(w ^ eta)| shrinks by about 4 per level
    std::vector<double> err;
    for (int L : {4, 5, 6}) {
        NodeBox box = cube_box(2, L, 0, 1);
        ChainD Q = box_chain(L, cube_box(2, L, 0.25, 0.75), Mask(3), 1.0);
        SampledForm w = smooth_form(2, L, 1, box, 0.4);
        SampledForm eta = smooth_form(2, L, 1, box, 1.9);
        double lhs = FormCharge(eta).evaluate(contract(Q, w));
        double rhs = FormCharge(wedge(w, eta)).evaluate(Q);
        err.push_back(std::fabs(lhs - rhs));
    }
    REQUIRE(err[1] < err[0]);
    REQUIRE(err[2] < err[1]);
    REQUIRE(err[2] < 1e-4);
}

TEST_CASE("boundary of a contraction splits into two terms", "[cubical][contract][property]") {
    // d(T |_ w) = (-1)^m (dT) |_ w + (-1)^{m+1} T |_ dw, paired with a smooth test form
    for (int m : {0, 1}) {
        std::vector<double> err;
        for (int L : {4, 5, 6}) {
            NodeBox box = cube_box(3, L, 0, 1);
            ChainD T = box_chain(L, cube_box(3, L, 0.25, 0.75), Mask(7), 1.0);
            auto fns = smooth_fns(3, m, 0.7);
            SampledForm w = sample_form(3, L, m, box, fns);
            SampledForm dw = sample_derivative(3, L, m, box, fns);
            SampledForm eta = smooth_form(3, L, 2 - m, box, 1.3);
            double sgn = (m % 2) ? -1.0 : 1.0;
            double lhs = FormCharge(eta).evaluate(boundary(contract(T, w)));
            double rhs = sgn * FormCharge(eta).evaluate(contract(boundary(T), w)) -
                         sgn * FormCharge(eta).evaluate(contract(T, dw));
            err.push_back(std::fabs(lhs - rhs));
        }
        REQUIRE(err[1] < err[0]);
        REQUIRE(err[2] < err[1]);
        REQUIRE(err[2] < 1e-3);
    }
}
