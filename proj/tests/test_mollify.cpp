/**
 * @brief Kernels, chain mollification, charge smoothing and the dyadic ladder.
 */
#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace fracharge;
using namespace fracharge::testing;
using Catch::Approx;

namespace {

WeierstrassSpec weier(double alpha, double phase = 0.0) {
    WeierstrassSpec s;
    s.a = std::pow(2.0, -alpha);
    s.phase0 = phase;
    return s;
}

}  // namespace

TEST_CASE("kernels are even, unit-sum and supported in the ball", "[mollify]") {
    for (Profile p : {Profile::Poly3, Profile::ExpBump}) {
        for (int d = 1; d <= 3; ++d) {
            Mollifier K(d, 4, 0.25, p);
            double total = 0;
            std::map<std::vector<std::int64_t>, double> w;
            for (std::size_t k = 0; k < K.kernel.offsets.size(); ++k) {
                auto& z = K.kernel.offsets[k];
                std::vector<std::int64_t> key(z.begin(), z.begin() + d);
                w[key] = K.kernel.w[k];
                total += K.kernel.w[k];
                std::int64_t q = 0;
                for (int i = 0; i < d; ++i) q += z[i] * z[i];
                REQUIRE(q <= std::int64_t(K.R) * K.R);
                REQUIRE(K.kernel.w[k] >= 0);
            }
            REQUIRE(total == Approx(1.0).margin(1e-14));
            for (auto& [key, v] : w) {
                std::vector<std::int64_t> neg;
                for (auto x : key) neg.push_back(-x);
                REQUIRE(w.at(neg) == v);
            }
        }
    }
    auto q = Mollifier(2, 3, 0.5).rational_weights();
    Rational s = 0;
    for (auto& v : q) s += v;
    REQUIRE(s == 1);
}

TEST_CASE("radius snaps to the lattice and is refused below the grid step", "[mollify]") {
    REQUIRE(Mollifier(1, 4, 0.3).R == 5);
    REQUIRE(Mollifier(1, 4, 0.3).epsilon() == 0.3125);
    REQUIRE_THROWS_AS(Mollifier(1, 4, 0.01), ResolutionError);
    REQUIRE_THROWS_AS(Mollifier(1, 4, -1.0), ValidationError);
}

TEST_CASE("a one-step kernel is the identity", "[mollify]") {
    std::mt19937_64 rng(1);
    auto T = random_chain(rng, 2, 3, 1, cube_box(2, 3, 0, 1), 10);
    Mollifier K(2, 3, 0.125);
    REQUIRE(K.kernel.offsets.size() == 1);
    REQUIRE(mollify_chain(T, K) == T);
}

TEST_CASE("a mollified point keeps unit mass", "[mollify]") {
    ChainD p = point(2, 5, {16, 16});
    for (double eps : {0.0625, 0.125, 0.25}) REQUIRE(mass(mollify_chain(p, Mollifier(2, 5, eps))) == Approx(1.0));
}

TEST_CASE("mollification: support, mass and boundary", "[mollify][property]") {
    std::mt19937_64 rng(17);
    NodeBox inner = cube_box(2, 5, 0.375, 0.625);
    for (int rep = 0; rep < 20; ++rep) {
        auto T = random_chain<Rational>(rng, 2, 5, 1 + rep % 2, inner, 8);
        if (T.empty()) continue;
        Mollifier K(2, 5, rep % 2 ? 0.125 : 0.0625);
        auto S = mollify_chain(T, K);
        REQUIRE(mass(S) <= mass(T));
        REQUIRE(boundary(S) == mollify_chain(boundary(T), K));
        for (auto& [cell, v] : S.cells) {
            bool near = false;
            for (auto& [tc, tv] : T.cells) {
                if (tc.axes != cell.axes) continue;
                std::int64_t q = 0;
                for (int i = 0; i < 2; ++i) q += (cell.anchor[i] - tc.anchor[i]) * (cell.anchor[i] - tc.anchor[i]);
                if (q <= std::int64_t(K.R) * K.R) near = true;
            }
            REQUIRE(near);
        }
    }
}

TEST_CASE("mollification leaving the grid box is refused", "[mollify]") {
    ChainD p = point(1, 3, {0});
    REQUIRE_THROWS_AS(mollify_chain(p, Mollifier(1, 3, 0.25), cube_box(1, 3, 0, 1)), ValidationError);
}

TEST_CASE("flat distance to the mollified chain is at most eps N", "[mollify][flat]") {
    std::mt19937_64 rng(3);
    NodeBox inner = cube_box(2, 4, 0.375, 0.625);
    for (int rep = 0; rep < 6; ++rep) {
        auto T = random_chain(rng, 2, 4, 1, inner, 6);
        if (T.empty()) continue;
        double fT = flat_norm_float(T).value;
        for (double eps : {0.125, 0.25}) {
            auto S = mollify_chain(T, Mollifier(2, 4, eps));
            double gap = flat_norm_float(T - S).value;
            REQUIRE(gap <= eps * normal_mass(T) * (1 + 1e-9));
            REQUIRE(flat_norm_float(S).value <= fT * (1 + 1e-9));
        }
    }
}

TEST_CASE("smoothing reproduces constant forms", "[mollify][smooth]") {
    NodeBox data = cube_box(2, 4, -1, 2), eval = cube_box(2, 4, 0, 1);
    SampledForm c = sample_form(2, 4, 1, data, {[](const auto&) { return 2.5; }, [](const auto&) { return -1.0; }});
    auto w = form_charge(c);
    for (SmoothPath path : {SmoothPath::Fast, SmoothPath::Generic}) {
        auto s = smooth_charge(w, Mollifier(2, 4, 0.25), eval, path);
        for (double v : s.values[0]) REQUIRE(v == Approx(2.5).margin(1e-12));
        for (double v : s.values[1]) REQUIRE(v == Approx(-1.0).margin(1e-12));
    }
}

TEST_CASE("smoothing a linear function returns it at interior nodes", "[mollify][smooth]") {
    NodeBox data = cube_box(1, 6, -1, 2), eval = cube_box(1, 6, 0, 1);
    auto w = form_charge(sample_form(1, 6, 0, data, {[](const auto& x) { return x[0]; }}));
    for (Profile p : {Profile::Poly3, Profile::ExpBump}) {
        auto s = smooth_charge(w, Mollifier(1, 6, 0.25, p), eval);
        for (std::size_t n = 0; n < eval.size(); ++n)
            REQUIRE(s.values[0][n] == Approx(std::ldexp(static_cast<double>(eval.node(n)[0]), -6)).margin(1e-12));
    }
}

TEST_CASE("fast and generic smoothing agree, including derivatives", "[mollify][smooth]") {
    NodeBox data = cube_box(2, 4, -0.5, 1.5), eval = cube_box(2, 4, 0.25, 0.75);
    auto w = form_charge(smooth_form(2, 4, 1, data, 0.3));
    auto dw = exterior_derivative(form_charge(smooth_form(2, 4, 0, data, 0.8)));
    for (auto c : {w, dw}) {
        Mollifier K(2, 4, 0.25);
        auto a = smooth_charge(c, K, eval, SmoothPath::Fast);
        auto b = smooth_charge(c, K, eval, SmoothPath::Generic);
        REQUIRE((a - b).sup_norm() < 1e-12);
    }
}

TEST_CASE("smoothing converges to classical convolution", "[mollify][smooth]") {
    // the node samples of w * Phi_eps approach the continuum convolution as L grows, at fixed eps
    std::vector<double> err;
    for (int L : {5, 6, 7}) {
        NodeBox data = cube_box(1, L, -1, 2), eval = cube_box(1, L, 0, 1);
        auto f = [](double x) { return std::sin(3 * x) + x * x; };
        auto w = form_charge(sample_form(1, L, 0, data, {[&](const auto& x) { return f(x[0]); }}));
        auto s = smooth_charge(w, Mollifier(1, L, 0.25), eval);
        // continuum reference: normalized (1 - t^2)^3 on [-1, 1] scaled to 1/4
        double e = 0;
        for (std::size_t n = 0; n < eval.size(); n += 8) {
            double z = std::ldexp(static_cast<double>(eval.node(n)[0]), -L);
            double num = 0, den = 0;
            for (int k = -2000; k <= 2000; ++k) {
                double t = k / 2000.0, kw = std::pow(1 - t * t, 3);
                num += kw * f(z + 0.25 * t);
                den += kw;
            }
            e = std::max(e, std::fabs(s.values[0][n] - num / den));
        }
        err.push_back(e);
    }
    REQUIRE(err[1] < err[0]);
    REQUIRE(err[2] < err[1]);
    REQUIRE(err[2] < 1e-4);
}

TEST_CASE("Hölder data: smoothing error is at most Lip eps^alpha", "[mollify][smooth]") {
    int L = 12;
    NodeBox data = cube_box(1, L, -1, 2), eval = cube_box(1, L, 0, 1);
    for (double alpha : {0.5, 0.7}) {
        auto f = weierstrass_sample(weier(alpha), 1, L, data);
        auto s = smooth_charge(form_charge(f), Mollifier(1, L, 0.125), eval);
        double e = (s - crop(f, eval)).sup_norm();
        REQUIRE(e <= f.holder->lip * std::pow(0.125, alpha));
    }
}

TEST_CASE("ladder telescopes to the finest smoothing", "[mollify][ladder]") {
    int L = 8;
    NodeBox data = cube_box(2, L, -2, 3), eval = cube_box(2, L, 0, 1);
    auto w = form_charge(smooth_form(2, L, 1, data, 0.6));
    auto only = dyadic_ladder(w, 0, eval);
    REQUIRE(only.size() == 1);
    REQUIRE((only[0] - smooth_charge(w, Mollifier(2, L, 1.0), eval)).sup_norm() < 1e-12);

    auto lad = dyadic_ladder(w, 4, eval);
    SampledForm sum = lad[0];
    for (std::size_t n = 1; n < lad.size(); ++n) sum += lad[n];
    REQUIRE((sum - smooth_charge(w, Mollifier(2, L, 1.0 / 16), eval)).sup_norm() < 1e-12);
    REQUIRE_THROWS_AS(dyadic_ladder(w, L + 1, eval), ResolutionError);
}

TEST_CASE("Weierstrass ladder components decay like 2^{-n alpha}", "[mollify][ladder]") {
    int L = 14;
    NodeBox data = cube_box(1, L, -2, 3), eval = cube_box(1, L, 0, 1);
    double alpha = 0.5;
    auto w = form_charge(weierstrass_sample(weier(alpha), 1, L, data));
    auto lad = dyadic_ladder(w, 8, eval);
    // constant fitted on levels 0..6, then required to hold within 5% on levels 7 and 8
    double C = 0;
    for (int n = 0; n <= 6; ++n) C = std::max(C, lad[n].sup_norm() * std::pow(2.0, n * alpha));
    for (int n = 7; n <= 8; ++n) REQUIRE(lad[n].sup_norm() <= 1.05 * C * std::pow(2.0, -n * alpha));
}
