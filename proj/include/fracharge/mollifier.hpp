/**
 * @brief Discrete even mollifiers and chain mollification T * Phi_eps.
 */
#pragma once

#include <numeric>

#include "chain.hpp"

namespace fracharge {

enum class Profile {
    Poly3,    ///< (1 - |x|^2)^3 on the unit ball
    ExpBump,  ///< exp(-1 / (1 - |x|^2)) on the unit ball
};

inline const char* profile_name(Profile p) { return p == Profile::Poly3 ? "poly3" : "exp"; }

inline Profile parse_profile(const std::string& s) {
    if (s == "poly3" || s == "poly") return Profile::Poly3;
    if (s == "exp" || s == "expbump") return Profile::ExpBump;
    throw ValidationError("unknown kernel profile '" + s + "'");
}

/// profile value at squared radius q in [0, 1)
inline double profile_value(Profile p, double q) {
    if (q >= 1.0) return 0.0;
    if (p == Profile::Poly3) {
        double u = 1.0 - q;
        return u * u * u;
    }
    return std::exp(-1.0 / (1.0 - q));
}

/// lattice samples of a profile at radius R cells; offset j sits at j + s/2 (s = shift bits)
struct LatticeKernel {
    int d = 1;
    int R = 1;
    Mask shift = 0;
    std::vector<Index> offsets;
    std::vector<double> w;

    /// |position| < R in lattice units, given doubled coordinates 2j + s
    static std::int64_t doubled_sq(const Index& j, Mask shift, int d) {
        std::int64_t q = 0;
        for (int i = 0; i < d; ++i) {
            std::int64_t t = 2 * j[i] + ((shift >> i) & 1);
            q += t * t;
        }
        return q;
    }
};

inline LatticeKernel make_lattice_kernel(int d, int R, Profile p, Mask shift) {
    LatticeKernel k;
    k.d = d;
    k.R = R;
    k.shift = shift;
    NodeBox range;
    range.d = d;
    for (int i = 0; i < d; ++i) {
        range.lo[i] = -R;
        range.hi[i] = ((shift >> i) & 1) ? R - 1 : R;
    }
    double four_r2 = 4.0 * static_cast<double>(R) * static_cast<double>(R);
    for (std::size_t n = 0; n < range.size(); ++n) {
        Index j = range.node(n);
        double q = static_cast<double>(LatticeKernel::doubled_sq(j, shift, d)) / four_r2;
        double v = profile_value(p, q);
        if (v > 0) {
            k.offsets.push_back(j);
            k.w.push_back(v);
        }
    }
    if (k.w.empty()) throw ResolutionError("kernel has no lattice support");
    // pairwise-order sum is symmetric under j -> -j - s, so evenness survives normalization
    double total = std::accumulate(k.w.begin(), k.w.end(), 0.0);
    for (double& v : k.w) v /= total;
    return k;
}

class Mollifier {
public:
    int d = 1;
    int L = 0;
    int R = 1;
    Profile profile = Profile::Poly3;
    LatticeKernel kernel;

    Mollifier() = default;

    /// eps is snapped to the nearest lattice multiple
    Mollifier(int d_, int L_, double eps, Profile p = Profile::Poly3) : d(d_), L(L_), profile(p) {
        if (!(eps > 0)) throw ValidationError("mollifier radius must be positive");
        double r = eps * std::ldexp(1.0, L);
        if (r < 1.0 - 1e-9) throw ResolutionError("mollifier radius below the grid step");
        R = static_cast<int>(std::llround(r));
        kernel = make_lattice_kernel(d, R, p, 0);
    }

    double epsilon() const { return std::ldexp(static_cast<double>(R), -L); }

    LatticeKernel shifted(Mask s) const { return make_lattice_kernel(d, R, profile, s); }

    /// unit-sum rational weights (polynomial profile only)
    std::vector<Rational> rational_weights() const {
        if (profile != Profile::Poly3) throw ValidationError("exact weights exist only for the polynomial profile");
        std::vector<BigInt> raw;
        BigInt total = 0;
        BigInt r2 = BigInt(R) * R;
        for (auto& j : kernel.offsets) {
            std::int64_t q = 0;
            for (int i = 0; i < d; ++i) q += j[i] * j[i];
            BigInt u = r2 - q;
            BigInt v = u * u * u;
            raw.push_back(v);
            total += v;
        }
        std::vector<Rational> out;
        out.reserve(raw.size());
        for (auto& v : raw) out.emplace_back(v, total);
        return out;
    }
};

/// T * Phi = sum_z w_z translate(T, z); exact rational weights when S = Rational
template <class S>
Chain<S> mollify_chain(const Chain<S>& T, const Mollifier& K, const std::optional<NodeBox>& box = std::nullopt) {
    if (T.d != K.d || T.L != K.L) throw GridMismatch("mollifier and chain on different grids");
    std::vector<S> w;
    if constexpr (std::is_same_v<S, Rational>)
        w = K.rational_weights();
    else
        w = K.kernel.w;
    Chain<S> out(T.d, T.L, T.m);
    for (auto& [cell, v] : T.cells) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            Cell c = cell;
            for (int i = 0; i < T.d; ++i) c.anchor[i] += K.kernel.offsets[k][i];
            out.add(c, v * w[k]);
        }
    }
    if (box && !chain_inside(*box, out)) throw ValidationError("mollified chain leaves the grid box");
    return out;
}

/// integral of |d_1 Phi| over R^d for the unit-scale profile normalized to unit mass
inline double profile_grad_l1(Profile p, int d) {
    // radially decreasing: the variation along each line is twice the peak, so
    // int |d_1 Phi| = 2 int_{R^{d-1}} Phi(0, x') dx' / int_{R^d} Phi
    auto ball_integral = [p](int n) {
        if (n == 0) return profile_value(p, 0.0);
        // |S^{n-1}| int_0^1 r^{n-1} phi(r^2) dr, composite Simpson
        const int steps = 20000;
        double s = 0;
        for (int k = 0; k <= steps; ++k) {
            double r = static_cast<double>(k) / steps;
            double f = std::pow(r, n - 1) * profile_value(p, r * r);
            double wgt = (k == 0 || k == steps) ? 1 : (k % 2 ? 4 : 2);
            s += wgt * f;
        }
        s *= 1.0 / (3.0 * steps);
        double sphere = 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
        return sphere * s;
    };
    return 2.0 * ball_integral(d - 1) / ball_integral(d);
}

}  // namespace fracharge
