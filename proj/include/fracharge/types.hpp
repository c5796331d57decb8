/**
 * @brief Basic types: errors, axis masks, node boxes, scalar traits.
 */
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

namespace fracharge {

inline constexpr int kMaxDim = 4;

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// error classes map onto CLI exit codes
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* error_class() const { return "error"; }
    virtual int exit_code() const { return 1; }
};

class ValidationError : public Error {
public:
    using Error::Error;
    const char* error_class() const override { return "validation"; }
    int exit_code() const override { return 2; }
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class GridMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ResolutionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// alpha + beta <= 1: the paraproduct series is not defined
class CriticalExponentError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* error_class() const override { return "critical_exponent"; }
};

class SolverError : public Error {
public:
    using Error::Error;
    const char* error_class() const override { return "solver"; }
    int exit_code() const override { return 4; }
};

// ---- axis masks: bit i set <=> axis i (0-based) spanned ----

using Mask = std::uint32_t;

inline int popcount(Mask m) { return std::popcount(m); }

/// all masks of size m over d axes, in lexicographic order of the sorted index lists
inline std::vector<Mask> masks_of_degree(int d, int m) {
    std::vector<std::vector<int>> lists;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == m) {
            lists.push_back(cur);
            return;
        }
        for (int i = start; i < d; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    std::vector<Mask> out;
    for (auto& l : lists) {
        Mask k = 0;
        for (int i : l) k |= Mask(1) << i;
        out.push_back(k);
    }
    return out;
}

inline std::vector<int> mask_axes(Mask m) {
    std::vector<int> out;
    for (int i = 0; m; ++i, m >>= 1)
        if (m & 1) out.push_back(i);
    return out;
}

/// sign of the permutation sorting the concatenation (J, K), J and K disjoint
inline int shuffle_sign(Mask J, Mask K) {
    int inv = 0;
    for (int j : mask_axes(J))
        inv += popcount(K & ((Mask(1) << j) - 1));
    return (inv & 1) ? -1 : 1;
}

inline long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

using Index = std::array<std::int64_t, kMaxDim>;

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

/// inclusive box of lattice nodes
struct NodeBox {
    int d = 1;
    Index lo{};
    Index hi{};

    std::int64_t extent(int i) const { return hi[i] - lo[i] + 1; }

    std::size_t size() const {
        std::size_t n = 1;
        for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(extent(i));
        return n;
    }

    bool contains(const Index& p) const {
        for (int i = 0; i < d; ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }

    bool contains(const NodeBox& b) const {
        for (int i = 0; i < d; ++i)
            if (b.lo[i] < lo[i] || b.hi[i] > hi[i]) return false;
        return true;
    }

    /// row-major, last axis fastest
    std::size_t linear(const Index& p) const {
        std::size_t k = 0;
        for (int i = 0; i < d; ++i)
            k = k * static_cast<std::size_t>(extent(i)) + static_cast<std::size_t>(p[i] - lo[i]);
        return k;
    }

    Index node(std::size_t k) const {
        Index p{};
        for (int i = d - 1; i >= 0; --i) {
            auto e = static_cast<std::size_t>(extent(i));
            p[i] = lo[i] + static_cast<std::int64_t>(k % e);
            k /= e;
        }
        return p;
    }

    NodeBox grown(std::int64_t r) const {
        NodeBox b = *this;
        for (int i = 0; i < d; ++i) {
            b.lo[i] -= r;
            b.hi[i] += r;
        }
        return b;
    }

    bool operator==(const NodeBox& o) const {
        if (d != o.d) return false;
        for (int i = 0; i < d; ++i)
            if (lo[i] != o.lo[i] || hi[i] != o.hi[i]) return false;
        return true;
    }
};

/// box of nodes covering [a, b]^d at level L (a, b multiples of 2^-L)
inline NodeBox cube_box(int d, int L, double a, double b) {
    NodeBox box;
    box.d = d;
    double s = std::ldexp(1.0, L);
    for (int i = 0; i < d; ++i) {
        box.lo[i] = static_cast<std::int64_t>(std::llround(a * s));
        box.hi[i] = static_cast<std::int64_t>(std::llround(b * s));
    }
    return box;
}

// ---- scalar traits ----

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

inline double abs_of(double x) { return std::fabs(x); }
inline Rational abs_of(const Rational& x) { return boost::multiprecision::abs(x); }

inline bool is_zero(double x) { return x == 0.0; }
inline bool is_zero(const Rational& x) { return x.is_zero(); }

/// 2^-k as a scalar of type S
template <class S>
S pow2_neg(int k) {
    if constexpr (std::is_same_v<S, Rational>) {
        BigInt den = 1;
        den <<= k;
        return Rational(BigInt(1), den);
    } else {
        return std::ldexp(1.0, -k);
    }
}

}  // namespace fracharge
