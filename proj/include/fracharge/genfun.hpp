/**
 * @brief Hölder test data: Weierstrass cosine series and an empirical exponent estimator.
 */
#pragma once

#include <random>

#include "form.hpp"

namespace fracharge {

/// f(x) = sum_{k < terms} a^k cos(2 pi b^k (v . x) + phase_k)
struct WeierstrassSpec {
    double a = 0.5;
    int b = 2;
    int terms = 0;  ///< 0: smallest count passing the truncation check
    /// phase_k = phase0 + k * phase_step
    double phase0 = 0.0;
    double phase_step = 0.0;
    std::array<int, kMaxDim> direction{1, 0, 0, 0};
    double scale = 1.0;

    double alpha() const { return std::log(1.0 / a) / std::log(static_cast<double>(b)); }
};

inline void validate(const WeierstrassSpec& s) {
    if (!(s.a > 0 && s.a < 1)) throw ValidationError("amplitude ratio must lie in (0, 1)");
    if (s.b < 2) throw ValidationError("frequency ratio must be an integer >= 2");
    double al = s.alpha();
    if (!(al > 0 && al <= 1 + 1e-12)) throw ValidationError("target exponent must lie in (0, 1]");
    if (s.terms < 0) throw ValidationError("negative term count");
}

/// tail bound a^K / (1 - a) must stay below h^alpha
inline int weierstrass_min_terms(const WeierstrassSpec& s, int L) {
    double target = std::pow(std::ldexp(1.0, -L), s.alpha());
    int K = 1;
    while (std::pow(s.a, K) / (1 - s.a) >= target) ++K;
    return K;
}

/// max over axis-aligned dyadic node pairs of |f(x) - f(y)| / |x - y|^alpha
inline double dyadic_holder_quotient(const SampledForm& f, double alpha) {
    if (f.m != 0) throw DimensionError("Hölder quotients are taken of 0-forms");
    double best = 0;
    const auto& v = f.values[0];
    for (int i = 0; i < f.d; ++i) {
        std::int64_t ext = f.box.extent(i);
        std::size_t stride = 1;
        for (int j = i + 1; j < f.d; ++j) stride *= static_cast<std::size_t>(f.box.extent(j));
        for (std::int64_t s = 1; s < ext; s *= 2) {
            double den = std::pow(std::ldexp(static_cast<double>(s), -f.L), alpha);
            double mx = 0;
            for (std::size_t n = 0; n < v.size(); ++n) {
                std::int64_t coord = static_cast<std::int64_t>((n / stride) % static_cast<std::size_t>(ext));
                if (coord + s >= ext) continue;
                mx = std::max(mx, std::fabs(v[n + static_cast<std::size_t>(s) * stride] - v[n]));
            }
            best = std::max(best, mx / den);
        }
    }
    return best;
}

inline SampledForm weierstrass_sample(const WeierstrassSpec& spec, int d, int L, const NodeBox& box) {
    validate(spec);
    int K = spec.terms > 0 ? spec.terms : weierstrass_min_terms(spec, L);
    if (std::pow(spec.a, K) / (1 - spec.a) >= std::pow(std::ldexp(1.0, -L), spec.alpha()))
        throw ResolutionError("too few terms: truncation error exceeds the grid step to the power alpha");
    SampledForm f(d, L, 0, box);
    auto& v = f.values[0];
    for (std::size_t n = 0; n < box.size(); ++n) {
        Index p = box.node(n);
        // v . x reduced modulo 1 exactly on the lattice before scaling by b^k
        std::int64_t t = 0;
        for (int i = 0; i < d; ++i) t += spec.direction[i] * p[i];
        std::int64_t den = std::int64_t(1) << L;
        double s = 0, amp = 1;
        std::int64_t freq = 1;
        for (int k = 0; k < K; ++k) {
            std::int64_t r = ((t % den) * (freq % den)) % den;
            if (r < 0) r += den;
            double ph = spec.phase0 + k * spec.phase_step;
            s += amp * std::cos(2 * M_PI * std::ldexp(static_cast<double>(r), -L) + ph);
            amp *= spec.a;
            freq = freq * spec.b % den;
        }
        v[n] = spec.scale * s;
    }
    double al = std::min(1.0, spec.alpha());
    f.holder = HolderMeta{al, 1.1 * dyadic_holder_quotient(f, al)};
    return f;
}

struct HolderEstimate {
    double alpha = 1.0;
    double lip = 0.0;
};

/// log-log regression of the max increment at the finest dyadic separations
inline HolderEstimate holder_exponent_estimate(const SampledForm& f, int scales = 6) {
    if (f.m != 0) throw DimensionError("exponent estimates take 0-forms");
    std::int64_t ext = 0;
    for (int i = 0; i < f.d; ++i) ext = std::max(ext, f.box.extent(i) - 1);
    int avail = 0;
    while ((std::int64_t(1) << avail) <= ext) ++avail;
    if (avail < 4) throw ResolutionError("fewer than four dyadic scales available");
    int use = std::min(scales, avail);
    std::vector<double> xs, ys;
    bool constant = true;
    for (int e = 0; e < use; ++e) {
        std::int64_t s = std::int64_t(1) << e;
        double mx = 0;
        const auto& v = f.values[0];
        for (int i = 0; i < f.d; ++i) {
            std::int64_t ex = f.box.extent(i);
            std::size_t stride = 1;
            for (int j = i + 1; j < f.d; ++j) stride *= static_cast<std::size_t>(f.box.extent(j));
            for (std::size_t n = 0; n < v.size(); ++n) {
                std::int64_t coord = static_cast<std::int64_t>((n / stride) % static_cast<std::size_t>(ex));
                if (coord + s >= ex) continue;
                mx = std::max(mx, std::fabs(v[n + static_cast<std::size_t>(s) * stride] - v[n]));
            }
        }
        if (mx > 0) constant = false;
        xs.push_back(std::log(std::ldexp(static_cast<double>(s), -f.L)));
        ys.push_back(std::log(std::max(mx, 1e-300)));
    }
    if (constant) return {1.0, 0.0};
    double n = static_cast<double>(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - slope * sx) / n;
    return {std::clamp(slope, 0.0, 1.05), std::exp(icept)};
}

/// seeded random midpoint displacement on [0,1] (non-normative test data)
inline SampledForm midpoint_displacement(int L, double hurst, std::uint64_t seed) {
    if (!(hurst > 0 && hurst < 1)) throw ValidationError("Hurst exponent must lie in (0, 1)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    NodeBox box = cube_box(1, L, 0.0, 1.0);
    SampledForm f(1, L, 0, box);
    auto& v = f.values[0];
    std::size_t n = v.size() - 1;
    v[0] = 0;
    v[n] = g(rng);
    double sd = std::sqrt(1 - std::pow(2.0, 2 * hurst - 2));
    for (std::size_t step = n; step > 1; step /= 2) {
        sd *= std::pow(0.5, hurst);
        for (std::size_t i = 0; i + step <= n; i += step) v[i + step / 2] = 0.5 * (v[i] + v[i + step]) + sd * g(rng);
    }
    f.holder = HolderMeta{hurst, 1.1 * dyadic_holder_quotient(f, hurst)};
    return f;
}

}  // namespace fracharge
