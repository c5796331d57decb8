/**
 * @brief Shared fixtures for the unit tests: random chains and sampled test forms.
 */
#pragma once

#include <random>

#include "fracharge/fracharge.hpp"

namespace fracharge::testing {

/// random m-chain with small integer coefficients, cells inside box
template <class S = double>
Chain<S> random_chain(std::mt19937_64& rng, int d, int L, int m, const NodeBox& box, int ncells, int cmax = 3) {
    auto masks = masks_of_degree(d, m);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(masks.size()) - 1);
    std::uniform_int_distribution<int> coeff(-cmax, cmax);
    Chain<S> c(d, L, m);
    for (int k = 0; k < ncells; ++k) {
        Cell cell;
        cell.axes = masks[pick(rng)];
        for (int i = 0; i < d; ++i) {
            std::int64_t hi = box.hi[i] - (((cell.axes >> i) & 1) ? 1 : 0);
            std::uniform_int_distribution<std::int64_t> pos(box.lo[i], hi);
            cell.anchor[i] = pos(rng);
        }
        int v = coeff(rng);
        if (v != 0) c.add(cell, S(v));
    }
    return c;
}

inline ChainD point(int d, int L, const Index& p, double c = 1.0) {
    ChainD T(d, L, 0);
    T.add(Cell{p, 0}, c);
    return T;
}

/// oriented segment [a, b] along axis i at level L (node coordinates)
inline ChainD segment(int d, int L, Index a, int axis, std::int64_t len, double c = 1.0) {
    ChainD T(d, L, 1);
    for (std::int64_t k = 0; k < len; ++k) {
        Cell cell{a, Mask(1) << axis};
        T.add(cell, c);
        a[axis] += 1;
    }
    return T;
}

/// smooth test 0-form: f(x) = sin(a.x + phase) + 0.3 cos(b x_1)
inline SampledForm smooth_scalar(int d, int L, const NodeBox& box, double phase, double freq = 1.3) {
    return sample_form(d, L, 0, box, {[=](const std::array<double, kMaxDim>& x) {
                           double s = phase;
                           for (int i = 0; i < d; ++i) s += freq * (i + 1) * x[i] * 0.7;
                           return std::sin(s) + 0.3 * std::cos(2.1 * x[0] - phase);
                       }});
}

/// component functions of a smooth m-form, indexed like masks_of_degree(d, m)
inline std::vector<ComponentFn> smooth_fns(int d, int m, double seed) {
    std::vector<ComponentFn> fns;
    auto masks = masks_of_degree(d, m);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        double s = seed + 0.37 * static_cast<double>(k);
        fns.push_back([=](const std::array<double, kMaxDim>& x) {
            double v = std::cos(s);
            for (int i = 0; i < d; ++i) v += 0.5 * std::sin((1.1 + 0.3 * i + 0.2 * s) * x[i] + s * (i + 1));
            return v;
        });
    }
    return fns;
}

inline SampledForm smooth_form(int d, int L, int m, const NodeBox& box, double seed) {
    return sample_form(d, L, m, box, smooth_fns(d, m, seed));
}

/// samples d(sum_J f_J dx_J) with central differences of the continuous components
inline SampledForm sample_derivative(int d, int L, int m, const NodeBox& box, const std::vector<ComponentFn>& fns) {
    auto src = masks_of_degree(d, m);
    SampledForm out(d, L, m + 1, box);
    const double step = 1e-5;
    for (std::size_t k = 0; k < out.comps.size(); ++k) {
        Mask J = out.comps[k];
        for (std::size_t n = 0; n < box.size(); ++n) {
            auto x = out.coords(box.node(n));
            double v = 0;
            for (int i : mask_axes(J)) {
                Mask Jr = J & ~(Mask(1) << i);
                std::size_t ki = static_cast<std::size_t>(std::find(src.begin(), src.end(), Jr) - src.begin());
                auto xp = x, xm = x;
                xp[i] += step;
                xm[i] -= step;
                v += shuffle_sign(Mask(1) << i, Jr) * (fns[ki](xp) - fns[ki](xm)) / (2 * step);
            }
            out.values[k][n] = v;
        }
    }
    return out;
}

}  // namespace fracharge::testing
