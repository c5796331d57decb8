/**
 * @brief Node-sampled differential forms, pointwise wedge, and contraction of chains.
 */
#pragma once

#include <algorithm>
#include <functional>
#include <optional>

#include "chain.hpp"

namespace fracharge {

struct HolderMeta {
    double alpha = 1.0;
    double lip = 0.0;
};

/// m-form sampled at the nodes of a box; one value array per basis covector dx_I
class SampledForm {
public:
    int d = 1;
    int L = 0;
    int m = 0;
    NodeBox box;
    std::vector<Mask> comps;
    std::vector<std::vector<double>> values;
    std::optional<HolderMeta> holder;

    SampledForm() = default;

    SampledForm(int d_, int L_, int m_, const NodeBox& box_) : d(d_), L(L_), m(m_), box(box_) {
        if (d < 1 || d > kMaxDim) throw DimensionError("dimension out of range");
        if (m < 0 || m > d) throw DimensionError("form degree out of range");
        if (box.d != d) throw DimensionError("box dimension differs from form dimension");
        for (int i = 0; i < d; ++i)
            if (box.hi[i] < box.lo[i]) throw ValidationError("empty node box");
        comps = masks_of_degree(d, m);
        values.assign(comps.size(), std::vector<double>(box.size(), 0.0));
    }

    double h() const { return std::ldexp(1.0, -L); }

    int comp_index(Mask I) const {
        for (std::size_t k = 0; k < comps.size(); ++k)
            if (comps[k] == I) return static_cast<int>(k);
        return -1;
    }

    double at(Mask I, const Index& p) const {
        int k = comp_index(I);
        if (k < 0) throw DimensionError("component degree differs from form degree");
        if (!box.contains(p)) throw GridMismatch("node outside form box");
        return values[k][box.linear(p)];
    }

    std::vector<double>& comp(Mask I) {
        int k = comp_index(I);
        if (k < 0) throw DimensionError("component degree differs from form degree");
        return values[k];
    }
    const std::vector<double>& comp(Mask I) const { return const_cast<SampledForm*>(this)->comp(I); }

    /// node coordinates in ambient units
    std::array<double, kMaxDim> coords(const Index& p) const {
        std::array<double, kMaxDim> x{};
        for (int i = 0; i < d; ++i) x[i] = std::ldexp(static_cast<double>(p[i]), -L);
        return x;
    }

    bool same_layout(const SampledForm& o) const { return d == o.d && L == o.L && m == o.m && box == o.box; }

    /// proxy comass sup-norm: max over nodes and components of |w_I|
    double sup_norm() const {
        double s = 0;
        for (auto& v : values)
            for (double x : v) s = std::max(s, std::fabs(x));
        return s;
    }

    SampledForm& operator+=(const SampledForm& o) {
        if (!same_layout(o)) throw GridMismatch("forms on different grids");
        for (std::size_t k = 0; k < values.size(); ++k)
            for (std::size_t n = 0; n < values[k].size(); ++n) values[k][n] += o.values[k][n];
        return *this;
    }
    SampledForm& operator-=(const SampledForm& o) {
        if (!same_layout(o)) throw GridMismatch("forms on different grids");
        for (std::size_t k = 0; k < values.size(); ++k)
            for (std::size_t n = 0; n < values[k].size(); ++n) values[k][n] -= o.values[k][n];
        return *this;
    }
    SampledForm& operator*=(double a) {
        for (auto& v : values)
            for (double& x : v) x *= a;
        holder.reset();
        return *this;
    }
    friend SampledForm operator+(SampledForm a, const SampledForm& b) { return a += b; }
    friend SampledForm operator-(SampledForm a, const SampledForm& b) { return a -= b; }
    friend SampledForm operator*(double s, SampledForm a) { return a *= s; }
};

using ComponentFn = std::function<double(const std::array<double, kMaxDim>&)>;

/// sample f_I(x) for each component I (fns indexed like masks_of_degree(d, m))
inline SampledForm sample_form(int d, int L, int m, const NodeBox& box, const std::vector<ComponentFn>& fns) {
    SampledForm w(d, L, m, box);
    if (fns.size() != w.comps.size()) throw DimensionError("component function count differs from C(d,m)");
    for (std::size_t k = 0; k < w.comps.size(); ++k)
        for (std::size_t n = 0; n < box.size(); ++n) w.values[k][n] = fns[k](w.coords(box.node(n)));
    return w;
}

/// the same form restricted to a sub-box
inline SampledForm crop(const SampledForm& w, const NodeBox& sub) {
    if (!w.box.contains(sub)) throw GridMismatch("crop box outside form box");
    SampledForm out(w.d, w.L, w.m, sub);
    for (std::size_t k = 0; k < w.comps.size(); ++k)
        for (std::size_t n = 0; n < sub.size(); ++n) out.values[k][n] = w.values[k][w.box.linear(sub.node(n))];
    out.holder = w.holder;
    return out;
}

/// mean of component k over the corners of cell c
inline double corner_mean(const SampledForm& w, int k, const Cell& c) {
    auto ax = mask_axes(c.axes);
    int nc = 1 << ax.size();
    double s = 0;
    for (int b = 0; b < nc; ++b) {
        Index p = c.anchor;
        for (std::size_t j = 0; j < ax.size(); ++j)
            if ((b >> j) & 1) p[ax[j]] += 1;
        s += w.values[k][w.box.linear(p)];
    }
    return s / nc;
}

/// pointwise exterior product at every node
inline SampledForm wedge(const SampledForm& a, const SampledForm& b) {
    if (a.d != b.d || a.L != b.L || !(a.box == b.box)) throw GridMismatch("wedge of forms on different grids");
    if (a.m + b.m > a.d) throw DimensionError("wedge degree exceeds dimension");
    SampledForm out(a.d, a.L, a.m + b.m, a.box);
    for (std::size_t ka = 0; ka < a.comps.size(); ++ka) {
        for (std::size_t kb = 0; kb < b.comps.size(); ++kb) {
            Mask J = a.comps[ka], K = b.comps[kb];
            if (J & K) continue;
            int sg = shuffle_sign(J, K);
            auto& dst = out.comp(J | K);
            auto& va = a.values[ka];
            auto& vb = b.values[kb];
            for (std::size_t n = 0; n < dst.size(); ++n) dst[n] += sg * va[n] * vb[n];
        }
    }
    return out;
}

/// T contracted with a k-form: (T |_ w)(eta) = T(w wedge eta) up to quadrature.
/// Each pairing J of a cell with axes I puts sign(J, I\J) c w_J(center) h^k on the
/// 2^k parallel (I\J)-faces, split evenly.
inline ChainD contract(const ChainD& T, const SampledForm& w) {
    if (T.d != w.d || T.L != w.L) throw GridMismatch("contract: chain and form on different grids");
    if (w.m > T.m) throw DimensionError("contract: form degree exceeds chain dimension");
    int k = w.m;
    ChainD out(T.d, T.L, T.m - k);
    double hk = std::ldexp(1.0, -T.L * k);
    double share = 1.0 / (1 << k);
    for (auto& [cell, c] : T.cells) {
        if (!cell_inside(w.box, cell)) throw GridMismatch("contract: chain leaves form box");
        for (std::size_t kj = 0; kj < w.comps.size(); ++kj) {
            Mask J = w.comps[kj];
            if ((J & cell.axes) != J) continue;
            Mask rest = cell.axes & ~J;
            double wc = corner_mean(w, static_cast<int>(kj), Cell{cell.anchor, cell.axes});
            double v = shuffle_sign(J, rest) * c * wc * hk * share;
            if (v == 0.0) continue;
            auto jax = mask_axes(J);
            for (int b = 0; b < (1 << k); ++b) {
                Cell f{cell.anchor, rest};
                for (int j = 0; j < k; ++j)
                    if ((b >> j) & 1) f.anchor[jax[j]] += 1;
                out.add(f, v);
            }
        }
    }
    return out;
}

}  // namespace fracharge
