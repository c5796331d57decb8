/**
 * @brief Oriented cubical cells and sparse chains on a dyadic grid.
 *
 * A cell is the cube anchor + [0,1]^I in lattice units, oriented by e_I.
 * The grid step is h = 2^-L.
 */
#pragma once

#include <map>
#include <optional>

#include "types.hpp"

namespace fracharge {

struct Cell {
    Index anchor{};
    Mask axes = 0;

    auto operator<=>(const Cell&) const = default;
};

inline int cell_dim(const Cell& c) { return popcount(c.axes); }

/// true if every corner of the cell is a node of the box
inline bool cell_inside(const NodeBox& box, const Cell& c) {
    for (int i = 0; i < box.d; ++i) {
        std::int64_t top = c.anchor[i] + ((c.axes >> i) & 1);
        if (c.anchor[i] < box.lo[i] || top > box.hi[i]) return false;
    }
    return true;
}

template <class S>
class Chain {
public:
    int d = 1;
    int L = 0;
    int m = 0;
    std::map<Cell, S> cells;

    Chain() = default;
    Chain(int d_, int L_, int m_) : d(d_), L(L_), m(m_) {
        if (d < 1 || d > kMaxDim) throw DimensionError("dimension out of range");
        if (L < 0) throw ValidationError("negative level");
        if (m < 0 || m > d) throw DimensionError("chain dimension out of range");
    }

    void add(const Cell& c, const S& v) {
        if (cell_dim(c) != m) throw DimensionError("cell dimension differs from chain dimension");
        if (c.axes >> d) throw DimensionError("cell axis outside grid dimension");
        if (is_zero(v)) return;
        Cell key = c;
        for (int i = d; i < kMaxDim; ++i) key.anchor[i] = 0;
        auto [it, fresh] = cells.try_emplace(key, v);
        if (!fresh) {
            it->second += v;
            if (is_zero(it->second)) cells.erase(it);
        }
    }

    S coeff(const Cell& c) const {
        Cell key = c;
        for (int i = d; i < kMaxDim; ++i) key.anchor[i] = 0;
        auto it = cells.find(key);
        return it == cells.end() ? S(0) : it->second;
    }

    bool empty() const { return cells.empty(); }
    std::size_t size() const { return cells.size(); }

    void check_compatible(const Chain& o) const {
        if (d != o.d || L != o.L) throw GridMismatch("chains live on different grids");
        if (m != o.m) throw DimensionError("chains have different dimensions");
    }

    Chain& operator+=(const Chain& o) {
        check_compatible(o);
        for (auto& [c, v] : o.cells) add(c, v);
        return *this;
    }

    Chain& operator-=(const Chain& o) {
        check_compatible(o);
        for (auto& [c, v] : o.cells) add(c, -v);
        return *this;
    }

    Chain& operator*=(const S& a) {
        if (is_zero(a)) {
            cells.clear();
            return *this;
        }
        for (auto& kv : cells) kv.second *= a;
        return *this;
    }

    friend Chain operator+(Chain a, const Chain& b) { return a += b; }
    friend Chain operator-(Chain a, const Chain& b) { return a -= b; }
    friend Chain operator*(const S& s, Chain a) { return a *= s; }
    friend Chain operator-(Chain a) { return a *= S(-1); }

    bool operator==(const Chain& o) const {
        return d == o.d && L == o.L && m == o.m && cells == o.cells;
    }
};

using ChainD = Chain<double>;
using ChainQ = Chain<Rational>;

template <class T, class S>
Chain<T> chain_cast(const Chain<S>& c) {
    Chain<T> out(c.d, c.L, c.m);
    for (auto& [cell, v] : c.cells) {
        if constexpr (std::is_same_v<T, double>)
            out.add(cell, to_double(v));
        else
            out.add(cell, T(v));
    }
    return out;
}

/// cubical boundary; dropping the k-th spanned axis (0-based k) carries sign (-1)^k
template <class S>
Chain<S> boundary(const Chain<S>& c) {
    if (c.m == 0) throw DimensionError("boundary of a 0-chain");
    Chain<S> out(c.d, c.L, c.m - 1);
    for (auto& [cell, v] : c.cells) {
        int k = 0;
        for (int i = 0; i < c.d; ++i) {
            if (!((cell.axes >> i) & 1)) continue;
            Cell face{cell.anchor, cell.axes & ~(Mask(1) << i)};
            S sv = (k % 2 == 0) ? v : S(-v);
            out.add(face, -sv);
            face.anchor[i] += 1;
            out.add(face, sv);
            ++k;
        }
    }
    return out;
}

template <class S>
S mass(const Chain<S>& c) {
    S total = 0;
    for (auto& kv : c.cells) total += abs_of(kv.second);
    return total * pow2_neg<S>(c.L * c.m);
}

template <class S>
S normal_mass(const Chain<S>& c) {
    if (c.m == 0) return mass(c);
    return mass(c) + mass(boundary(c));
}

template <class S>
Chain<S> translate(const Chain<S>& c, const Index& z) {
    Chain<S> out(c.d, c.L, c.m);
    for (auto& [cell, v] : c.cells) {
        Cell t = cell;
        for (int i = 0; i < c.d; ++i) t.anchor[i] += z[i];
        out.cells.emplace(t, v);
    }
    return out;
}

/// smallest node box containing every cell of the chain
template <class S>
std::optional<NodeBox> support_box(const Chain<S>& c) {
    if (c.empty()) return std::nullopt;
    NodeBox b;
    b.d = c.d;
    bool first = true;
    for (auto& [cell, v] : c.cells) {
        for (int i = 0; i < c.d; ++i) {
            std::int64_t lo = cell.anchor[i];
            std::int64_t hi = lo + ((cell.axes >> i) & 1);
            if (first || lo < b.lo[i]) b.lo[i] = lo;
            if (first || hi > b.hi[i]) b.hi[i] = hi;
        }
        first = false;
    }
    return b;
}

template <class S>
bool chain_inside(const NodeBox& box, const Chain<S>& c) {
    for (auto& kv : c.cells)
        if (!cell_inside(box, kv.first)) return false;
    return true;
}

/// the m-cube anchor + [0,n]^I (lattice units) subdivided into grid cells
template <class S>
Chain<S> cube_chain(int d, int L, const Index& anchor, Mask axes, std::int64_t n, const S& coeff) {
    Chain<S> out(d, L, popcount(axes));
    auto ax = mask_axes(axes);
    std::vector<std::int64_t> off(ax.size(), 0);
    while (true) {
        Cell c{anchor, axes};
        for (std::size_t k = 0; k < ax.size(); ++k) c.anchor[ax[k]] += off[k];
        out.add(c, coeff);
        std::size_t k = 0;
        while (k < ax.size() && ++off[k] == n) off[k++] = 0;
        if (k == ax.size()) break;
    }
    return out;
}

/// every cell with the given axes inside the box
template <class S>
Chain<S> box_chain(int L, const NodeBox& box, Mask axes, const S& coeff) {
    Chain<S> out(box.d, L, popcount(axes));
    NodeBox anchors = box;
    for (int i = 0; i < box.d; ++i)
        if ((axes >> i) & 1) anchors.hi[i] -= 1;
    for (int i = 0; i < box.d; ++i)
        if (anchors.hi[i] < anchors.lo[i]) return out;
    for (std::size_t k = 0; k < anchors.size(); ++k) out.add(Cell{anchors.node(k), axes}, coeff);
    return out;
}

/// T restricted to the closed box (cells fully inside)
template <class S>
Chain<S> restrict_to(const Chain<S>& c, const NodeBox& box) {
    Chain<S> out(c.d, c.L, c.m);
    for (auto& [cell, v] : c.cells)
        if (cell_inside(box, cell)) out.cells.emplace(cell, v);
    return out;
}

}  // namespace fracharge
