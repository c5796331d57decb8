/**
 * @brief Grid flat norm F(T) = min M(S) + M(T - dS) as a linear program, with certificates.
 *
 * Variables s+, s-, r+, r- >= 0 with r+ - r- + B(s+ - s-) = t; objective h^{m+1}|s| + h^m|r|.
 * The box is the support box of T grown by a margin; any box containing the support
 * gives the same value because clamping onto a box is a cellular retraction.
 */
#pragma once

#include <unordered_map>

#include "chain.hpp"
#include "lp.hpp"

namespace fracharge {

enum class LpMode { Exact, Float };

enum class FloatSolver { Auto, Simplex, InteriorPoint };

template <class S>
struct FlatNormCert {
    S value = 0;
    Chain<S> filling;
    Chain<S> remainder;
    double lower_bound = 0;
    std::string solver;
    int iterations = 0;
};

struct CellHash {
    std::size_t operator()(const Cell& c) const {
        std::size_t h = c.axes;
        for (auto a : c.anchor) h = h * 1000003u ^ static_cast<std::size_t>(a + 0x9e3779b9);
        return h;
    }
};

struct FlatNormOptions {
    std::int64_t margin = 0;
    FloatSolver solver = FloatSolver::Auto;
    int simplex_limit = 2000;
    int exact_limit = 2500;
};

namespace detail {

/// enumeration of the m- and (m+1)-cells of a box plus the boundary incidences
struct FlatLayout {
    std::vector<Cell> edges;  // m-cells (rows)
    std::vector<Cell> faces;  // (m+1)-cells
    std::unordered_map<Cell, int, CellHash> edge_index;
    std::vector<std::vector<std::pair<int, int>>> incid;  // per face: (edge row, sign)
};

inline FlatLayout build_layout(int d, int L, int m, const NodeBox& box) {
    FlatLayout lay;
    for (Mask I : masks_of_degree(d, m)) {
        auto ch = box_chain<double>(L, box, I, 1.0);
        for (auto& kv : ch.cells) {
            lay.edge_index.emplace(kv.first, static_cast<int>(lay.edges.size()));
            lay.edges.push_back(kv.first);
        }
    }
    if (m < d) {
        for (Mask J : masks_of_degree(d, m + 1)) {
            auto ch = box_chain<double>(L, box, J, 1.0);
            for (auto& kv : ch.cells) {
                lay.faces.push_back(kv.first);
                ChainD one(d, L, m + 1);
                one.add(kv.first, 1.0);
                std::vector<std::pair<int, int>> col;
                for (auto& [e, v] : boundary(one).cells) col.emplace_back(lay.edge_index.at(e), v > 0 ? 1 : -1);
                lay.incid.push_back(std::move(col));
            }
        }
    }
    return lay;
}

template <class S>
FlatNormCert<S> trivial_cert(const Chain<S>& T, const char* why) {
    FlatNormCert<S> cert;
    cert.filling = Chain<S>(T.d, T.L, std::min(T.m + 1, T.d));
    cert.remainder = T;
    cert.value = mass(T);
    cert.lower_bound = to_double(cert.value);
    cert.solver = why;
    return cert;
}

}  // namespace detail

/// exact rational simplex
inline FlatNormCert<Rational> flat_norm_exact(const ChainQ& T, const FlatNormOptions& opt = {}) {
    if (T.empty()) return detail::trivial_cert(T, "empty");
    if (T.m == T.d) return detail::trivial_cert(T, "top-dimensional");
    NodeBox box = support_box(T)->grown(opt.margin);
    auto lay = detail::build_layout(T.d, T.L, T.m, box);
    int ne = static_cast<int>(lay.edges.size()), nf = static_cast<int>(lay.faces.size());
    int cols = 2 * nf + 2 * ne;
    if (cols > opt.exact_limit)
        throw ValidationError("exact flat norm limited to " + std::to_string(opt.exact_limit) + " variables, got " +
                              std::to_string(cols));
    // scaled by h^-m: s costs h, r costs 1
    Rational h = pow2_neg<Rational>(T.L);
    std::vector<Rational> A(static_cast<std::size_t>(ne) * cols, Rational(0)), b(ne), c(cols);
    for (int f = 0; f < nf; ++f) {
        c[f] = h;
        c[nf + f] = h;
        for (auto [e, sg] : lay.incid[f]) {
            A[static_cast<std::size_t>(e) * cols + f] = sg;
            A[static_cast<std::size_t>(e) * cols + nf + f] = -sg;
        }
    }
    std::vector<int> basis(ne);
    for (int e = 0; e < ne; ++e) {
        c[2 * nf + e] = 1;
        c[2 * nf + ne + e] = 1;
        A[static_cast<std::size_t>(e) * cols + 2 * nf + e] = 1;
        A[static_cast<std::size_t>(e) * cols + 2 * nf + ne + e] = -1;
        b[e] = T.coeff(lay.edges[e]);
        if (b[e] < 0) {
            for (int j = 0; j < cols; ++j) A[static_cast<std::size_t>(e) * cols + j] = -A[static_cast<std::size_t>(e) * cols + j];
            b[e] = -b[e];
            basis[e] = 2 * nf + ne + e;
        } else {
            basis[e] = 2 * nf + e;
        }
    }
    auto res = tableau_simplex<Rational>(ne, cols, std::move(A), std::move(b), c, std::move(basis));
    FlatNormCert<Rational> cert;
    cert.filling = ChainQ(T.d, T.L, T.m + 1);
    for (int f = 0; f < nf; ++f) cert.filling.add(lay.faces[f], Rational(res.x[f] - res.x[nf + f]));
    cert.remainder = T - boundary(cert.filling);
    cert.value = mass(cert.filling) + mass(cert.remainder);
    if (cert.value != res.objective * pow2_neg<Rational>(T.L * T.m))
        throw SolverError("exact certificate does not reproduce the optimum");
    cert.lower_bound = to_double(cert.value);
    cert.solver = "exact-simplex";
    cert.iterations = res.iterations;
    return cert;
}

/// double precision: dense simplex for small problems, interior point otherwise
inline FlatNormCert<double> flat_norm_float(const ChainD& T, const FlatNormOptions& opt = {}) {
    if (T.empty()) return detail::trivial_cert(T, "empty");
    if (T.m == T.d) return detail::trivial_cert(T, "top-dimensional");
    NodeBox box = support_box(T)->grown(opt.margin);
    auto lay = detail::build_layout(T.d, T.L, T.m, box);
    int ne = static_cast<int>(lay.edges.size()), nf = static_cast<int>(lay.faces.size());
    int cols = 2 * nf + 2 * ne;
    double h = std::ldexp(1.0, -T.L);
    double hm = std::ldexp(1.0, -T.L * T.m);
    bool use_simplex = opt.solver == FloatSolver::Simplex || (opt.solver == FloatSolver::Auto && cols <= opt.simplex_limit);

    std::vector<double> s(nf, 0.0);
    FlatNormCert<double> cert;
    Eigen::VectorXd y;
    if (use_simplex) {
        std::vector<double> A(static_cast<std::size_t>(ne) * cols, 0.0), b(ne), c(cols);
        for (int f = 0; f < nf; ++f) {
            c[f] = c[nf + f] = h;
            for (auto [e, sg] : lay.incid[f]) {
                A[static_cast<std::size_t>(e) * cols + f] = sg;
                A[static_cast<std::size_t>(e) * cols + nf + f] = -sg;
            }
        }
        std::vector<int> basis(ne);
        for (int e = 0; e < ne; ++e) {
            c[2 * nf + e] = c[2 * nf + ne + e] = 1;
            A[static_cast<std::size_t>(e) * cols + 2 * nf + e] = 1;
            A[static_cast<std::size_t>(e) * cols + 2 * nf + ne + e] = -1;
            b[e] = T.coeff(lay.edges[e]);
            if (b[e] < 0) {
                for (int j = 0; j < cols; ++j) A[static_cast<std::size_t>(e) * cols + j] *= -1;
                b[e] = -b[e];
                basis[e] = 2 * nf + ne + e;
            } else {
                basis[e] = 2 * nf + e;
            }
        }
        auto res = tableau_simplex<double>(ne, cols, std::move(A), std::move(b), c, std::move(basis));
        for (int f = 0; f < nf; ++f) s[f] = res.x[f] - res.x[nf + f];
        cert.solver = "float-simplex";
        cert.iterations = res.iterations;
    } else {
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd b(ne), c(cols);
        for (int f = 0; f < nf; ++f) {
            c[f] = c[nf + f] = h;
            for (auto [e, sg] : lay.incid[f]) {
                trip.emplace_back(e, f, sg);
                trip.emplace_back(e, nf + f, -sg);
            }
        }
        for (int e = 0; e < ne; ++e) {
            c[2 * nf + e] = c[2 * nf + ne + e] = 1;
            trip.emplace_back(e, 2 * nf + e, 1.0);
            trip.emplace_back(e, 2 * nf + ne + e, -1.0);
            b[e] = T.coeff(lay.edges[e]);
        }
        Eigen::SparseMatrix<double> A(ne, cols);
        A.setFromTriplets(trip.begin(), trip.end());
        auto res = interior_point(A, b, c);
        double smax = 0;
        for (int f = 0; f < nf; ++f) {
            s[f] = res.x[f] - res.x[nf + f];
            smax = std::max(smax, std::fabs(s[f]));
        }
        for (double& v : s)
            if (std::fabs(v) < 1e-12 * (1 + smax)) v = 0.0;
        y = res.y;
        cert.solver = "interior-point";
        cert.iterations = res.iterations;
    }

    cert.filling = ChainD(T.d, T.L, T.m + 1);
    for (int f = 0; f < nf; ++f) cert.filling.add(lay.faces[f], s[f]);
    cert.remainder = T - boundary(cert.filling);
    cert.value = mass(cert.filling) + mass(cert.remainder);

    if (use_simplex) {
        cert.lower_bound = cert.value;
    } else {
        // dual feasible point: |y_e| <= 1 and |(B^T y)_f| <= h, bound = h^m t.y
        for (int e = 0; e < ne; ++e) y[e] = std::clamp(y[e], -1.0, 1.0);
        double worst = 0;
        for (int f = 0; f < nf; ++f) {
            double v = 0;
            for (auto [e, sg] : lay.incid[f]) v += sg * y[e];
            worst = std::max(worst, std::fabs(v));
        }
        double scale = worst > h ? h / worst : 1.0;
        double lb = 0;
        for (int e = 0; e < ne; ++e) lb += T.coeff(lay.edges[e]) * y[e];
        cert.lower_bound = std::max(0.0, lb * scale * hm);
    }
    return cert;
}

inline FlatNormCert<double> flat_norm(const ChainD& T, LpMode mode, const FlatNormOptions& opt = {}) {
    if (mode == LpMode::Float) return flat_norm_float(T, opt);
    auto q = flat_norm_exact(chain_cast<Rational>(T), opt);
    FlatNormCert<double> cert;
    cert.value = to_double(q.value);
    cert.filling = chain_cast<double>(q.filling);
    cert.remainder = chain_cast<double>(q.remainder);
    cert.lower_bound = cert.value;
    cert.solver = q.solver;
    cert.iterations = q.iterations;
    return cert;
}

/// F(T1 - T2)
inline double flat_norm_lower_bound_pair(const ChainD& T1, const ChainD& T2, LpMode mode = LpMode::Float,
                                         const FlatNormOptions& opt = {}) {
    T1.check_compatible(T2);
    return flat_norm(T1 - T2, mode, opt).value;
}

/// closed forms: F(c Q_m) = |c| s^m, F(c dQ_{m+1}) = |c| s^{m+1} for side s <= 2
inline double flat_norm_cube(double coeff, double side, int m) { return std::fabs(coeff) * std::pow(side, m); }

inline double flat_norm_cube_boundary(double coeff, double side, int m_plus_1) {
    if (side > 2) throw ValidationError("closed form needs side <= 2");
    return std::fabs(coeff) * std::pow(side, m_plus_1);
}

}  // namespace fracharge
