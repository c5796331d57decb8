/**
 * @brief Linear programming backends for min c.x, Ax = b, x >= 0.
 *
 * tableau_simplex: dense tableau, exact for Rational, tolerance-based for double.
 * interior_point: Mehrotra predictor-corrector on sparse normal equations.
 */
#pragma once

#include <algorithm>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "types.hpp"

namespace fracharge {

template <class S>
struct SimplexResult {
    std::vector<S> x;
    S objective = 0;
    int iterations = 0;
};

/// A is row-major rows x cols; the columns listed in basis must form the identity
/// and b must be nonnegative.
template <class S>
SimplexResult<S> tableau_simplex(int rows, int cols, std::vector<S> A, std::vector<S> b, const std::vector<S>& c,
                                 std::vector<int> basis, double eps = 1e-11, int max_iter = 100000) {
    auto at = [&](int i, int j) -> S& { return A[static_cast<std::size_t>(i) * cols + j]; };
    auto positive = [&](const S& v) {
        if constexpr (std::is_same_v<S, double>) return v > eps;
        else return v > 0;
    };
    auto negative = [&](const S& v) {
        if constexpr (std::is_same_v<S, double>) return v < -eps;
        else return v < 0;
    };

    std::vector<S> z(cols);
    for (int j = 0; j < cols; ++j) {
        z[j] = c[j];
        for (int i = 0; i < rows; ++i)
            if (!is_zero(at(i, j))) z[j] -= c[basis[i]] * at(i, j);
    }

    bool bland = false;
    int degenerate_run = 0;
    int it = 0;
    for (; it < max_iter; ++it) {
        int enter = -1;
        for (int j = 0; j < cols; ++j) {
            if (!negative(z[j])) continue;
            if (enter < 0) {
                enter = j;
                if (bland) break;
            } else if (z[j] < z[enter]) {
                enter = j;
            }
        }
        if (enter < 0) break;

        int leave = -1;
        S best = 0;
        for (int i = 0; i < rows; ++i) {
            if (!positive(at(i, enter))) continue;
            S ratio = b[i] / at(i, enter);
            if (leave < 0 || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave < 0) throw SolverError("linear program is unbounded");

        degenerate_run = is_zero(best) ? degenerate_run + 1 : 0;
        if (degenerate_run > 50) bland = true;

        S piv = at(leave, enter);
        for (int j = 0; j < cols; ++j)
            if (!is_zero(at(leave, j))) at(leave, j) /= piv;
        b[leave] /= piv;
        std::vector<int> nz;
        for (int j = 0; j < cols; ++j)
            if (!is_zero(at(leave, j))) nz.push_back(j);
        for (int i = 0; i < rows; ++i) {
            if (i == leave) continue;
            S f = at(i, enter);
            if (is_zero(f)) continue;
            for (int j : nz) at(i, j) -= f * at(leave, j);
            b[i] -= f * b[leave];
            if constexpr (std::is_same_v<S, double>) {
                at(i, enter) = 0.0;
                if (b[i] < 0 && b[i] > -eps) b[i] = 0.0;
            }
        }
        S fz = z[enter];
        for (int j : nz) z[j] -= fz * at(leave, j);
        if constexpr (std::is_same_v<S, double>) z[enter] = 0.0;
        basis[leave] = enter;
    }
    if (it == max_iter) throw SolverError("simplex iteration limit reached");

    SimplexResult<S> res;
    res.x.assign(cols, S(0));
    for (int i = 0; i < rows; ++i) res.x[basis[i]] = b[i];
    res.objective = 0;
    for (int j = 0; j < cols; ++j)
        if (!is_zero(res.x[j])) res.objective += c[j] * res.x[j];
    res.iterations = it;
    return res;
}

struct IpmResult {
    Eigen::VectorXd x, y, z;
    double primal = 0, dual = 0;
    int iterations = 0;
};

struct IpmOptions {
    double tol = 1e-10;
    int max_iter = 200;
    double accept_tol = 1e-6;  // best iterate is returned on stagnation if it reaches this
    int stall_iter = 15;
};

/// Mehrotra predictor-corrector; needs c > 0 (the starting point is x = 1, y = 0, z = c)
inline IpmResult interior_point(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& c, const IpmOptions& opt = {}) {
    using Vec = Eigen::VectorXd;
    const Eigen::Index n = A.cols();
    Vec x = Vec::Ones(n), z = c, y = Vec::Zero(A.rows());
    if (z.minCoeff() <= 0) throw SolverError("interior point start needs positive costs");
    Eigen::SparseMatrix<double> At = A.transpose();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    double bnorm = 1 + b.norm(), cnorm = 1 + c.norm();

    auto max_step = [](const Vec& v, const Vec& dv) {
        double a = 1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
        return a;
    };

    IpmResult res, best;
    double best_score = std::numeric_limits<double>::infinity();
    int since_best = 0;
    auto give_up = [&](const char* why) -> IpmResult {
        if (best_score <= opt.accept_tol) return best;
        throw SolverError(why);
    };
    for (int it = 0; it < opt.max_iter; ++it) {
        Vec rp = b - A * x;
        Vec rd = c - At * y - z;
        double pobj = c.dot(x), dobj = b.dot(y);
        double mu = x.dot(z) / static_cast<double>(n);
        res.iterations = it;
        res.x = x;
        res.y = y;
        res.z = z;
        res.primal = pobj;
        res.dual = dobj;
        double score = std::max({rp.norm() / bnorm, rd.norm() / cnorm, std::fabs(pobj - dobj) / (1 + std::fabs(pobj))});
        if (score < opt.tol) return res;
        if (score < best_score) {
            best_score = score;
            best = res;
            since_best = 0;
        } else if (++since_best >= opt.stall_iter) {
            return give_up("interior point stalled");
        }
        Vec D = x.cwiseQuotient(z);
        Eigen::SparseMatrix<double> M = A * D.asDiagonal() * At;
        double dmax = 0;
        for (Eigen::Index i = 0; i < M.rows(); ++i) dmax = std::max(dmax, M.coeff(i, i));
        for (Eigen::Index i = 0; i < M.rows(); ++i) M.coeffRef(i, i) += 1e-15 * dmax;
        if (!analyzed) {
            ldlt.analyzePattern(M);
            analyzed = true;
        }
        ldlt.factorize(M);
        // near the optimum D spans too many decades
        if (ldlt.info() != Eigen::Success) return give_up("normal equations factorization failed");

        auto solve = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dz) {
            Vec t = rc.cwiseQuotient(z) - D.cwiseProduct(rd);
            Vec rhs = rp - A * t;
            dy = ldlt.solve(rhs);
            // refine against the unregularized A D A^T
            for (int k = 0; k < 3; ++k) {
                Vec r = rhs - A * D.cwiseProduct(At * dy);
                if (r.norm() <= 1e-14 * rhs.norm()) break;
                dy += ldlt.solve(r);
            }
            dz = rd - At * dy;
            dx = (rc - x.cwiseProduct(dz)).cwiseQuotient(z);
        };

        Vec dxa, dya, dza;
        solve(-x.cwiseProduct(z), dxa, dya, dza);
        double ap = max_step(x, dxa), ad = max_step(z, dza);
        double mu_aff = (x + ap * dxa).dot(z + ad * dza) / static_cast<double>(n);
        double sigma = std::pow(mu_aff / mu, 3);

        Vec rc = Vec::Constant(n, sigma * mu) - x.cwiseProduct(z) - dxa.cwiseProduct(dza);
        Vec dx, dy, dz;
        solve(rc, dx, dy, dz);
        ap = std::min(1.0, 0.995 * max_step(x, dx));
        ad = std::min(1.0, 0.995 * max_step(z, dz));
        x += ap * dx;
        y += ad * dy;
        z += ad * dz;
    }
    return give_up("interior point iteration limit reached");
}

}  // namespace fracharge
