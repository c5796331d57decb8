/**
 * @brief Lower bounds for fractional charge norms over test-current families,
 * Hölder-form constants, McShane approximation, and interpolation checks.
 */
#pragma once

#include <atomic>
#include <thread>

#include "charge.hpp"
#include "flat_norm.hpp"
#include "mollifier.hpp"
#include "smoothing.hpp"

namespace fracharge {

inline std::atomic<int>& thread_limit() {
    static std::atomic<int> n{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
    return n;
}

inline void set_thread_limit(int n) { thread_limit() = std::max(1, n); }

/// fn(i) for i in [0, n), split into contiguous ranges across threads
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(thread_limit().load()), std::max<std::size_t>(n / 64, 1));
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = n * t / nt; i < n * (t + 1) / nt; ++i) fn(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

struct TestCurrent {
    ChainD T;
    double N = 0;
    double F = 0;  ///< flat norm, or an upper bound of it
};

class TestFamily {
public:
    virtual ~TestFamily() = default;
    virtual std::size_t size() const = 0;
    virtual TestCurrent member(std::size_t k) const = 0;
};

class ExplicitFamily : public TestFamily {
public:
    std::vector<TestCurrent> items;
    ExplicitFamily() = default;
    explicit ExplicitFamily(std::vector<TestCurrent> v) : items(std::move(v)) {}
    std::size_t size() const override { return items.size(); }
    TestCurrent member(std::size_t k) const override { return items[k]; }
};

/// m-cubes and boundaries of (m+1)-cubes of side 2^-j, j in [j0, j1], with closed-form F
class DyadicCubeFamily : public TestFamily {
public:
    DyadicCubeFamily(int d, int L, int m, const NodeBox& box, int j0 = 0, int j1 = -1, bool aligned = true,
                     bool cubes = true, bool boundaries = true)
        : d_(d), L_(L), m_(m) {
        if (m < 0 || m > d) throw DimensionError("family degree out of range");
        if (j1 < 0) j1 = L;
        for (int j = std::max(0, j0); j <= j1; ++j) {
            std::int64_t side = std::int64_t(1) << (L - j);
            for (int kind = 0; kind < 2; ++kind) {
                if ((kind == 0 && !cubes) || (kind == 1 && (!boundaries || m == d))) continue;
                for (Mask I : masks_of_degree(d, kind == 0 ? m : m + 1)) {
                    Block b;
                    b.side = side;
                    b.axes = I;
                    b.boundary = kind == 1;
                    b.step = aligned ? side : 1;
                    b.anchors.d = d;
                    bool ok = true;
                    for (int i = 0; i < d; ++i) {
                        std::int64_t ext = ((I >> i) & 1) ? side : 0;
                        std::int64_t lo = box.lo[i], hi = box.hi[i] - ext;
                        if (aligned) {
                            lo = floor_div(lo + side - 1, side);
                            hi = floor_div(hi, side);
                        }
                        b.anchors.lo[i] = lo;
                        b.anchors.hi[i] = hi;
                        if (hi < lo) ok = false;
                    }
                    if (!ok) continue;
                    b.start = total_;
                    total_ += b.anchors.size();
                    blocks_.push_back(b);
                }
            }
        }
    }

    std::size_t size() const override { return total_; }

    TestCurrent member(std::size_t k) const override {
        auto it = std::upper_bound(blocks_.begin(), blocks_.end(), k,
                                   [](std::size_t v, const Block& b) { return v < b.start; });
        const Block& b = *std::prev(it);
        Index a = b.anchors.node(k - b.start);
        for (int i = 0; i < d_; ++i) a[i] *= b.step;
        double s = std::ldexp(static_cast<double>(b.side), -L_);
        TestCurrent tc;
        if (!b.boundary) {
            tc.T = cube_chain<double>(d_, L_, a, b.axes, b.side, 1.0);
            tc.N = std::pow(s, m_) + (m_ > 0 ? 2.0 * m_ * std::pow(s, m_ - 1) : 0.0);
            tc.F = flat_norm_cube(1.0, s, m_);
        } else {
            tc.T = boundary(cube_chain<double>(d_, L_, a, b.axes, b.side, 1.0));
            tc.N = 2.0 * (m_ + 1) * std::pow(s, m_);
            tc.F = flat_norm_cube_boundary(1.0, s, m_ + 1);
        }
        return tc;
    }

private:
    struct Block {
        std::size_t start = 0;
        std::int64_t side = 1, step = 1;
        Mask axes = 0;
        bool boundary = false;
        NodeBox anchors;
    };
    int d_, L_, m_;
    std::size_t total_ = 0;
    std::vector<Block> blocks_;
};

/// all pairs [[x]] - [[y]] of nodes of a 1-D box; F = min(2, |x - y|)
class PointPairFamily : public TestFamily {
public:
    PointPairFamily(int L, const NodeBox& box) : L_(L), box_(box) {
        if (box.d != 1) throw DimensionError("point-pair family is one-dimensional");
        n_ = static_cast<std::size_t>(box.extent(0));
    }
    std::size_t size() const override { return n_ * (n_ - 1) / 2; }
    TestCurrent member(std::size_t k) const override {
        // k -> (i, j), i < j, row-major over the strict upper triangle
        std::size_t i = 0, row = n_ - 1;
        while (k >= row) {
            k -= row;
            ++i;
            --row;
        }
        std::size_t j = i + 1 + k;
        TestCurrent tc;
        tc.T = ChainD(1, L_, 0);
        tc.T.add(Cell{Index{box_.lo[0] + static_cast<std::int64_t>(j)}, 0}, 1.0);
        tc.T.add(Cell{Index{box_.lo[0] + static_cast<std::int64_t>(i)}, 0}, -1.0);
        tc.N = 2;
        tc.F = std::min(2.0, std::ldexp(static_cast<double>(j - i), -L_));
        return tc;
    }

private:
    int L_;
    NodeBox box_;
    std::size_t n_;
};

/// density currents D_{z,I} at lattice radius R, centers on a stride grid; F from the LP primal
class DensityFamily : public TestFamily {
public:
    DensityFamily(int d, int L, int m, const NodeBox& box, int R, std::int64_t stride, Profile p = Profile::Poly3)
        : d_(d), L_(L), K_(d, L, std::ldexp(static_cast<double>(R), -L), p) {
        masks_ = masks_of_degree(d, m);
        centers_ = box.grown(-(R + 1));
        centers_.d = d;
        stride_ = std::max<std::int64_t>(1, stride);
        grid_.d = d;
        for (int i = 0; i < d; ++i) {
            if (centers_.hi[i] < centers_.lo[i]) throw ResolutionError("box too small for density currents");
            grid_.lo[i] = 0;
            grid_.hi[i] = (centers_.hi[i] - centers_.lo[i]) / stride_;
        }
    }
    std::size_t size() const override { return grid_.size() * masks_.size(); }
    TestCurrent member(std::size_t k) const override {
        Mask I = masks_[k % masks_.size()];
        Index g = grid_.node(k / masks_.size());
        Index z{};
        for (int i = 0; i < d_; ++i) z[i] = centers_.lo[i] + g[i] * stride_;
        TestCurrent tc;
        tc.T = density_chain(d_, L_, I, K_, z);
        tc.N = normal_mass(tc.T);
        tc.F = flat_norm_float(tc.T).value;
        return tc;
    }

private:
    int d_, L_;
    Mollifier K_;
    std::vector<Mask> masks_;
    NodeBox centers_, grid_;
    std::int64_t stride_ = 1;
};

/// |w(T)|, N(T), F(T) over a family
struct FamilyValues {
    std::vector<double> wt, N, F;
};

inline FamilyValues evaluate_family(const Charge& w, const TestFamily& fam) {
    if (fam.size() == 0) throw ValidationError("empty test family");
    FamilyValues v;
    v.wt.resize(fam.size());
    v.N.resize(fam.size());
    v.F.resize(fam.size());
    parallel_for(fam.size(), [&](std::size_t k) {
        TestCurrent tc = fam.member(k);
        v.wt[k] = std::fabs(w.evaluate(tc.T));
        v.N[k] = tc.N;
        v.F[k] = tc.F;
    });
    return v;
}

/// max |w(T)| / (N^{1-alpha} F^alpha); alpha = 0 gives the plain charge bound
inline double ratio_bound(const FamilyValues& v, double alpha) {
    double best = 0;
    for (std::size_t k = 0; k < v.wt.size(); ++k) {
        if (v.wt[k] == 0) continue;
        double den = std::pow(v.N[k], 1 - alpha) * std::pow(v.F[k], alpha);
        if (den > 0) best = std::max(best, v.wt[k] / den);
    }
    return best;
}

inline double fractional_norm_lb(const Charge& w, double alpha, const TestFamily& fam) {
    if (!(alpha > 0 && alpha <= 1)) throw ValidationError("exponent must lie in (0, 1]");
    return ratio_bound(evaluate_family(w, fam), alpha);
}

/// max |w(T)| / N(T)
inline double charge_norm_lb(const Charge& w, const TestFamily& fam) { return ratio_bound(evaluate_family(w, fam), 0.0); }

/// the default family: dyadic cubes and cube boundaries at levels 0..L inside the box
inline DyadicCubeFamily default_family(const Charge& w, const NodeBox& box) {
    return DyadicCubeFamily(w.dim(), w.level(), w.degree(), box);
}

/// premises ||w||_{1} <= C / eps^{1-alpha} and ||w||_{0} <= C eps^alpha, conclusion ||w||_{alpha} <= C
struct InterpolationResult {
    double lb_one = 0, lb_plain = 0, lb_alpha = 0;
    bool premise_flat = false, premise_plain = false, conclusion = false;
    bool ok() const { return premise_flat && premise_plain && conclusion; }
};

inline InterpolationResult interpolation_check(const Charge& w, double alpha, double eps, double C,
                                               const TestFamily& fam) {
    if (!(alpha > 0 && alpha <= 1)) throw ValidationError("exponent must lie in (0, 1]");
    if (!(eps > 0)) throw ValidationError("eps must be positive");
    auto v = evaluate_family(w, fam);
    InterpolationResult r;
    r.lb_one = ratio_bound(v, 1.0);
    r.lb_plain = ratio_bound(v, 0.0);
    r.lb_alpha = ratio_bound(v, alpha);
    const double slack = 1 + 1e-6;
    r.premise_flat = r.lb_one <= C / std::pow(eps, 1 - alpha) * slack;
    r.premise_plain = r.lb_plain <= C * std::pow(eps, alpha) * slack;
    r.conclusion = r.lb_alpha <= C * slack;
    return r;
}

/// theta(eps) = max over the family of (|w(T)| - eps N(T)) / F(T), clipped at 0
inline std::vector<double> continuity_profile(const Charge& w, const std::vector<double>& eps, const TestFamily& fam) {
    auto v = evaluate_family(w, fam);
    std::vector<double> out;
    for (double e : eps) {
        double th = 0;
        for (std::size_t k = 0; k < v.wt.size(); ++k)
            if (v.F[k] > 0) th = std::max(th, (v.wt[k] - e * v.N[k]) / v.F[k]);
        out.push_back(th);
    }
    return out;
}

/// (m+1) int |d_1 Phi|: ||d(w * Phi_eps)|| <= C Lip^alpha eps^{alpha-1}
inline double holder_form_constant(int d, int m, Profile p = Profile::Poly3) { return (m + 1) * profile_grad_l1(p, d); }

/// C_K = Lip + max(||w||_inf, C Lip) for a form with Hölder metadata
inline double holder_form_bound(const SampledForm& w, Profile p = Profile::Poly3) {
    if (!w.holder) throw ValidationError("form carries no Hölder metadata");
    double lip = w.holder->lip;
    return lip + std::max(w.sup_norm(), holder_form_constant(w.d, w.m, p) * lip);
}

/// f_eps(x) = min_y f(y) + Lip eps^{alpha-1} |x - y|
inline SampledForm mcshane_approx(const SampledForm& f, double eps) {
    if (f.m != 0) throw DimensionError("McShane approximation takes 0-forms");
    if (!f.holder) throw ValidationError("form carries no Hölder metadata");
    if (!(eps > 0 && eps <= 1)) throw ValidationError("eps must lie in (0, 1]");
    double lam = f.holder->lip * std::pow(eps, f.holder->alpha - 1);
    double h = f.h();
    SampledForm out = f;
    auto& g = out.values[0];
    if (f.d == 1) {
        // lower envelope of cones: one forward and one backward sweep
        for (std::size_t i = 1; i < g.size(); ++i) g[i] = std::min(g[i], g[i - 1] + lam * h);
        for (std::size_t i = g.size() - 1; i-- > 0;) g[i] = std::min(g[i], g[i + 1] + lam * h);
    } else {
        const auto& v = f.values[0];
        std::size_t n = v.size();
        parallel_for(n, [&](std::size_t a) {
            Index pa = f.box.node(a);
            double best = v[a];
            for (std::size_t b = 0; b < n; ++b) {
                Index pb = f.box.node(b);
                double r2 = 0;
                for (int i = 0; i < f.d; ++i) {
                    double t = static_cast<double>(pa[i] - pb[i]);
                    r2 += t * t;
                }
                best = std::min(best, v[b] + lam * h * std::sqrt(r2));
            }
            g[a] = best;
        });
    }
    out.holder = HolderMeta{1.0, lam};
    return out;
}

/// max over superlevel sets E of f+ and f- of |mu(E)| / (P(E)^{1-alpha} vol(E)^alpha)
inline double superlevel_constant(const HolderChargeFn& mu, const std::vector<double>& f, double alpha) {
    NodeBox cb = mu.cell_box();
    double h = std::ldexp(1.0, -mu.L);
    double hv = std::pow(h, mu.d), hp = std::pow(h, mu.d - 1);
    double best = 0;
    for (int sign : {1, -1}) {
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < f.size(); ++k)
            if (sign * f[k] > 0) order.push_back(k);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sign * f[a] > sign * f[b]; });
        std::vector<char> in(f.size(), 0);
        double vm = 0, faces = 0, cells = 0;
        for (std::size_t i = 0; i < order.size();) {
            double v = f[order[i]];
            while (i < order.size() && f[order[i]] == v) {
                std::size_t k = order[i++];
                Index p = cb.node(k);
                int nb = 0;
                for (int ax = 0; ax < mu.d; ++ax)
                    for (int s : {-1, 1}) {
                        Index q = p;
                        q[ax] += s;
                        if (cb.contains(q) && in[cb.linear(q)]) ++nb;
                    }
                faces += 2 * mu.d - 2 * nb;
                in[k] = 1;
                cells += 1;
                vm += mu.mu[k];
            }
            double P = faces * hp, V = cells * hv;
            best = std::max(best, std::fabs(vm) / (std::pow(P, 1 - alpha) * std::pow(V, alpha)));
        }
    }
    return best;
}

}  // namespace fracharge
