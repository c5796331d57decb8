/**
 * @brief Paraproduct wedge of fractional charges, with Young and Zust front-ends.
 *
 * With omega_n = omega * Phi_{2^-n} and eta_n likewise, the series
 *   omega_{n0} ^ eta_{n0} + sum_n [omega_{n+1} ^ (eta_{n+1} - eta_n) + (omega_{n+1} - omega_n) ^ eta_n]
 * telescopes to S_N(T) = T(omega_N ^ eta_N). Terms t_n = S_{n+1} - S_n decay like
 * 2^{n(1 - alpha - beta)}; by default the geometric tail is summed by Aitken's rule.
 */
#pragma once

#include <functional>
#include <mutex>

#include "smoothing.hpp"

namespace fracharge {

/// C (2^{1-a} / (2^{1-a} - 1) + 1 / (1 - 2^{-a}))
inline double lp_sum_bound(double alpha, double C) {
    if (!(alpha > 0 && alpha < 1)) throw ValidationError("exponent must lie in (0, 1)");
    double t = std::pow(2.0, 1 - alpha);
    return C * (t / (t - 1) + 1 / (1 - std::pow(2.0, -alpha)));
}

struct ConvergenceRow {
    int level = 0;  ///< n + 1: the finer of the two scales in the term
    double term = 0;
    double partial_sum = 0;
    double estimate = 0;
    double fitted_rate = 0;
    int resolution = 0;  ///< grid level L
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double fitted_rate = 0;
    double theoretical_rate = 0;  ///< 2^{1 - alpha - beta}
    double achieved_tol = 0;
    int start_level = 0;
    int truncation_level = 0;
    bool accelerated = true;
    bool converged = false;
    /// last term ratio, used to extrapolate the limit form
    double last_ratio = 0;
};

/// the truncation cap was reached before the stopping rule fired
class ResolutionExhausted : public Error {
public:
    ResolutionExhausted(const std::string& what, ConvergenceReport r) : Error(what), report(std::move(r)) {}
    const char* error_class() const override { return "resolution_exhausted"; }
    int exit_code() const override { return 3; }
    ConvergenceReport report;
};

struct WedgeResult {
    double value = 0;
    ConvergenceReport report;
};

struct ParaproductOptions {
    double tol = 1e-4;
    bool accelerate = true;
    Profile profile = Profile::Poly3;
    /// fixed evaluation box shared by every chain; default is the chain's support box
    std::optional<NodeBox> eval_box;
    /// lowest admissible start level; the start is raised until the kernel fits
    int min_level = 0;
    /// deepest level; -1 means L - 2
    int max_level = -1;
    /// consecutive small increments required
    int patience = 3;
};

/// T(a ^ b) with the pointwise wedge at cell corners and corner-mean quadrature
inline double wedge_pair_eval(const SampledForm& a, const SampledForm& b, const ChainD& T) {
    int k = a.m + b.m;
    double hk = std::ldexp(1.0, -T.L * k);
    double s = 0;
    for (auto& [cell, c] : T.cells) {
        auto ax = mask_axes(cell.axes);
        int nc = 1 << ax.size();
        double acc = 0;
        for (std::size_t ka = 0; ka < a.comps.size(); ++ka) {
            Mask J = a.comps[ka];
            if ((J & cell.axes) != J) continue;
            Mask K = cell.axes & ~J;
            int kb = b.comp_index(K);
            int sg = shuffle_sign(J, K);
            double cs = 0;
            for (int q = 0; q < nc; ++q) {
                Index p = cell.anchor;
                for (std::size_t j = 0; j < ax.size(); ++j)
                    if ((q >> j) & 1) p[ax[j]] += 1;
                std::size_t n = a.box.linear(p);
                cs += a.values[ka][n] * b.values[kb][n];
            }
            acc += sg * cs;
        }
        s += c * acc / nc;
    }
    return s * hk;
}

/// slope of log|t| against level over the last (up to 4) terms, as a ratio
inline double fitted_term_rate(const std::vector<ConvergenceRow>& rows) {
    std::size_t n = std::min<std::size_t>(4, rows.size());
    if (n < 2) return 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    bool all_zero = true;
    for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
        double x = rows[i].level;
        double t = std::fabs(rows[i].term);
        if (t > 0) all_zero = false;
        double y = std::log(std::max(t, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if (all_zero) return 0;
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::exp(slope);
}

/// Aitken ratio of two consecutive terms, or 0 when extrapolation is not meaningful
inline double aitken_ratio(double prev, double cur, double scale) {
    if (prev == 0 || std::fabs(prev) < 1e-14 * std::max(1.0, std::fabs(scale))) return 0;
    double r = cur / prev;
    return (r > -0.95 && r < 0.95) ? r : 0;
}

/// factors, exponents and cached ladders of one paraproduct
class ParaproductState {
public:
    ParaproductState(ChargePtr omega, double alpha, ChargePtr eta, double beta, ParaproductOptions opt = {})
        : omega_(std::move(omega)), eta_(std::move(eta)), alpha_(alpha), beta_(beta), opt_(std::move(opt)) {
        if (!(alpha_ > 0 && alpha_ <= 1) || !(beta_ > 0 && beta_ <= 1))
            throw ValidationError("exponents must lie in (0, 1]");
        if (alpha_ + beta_ <= 1)
            throw CriticalExponentError("alpha + beta = " + std::to_string(alpha_ + beta_) +
                                        " does not exceed 1; the product is not defined");
        if (omega_->dim() != eta_->dim() || omega_->level() != eta_->level())
            throw GridMismatch("wedge factors on different grids");
        if (omega_->degree() + eta_->degree() > omega_->dim()) throw DimensionError("wedge degree exceeds dimension");
        if (!(opt_.tol > 0)) throw ValidationError("tolerance must be positive");
        int L = omega_->level();
        cap_ = opt_.max_level < 0 ? L - 2 : std::min(opt_.max_level, L - 2);
        if (cap_ < 1) throw ResolutionError("grid level too coarse for a paraproduct ladder");
        if (opt_.eval_box && opt_.eval_box->d != dim()) throw DimensionError("evaluation box dimension");
    }

    int dim() const { return omega_->dim(); }
    int level() const { return omega_->level(); }
    int degree() const { return omega_->degree() + eta_->degree(); }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    /// exponent of the product as a factor in a further product
    double exponent() const { return std::min(1.0, alpha_ + beta_ - 1); }
    double theoretical_rate() const { return std::pow(2.0, 1 - alpha_ - beta_); }
    double rate_threshold() const { return std::pow(2.0, (1 - alpha_ - beta_) / 2); }
    const ParaproductOptions& options() const { return opt_; }
    const ChargePtr& omega() const { return omega_; }
    const ChargePtr& eta() const { return eta_; }
    int cap() const { return cap_; }

    NodeBox domain() const {
        if (opt_.eval_box) return *opt_.eval_box;
        NodeBox a = omega_->domain(), b = eta_->domain();
        for (int i = 0; i < dim(); ++i) {
            a.lo[i] = std::max(a.lo[i], b.lo[i]);
            a.hi[i] = std::min(a.hi[i], b.hi[i]);
        }
        return a;
    }

    /// first level whose kernel radius fits between the box and both factor domains
    int start_level(const NodeBox& box) const {
        int L = level();
        for (int n = std::max(0, opt_.min_level); n <= cap_; ++n) {
            NodeBox need = box.grown((std::int64_t(1) << (L - n)) + 2);
            if (omega_->domain().contains(need) && eta_->domain().contains(need)) return n;
        }
        throw ResolutionError("chain too close to the data boundary for any ladder level");
    }

    WedgeResult evaluate(const ChainD& T) const {
        std::lock_guard<std::mutex> lock(mutex_);
        if (T.d != dim() || T.L != level()) throw GridMismatch("chain and wedge on different grids");
        if (T.m != degree()) throw DimensionError("chain dimension differs from wedge degree");
        if (T.empty()) {
            WedgeResult r;
            r.report.converged = true;
            r.report.theoretical_rate = theoretical_rate();
            return r;
        }
        LevelCache& lc = cache_for(box_for(T));
        if (!chain_inside(lc.box, T)) throw GridMismatch("chain leaves the evaluation box");
        return run(lc, [&](int n) { return wedge_pair_eval(lc.omega(n), lc.eta(n), T); });
    }

    /// term n via contractions: (eta_{n+1} - eta_n)(T |_ omega_{n+1}) + (-1)^{mm'} (omega_{n+1} - omega_n)(T |_ eta_n)
    double term_by_contraction(const ChainD& T, int n) const {
        std::lock_guard<std::mutex> lock(mutex_);
        LevelCache& lc = cache_for(box_for(T));
        if (n < lc.n0 || n + 1 > cap_) throw ResolutionError("term level outside the ladder");
        int m = omega_->degree(), mp = eta_->degree();
        const SampledForm& w1 = lc.omega(n + 1);
        SampledForm de = lc.eta(n + 1) - lc.eta(n);
        SampledForm dw = w1 - lc.omega(n);
        double a = FormCharge(de).evaluate(contract(T, w1));
        double b = FormCharge(dw).evaluate(contract(T, lc.eta(n)));
        return a + (((m * mp) % 2) ? -b : b);
    }

    /// term n directly, S_{n+1} - S_n
    double term_direct(const ChainD& T, int n) const {
        std::lock_guard<std::mutex> lock(mutex_);
        LevelCache& lc = cache_for(box_for(T));
        if (n < lc.n0 || n + 1 > cap_) throw ResolutionError("term level outside the ladder");
        return wedge_pair_eval(lc.omega(n + 1), lc.eta(n + 1), T) - wedge_pair_eval(lc.omega(n), lc.eta(n), T);
    }

    /// start level used for chains evaluated in this box
    int start_level_for(const ChainD& T) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_for(box_for(T)).n0;
    }

    /// sampled stand-in for the limit product on the evaluation box: per component,
    /// the pointwise product at the truncation level of the normalized full-box chain, tail-extrapolated
    std::shared_ptr<const SampledForm> limit_form() const {
        std::lock_guard<std::mutex> lock(mutex_);
        if (limit_) return limit_;
        if (!opt_.eval_box) throw ValidationError("a wedge used as a factor needs a fixed evaluation box");
        LevelCache& lc = cache_for(*opt_.eval_box);
        auto out = std::make_shared<SampledForm>(dim(), level(), degree(), lc.box);
        for (std::size_t k = 0; k < out->comps.size(); ++k) {
            Mask I = out->comps[k];
            ChainD TI = box_chain(level(), lc.box, I, 1.0);
            // unit total mass, so the stopping rule sees an average rather than a sum over the box
            TI = (1.0 / mass(TI)) * TI;
            // an unconverged component still yields the best available stand-in; its tolerance is recorded
            ConvergenceReport res;
            try {
                res = run(lc, [&](int n) { return wedge_pair_eval(lc.omega(n), lc.eta(n), TI); }).report;
            } catch (const ResolutionExhausted& e) {
                res = e.report;
            }
            limit_tol_ = std::max(limit_tol_, res.achieved_tol);
            int N = res.truncation_level;
            auto pN = wedge(lc.omega(N), lc.eta(N));
            out->values[k] = pN.comp(I);
            double r = res.accelerated ? res.last_ratio : 0.0;
            if (r != 0 && N > lc.n0) {
                auto pM = wedge(lc.omega(N - 1), lc.eta(N - 1));
                const auto& a = pN.comp(I);
                const auto& b = pM.comp(I);
                for (std::size_t n = 0; n < a.size(); ++n) out->values[k][n] += (a[n] - b[n]) * r / (1 - r);
            }
        }
        limit_ = out;
        return limit_;
    }

    /// largest achieved tolerance over the components of the limit form (0 before it is built)
    double limit_tolerance() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return limit_tol_;
    }

private:
    struct LevelCache {
        NodeBox box;
        int n0 = 0;
        Profile profile = Profile::Poly3;
        ChargePtr wc, ec;
        std::unique_ptr<Smoother> ws, es;
        std::map<int, SampledForm> om, et;

        const SampledForm& level_form(int n, const ChargePtr& c, std::unique_ptr<Smoother>& s,
                                      std::map<int, SampledForm>& store) {
            auto it = store.find(n);
            if (it != store.end()) return it->second;
            Mollifier K(c->dim(), c->level(), std::ldexp(1.0, -n), profile);
            SampledForm f = s ? s->smooth(K) : smooth_charge_generic(*c, K, box);
            return store.emplace(n, std::move(f)).first->second;
        }
        const SampledForm& omega(int n) { return level_form(n, wc, ws, om); }
        const SampledForm& eta(int n) { return level_form(n, ec, es, et); }
    };

    NodeBox box_for(const ChainD& T) const {
        if (opt_.eval_box) return *opt_.eval_box;
        auto b = support_box(T);
        if (!b) throw ValidationError("empty chain has no evaluation box");
        return *b;
    }

    static std::vector<std::int64_t> box_key(const NodeBox& b) {
        std::vector<std::int64_t> k;
        for (int i = 0; i < b.d; ++i) {
            k.push_back(b.lo[i]);
            k.push_back(b.hi[i]);
        }
        return k;
    }

    LevelCache& cache_for(const NodeBox& box) const {
        auto key = box_key(box);
        auto it = caches_.find(key);
        if (it != caches_.end()) return *it->second;
        auto lc = std::make_unique<LevelCache>();
        lc->box = box;
        lc->n0 = start_level(box);
        lc->profile = opt_.profile;
        lc->wc = omega_;
        lc->ec = eta_;
        std::int64_t reach = (std::int64_t(1) << (level() - lc->n0)) + 2;
        ChargePtr tmp;
        if (fast_base(*omega_, tmp)) lc->ws = std::make_unique<Smoother>(omega_, box, reach);
        if (fast_base(*eta_, tmp)) lc->es = std::make_unique<Smoother>(eta_, box, reach);
        return *caches_.emplace(key, std::move(lc)).first->second;
    }

    template <class PartialSum>
    WedgeResult run(LevelCache& lc, PartialSum&& S) const {
        ConvergenceReport rep;
        rep.theoretical_rate = theoretical_rate();
        rep.accelerated = opt_.accelerate;
        rep.start_level = lc.n0;
        double prev_s = S(lc.n0);
        double prev_est = prev_s, prev_term = 0;
        int small = 0;
        std::vector<double> incs;
        for (int n = lc.n0; n < cap_; ++n) {
            ConvergenceRow row;
            row.level = n + 1;
            row.resolution = level();
            row.partial_sum = S(n + 1);
            row.term = row.partial_sum - prev_s;
            double r = rep.rows.empty() ? 0.0 : aitken_ratio(prev_term, row.term, row.partial_sum);
            row.estimate = opt_.accelerate ? row.partial_sum + row.term * r / (1 - r) : row.partial_sum;
            rep.rows.push_back(row);
            rep.rows.back().fitted_rate = fitted_term_rate(rep.rows);
            double inc = opt_.accelerate ? std::fabs(row.estimate - prev_est) : std::fabs(row.term);
            // the first accelerated estimate has no predecessor of its own kind
            if (opt_.accelerate && rep.rows.size() == 1) inc = std::fabs(row.term);
            incs.push_back(inc);
            small = inc < opt_.tol ? small + 1 : 0;
            prev_s = row.partial_sum;
            prev_est = row.estimate;
            prev_term = row.term;
            rep.fitted_rate = rep.rows.back().fitted_rate;
            rep.truncation_level = n + 1;
            rep.last_ratio = r;
            // terms at roundoff level carry no rate information
            double recent = 0;
            for (std::size_t i = rep.rows.size() - std::min<std::size_t>(rep.rows.size(), opt_.patience); i < rep.rows.size(); ++i)
                recent = std::max(recent, std::fabs(rep.rows[i].term));
            bool negligible = recent <= 1e-12 * std::max(1.0, std::fabs(row.partial_sum));
            if (small >= opt_.patience && (rep.fitted_rate <= rate_threshold() || negligible)) {
                rep.converged = true;
                break;
            }
        }
        std::size_t k = std::min<std::size_t>(incs.size(), static_cast<std::size_t>(opt_.patience));
        for (std::size_t i = incs.size() - k; i < incs.size(); ++i) rep.achieved_tol = std::max(rep.achieved_tol, incs[i]);
        if (!rep.converged) {
            if (rep.rows.empty()) rep.truncation_level = lc.n0;
            throw ResolutionExhausted("ladder cap reached at level " + std::to_string(cap_) +
                                          " before the tolerance was met",
                                      rep);
        }
        return WedgeResult{rep.rows.back().estimate, rep};
    }

    ChargePtr omega_, eta_;
    double alpha_, beta_;
    ParaproductOptions opt_;
    int cap_ = 0;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<std::int64_t>, std::unique_ptr<LevelCache>> caches_;
    mutable std::shared_ptr<const SampledForm> limit_;
    mutable double limit_tol_ = 0;
};

class WedgeCharge : public Charge {
public:
    explicit WedgeCharge(std::shared_ptr<const ParaproductState> ps) : ps_(std::move(ps)) {}

    int dim() const override { return ps_->dim(); }
    int level() const override { return ps_->level(); }
    int degree() const override { return ps_->degree(); }
    NodeBox domain() const override { return ps_->domain(); }
    std::string kind() const override { return "wedge"; }
    double evaluate(const ChainD& T) const override {
        check_chain(T);
        return ps_->evaluate(T).value;
    }
    std::shared_ptr<const SampledForm> limit_form() const override {
        if (!ps_->options().eval_box) return nullptr;
        return ps_->limit_form();
    }
    const ParaproductState& state() const { return *ps_; }

private:
    std::shared_ptr<const ParaproductState> ps_;
};

inline std::shared_ptr<const ParaproductState> make_paraproduct(ChargePtr omega, double alpha, ChargePtr eta,
                                                                double beta, ParaproductOptions opt = {}) {
    return std::make_shared<const ParaproductState>(std::move(omega), alpha, std::move(eta), beta, std::move(opt));
}

inline ChargePtr wedge_charge(std::shared_ptr<const ParaproductState> ps) {
    return std::make_shared<WedgeCharge>(std::move(ps));
}

inline WedgeResult wedge_eval(const ParaproductState& ps, const ChainD& T) { return ps.evaluate(T); }

/// node box of [0,1]^d
inline NodeBox unit_box(int d, int L) { return cube_box(d, L, 0.0, 1.0); }

/// int_0^1 f dg as the paraproduct f ^ dg on [[0,1]]
inline WedgeResult young_integral(const SampledForm& f, const SampledForm& g, double alpha, double beta,
                                  ParaproductOptions opt = {}) {
    if (f.d != 1 || g.d != 1) throw DimensionError("Young integrals live on a 1-D grid");
    if (f.m != 0 || g.m != 0) throw DimensionError("Young integrals take 0-forms");
    if (f.L != g.L) throw GridMismatch("f and g sampled at different levels");
    NodeBox unit = unit_box(1, f.L);
    if (!opt.eval_box) opt.eval_box = unit;
    auto ps = make_paraproduct(form_charge(f), alpha, exterior_derivative(form_charge(g)), beta, opt);
    return ps->evaluate(box_chain(f.L, unit, Mask(1), 1.0));
}

/// int_{[0,1]^d} f dg_1 ^ ... ^ dg_d, left-associated
inline WedgeResult zust_integral(const SampledForm& f, const std::vector<SampledForm>& gs,
                                 const std::vector<double>& alphas, ParaproductOptions opt = {}) {
    int d = f.d;
    if (static_cast<int>(gs.size()) != d) throw DimensionError("need one g per axis");
    if (static_cast<int>(alphas.size()) != d + 1) throw ValidationError("need d + 1 exponents");
    double sum = 0;
    for (double a : alphas) {
        if (!(a > 0 && a <= 1)) throw ValidationError("exponents must lie in (0, 1]");
        sum += a;
    }
    if (sum <= d)
        throw CriticalExponentError("exponent sum " + std::to_string(sum) + " does not exceed " + std::to_string(d));
    if (f.m != 0) throw DimensionError("f must be a 0-form");
    for (auto& g : gs)
        if (g.m != 0 || g.d != d || g.L != f.L) throw GridMismatch("g must be a 0-form on the grid of f");

    NodeBox unit = unit_box(d, f.L);
    NodeBox data = f.box;
    for (auto& g : gs)
        for (int i = 0; i < d; ++i) {
            data.lo[i] = std::max(data.lo[i], g.box.lo[i]);
            data.hi[i] = std::min(data.hi[i], g.box.hi[i]);
        }
    if (!data.contains(unit)) throw GridMismatch("samples must cover [0,1]^d");
    std::int64_t margin = std::numeric_limits<std::int64_t>::max();
    for (int i = 0; i < d; ++i) margin = std::min({margin, unit.lo[i] - data.lo[i], data.hi[i] - unit.hi[i]});

    ChargePtr cur = form_charge(f);
    double cur_alpha = alphas[0];
    WedgeResult last;
    for (int j = 1; j <= d; ++j) {
        ParaproductOptions o = opt;
        o.eval_box = unit.grown(margin * (d - j) / d);
        auto ps = make_paraproduct(cur, cur_alpha, exterior_derivative(form_charge(gs[j - 1])), alphas[j], o);
        if (j == d) {
            Mask all = (Mask(1) << d) - 1;
            last = ps->evaluate(box_chain(f.L, unit, all, 1.0));
        } else {
            cur_alpha = ps->exponent();
            cur = wedge_charge(ps);
        }
    }
    return last;
}

struct StabilityReport {
    std::vector<double> deviation;  ///< per sequence member, sup over the battery
    bool decreasing = true;
};

/// sup over the battery of |wedge(omega_p, eta_p)(T) - wedge(omega, eta)(T)| along a factor sequence
inline StabilityReport wedge_stability(const ParaproductState& ref,
                                       const std::vector<std::pair<ChargePtr, ChargePtr>>& sequence,
                                       const std::vector<ChainD>& battery, double norm_bound,
                                       const std::function<double(const Charge&)>& norm) {
    StabilityReport rep;
    for (auto& [w, e] : sequence)
        if (norm(*w) > norm_bound || norm(*e) > norm_bound)
            throw ValidationError("factor sequence is not uniformly bounded");
    std::vector<double> base;
    for (auto& T : battery) base.push_back(ref.evaluate(T).value);
    for (auto& [w, e] : sequence) {
        ParaproductState ps(w, ref.alpha(), e, ref.beta(), ref.options());
        double dev = 0;
        for (std::size_t k = 0; k < battery.size(); ++k)
            dev = std::max(dev, std::fabs(ps.evaluate(battery[k]).value - base[k]));
        if (!rep.deviation.empty() && dev > rep.deviation.back()) rep.decreasing = false;
        rep.deviation.push_back(dev);
    }
    return rep;
}

}  // namespace fracharge
