/**
 * @brief Charges: linear functionals on chains.
 *
 * FormCharge, DerivativeCharge and LayerCakeCharge live here; WedgeCharge is in
 * paraproduct.hpp. Sampled charges can expose their action as a linear map on the
 * node values of one base form, which is what fast smoothing convolves with.
 */
#pragma once

#include <memory>
#include <numeric>

#include "form.hpp"

namespace fracharge {

/// weight on node `node` of component `comp` of a base form
struct LinearTerm {
    int comp;
    Index node;
    double w;
};

class Charge {
public:
    virtual ~Charge() = default;
    virtual int dim() const = 0;
    virtual int level() const = 0;
    virtual int degree() const = 0;
    /// nodes the charge can be evaluated on
    virtual NodeBox domain() const = 0;
    virtual double evaluate(const ChainD& T) const = 0;
    virtual std::string kind() const = 0;

    /// base form of a linearizable charge, null otherwise
    virtual const SampledForm* base_form() const { return nullptr; }
    /// appends the action on T as node weights of base_form(); no box checks
    virtual bool linearize(const ChainD&, std::vector<LinearTerm>&) const { return false; }
    /// a sampled form standing in for a limit object (wedge charges)
    virtual std::shared_ptr<const SampledForm> limit_form() const { return nullptr; }

    void check_chain(const ChainD& T) const {
        if (T.d != dim() || T.L != level()) throw GridMismatch("chain and charge on different grids");
        if (T.m != degree()) throw DimensionError("chain dimension " + std::to_string(T.m) + " differs from charge degree " +
                                                  std::to_string(degree()));
        if (!chain_inside(domain(), T)) throw GridMismatch("chain leaves the charge domain");
    }
};

using ChargePtr = std::shared_ptr<const Charge>;

class FormCharge : public Charge {
public:
    explicit FormCharge(SampledForm w) : w_(std::move(w)) {}

    int dim() const override { return w_.d; }
    int level() const override { return w_.L; }
    int degree() const override { return w_.m; }
    NodeBox domain() const override { return w_.box; }
    std::string kind() const override { return "form"; }
    const SampledForm& form() const { return w_; }
    const SampledForm* base_form() const override { return &w_; }

    /// sum of coefficient * h^m * corner mean of w_I
    double evaluate(const ChainD& T) const override {
        check_chain(T);
        double hm = std::ldexp(1.0, -w_.L * w_.m);
        double s = 0;
        for (auto& [cell, c] : T.cells) s += c * corner_mean(w_, w_.comp_index(cell.axes), cell);
        return s * hm;
    }

    bool linearize(const ChainD& T, std::vector<LinearTerm>& out) const override {
        double hm = std::ldexp(1.0, -w_.L * w_.m);
        double share = 1.0 / (1 << w_.m);
        for (auto& [cell, c] : T.cells) {
            int k = w_.comp_index(cell.axes);
            auto ax = mask_axes(cell.axes);
            for (int b = 0; b < (1 << ax.size()); ++b) {
                Index p = cell.anchor;
                for (std::size_t j = 0; j < ax.size(); ++j)
                    if ((b >> j) & 1) p[ax[j]] += 1;
                out.push_back({k, p, c * hm * share});
            }
        }
        return true;
    }

private:
    SampledForm w_;
};

/// (d w)(T) = w(boundary T)
class DerivativeCharge : public Charge {
public:
    explicit DerivativeCharge(ChargePtr inner) : inner_(std::move(inner)) {
        if (inner_->degree() >= inner_->dim()) throw DimensionError("exterior derivative of a top-degree charge");
    }

    int dim() const override { return inner_->dim(); }
    int level() const override { return inner_->level(); }
    int degree() const override { return inner_->degree() + 1; }
    NodeBox domain() const override { return inner_->domain(); }
    std::string kind() const override { return "derivative"; }
    const ChargePtr& inner() const { return inner_; }

    double evaluate(const ChainD& T) const override {
        check_chain(T);
        return inner_->evaluate(boundary(T));
    }

    const SampledForm* base_form() const override { return inner_->base_form(); }
    bool linearize(const ChainD& T, std::vector<LinearTerm>& out) const override {
        return inner_->linearize(boundary(T), out);
    }

private:
    ChargePtr inner_;
};

inline ChargePtr form_charge(SampledForm w) { return std::make_shared<FormCharge>(std::move(w)); }

inline ChargePtr exterior_derivative(ChargePtr w) { return std::make_shared<DerivativeCharge>(std::move(w)); }

/// Gamma(w)(x) = w([[x]])
inline double gamma_eval(const Charge& w, const Index& x) {
    if (w.degree() != 0) throw DimensionError("Gamma needs a 0-charge");
    if (!w.domain().contains(x)) throw GridMismatch("node outside the charge domain");
    ChainD p(w.dim(), w.level(), 0);
    p.add(Cell{x, 0}, 1.0);
    return w.evaluate(p);
}

inline ChargePtr gamma_inverse(const SampledForm& f) {
    if (f.m != 0) throw DimensionError("Gamma inverse needs a 0-form");
    return form_charge(f);
}

/// set function on grid-measurable sets of a box, stored per top cell
class HolderChargeFn {
public:
    int d = 1;
    int L = 0;
    NodeBox box;           // node box; cells are the top cells inside it
    std::vector<double> mu;  // indexed by anchor in the cell box
    double alpha = 1.0;
    double gamma = 1.0;
    double C = 0.0;  // recorded dyadic-cube constant

    NodeBox cell_box() const {
        NodeBox b = box;
        for (int i = 0; i < d; ++i) b.hi[i] -= 1;
        return b;
    }

    HolderChargeFn() = default;

    /// alpha is the fractional exponent; gamma = (d-1)/d + alpha/d
    HolderChargeFn(int d_, int L_, const NodeBox& box_, std::vector<double> cell_values, double alpha_)
        : d(d_), L(L_), box(box_), mu(std::move(cell_values)), alpha(alpha_) {
        if (mu.size() != cell_box().size()) throw ValidationError("one value per top cell required");
        if (!(alpha > 0 && alpha <= 1)) throw ValidationError("exponent must lie in (0, 1]");
        gamma = (d - 1.0) / d + alpha / d;
        C = dyadic_constant();
    }

    double value(const Index& anchor) const { return mu[cell_box().linear(anchor)]; }

    /// max over dyadic cubes inside the box of |mu(Q)| / vol(Q)^gamma
    double dyadic_constant() const {
        NodeBox cb = cell_box();
        double best = 0;
        for (int j = 0; j <= L; ++j) {
            std::int64_t side = std::int64_t(1) << (L - j);
            double vol = std::pow(std::ldexp(static_cast<double>(side), -L), d);
            NodeBox starts;
            starts.d = d;
            bool any = true;
            for (int i = 0; i < d; ++i) {
                starts.lo[i] = floor_div(cb.lo[i] + side - 1, side);
                starts.hi[i] = floor_div(cb.hi[i] + 1, side) - 1;
                if (starts.hi[i] < starts.lo[i]) any = false;
            }
            if (!any) continue;
            for (std::size_t q = 0; q < starts.size(); ++q) {
                Index s = starts.node(q);
                double sum = 0;
                NodeBox sub;
                sub.d = d;
                for (int i = 0; i < d; ++i) {
                    sub.lo[i] = s[i] * side;
                    sub.hi[i] = s[i] * side + side - 1;
                }
                for (std::size_t n = 0; n < sub.size(); ++n) sum += value(sub.node(n));
                best = std::max(best, std::fabs(sum) / std::pow(vol, gamma));
            }
        }
        return best;
    }
};

/// integral_0^inf mu({f > t}) dt for f >= 0, by the finite sum over distinct values
inline double layer_cake_positive(const HolderChargeFn& mu, const std::vector<double>& f) {
    std::vector<std::size_t> order(f.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
    double result = 0, set_mu = 0;
    std::size_t i = 0;
    while (i < order.size() && f[order[i]] > 0) {
        double v = f[order[i]];
        while (i < order.size() && f[order[i]] == v) set_mu += mu.mu[order[i++]];
        double next = (i < order.size() && f[order[i]] > 0) ? f[order[i]] : 0.0;
        result += (v - next) * set_mu;  // mu({f > t}) for t in [next, v)
    }
    return result;
}

/// signed f via f+ and f-; f holds one value per top cell of mu's box
inline double layer_cake_eval(const HolderChargeFn& mu, const std::vector<double>& f) {
    if (f.size() != mu.mu.size()) throw ValidationError("density must be piecewise constant on the grid cells");
    std::vector<double> fp(f.size()), fm(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        fp[k] = std::max(f[k], 0.0);
        fm[k] = std::max(-f[k], 0.0);
    }
    return layer_cake_positive(mu, fp) - layer_cake_positive(mu, fm);
}

/// top-dimensional chain -> per-cell density on mu's cell box
inline std::vector<double> chain_density(const HolderChargeFn& mu, const ChainD& T) {
    if (T.m != T.d || T.d != mu.d || T.L != mu.L) throw DimensionError("layer-cake charges act on top-dimensional chains");
    NodeBox cb = mu.cell_box();
    std::vector<double> f(cb.size(), 0.0);
    for (auto& [cell, c] : T.cells) {
        if (!cb.contains(cell.anchor)) throw GridMismatch("chain leaves the layer-cake domain");
        f[cb.linear(cell.anchor)] = c;
    }
    return f;
}

class LayerCakeCharge : public Charge {
public:
    explicit LayerCakeCharge(HolderChargeFn mu) : mu_(std::move(mu)) {}
    int dim() const override { return mu_.d; }
    int level() const override { return mu_.L; }
    int degree() const override { return mu_.d; }
    NodeBox domain() const override { return mu_.box; }
    std::string kind() const override { return "layer_cake"; }
    const HolderChargeFn& fn() const { return mu_; }

    double evaluate(const ChainD& T) const override {
        check_chain(T);
        return layer_cake_eval(mu_, chain_density(mu_, T));
    }

private:
    HolderChargeFn mu_;
};

}  // namespace fracharge
