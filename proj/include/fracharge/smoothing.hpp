/**
 * @brief Smoothing of charges, w * Phi_eps, sampled at grid nodes.
 *
 * Component I at node z is w applied to the density current D_{z,I}: the I-cells
 * with coefficient kappa(center - z) / h^m, kappa being the kernel sampled at
 * the cell centers. Linearizable charges go through one FFT correlation per
 * (output, input) component pair; anything else is evaluated node by node.
 */
#pragma once

#include <complex>
#include <mutex>

#include <fftw3.h>

#include "charge.hpp"
#include "mollifier.hpp"

namespace fracharge {

/// D_{z,I}
inline ChainD density_chain(int d, int L, Mask I, const Mollifier& K, const Index& z) {
    auto ker = K.shifted(I);
    int m = popcount(I);
    double inv_hm = std::ldexp(1.0, L * m);
    ChainD out(d, L, m);
    for (std::size_t k = 0; k < ker.offsets.size(); ++k) {
        Cell c{ker.offsets[k], I};
        for (int i = 0; i < d; ++i) c.anchor[i] += z[i];
        out.add(c, ker.w[k] * inv_hm);
    }
    return out;
}

/// smallest 2^a 3^b 5^c 7^e >= n
inline std::size_t good_fft_size(std::size_t n) {
    for (std::size_t k = std::max<std::size_t>(n, 1);; ++k) {
        std::size_t r = k;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return k;
    }
}

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// correlation out(z) = sum_o S(o) f(z + o) of node arrays on a region, via r2c FFTs
class FftCorrelator {
public:
    FftCorrelator(int d, const NodeBox& region) : d_(d), region_(region) {
        n_ = 1;
        for (int i = 0; i < d; ++i) {
            dims_[i] = static_cast<int>(good_fft_size(static_cast<std::size_t>(region.extent(i))));
            n_ *= static_cast<std::size_t>(dims_[i]);
        }
        nc_ = n_ / static_cast<std::size_t>(dims_[d - 1]) * static_cast<std::size_t>(dims_[d - 1] / 2 + 1);
        real_ = fftw_alloc_real(n_);
        cplx_ = fftw_alloc_complex(nc_);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c(d, dims_.data(), real_, cplx_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r(d, dims_.data(), cplx_, real_, FFTW_ESTIMATE);
    }
    ~FftCorrelator() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(cplx_);
    }
    FftCorrelator(const FftCorrelator&) = delete;
    FftCorrelator& operator=(const FftCorrelator&) = delete;

    using Spectrum = std::vector<std::complex<double>>;

    /// spectrum of a node array laid out on the region
    Spectrum transform_data(const std::vector<double>& data) {
        std::fill(real_, real_ + n_, 0.0);
        for (std::size_t k = 0; k < region_.size(); ++k) real_[padded_index(region_.node(k), region_.lo)] = data[k];
        return run_forward();
    }

    /// spectrum of the reflected stencil g(q) = S(-q), placed cyclically
    Spectrum transform_stencil(const std::vector<std::pair<Index, double>>& stencil) {
        std::fill(real_, real_ + n_, 0.0);
        for (auto& [o, w] : stencil) {
            std::size_t k = 0;
            for (int i = 0; i < d_; ++i) {
                std::int64_t q = ((-o[i]) % dims_[i] + dims_[i]) % dims_[i];
                k = k * static_cast<std::size_t>(dims_[i]) + static_cast<std::size_t>(q);
            }
            real_[k] += w;
        }
        return run_forward();
    }

    /// inverse transform of an accumulated spectrum, read back on a sub-box of the region
    std::vector<double> inverse_on(const Spectrum& spec, const NodeBox& out_box) {
        auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
        std::copy(spec.begin(), spec.end(), c);
        fftw_execute(inv_);
        std::vector<double> out(out_box.size());
        double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t k = 0; k < out_box.size(); ++k) out[k] = real_[padded_index(out_box.node(k), region_.lo)] * scale;
        return out;
    }

    std::size_t spectrum_size() const { return nc_; }
    const NodeBox& region() const { return region_; }

private:
    std::size_t padded_index(const Index& p, const Index& lo) const {
        std::size_t k = 0;
        for (int i = 0; i < d_; ++i) k = k * static_cast<std::size_t>(dims_[i]) + static_cast<std::size_t>(p[i] - lo[i]);
        return k;
    }
    Spectrum run_forward() {
        fftw_execute(fwd_);
        auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
        return Spectrum(c, c + nc_);
    }

    int d_;
    NodeBox region_;
    std::array<int, kMaxDim> dims_{};
    std::size_t n_ = 0, nc_ = 0;
    double* real_ = nullptr;
    fftw_complex* cplx_ = nullptr;
    fftw_plan fwd_{}, inv_{};
};

enum class SmoothPath { Auto, Fast, Generic };

/// stencil of a linearizable charge on D_{0,I}, grouped by input component
inline std::vector<std::vector<std::pair<Index, double>>> charge_stencil(const Charge& w, const Mollifier& K, Mask I,
                                                                          int n_input_comps) {
    std::vector<LinearTerm> terms;
    if (!w.linearize(density_chain(w.dim(), w.level(), I, K, Index{}), terms))
        throw ValidationError("charge is not linearizable");
    std::vector<std::map<Index, double>> acc(n_input_comps);
    for (auto& t : terms) acc[t.comp][t.node] += t.w;
    std::vector<std::vector<std::pair<Index, double>>> out(n_input_comps);
    for (int j = 0; j < n_input_comps; ++j)
        for (auto& kv : acc[j])
            if (kv.second != 0.0) out[j].emplace_back(kv.first, kv.second);
    return out;
}

inline std::int64_t stencil_reach(const std::vector<std::vector<std::pair<Index, double>>>& st, int d) {
    std::int64_t r = 0;
    for (auto& comp : st)
        for (auto& [o, w] : comp)
            for (int i = 0; i < d; ++i) r = std::max<std::int64_t>(r, std::llabs(o[i]));
    return r;
}

/// base form of the fast path: the linearization base or the limit form
inline std::shared_ptr<const SampledForm> fast_base(const Charge& w, ChargePtr& holder) {
    if (w.base_form()) return std::shared_ptr<const SampledForm>(std::shared_ptr<const SampledForm>{}, w.base_form());
    if (auto lf = w.limit_form()) {
        holder = form_charge(*lf);
        return lf;
    }
    return nullptr;
}

/// Smoother: caches the spectra of one charge's base form on a region, then
/// produces w * Phi_eps on the eval box for any radius fitting in the region.
class Smoother {
public:
    Smoother(ChargePtr w, const NodeBox& eval_box, std::int64_t reach) : w_(std::move(w)), eval_(eval_box) {
        const Charge* lin = w_.get();
        base_ = fast_base(*w_, proxy_);
        if (proxy_) lin = proxy_.get();
        lin_ = lin;
        if (!base_) throw ValidationError("charge has no sampled base for fast smoothing");
        NodeBox region = eval_box.grown(reach);
        if (!base_->box.contains(region))
            throw ResolutionError("smoothing radius exceeds the data margin around the evaluation box");
        corr_ = std::make_unique<FftCorrelator>(w_->dim(), region);
        for (std::size_t k = 0; k < base_->comps.size(); ++k) {
            std::vector<double> data(region.size());
            for (std::size_t n = 0; n < region.size(); ++n) data[n] = base_->values[k][base_->box.linear(region.node(n))];
            spectra_.push_back(corr_->transform_data(data));
        }
    }

    SampledForm smooth(const Mollifier& K) {
        int d = w_->dim(), m = w_->degree();
        SampledForm out(d, w_->level(), m, eval_);
        for (std::size_t ki = 0; ki < out.comps.size(); ++ki) {
            auto st = charge_stencil(*lin_, K, out.comps[ki], static_cast<int>(base_->comps.size()));
            if (!corr_->region().contains(eval_.grown(stencil_reach(st, d))))
                throw ResolutionError("smoothing radius exceeds the cached region");
            FftCorrelator::Spectrum acc(corr_->spectrum_size(), {0.0, 0.0});
            bool any = false;
            for (std::size_t j = 0; j < st.size(); ++j) {
                if (st[j].empty()) continue;
                auto g = corr_->transform_stencil(st[j]);
                auto& f = spectra_[j];
                for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += f[q] * g[q];
                any = true;
            }
            if (any) out.values[ki] = corr_->inverse_on(acc, eval_);
        }
        return out;
    }

private:
    ChargePtr w_;
    ChargePtr proxy_;
    const Charge* lin_ = nullptr;
    std::shared_ptr<const SampledForm> base_;
    NodeBox eval_;
    std::unique_ptr<FftCorrelator> corr_;
    std::vector<FftCorrelator::Spectrum> spectra_;
};

/// node-by-node evaluation on density currents
inline SampledForm smooth_charge_generic(const Charge& w, const Mollifier& K, const NodeBox& eval_box) {
    SampledForm out(w.dim(), w.level(), w.degree(), eval_box);
    for (std::size_t ki = 0; ki < out.comps.size(); ++ki) {
        ChainD D0 = density_chain(w.dim(), w.level(), out.comps[ki], K, Index{});
        for (std::size_t n = 0; n < eval_box.size(); ++n)
            out.values[ki][n] = w.evaluate(translate(D0, eval_box.node(n)));
    }
    return out;
}

/// w * Phi_eps sampled on eval_box
inline SampledForm smooth_charge(ChargePtr w, const Mollifier& K, const NodeBox& eval_box,
                                 SmoothPath path = SmoothPath::Auto) {
    if (K.d != w->dim() || K.L != w->level()) throw GridMismatch("mollifier and charge on different grids");
    ChargePtr holder;
    bool fast = fast_base(*w, holder) != nullptr;
    if (path == SmoothPath::Fast && !fast) throw ValidationError("charge has no fast smoothing path");
    if (path == SmoothPath::Generic || !fast) return smooth_charge_generic(*w, K, eval_box);
    Smoother s(w, eval_box, K.R + 1);
    return s.smooth(K);
}

/// w * Phi_{2^-n} for n = n0..N on eval_box (the ladder partial sums)
inline std::vector<SampledForm> smoothing_levels(ChargePtr w, int n0, int N, const NodeBox& eval_box,
                                                 Profile profile = Profile::Poly3) {
    int L = w->level();
    if (N > L) throw ResolutionError("ladder deeper than the grid level");
    if (n0 < 0 || n0 > N) throw ValidationError("bad ladder range");
    Smoother s(w, eval_box, (std::int64_t(1) << (L - n0)) + 1);
    std::vector<SampledForm> out;
    for (int n = n0; n <= N; ++n) out.push_back(s.smooth(Mollifier(w->dim(), L, std::ldexp(1.0, -n), profile)));
    return out;
}

/// [w * Phi_1, w * Phi_{1/2} - w * Phi_1, ..., w * Phi_{2^-N} - w * Phi_{2^-(N-1)}]
inline std::vector<SampledForm> dyadic_ladder(ChargePtr w, int N, const NodeBox& eval_box,
                                              Profile profile = Profile::Poly3) {
    auto lv = smoothing_levels(std::move(w), 0, N, eval_box, profile);
    std::vector<SampledForm> out;
    out.push_back(lv[0]);
    for (int n = 1; n <= N; ++n) out.push_back(lv[n] - lv[n - 1]);
    return out;
}

}  // namespace fracharge
