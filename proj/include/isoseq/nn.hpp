#pragma once

// Minimal differentiable-computation core. Every backward pass is derived by
// hand and checked against central finite differences in the test suite; no
// external ML framework is involved.

#include "isoseq/errors.hpp"
#include "isoseq/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace isoseq::nn {

// --- convolution (3x3, stride 1, zero padding 1; spatial dims preserved) ---

struct Conv2dParams {
    Tensor w; // [C_out, C_in, 3, 3]
    Tensor b; // [C_out]
};

inline Conv2dParams make_conv2d(int in_ch, int out_ch) {
    return {Tensor({out_ch, in_ch, 3, 3}), Tensor({out_ch})};
}

inline Tensor conv2d(const Tensor& x, const Conv2dParams& p) {
    if (x.shape.size() != 3) throw ShapeMismatch("conv2d: input must be [C,H,W]");
    int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (p.w.shape.size() != 4 || p.w.dim(1) != ci || p.w.dim(2) != 3 || p.w.dim(3) != 3)
        throw ShapeMismatch("conv2d: kernel/input channel mismatch");
    int co = p.w.dim(0);
    Tensor y({co, h, w});
    for (int o = 0; o < co; ++o) {
        double bias = p.b[o];
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                double acc = bias;
                for (int c = 0; c < ci; ++c) {
                    const double* wk = &p.w.v[((static_cast<std::size_t>(o) * ci + c) * 3) * 3];
                    const double* xc = &x.v[static_cast<std::size_t>(c) * h * w];
                    for (int du = -1; du <= 1; ++du) {
                        int ii = i + du;
                        if (ii < 0 || ii >= h) continue;
                        for (int dv = -1; dv <= 1; ++dv) {
                            int jj = j + dv;
                            if (jj < 0 || jj >= w) continue;
                            acc += wk[(du + 1) * 3 + (dv + 1)] * xc[ii * w + jj];
                        }
                    }
                }
                y.v[(static_cast<std::size_t>(o) * h + i) * w + j] = acc;
            }
        }
    }
    return y;
}

inline void conv2d_backward(const Tensor& x, const Conv2dParams& p, const Tensor& gy, Tensor* gx,
                            Conv2dParams* gp) {
    int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
    int co = p.w.dim(0);
    for (int o = 0; o < co; ++o) {
        const double* gyo = &gy.v[static_cast<std::size_t>(o) * h * w];
        if (gp) {
            double gb = 0;
            for (int k = 0; k < h * w; ++k) gb += gyo[k];
            gp->b[o] += gb;
        }
        for (int c = 0; c < ci; ++c) {
            const double* xc = &x.v[static_cast<std::size_t>(c) * h * w];
            double* gxc = gx ? &gx->v[static_cast<std::size_t>(c) * h * w] : nullptr;
            double* gwk =
                gp ? &gp->w.v[((static_cast<std::size_t>(o) * ci + c) * 3) * 3] : nullptr;
            const double* wk = &p.w.v[((static_cast<std::size_t>(o) * ci + c) * 3) * 3];
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    double g = gyo[i * w + j];
                    if (g == 0.0) continue;
                    for (int du = -1; du <= 1; ++du) {
                        int ii = i + du;
                        if (ii < 0 || ii >= h) continue;
                        for (int dv = -1; dv <= 1; ++dv) {
                            int jj = j + dv;
                            if (jj < 0 || jj >= w) continue;
                            if (gwk) gwk[(du + 1) * 3 + (dv + 1)] += g * xc[ii * w + jj];
                            if (gxc) gxc[ii * w + jj] += g * wk[(du + 1) * 3 + (dv + 1)];
                        }
                    }
                }
            }
        }
    }
}

// --- 2x2 max pooling, stride 2, ragged edge reduced over available cells ---

inline Tensor maxpool2(const Tensor& x, std::vector<std::int32_t>* argmax = nullptr) {
    if (x.shape.size() != 3) throw ShapeMismatch("maxpool2: input must be [C,H,W]");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    int oh = (h + 1) / 2, ow = (w + 1) / 2;
    Tensor y({c, oh, ow});
    if (argmax) argmax->assign(y.numel(), 0);
    for (int ch = 0; ch < c; ++ch) {
        const double* xc = &x.v[static_cast<std::size_t>(ch) * h * w];
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                double best = -1e300;
                int best_idx = -1;
                for (int di = 0; di < 2; ++di) {
                    int ii = 2 * i + di;
                    if (ii >= h) break;
                    for (int dj = 0; dj < 2; ++dj) {
                        int jj = 2 * j + dj;
                        if (jj >= w) break;
                        double val = xc[ii * w + jj];
                        if (val > best) { // first occurrence wins ties
                            best = val;
                            best_idx = ii * w + jj;
                        }
                    }
                }
                std::size_t oidx = (static_cast<std::size_t>(ch) * oh + i) * ow + j;
                y.v[oidx] = best;
                if (argmax) (*argmax)[oidx] = best_idx;
            }
        }
    }
    return y;
}

inline void maxpool2_backward(const std::vector<std::int32_t>& argmax, const Tensor& gy,
                              int in_h, int in_w, Tensor* gx) {
    int c = gy.dim(0), oh = gy.dim(1), ow = gy.dim(2);
    for (int ch = 0; ch < c; ++ch) {
        double* gxc = &gx->v[static_cast<std::size_t>(ch) * in_h * in_w];
        for (int k = 0; k < oh * ow; ++k) {
            std::size_t oidx = static_cast<std::size_t>(ch) * oh * ow + k;
            gxc[argmax[oidx]] += gy.v[oidx];
        }
    }
}

// --- nearest-neighbor 2x upsampling and bottom/right cropping --------------

inline Tensor upsample2(const Tensor& x) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor y({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < 2 * h; ++i)
            for (int j = 0; j < 2 * w; ++j)
                y.v[(static_cast<std::size_t>(ch) * 2 * h + i) * 2 * w + j] =
                    x.v[(static_cast<std::size_t>(ch) * h + i / 2) * w + j / 2];
    return y;
}

inline void upsample2_backward(const Tensor& gy, Tensor* gx) {
    int c = gx->dim(0), h = gx->dim(1), w = gx->dim(2);
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < 2 * h; ++i)
            for (int j = 0; j < 2 * w; ++j)
                gx->v[(static_cast<std::size_t>(ch) * h + i / 2) * w + j / 2] +=
                    gy.v[(static_cast<std::size_t>(ch) * 2 * h + i) * 2 * w + j];
}

/// Keep the top-left HxW region (drops the bottom/right overshoot, aligned
/// with the ragged-edge pooling in the encoder).
inline Tensor crop_to(const Tensor& x, int out_h, int out_w) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (out_h > h || out_w > w) throw ShapeMismatch("crop_to: output larger than input");
    Tensor y({c, out_h, out_w});
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < out_h; ++i)
            for (int j = 0; j < out_w; ++j)
                y.v[(static_cast<std::size_t>(ch) * out_h + i) * out_w + j] =
                    x.v[(static_cast<std::size_t>(ch) * h + i) * w + j];
    return y;
}

inline void crop_backward(const Tensor& gy, Tensor* gx) {
    int c = gx->dim(0), h = gx->dim(1), w = gx->dim(2);
    int oh = gy.dim(1), ow = gy.dim(2);
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j)
                gx->v[(static_cast<std::size_t>(ch) * h + i) * w + j] +=
                    gy.v[(static_cast<std::size_t>(ch) * oh + i) * ow + j];
}

// --- dense -----------------------------------------------------------------

struct DenseParams {
    Tensor w; // [m, n]
    Tensor b; // [m]
};

inline DenseParams make_dense(int n, int m) { return {Tensor({m, n}), Tensor({m})}; }

inline Tensor dense(const Tensor& x, const DenseParams& p) {
    int n = static_cast<int>(x.numel());
    if (p.w.dim(1) != n) throw ShapeMismatch("dense: input size mismatch");
    int m = p.w.dim(0);
    Tensor y({m});
    for (int i = 0; i < m; ++i) {
        const double* row = &p.w.v[static_cast<std::size_t>(i) * n];
        double acc = p.b[i];
        for (int j = 0; j < n; ++j) acc += row[j] * x.v[j];
        y.v[i] = acc;
    }
    return y;
}

inline void dense_backward(const Tensor& x, const DenseParams& p, const Tensor& gy, Tensor* gx,
                           DenseParams* gp) {
    int m = p.w.dim(0), n = p.w.dim(1);
    if (gx)
        for (int i = 0; i < m; ++i) {
            const double* row = &p.w.v[static_cast<std::size_t>(i) * n];
            double g = gy.v[i];
            for (int j = 0; j < n; ++j) gx->v[j] += g * row[j];
        }
    if (gp)
        for (int i = 0; i < m; ++i) {
            double g = gy.v[i];
            gp->b[i] += g;
            double* grow = &gp->w.v[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) grow[j] += g * x.v[j];
        }
}

// --- element-wise activations ----------------------------------------------

enum class Act { Relu, Tanh, Sigmoid };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Tensor activation(const Tensor& x, Act kind) {
    Tensor y(x.shape);
    switch (kind) {
    case Act::Relu:
        for (std::size_t i = 0; i < x.numel(); ++i) y.v[i] = x.v[i] > 0 ? x.v[i] : 0.0;
        break;
    case Act::Tanh:
        for (std::size_t i = 0; i < x.numel(); ++i) y.v[i] = std::tanh(x.v[i]);
        break;
    case Act::Sigmoid:
        for (std::size_t i = 0; i < x.numel(); ++i) y.v[i] = sigmoid(x.v[i]);
        break;
    }
    return y;
}

/// Backward from the activation *outputs* (all three have output-expressible
/// derivatives).
inline void activation_backward(const Tensor& y, Act kind, const Tensor& gy, Tensor* gx) {
    switch (kind) {
    case Act::Relu:
        for (std::size_t i = 0; i < y.numel(); ++i) gx->v[i] += y.v[i] > 0 ? gy.v[i] : 0.0;
        break;
    case Act::Tanh:
        for (std::size_t i = 0; i < y.numel(); ++i) gx->v[i] += gy.v[i] * (1.0 - y.v[i] * y.v[i]);
        break;
    case Act::Sigmoid:
        for (std::size_t i = 0; i < y.numel(); ++i)
            gx->v[i] += gy.v[i] * y.v[i] * (1.0 - y.v[i]);
        break;
    }
}

// --- GRU -------------------------------------------------------------------

/// Gate parameters; each maps (input, hidden) -> hidden.
struct GruParams {
    Tensor wz, uz, bz;
    Tensor wr, ur, br;
    Tensor wh, uh, bh;
};

inline GruParams make_gru(int input, int hidden) {
    return {Tensor({hidden, input}), Tensor({hidden, hidden}), Tensor({hidden}),
            Tensor({hidden, input}), Tensor({hidden, hidden}), Tensor({hidden}),
            Tensor({hidden, input}), Tensor({hidden, hidden}), Tensor({hidden})};
}

struct GruCache {
    Tensor x, h_prev; // inputs
    Tensor z, r, rh, hc; // gates, r*h_prev, candidate
};

namespace detail {

inline void matvec_into(const Tensor& w, const double* x, double* out, int m, int n) {
    for (int i = 0; i < m; ++i) {
        const double* row = &w.v[static_cast<std::size_t>(i) * n];
        double acc = out[i];
        for (int j = 0; j < n; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

// out[j] += sum_i w[i][j] * g[i]
inline void matvec_t_into(const Tensor& w, const double* g, double* out, int m, int n) {
    for (int i = 0; i < m; ++i) {
        const double* row = &w.v[static_cast<std::size_t>(i) * n];
        double gi = g[i];
        if (gi == 0.0) continue;
        for (int j = 0; j < n; ++j) out[j] += gi * row[j];
    }
}

// gw[i][j] += g[i] * x[j]
inline void outer_into(const double* g, const double* x, Tensor* gw, int m, int n) {
    for (int i = 0; i < m; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        double* row = &gw->v[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) row[j] += gi * x[j];
    }
}

} // namespace detail

/// One GRU step:
///   z = sigmoid(Wz x + Uz h + bz)
///   r = sigmoid(Wr x + Ur h + br)
///   hc = tanh(Wh x + Uh (r*h) + bh)
///   h' = (1-z)*h + z*hc
inline Tensor gru_step(const Tensor& x, const Tensor& h_prev, const GruParams& p,
                       GruCache* cache = nullptr) {
    int n = static_cast<int>(x.numel());
    int m = static_cast<int>(h_prev.numel());
    if (p.wz.dim(1) != n || p.uz.dim(1) != m || p.wz.dim(0) != m)
        throw ShapeMismatch("gru_step: parameter shapes inconsistent with inputs");

    Tensor z({m}), r({m}), rh({m}), hc({m}), h({m});
    for (int i = 0; i < m; ++i) {
        z.v[i] = p.bz[i];
        r.v[i] = p.br[i];
    }
    detail::matvec_into(p.wz, x.v.data(), z.v.data(), m, n);
    detail::matvec_into(p.uz, h_prev.v.data(), z.v.data(), m, m);
    detail::matvec_into(p.wr, x.v.data(), r.v.data(), m, n);
    detail::matvec_into(p.ur, h_prev.v.data(), r.v.data(), m, m);
    for (int i = 0; i < m; ++i) {
        z.v[i] = sigmoid(z.v[i]);
        r.v[i] = sigmoid(r.v[i]);
        rh.v[i] = r.v[i] * h_prev.v[i];
    }
    for (int i = 0; i < m; ++i) hc.v[i] = p.bh[i];
    detail::matvec_into(p.wh, x.v.data(), hc.v.data(), m, n);
    detail::matvec_into(p.uh, rh.v.data(), hc.v.data(), m, m);
    for (int i = 0; i < m; ++i) {
        hc.v[i] = std::tanh(hc.v[i]);
        h.v[i] = (1.0 - z.v[i]) * h_prev.v[i] + z.v[i] * hc.v[i];
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->z = z;
        cache->r = r;
        cache->rh = rh;
        cache->hc = hc;
    }
    return h;
}

/// Backward through one step. gx and gh_prev are accumulated into; gp
/// accumulates parameter gradients.
inline void gru_step_backward(const GruCache& c, const GruParams& p, const Tensor& gh, Tensor* gx,
                              Tensor* gh_prev, GruParams* gp) {
    int n = static_cast<int>(c.x.numel());
    int m = static_cast<int>(c.h_prev.numel());
    Tensor daz({m}), dar({m}), dah({m}), drh({m});
    for (int i = 0; i < m; ++i) {
        double dz = gh.v[i] * (c.hc.v[i] - c.h_prev.v[i]);
        double dhc = gh.v[i] * c.z.v[i];
        if (gh_prev) gh_prev->v[i] += gh.v[i] * (1.0 - c.z.v[i]);
        dah.v[i] = dhc * (1.0 - c.hc.v[i] * c.hc.v[i]);
        daz.v[i] = dz * c.z.v[i] * (1.0 - c.z.v[i]);
    }
    // through Uh (r*h) term
    detail::matvec_t_into(p.uh, dah.v.data(), drh.v.data(), m, m);
    for (int i = 0; i < m; ++i) {
        double dr = drh.v[i] * c.h_prev.v[i];
        if (gh_prev) gh_prev->v[i] += drh.v[i] * c.r.v[i];
        dar.v[i] = dr * c.r.v[i] * (1.0 - c.r.v[i]);
    }
    if (gx) {
        detail::matvec_t_into(p.wz, daz.v.data(), gx->v.data(), m, n);
        detail::matvec_t_into(p.wr, dar.v.data(), gx->v.data(), m, n);
        detail::matvec_t_into(p.wh, dah.v.data(), gx->v.data(), m, n);
    }
    if (gh_prev) {
        detail::matvec_t_into(p.uz, daz.v.data(), gh_prev->v.data(), m, m);
        detail::matvec_t_into(p.ur, dar.v.data(), gh_prev->v.data(), m, m);
    }
    if (gp) {
        detail::outer_into(daz.v.data(), c.x.v.data(), &gp->wz, m, n);
        detail::outer_into(daz.v.data(), c.h_prev.v.data(), &gp->uz, m, m);
        detail::outer_into(dar.v.data(), c.x.v.data(), &gp->wr, m, n);
        detail::outer_into(dar.v.data(), c.h_prev.v.data(), &gp->ur, m, m);
        detail::outer_into(dah.v.data(), c.x.v.data(), &gp->wh, m, n);
        detail::outer_into(dah.v.data(), c.rh.v.data(), &gp->uh, m, m);
        for (int i = 0; i < m; ++i) {
            gp->bz[i] += daz.v[i];
            gp->br[i] += dar.v[i];
            gp->bh[i] += dah.v[i];
        }
    }
}

// --- losses ------------------------------------------------------------------

constexpr double kBceEps = 1e-7;

/// Mean binary cross entropy; predictions are clamped to [eps, 1-eps].
inline double bce_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) throw ShapeMismatch("bce_loss: shape mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        double p = std::min(1.0 - kBceEps, std::max(kBceEps, pred.v[i]));
        acc += target.v[i] * std::log(p) + (1.0 - target.v[i]) * std::log(1.0 - p);
    }
    return -acc / static_cast<double>(pred.numel());
}

/// d(bce)/d(pred); zero where the clamp is active (the loss is locally flat).
inline void bce_backward(const Tensor& pred, const Tensor& target, Tensor* gpred) {
    double n = static_cast<double>(pred.numel());
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        double p = pred.v[i];
        if (p < kBceEps || p > 1.0 - kBceEps) continue;
        gpred->v[i] += (p - target.v[i]) / (p * (1.0 - p) * n);
    }
}

/// KL(N(mu, diag(exp(logvar))) || N(0, I)) in closed form.
inline double kl_diag_gaussian(const Tensor& mu, const Tensor& logvar) {
    if (!mu.same_shape(logvar)) throw ShapeMismatch("kl_diag_gaussian: shape mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < mu.numel(); ++i)
        acc += 1.0 + logvar.v[i] - mu.v[i] * mu.v[i] - std::exp(logvar.v[i]);
    return -0.5 * acc;
}

inline void kl_backward(const Tensor& mu, const Tensor& logvar, double scale, Tensor* gmu,
                        Tensor* glogvar) {
    for (std::size_t i = 0; i < mu.numel(); ++i) {
        gmu->v[i] += scale * mu.v[i];
        glogvar->v[i] += scale * 0.5 * (std::exp(logvar.v[i]) - 1.0);
    }
}

// --- Adam --------------------------------------------------------------------

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m, v;
    std::int64_t step = 0;

    static AdamState for_params(const std::vector<Tensor*>& params) {
        AdamState st;
        st.m.reserve(params.size());
        st.v.reserve(params.size());
        for (const Tensor* p : params) {
            st.m.emplace_back(p->shape);
            st.v.emplace_back(p->shape);
        }
        return st;
    }
};

/// Standard bias-corrected Adam update, applied in place.
inline void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                      AdamState& state, const AdamHyper& hp) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeMismatch("adam_step: parameter/gradient/state arity mismatch");
    ++state.step;
    double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = *grads[k];
        if (!p.same_shape(g)) throw ShapeMismatch("adam_step: gradient shape mismatch");
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m.v[i] = hp.beta1 * m.v[i] + (1.0 - hp.beta1) * g.v[i];
            v.v[i] = hp.beta2 * v.v[i] + (1.0 - hp.beta2) * g.v[i] * g.v[i];
            double mhat = m.v[i] / c1;
            double vhat = v.v[i] / c2;
            p.v[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
        }
    }
}

// --- finite-difference gradient checking -------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};

/// Compare an analytic gradient against central finite differences of a
/// scalar-valued function. `values` is mutated during probing and restored.
/// The error is |analytic - numeric| / max(1, |analytic|, |numeric|).
inline GradCheckReport grad_check(const std::function<double()>& f, std::span<double> values,
                                  std::span<const double> analytic, double step = 1e-5) {
    if (values.size() != analytic.size())
        throw ShapeMismatch("grad_check: gradient size mismatch");
    GradCheckReport report;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double saved = values[i];
        values[i] = saved + step;
        double up = f();
        values[i] = saved - step;
        double down = f();
        values[i] = saved;
        double numeric = (up - down) / (2.0 * step);
        double denom = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
        double rel = std::abs(numeric - analytic[i]) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    return report;
}

} // namespace isoseq::nn
