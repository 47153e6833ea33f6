#pragma once

// Convolutional-recurrent variational auto-encoder over isovist sequences.
// Encoder: per-frame conv/pool bundles -> GRU -> Gaussian latent heads.
// Decoder: latent -> GRU (feeding each step's output vector back as the next
// input) -> per-step dense feature block -> upsample/conv bundles -> sigmoid.

#include "isoseq/errors.hpp"
#include "isoseq/io.hpp"
#include "isoseq/nn.hpp"
#include "isoseq/rng.hpp"
#include "isoseq/sequences.hpp"
#include "isoseq/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace isoseq {

using nn::Tensor;

struct VaeConfig {
    int t = 5;          // sequence length (odd)
    int window = 33;    // isovist window side W
    int latent_dim = 1; // d
    int gru_hidden = 250;
    double beta = 1.0;  // KL weight

    static constexpr int kFilters = 10; // conv filters per bundle, 3x3, stride 1

    int half() const { return (window + 1) / 2; }
    int quarter() const { return (half() + 1) / 2; }
    int feature_dim() const { return kFilters * quarter() * quarter(); }
    int elements() const { return t * window * window; }

    void validate() const {
        if (t < 1 || t % 2 == 0) throw InvalidParams("vae: t must be odd and >= 1");
        if (window < 5) throw InvalidParams("vae: window must be >= 5");
        if (latent_dim < 1) throw InvalidParams("vae: latent dim must be >= 1");
        if (gru_hidden < 1) throw InvalidParams("vae: gru hidden size must be >= 1");
    }

    friend bool operator==(const VaeConfig& a, const VaeConfig& b) {
        return a.t == b.t && a.window == b.window && a.latent_dim == b.latent_dim &&
               a.gru_hidden == b.gru_hidden && a.beta == b.beta;
    }
};

struct LatentCode {
    Tensor mu;     // [d]
    Tensor logvar; // [d]
};

struct VaeModel {
    VaeConfig cfg;
    nn::Conv2dParams enc_conv1, enc_conv2;
    nn::GruParams enc_gru;
    nn::DenseParams enc_mu, enc_logvar;
    nn::DenseParams dec_in;
    nn::GruParams dec_gru;
    nn::DenseParams dec_out;
    nn::Conv2dParams dec_conv1, dec_conv2, dec_conv3;

    /// Zero-parameter model of the given configuration.
    static VaeModel build(const VaeConfig& cfg) {
        cfg.validate();
        VaeModel m;
        m.cfg = cfg;
        int f = VaeConfig::kFilters;
        int feat = cfg.feature_dim();
        int hid = cfg.gru_hidden;
        m.enc_conv1 = nn::make_conv2d(1, f);
        m.enc_conv2 = nn::make_conv2d(f, f);
        m.enc_gru = nn::make_gru(feat, hid);
        m.enc_mu = nn::make_dense(hid, cfg.latent_dim);
        m.enc_logvar = nn::make_dense(hid, cfg.latent_dim);
        m.dec_in = nn::make_dense(cfg.latent_dim, feat);
        m.dec_gru = nn::make_gru(feat, hid);
        m.dec_out = nn::make_dense(hid, feat);
        m.dec_conv1 = nn::make_conv2d(f, f);
        m.dec_conv2 = nn::make_conv2d(f, f);
        m.dec_conv3 = nn::make_conv2d(f, 1);
        return m;
    }

    /// Deterministic random initialization: weights ~ N(0, 1/fan_in), zero
    /// biases, drawn in parameter order from one seeded stream.
    static VaeModel init(const VaeConfig& cfg, std::uint64_t seed) {
        VaeModel m = build(cfg);
        Rng rng(mix_seed(seed, 0x5eed));
        for (Tensor* p : m.params()) {
            if (p->shape.size() < 2) continue; // biases stay zero
            std::size_t fan_in = p->numel() / static_cast<std::size_t>(p->dim(0));
            double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : p->v) v = rng.normal() * scale;
        }
        return m;
    }

    VaeModel zeros_like() const { return build(cfg); }

    /// All parameter tensors in the fixed serialization order.
    std::vector<Tensor*> params() {
        return {&enc_conv1.w, &enc_conv1.b, &enc_conv2.w, &enc_conv2.b,
                &enc_gru.wz,  &enc_gru.uz,  &enc_gru.bz,  &enc_gru.wr, &enc_gru.ur, &enc_gru.br,
                &enc_gru.wh,  &enc_gru.uh,  &enc_gru.bh,  &enc_mu.w,   &enc_mu.b,
                &enc_logvar.w, &enc_logvar.b, &dec_in.w,   &dec_in.b,
                &dec_gru.wz,  &dec_gru.uz,  &dec_gru.bz,  &dec_gru.wr, &dec_gru.ur, &dec_gru.br,
                &dec_gru.wh,  &dec_gru.uh,  &dec_gru.bh,  &dec_out.w,  &dec_out.b,
                &dec_conv1.w, &dec_conv1.b, &dec_conv2.w, &dec_conv2.b, &dec_conv3.w,
                &dec_conv3.b};
    }

    std::vector<const Tensor*> params() const {
        return {&enc_conv1.w, &enc_conv1.b, &enc_conv2.w, &enc_conv2.b,
                &enc_gru.wz,  &enc_gru.uz,  &enc_gru.bz,  &enc_gru.wr, &enc_gru.ur, &enc_gru.br,
                &enc_gru.wh,  &enc_gru.uh,  &enc_gru.bh,  &enc_mu.w,   &enc_mu.b,
                &enc_logvar.w, &enc_logvar.b, &dec_in.w,   &dec_in.b,
                &dec_gru.wz,  &dec_gru.uz,  &dec_gru.bz,  &dec_gru.wr, &dec_gru.ur, &dec_gru.br,
                &dec_gru.wh,  &dec_gru.uh,  &dec_gru.bh,  &dec_out.w,  &dec_out.b,
                &dec_conv1.w, &dec_conv1.b, &dec_conv2.w, &dec_conv2.b, &dec_conv3.w,
                &dec_conv3.b};
    }
};

/// Pack a sequence's binary frames into the network input layout [t,1,W,W].
inline Tensor seq_to_tensor(const IsovistSequence& seq) {
    int t = seq.t;
    int w = seq.frames.empty() ? 0 : seq.frames.front().size();
    Tensor x({t, 1, w, w});
    for (int i = 0; i < t; ++i)
        for (std::size_t k = 0; k < seq.frames[i].window.size(); ++k)
            x.v[static_cast<std::size_t>(i) * w * w + k] = seq.frames[i].window[k];
    return x;
}

namespace detail {

struct EncodeCache {
    std::vector<Tensor> x;      // per-step [1,W,W]
    std::vector<Tensor> a1;     // relu(conv1) [F,W,W]
    std::vector<std::vector<std::int32_t>> am1;
    std::vector<Tensor> p1;     // pooled [F,c1,c1]
    std::vector<Tensor> a2;     // relu(conv2) [F,c1,c1]
    std::vector<std::vector<std::int32_t>> am2;
    std::vector<Tensor> feat;   // flattened [feat]
    std::vector<nn::GruCache> gru;
    std::vector<Tensor> h;      // hidden after each step
};

struct DecodeCache {
    Tensor z;
    Tensor in0;
    std::vector<nn::GruCache> gru;
    std::vector<Tensor> h;    // [H] per step
    std::vector<Tensor> feat; // dense output per step [feat], also next input
    std::vector<Tensor> up1, ad1, up2, ad2; // conv stack intermediates
};

} // namespace detail

/// q(z|x): per frame conv/pool bundles, GRU over time, two dense heads.
inline LatentCode encode(const VaeModel& m, const Tensor& x,
                         detail::EncodeCache* cache = nullptr) {
    const VaeConfig& c = m.cfg;
    nn::require_shape(x, {c.t, 1, c.window, c.window}, "encode");
    int w = c.window;

    Tensor h({c.gru_hidden});
    detail::EncodeCache local;
    detail::EncodeCache& cc = cache ? *cache : local;
    cc.x.resize(c.t);
    cc.a1.resize(c.t);
    cc.am1.resize(c.t);
    cc.p1.resize(c.t);
    cc.a2.resize(c.t);
    cc.am2.resize(c.t);
    cc.feat.resize(c.t);
    cc.gru.resize(c.t);
    cc.h.resize(c.t);

    for (int i = 0; i < c.t; ++i) {
        Tensor xs({1, w, w});
        std::copy_n(&x.v[static_cast<std::size_t>(i) * w * w], static_cast<std::size_t>(w) * w,
                    xs.v.begin());
        Tensor a1 = nn::activation(nn::conv2d(xs, m.enc_conv1), nn::Act::Relu);
        Tensor p1 = nn::maxpool2(a1, &cc.am1[i]);
        Tensor a2 = nn::activation(nn::conv2d(p1, m.enc_conv2), nn::Act::Relu);
        Tensor p2 = nn::maxpool2(a2, &cc.am2[i]);
        Tensor feat({c.feature_dim()}, std::move(p2.v));
        h = nn::gru_step(feat, h, m.enc_gru, cache ? &cc.gru[i] : nullptr);
        cc.x[i] = std::move(xs);
        cc.a1[i] = std::move(a1);
        cc.p1[i] = std::move(p1);
        cc.a2[i] = std::move(a2);
        cc.feat[i] = std::move(feat);
        cc.h[i] = h;
    }
    return {nn::dense(h, m.enc_mu), nn::dense(h, m.enc_logvar)};
}

/// z = mu + exp(logvar/2) * noise when training; z = mu at inference.
inline Tensor reparameterize(const LatentCode& code, const Tensor& noise, bool train_mode) {
    if (!train_mode) return code.mu;
    if (!noise.same_shape(code.mu)) throw ShapeMismatch("reparameterize: noise shape mismatch");
    Tensor z(code.mu.shape);
    for (std::size_t i = 0; i < z.numel(); ++i)
        z.v[i] = code.mu.v[i] + std::exp(0.5 * code.logvar.v[i]) * noise.v[i];
    return z;
}

/// p(x|z): project z to the first GRU input, unroll t steps feeding each
/// step's output vector back in, render each hidden state through dense +
/// two upsample/conv bundles + 1-channel conv + sigmoid, cropped to W.
inline Tensor decode(const VaeModel& m, const Tensor& z, detail::DecodeCache* cache = nullptr) {
    const VaeConfig& c = m.cfg;
    nn::require_shape(z, {c.latent_dim}, "decode");
    int w = c.window, q = c.quarter();
    int f = VaeConfig::kFilters;

    detail::DecodeCache local;
    detail::DecodeCache& cc = cache ? *cache : local;
    cc.z = z;
    cc.gru.resize(c.t);
    cc.h.resize(c.t);
    cc.feat.resize(c.t);
    cc.up1.resize(c.t);
    cc.ad1.resize(c.t);
    cc.up2.resize(c.t);
    cc.ad2.resize(c.t);

    Tensor out({c.t, 1, w, w});
    Tensor h({c.gru_hidden});
    Tensor input = nn::dense(z, m.dec_in);
    cc.in0 = input;
    for (int i = 0; i < c.t; ++i) {
        h = nn::gru_step(input, h, m.dec_gru, cache ? &cc.gru[i] : nullptr);
        Tensor feat = nn::dense(h, m.dec_out);
        Tensor f3({f, q, q}, std::vector<double>(feat.v));
        Tensor up1 = nn::upsample2(f3);
        Tensor ad1 = nn::activation(nn::conv2d(up1, m.dec_conv1), nn::Act::Relu);
        Tensor up2 = nn::upsample2(ad1);
        Tensor ad2 = nn::activation(nn::conv2d(up2, m.dec_conv2), nn::Act::Relu);
        Tensor logits = nn::crop_to(nn::conv2d(ad2, m.dec_conv3), w, w);
        for (int k = 0; k < w * w; ++k)
            out.v[static_cast<std::size_t>(i) * w * w + k] = nn::sigmoid(logits.v[k]);
        cc.h[i] = h;
        cc.up1[i] = std::move(up1);
        cc.ad1[i] = std::move(ad1);
        cc.up2[i] = std::move(up2);
        cc.ad2[i] = std::move(ad2);
        cc.feat[i] = feat;
        input = std::move(feat);
    }
    return out;
}

/// Inference path: encode and return the posterior mean.
inline Tensor predict_latent(const VaeModel& m, const Tensor& x) {
    LatentCode code = encode(m, x);
    return reparameterize(code, Tensor(), false);
}

inline Tensor predict_latent(const VaeModel& m, const IsovistSequence& seq) {
    return predict_latent(m, seq_to_tensor(seq));
}

struct ElboStats {
    double loss = 0;
    double bce = 0;
    double kl = 0;
};

namespace detail {

/// Forward + backward for a single sample; gradients are accumulated into
/// *g (unscaled; the caller divides by the batch size).
inline ElboStats elbo_sample(const VaeModel& m, const Tensor& x, const Tensor& noise, double beta,
                             VaeModel* g) {
    const VaeConfig& c = m.cfg;
    int w = c.window, q = c.quarter(), f = VaeConfig::kFilters;
    int hid = c.gru_hidden;
    double elems = static_cast<double>(c.elements());

    EncodeCache ec;
    LatentCode code = encode(m, x, g ? &ec : nullptr);
    Tensor z = reparameterize(code, noise, true);
    DecodeCache dc;
    Tensor probs = decode(m, z, g ? &dc : nullptr);

    ElboStats stats;
    stats.bce = nn::bce_loss(probs, x);
    stats.kl = nn::kl_diag_gaussian(code.mu, code.logvar);
    stats.loss = stats.bce + beta * stats.kl / elems;
    if (!g) return stats;

    // ---- decoder backward (BPTT with output feedback) ----
    Tensor g_z({c.latent_dim});
    Tensor g_h({hid});
    Tensor g_feat_next; // gradient flowing into feat[i] from the GRU input of step i+1
    for (int i = c.t - 1; i >= 0; --i) {
        // fused sigmoid+BCE gradient on the cropped logits
        Tensor g_logits({1, w, w});
        for (int k = 0; k < w * w; ++k) {
            double p = probs.v[static_cast<std::size_t>(i) * w * w + k];
            if (p < nn::kBceEps || p > 1.0 - nn::kBceEps) continue;
            g_logits.v[k] = (p - x.v[static_cast<std::size_t>(i) * w * w + k]) / elems;
        }
        Tensor g_logits_full({1, 4 * q, 4 * q});
        nn::crop_backward(g_logits, &g_logits_full);
        Tensor g_ad2({f, 4 * q, 4 * q});
        nn::conv2d_backward(dc.ad2[i], m.dec_conv3, g_logits_full, &g_ad2, &g->dec_conv3);
        Tensor g_c2out({f, 4 * q, 4 * q});
        nn::activation_backward(dc.ad2[i], nn::Act::Relu, g_ad2, &g_c2out);
        Tensor g_up2({f, 4 * q, 4 * q});
        nn::conv2d_backward(dc.up2[i], m.dec_conv2, g_c2out, &g_up2, &g->dec_conv2);
        Tensor g_ad1({f, 2 * q, 2 * q});
        nn::upsample2_backward(g_up2, &g_ad1);
        Tensor g_c1out({f, 2 * q, 2 * q});
        nn::activation_backward(dc.ad1[i], nn::Act::Relu, g_ad1, &g_c1out);
        Tensor g_up1({f, 2 * q, 2 * q});
        nn::conv2d_backward(dc.up1[i], m.dec_conv1, g_c1out, &g_up1, &g->dec_conv1);
        Tensor g_f3({f, q, q});
        nn::upsample2_backward(g_up1, &g_f3);

        Tensor g_feat({c.feature_dim()}, std::move(g_f3.v));
        if (g_feat_next.numel() == g_feat.numel())
            for (std::size_t k = 0; k < g_feat.numel(); ++k) g_feat.v[k] += g_feat_next.v[k];

        nn::dense_backward(dc.h[i], m.dec_out, g_feat, &g_h, &g->dec_out);

        Tensor g_in({c.feature_dim()});
        Tensor g_h_prev({hid});
        nn::gru_step_backward(dc.gru[i], m.dec_gru, g_h, &g_in, &g_h_prev, &g->dec_gru);
        g_h = std::move(g_h_prev);
        if (i > 0)
            g_feat_next = std::move(g_in);
        else
            nn::dense_backward(dc.z, m.dec_in, g_in, &g_z, &g->dec_in);
    }

    // ---- latent heads ----
    Tensor g_mu = g_z; // dz/dmu = 1
    Tensor g_lv({c.latent_dim});
    for (int k = 0; k < c.latent_dim; ++k)
        g_lv.v[k] = g_z.v[k] * noise.v[k] * 0.5 * std::exp(0.5 * code.logvar.v[k]);
    nn::kl_backward(code.mu, code.logvar, beta / elems, &g_mu, &g_lv);

    Tensor g_h_enc({hid});
    nn::dense_backward(ec.h[c.t - 1], m.enc_mu, g_mu, &g_h_enc, &g->enc_mu);
    nn::dense_backward(ec.h[c.t - 1], m.enc_logvar, g_lv, &g_h_enc, &g->enc_logvar);

    // ---- encoder backward ----
    for (int i = c.t - 1; i >= 0; --i) {
        Tensor g_feat({c.feature_dim()});
        Tensor g_h_prev({hid});
        nn::gru_step_backward(ec.gru[i], m.enc_gru, g_h_enc, &g_feat, &g_h_prev, &g->enc_gru);
        g_h_enc = std::move(g_h_prev);

        int c1 = m.cfg.half();
        Tensor g_p2({f, q, q}, std::move(g_feat.v));
        Tensor g_a2({f, c1, c1});
        nn::maxpool2_backward(ec.am2[i], g_p2, c1, c1, &g_a2);
        Tensor g_c2out({f, c1, c1});
        nn::activation_backward(ec.a2[i], nn::Act::Relu, g_a2, &g_c2out);
        Tensor g_p1({f, c1, c1});
        nn::conv2d_backward(ec.p1[i], m.enc_conv2, g_c2out, &g_p1, &g->enc_conv2);
        Tensor g_a1({f, w, w});
        nn::maxpool2_backward(ec.am1[i], g_p1, w, w, &g_a1);
        Tensor g_c1out({f, w, w});
        nn::activation_backward(ec.a1[i], nn::Act::Relu, g_a1, &g_c1out);
        nn::conv2d_backward(ec.x[i], m.enc_conv1, g_c1out, nullptr, &g->enc_conv1);
    }
    return stats;
}

/// Process samples in fixed chunks (so the gradient reduction order never
/// depends on the worker count) and reduce in ascending chunk order.
constexpr std::size_t kGradChunk = 8;

} // namespace detail

/// Mean ELBO loss and parameter gradients over a batch. Per-sample work may
/// run on several threads; gradients are reduced in ascending sample order,
/// so results are bit-identical for any thread count.
inline ElboStats elbo_loss(const VaeModel& m, std::span<const Tensor> batch,
                           std::span<const Tensor> noise, double beta, VaeModel* grads) {
    if (batch.empty()) throw EmptyInput("elbo_loss: empty batch");
    if (noise.size() != batch.size()) throw ShapeMismatch("elbo_loss: noise count mismatch");
    if (grads == nullptr) {
        ElboStats total;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ElboStats s = detail::elbo_sample(m, batch[i], noise[i], beta, nullptr);
            total.loss += s.loss;
            total.bce += s.bce;
            total.kl += s.kl;
        }
        double inv = 1.0 / static_cast<double>(batch.size());
        return {total.loss * inv, total.bce * inv, total.kl * inv};
    }
    if (noise.size() != batch.size()) throw ShapeMismatch("elbo_loss: noise count mismatch");

    std::size_t n_chunks = (batch.size() + detail::kGradChunk - 1) / detail::kGradChunk;
    std::vector<VaeModel> chunk_grads;
    std::vector<ElboStats> chunk_stats(n_chunks);
    chunk_grads.reserve(n_chunks);
    for (std::size_t i = 0; i < n_chunks; ++i) chunk_grads.push_back(m.zeros_like());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t ci = next.fetch_add(1);
            if (ci >= n_chunks) return;
            std::size_t lo = ci * detail::kGradChunk;
            std::size_t hi = std::min(batch.size(), lo + detail::kGradChunk);
            for (std::size_t s = lo; s < hi; ++s) {
                ElboStats st = detail::elbo_sample(m, batch[s], noise[s], beta, &chunk_grads[ci]);
                chunk_stats[ci].loss += st.loss;
                chunk_stats[ci].bce += st.bce;
                chunk_stats[ci].kl += st.kl;
            }
        }
    };
    unsigned n_threads = std::min<unsigned>(std::thread::hardware_concurrency(),
                                            static_cast<unsigned>(n_chunks));
    if (n_threads > 1) {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    } else {
        worker();
    }

    double inv = 1.0 / static_cast<double>(batch.size());
    ElboStats total;
    auto gp = grads->params();
    for (std::size_t ci = 0; ci < n_chunks; ++ci) {
        total.loss += chunk_stats[ci].loss;
        total.bce += chunk_stats[ci].bce;
        total.kl += chunk_stats[ci].kl;
        auto cp = chunk_grads[ci].params();
        for (std::size_t k = 0; k < gp.size(); ++k)
            for (std::size_t i = 0; i < gp[k]->numel(); ++i) gp[k]->v[i] += cp[k]->v[i];
    }
    for (Tensor* t : gp)
        for (auto& v : t->v) v *= inv;
    return {total.loss * inv, total.bce * inv, total.kl * inv};
}

// --- training ----------------------------------------------------------------

struct TrainOptions {
    int epochs = 100;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double lr = 1e-3;
    std::string checkpoint_path; // saved after every epoch when non-empty
};

struct EpochStats {
    double loss = 0;
    double bce = 0;
    double kl = 0;
};

std::vector<std::uint8_t> serialize_checkpoint(const VaeModel& m);
void save_checkpoint(const VaeModel& m, const std::string& path);

/// Deterministic epoch loop: seeded shuffle, per-batch noise, Adam updates.
/// Returns per-epoch mean losses over samples.
inline std::vector<EpochStats> train(VaeModel& model, const Dataset& dataset,
                                     const TrainOptions& opt) {
    if (static_cast<int>(dataset.header.t) != model.cfg.t ||
        static_cast<int>(dataset.header.window) != model.cfg.window)
        throw HeaderMismatch("dataset t/window does not match the model configuration");
    if (dataset.records.empty()) throw EmptyInput("training dataset is empty");
    if (opt.batch_size < 1) throw InvalidParams("batch size must be >= 1");
    if (opt.epochs < 0) throw InvalidParams("epochs must be >= 0");

    std::vector<Tensor> inputs;
    inputs.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) inputs.push_back(seq_to_tensor(rec));

    auto params = model.params();
    nn::AdamState adam = nn::AdamState::for_params(params);
    nn::AdamHyper hyper;
    hyper.lr = opt.lr;

    std::vector<EpochStats> trace;
    trace.reserve(opt.epochs);
    std::size_t n = inputs.size();
    std::vector<std::size_t> order(n);
    VaeModel grads = model.zeros_like();

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(opt.seed, 0x100000 + static_cast<std::uint64_t>(epoch)));
        Rng noise_rng(mix_seed(opt.seed, 0x200000 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i) // Fisher-Yates
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        EpochStats stats;
        for (std::size_t start = 0; start < n; start += opt.batch_size) {
            std::size_t bs = std::min<std::size_t>(opt.batch_size, n - start);
            std::vector<Tensor> batch, noise;
            batch.reserve(bs);
            noise.reserve(bs);
            for (std::size_t k = 0; k < bs; ++k) {
                batch.push_back(inputs[order[start + k]]);
                Tensor eps({model.cfg.latent_dim});
                for (auto& v : eps.v) v = noise_rng.normal();
                noise.push_back(std::move(eps));
            }
            for (Tensor* t : grads.params()) t->fill(0.0);
            ElboStats es = elbo_loss(model, batch, noise, model.cfg.beta, &grads);
            auto gp = grads.params();
            std::vector<const Tensor*> gview(gp.begin(), gp.end());
            nn::adam_step(params, gview, adam, hyper);
            stats.loss += es.loss * static_cast<double>(bs);
            stats.bce += es.bce * static_cast<double>(bs);
            stats.kl += es.kl * static_cast<double>(bs);
        }
        stats.loss /= static_cast<double>(n);
        stats.bce /= static_cast<double>(n);
        stats.kl /= static_cast<double>(n);
        trace.push_back(stats);
        if (!opt.checkpoint_path.empty()) save_checkpoint(model, opt.checkpoint_path);
    }
    return trace;
}

// --- "IVAE" checkpoints --------------------------------------------------------

namespace detail {
constexpr std::uint8_t kCheckpointVersion = 1;
}

inline std::vector<std::uint8_t> serialize_checkpoint(const VaeModel& m) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'I', 'V', 'A', 'E'});
    out.push_back(detail::kCheckpointVersion);
    put_u32le(out, static_cast<std::uint32_t>(m.cfg.t));
    put_u32le(out, static_cast<std::uint32_t>(m.cfg.window));
    put_u32le(out, static_cast<std::uint32_t>(m.cfg.latent_dim));
    put_u32le(out, static_cast<std::uint32_t>(m.cfg.gru_hidden));
    put_u32le(out, static_cast<std::uint32_t>(VaeConfig::kFilters));
    put_f64le(out, m.cfg.beta);
    auto ps = m.params();
    put_u32le(out, static_cast<std::uint32_t>(ps.size()));
    for (const Tensor* p : ps) {
        put_u32le(out, static_cast<std::uint32_t>(p->shape.size()));
        for (int d : p->shape) put_u32le(out, static_cast<std::uint32_t>(d));
        for (double v : p->v) put_f64le(out, v);
    }
    return out;
}

inline VaeModel parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    if (!r.expect_magic("IVAE")) throw FormatError("not an IVAE checkpoint");
    if (r.u8() != detail::kCheckpointVersion) throw FormatError("unsupported IVAE version");
    VaeConfig cfg;
    cfg.t = static_cast<int>(r.u32le());
    cfg.window = static_cast<int>(r.u32le());
    cfg.latent_dim = static_cast<int>(r.u32le());
    cfg.gru_hidden = static_cast<int>(r.u32le());
    if (r.u32le() != VaeConfig::kFilters) throw FormatError("IVAE: unexpected filter count");
    cfg.beta = r.f64le();
    VaeModel m = VaeModel::build(cfg);
    auto ps = m.params();
    if (r.u32le() != ps.size()) throw FormatError("IVAE: unexpected parameter count");
    for (Tensor* p : ps) {
        std::uint32_t rank = r.u32le();
        if (rank != p->shape.size()) throw FormatError("IVAE: parameter rank mismatch");
        for (int d : p->shape)
            if (r.u32le() != static_cast<std::uint32_t>(d))
                throw FormatError("IVAE: parameter shape mismatch");
        for (auto& v : p->v) v = r.f64le();
    }
    return m;
}

inline void save_checkpoint(const VaeModel& m, const std::string& path) {
    write_file(path, serialize_checkpoint(m));
}

inline VaeModel load_checkpoint(const std::string& path) {
    return parse_checkpoint(read_file(path));
}

} // namespace isoseq
