// SPDX-License-Identifier: Apache-2.0
//
// Pre-LN Transformer encoder with a two-way linear head, plus the exact
// reverse-mode pass for the three training losses. Activations are kept row
// per position (L x d) and weights are applied as x * W.

#include <algorithm>
#include <cmath>

#include "efpc/errors.hpp"
#include "efpc/model.hpp"
#include "efpc/rng.hpp"

namespace efpc {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

struct LayerNormCache {
    Matrix xhat;
    Vector rstd;
};

Matrix layer_norm(const Matrix& x, const Vector& gamma, const Vector& beta, LayerNormCache& cache) {
    const auto rows = x.rows();
    const auto d = static_cast<double>(x.cols());
    cache.xhat.resize(rows, x.cols());
    cache.rstd.resize(rows);
    Matrix y(rows, x.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double mean = x.row(i).sum() / d;
        const auto centered = (x.row(i).array() - mean).matrix();
        const double var = centered.squaredNorm() / d;
        const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.rstd(i) = rstd;
        cache.xhat.row(i) = centered * rstd;
        y.row(i) = (cache.xhat.row(i).array() * gamma.transpose().array() + beta.transpose().array()).matrix();
    }
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Vector& gamma, Vector& dgamma,
                           Vector& dbeta) {
    const auto rows = dy.rows();
    const auto d = static_cast<double>(dy.cols());
    dgamma += dy.cwiseProduct(cache.xhat).colwise().sum().transpose();
    dbeta += dy.colwise().sum().transpose();
    Matrix dx(rows, dy.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(gamma.transpose());
        const double mean_dxhat = dxhat.sum() / d;
        const double mean_dxhat_xhat = dxhat.cwiseProduct(cache.xhat.row(i)).sum() / d;
        dx.row(i) = cache.rstd(i) *
                    (dxhat.array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat).matrix();
    }
    return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x); }

void softmax_rows(Matrix& s) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp().matrix();
        s.row(i) /= s.row(i).sum();
    }
}

struct LayerCache {
    Matrix x_in;
    LayerNormCache ln1;
    Matrix a, q, k, v;
    std::vector<Matrix> attn;  // per head, L x L
    Matrix o_cat;
    Matrix x_mid;
    LayerNormCache ln2;
    Matrix b, u, g;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    LayerNormCache final_ln;
    Matrix hidden;
    std::vector<ProbPair> probs;
};

Matrix forward(const ModelParams& p, std::span<const std::int32_t> ids, ForwardCache* cache) {
    const auto& cfg = p.config;
    const std::size_t len = ids.size();
    if (len > cfg.max_seq_len) {
        throw SequenceTooLong("sequence of " + std::to_string(len) + " positions exceeds max_seq_len " +
                              std::to_string(cfg.max_seq_len));
    }
    const auto rows = static_cast<Eigen::Index>(len);
    const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto n_heads = static_cast<Eigen::Index>(cfg.num_heads);
    const Eigen::Index dh = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix x(rows, d);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto id = ids[static_cast<std::size_t>(i)];
        if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
            throw InvalidArgument("token id " + std::to_string(id) + " outside vocabulary");
        x.row(i) = p.token_embedding.row(id) + p.position_embedding.row(i);
    }

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.layers.resize(p.layers.size());

    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const LayerParams& lp = p.layers[l];
        LayerCache& lc = c.layers[l];
        lc.x_in = x;
        lc.a = layer_norm(x, lp.ln1_gamma, lp.ln1_beta, lc.ln1);
        lc.q = lc.a * lp.wq;
        lc.k = lc.a * lp.wk;
        lc.v = lc.a * lp.wv;
        lc.o_cat.resize(rows, d);
        lc.attn.resize(static_cast<std::size_t>(n_heads));
        for (Eigen::Index h = 0; h < n_heads; ++h) {
            Matrix s = lc.q.middleCols(h * dh, dh) * lc.k.middleCols(h * dh, dh).transpose() * scale;
            softmax_rows(s);
            lc.o_cat.middleCols(h * dh, dh) = s * lc.v.middleCols(h * dh, dh);
            lc.attn[static_cast<std::size_t>(h)] = std::move(s);
        }
        lc.x_mid = x + lc.o_cat * lp.wo;
        lc.b = layer_norm(lc.x_mid, lp.ln2_gamma, lp.ln2_beta, lc.ln2);
        lc.u = lc.b * lp.w1;
        lc.u.rowwise() += lp.b1.transpose();
        lc.g = lc.u.unaryExpr([](double t) { return gelu(t); });
        x = lc.x_mid + lc.g * lp.w2;
        x.rowwise() += lp.b2.transpose();
    }
    c.hidden = layer_norm(x, p.final_ln_gamma, p.final_ln_beta, c.final_ln);
    return c.hidden;
}

std::vector<ProbPair> softmax_pairs(const ModelParams& p, const Matrix& hidden) {
    std::vector<ProbPair> out(static_cast<std::size_t>(hidden.rows()));
    for (Eigen::Index i = 0; i < hidden.rows(); ++i) {
        const double z0 = p.classifier_w.row(0).dot(hidden.row(i)) + p.classifier_b(0);
        const double z1 = p.classifier_w.row(1).dot(hidden.row(i)) + p.classifier_b(1);
        const double m = std::max(z0, z1);
        const double e0 = std::exp(z0 - m);
        const double e1 = std::exp(z1 - m);
        const double s = e0 + e1;
        out[static_cast<std::size_t>(i)] = {e0 / s, e1 / s};
    }
    return out;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double mean_cross_entropy(std::span<const ProbPair> probs, std::span<const int> labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) sum += cross_entropy(probs[i], labels[i]);
    return sum / static_cast<double>(probs.size());
}

// Positions scored by a loss variant, with the label each is scored against.
struct ScoredPositions {
    std::vector<std::size_t> index;
    std::vector<int> label;
    std::size_t prefix = 0;  // leading entries that come from the instruction
};

ScoredPositions scored_positions(const TokenizedExample& ex, LossVariant variant) {
    const std::size_t n = ex.original_len();
    if (ex.labels.size() != n) {
        throw LengthMismatch("example has " + std::to_string(ex.labels.size()) + " labels for " +
                             std::to_string(n) + " original positions");
    }
    ScoredPositions s;
    if (variant == LossVariant::Agnostic && ex.boundary != 0)
        throw InvalidArgument("agnostic loss takes no instruction; tokenize without it");
    if (variant == LossVariant::Drop) {
        for (std::size_t i = 0; i < ex.instruction_len(); ++i) {
            s.index.push_back(i);
            s.label.push_back(0);
        }
        s.prefix = ex.instruction_len();
    }
    for (std::size_t i = 0; i < n; ++i) {
        s.index.push_back(ex.boundary + i);
        s.label.push_back(ex.labels[i]);
    }
    return s;
}

double loss_on(const std::vector<ProbPair>& all, const ScoredPositions& s, LossVariant variant) {
    std::vector<ProbPair> probs;
    probs.reserve(s.index.size());
    for (auto i : s.index) probs.push_back(all[i]);
    const std::span<const int> original_labels(s.label.data() + s.prefix, s.label.size() - s.prefix);
    switch (variant) {
        case LossVariant::Agnostic: return loss_agnostic(probs, original_labels);
        case LossVariant::Drop: return loss_drop(probs, original_labels, s.prefix);
        case LossVariant::Mask: return loss_mask(probs, original_labels, s.prefix);
    }
    return 0.0;
}

}  // namespace

Matrix encode(const ModelParams& params, std::span<const std::int32_t> token_ids) {
    return forward(params, token_ids, nullptr);
}

std::vector<ProbPair> classify(const ModelParams& params, const Matrix& hidden) {
    return softmax_pairs(params, hidden);
}

std::string_view to_string(LossVariant v) {
    switch (v) {
        case LossVariant::Agnostic: return "agnostic";
        case LossVariant::Drop: return "drop";
        case LossVariant::Mask: return "mask";
    }
    return "?";
}

LossVariant parse_loss_variant(std::string_view s) {
    if (s == "agnostic") return LossVariant::Agnostic;
    if (s == "drop") return LossVariant::Drop;
    if (s == "mask") return LossVariant::Mask;
    throw InvalidArgument("unknown loss variant '" + std::string(s) + "' (expected agnostic, drop or mask)");
}

double cross_entropy(const ProbPair& p, int label) {
    return -std::log(clamp_prob(label == 1 ? p.preserve : p.discard));
}

double loss_agnostic(std::span<const ProbPair> probs, std::span<const int> labels) {
    if (probs.size() != labels.size() || labels.empty()) {
        throw LengthMismatch("loss_agnostic: " + std::to_string(probs.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    return mean_cross_entropy(probs, labels);
}

double loss_drop(std::span<const ProbPair> probs, std::span<const int> labels, std::size_t boundary) {
    if (probs.size() != boundary + labels.size() || labels.empty()) {
        throw LengthMismatch("loss_drop: " + std::to_string(probs.size()) + " predictions for boundary " +
                             std::to_string(boundary) + " and " + std::to_string(labels.size()) + " labels");
    }
    std::vector<int> full(boundary, 0);
    full.insert(full.end(), labels.begin(), labels.end());
    return mean_cross_entropy(probs, full);
}

double loss_mask(std::span<const ProbPair> probs, std::span<const int> labels, std::size_t boundary) {
    if (probs.size() != boundary + labels.size() || labels.empty()) {
        throw LengthMismatch("loss_mask: " + std::to_string(probs.size()) + " predictions for boundary " +
                             std::to_string(boundary) + " and " + std::to_string(labels.size()) + " labels");
    }
    return mean_cross_entropy(probs.subspan(boundary), labels);
}

double example_loss(const ModelParams& params, const TokenizedExample& example, LossVariant variant) {
    const auto scored = scored_positions(example, variant);
    const auto probs = classify(params, encode(params, example));
    return loss_on(probs, scored, variant);
}

LossAndGrad backward(const ModelParams& p, const TokenizedExample& example, LossVariant variant) {
    const auto scored = scored_positions(example, variant);
    ForwardCache c;
    forward(p, example.token_ids, &c);
    c.probs = softmax_pairs(p, c.hidden);

    LossAndGrad out{loss_on(c.probs, scored, variant), ModelParams::zeros(p.config), c.probs};
    ModelParams& g = out.grad;

    const auto rows = c.hidden.rows();
    const auto d = static_cast<Eigen::Index>(p.config.embed_dim);
    const auto n_heads = static_cast<Eigen::Index>(p.config.num_heads);
    const Eigen::Index dh = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // d loss / d logits. Clamped probabilities contribute no gradient.
    Matrix dlogits = Matrix::Zero(rows, 2);
    const double weight = 1.0 / static_cast<double>(scored.index.size());
    for (std::size_t k = 0; k < scored.index.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(scored.index[k]);
        const ProbPair& pr = c.probs[scored.index[k]];
        const int cls = scored.label[k] == 1 ? 0 : 1;
        const double py = cls == 0 ? pr.preserve : pr.discard;
        if (py <= kProbClamp || py >= 1.0 - kProbClamp) continue;
        dlogits(i, 0) = weight * (pr.preserve - (cls == 0 ? 1.0 : 0.0));
        dlogits(i, 1) = weight * (pr.discard - (cls == 1 ? 1.0 : 0.0));
    }

    g.classifier_w = dlogits.transpose() * c.hidden;
    g.classifier_b = dlogits.colwise().sum().transpose();
    Matrix dx = dlogits * p.classifier_w;
    dx = layer_norm_backward(dx, c.final_ln, p.final_ln_gamma, g.final_ln_gamma, g.final_ln_beta);

    for (std::size_t l = p.layers.size(); l-- > 0;) {
        const LayerParams& lp = p.layers[l];
        LayerParams& lg = g.layers[l];
        const LayerCache& lc = c.layers[l];

        // Feed-forward block: x = x_mid + gelu(b W1 + b1) W2 + b2.
        lg.w2 += lc.g.transpose() * dx;
        lg.b2 += dx.colwise().sum().transpose();
        Matrix du = (dx * lp.w2.transpose()).cwiseProduct(lc.u.unaryExpr([](double t) { return gelu_grad(t); }));
        lg.w1 += lc.b.transpose() * du;
        lg.b1 += du.colwise().sum().transpose();
        Matrix dx_mid = dx + layer_norm_backward(du * lp.w1.transpose(), lc.ln2, lp.ln2_gamma, lg.ln2_gamma,
                                                 lg.ln2_beta);

        // Attention block: x_mid = x_in + concat_h(softmax(Q K^T s) V) Wo.
        lg.wo += lc.o_cat.transpose() * dx_mid;
        const Matrix do_cat = dx_mid * lp.wo.transpose();
        Matrix dq(rows, d), dk(rows, d), dv(rows, d);
        for (Eigen::Index h = 0; h < n_heads; ++h) {
            const Matrix& attn = lc.attn[static_cast<std::size_t>(h)];
            const auto doh = do_cat.middleCols(h * dh, dh);
            const Matrix dattn = doh * lc.v.middleCols(h * dh, dh).transpose();
            dv.middleCols(h * dh, dh) = attn.transpose() * doh;
            Matrix ds = attn.cwiseProduct(dattn);
            const Vector row_dot = ds.rowwise().sum();
            ds -= attn.cwiseProduct(row_dot.replicate(1, attn.cols()));
            ds *= scale;
            dq.middleCols(h * dh, dh) = ds * lc.k.middleCols(h * dh, dh);
            dk.middleCols(h * dh, dh) = ds.transpose() * lc.q.middleCols(h * dh, dh);
        }
        lg.wq += lc.a.transpose() * dq;
        lg.wk += lc.a.transpose() * dk;
        lg.wv += lc.a.transpose() * dv;
        const Matrix da = dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
        dx = dx_mid + layer_norm_backward(da, lc.ln1, lp.ln1_gamma, lg.ln1_gamma, lg.ln1_beta);
    }

    for (Eigen::Index i = 0; i < rows; ++i) {
        g.token_embedding.row(example.token_ids[static_cast<std::size_t>(i)]) += dx.row(i);
        g.position_embedding.row(i) += dx.row(i);
    }
    return out;
}

}  // namespace efpc
