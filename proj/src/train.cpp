// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include "efpc/errors.hpp"
#include "efpc/model.hpp"
#include "efpc/rng.hpp"

namespace efpc {

namespace {

void add_scaled(ModelParams& dst, const ModelParams& src, double scale) {
    auto d = tensors(dst);
    auto s = tensors(src);
    for (std::size_t t = 0; t < d.size(); ++t) {
        auto dv = d[t].values();
        auto sv = s[t].values();
        for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += scale * sv[i];
    }
}

void scale_all(ModelParams& p, double scale) {
    for (auto& t : tensors(p))
        for (double& x : t.values()) x *= scale;
}

bool same_shapes(const ModelParams& a, const ModelParams& b) {
    auto ta = tensors(a);
    auto tb = tensors(b);
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (ta[i].rows != tb[i].rows || ta[i].cols != tb[i].cols) return false;
    return true;
}

std::vector<TokenizedExample> tokenize_dataset(const Model& model, const std::vector<LabeledExample>& dataset,
                                               bool with_instruction, bool include_degenerate) {
    std::vector<TokenizedExample> out;
    for (const auto& ex : dataset) {
        if (!include_degenerate && is_degenerate(ex)) continue;
        auto windows = tokenize_windows(model.vocab, ex, with_instruction, model.params.config.max_seq_len);
        for (auto& w : windows) out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("train config: learning_rate must be > 0");
    if (epochs < 1) throw InvalidArgument("train config: epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("train config: batch_size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw InvalidArgument("train config: Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("train config: epsilon must be > 0");
}

AdamState AdamState::for_params(const ModelParams& params) {
    return {ModelParams::zeros(params.config), ModelParams::zeros(params.config), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config) {
    if (!same_shapes(params, grads) || !same_shapes(params, state.m) || !same_shapes(params, state.v))
        throw ShapeMismatch("adam_step: parameter, gradient and state shapes differ");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);

    auto p = tensors(params);
    auto g = tensors(grads);
    auto m = tensors(state.m);
    auto v = tensors(state.v);
    for (std::size_t k = 0; k < p.size(); ++k) {
        auto pv = p[k].values();
        auto gv = g[k].values();
        auto mv = m[k].values();
        auto vv = v[k].values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            mv[i] = config.beta1 * mv[i] + (1.0 - config.beta1) * gv[i];
            vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * gv[i] * gv[i];
            const double m_hat = mv[i] / bc1;
            const double v_hat = vv[i] / bc2;
            pv[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

Model make_model(const std::vector<LabeledExample>& dataset, ModelConfig config) {
    Model model;
    model.vocab = build_vocab(dataset);
    config.vocab_size = model.vocab.size();
    model.params = init_params(config);
    return model;
}

TrainReport train(Model& model, const std::vector<LabeledExample>& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.empty()) throw EmptyDataset("train: empty dataset");
    const bool with_instruction = config.loss_variant != LossVariant::Agnostic;
    const auto windows = tokenize_dataset(model, dataset, with_instruction, config.include_degenerate);
    if (windows.empty()) throw EmptyDataset("train: every example is degenerate");

    AdamState state = AdamState::for_params(model.params);
    TrainReport report;
    std::vector<std::size_t> order(windows.size());

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(mix_seed(config.seed, epoch));
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t scored = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(start + config.batch_size, order.size());
            ModelParams batch_grad = ModelParams::zeros(model.params.config);
            for (std::size_t b = start; b < stop; ++b) {
                const TokenizedExample& ex = windows[order[b]];
                auto lg = backward(model.params, ex, config.loss_variant);
                add_scaled(batch_grad, lg.grad, 1.0);
                loss_sum += lg.loss;
                for (std::size_t i = 0; i < ex.labels.size(); ++i) {
                    const ProbPair& p = lg.probs[ex.boundary + i];
                    const int predicted = p.preserve > p.discard ? 1 : 0;
                    correct += predicted == ex.labels[i] ? 1 : 0;
                }
                scored += ex.labels.size();
            }
            scale_all(batch_grad, 1.0 / static_cast<double>(stop - start));
            adam_step(model.params, batch_grad, state, config);
            round_to_float(model.params);
        }
        report.epochs.push_back({epoch, loss_sum / static_cast<double>(windows.size()),
                                 static_cast<double>(correct) / static_cast<double>(scored)});
    }
    return report;
}

double token_accuracy(const Model& model, const std::vector<LabeledExample>& dataset, bool with_instruction) {
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const auto& ex : dataset) {
        for (const auto& w : tokenize_windows(model.vocab, ex, with_instruction, model.params.config.max_seq_len)) {
            const auto probs = classify(model.params, encode(model.params, w));
            for (std::size_t i = 0; i < w.labels.size(); ++i) {
                const ProbPair& p = probs[w.boundary + i];
                correct += (p.preserve > p.discard ? 1 : 0) == w.labels[i] ? 1 : 0;
            }
            total += w.labels.size();
        }
    }
    if (total == 0) throw EmptyDataset("token_accuracy: nothing to score");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double dataset_loss(const Model& model, const std::vector<LabeledExample>& dataset, LossVariant variant) {
    const bool with_instruction = variant != LossVariant::Agnostic;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& ex : dataset) {
        for (const auto& w : tokenize_windows(model.vocab, ex, with_instruction, model.params.config.max_seq_len)) {
            sum += example_loss(model.params, w, variant);
            ++n;
        }
    }
    if (n == 0) throw EmptyDataset("dataset_loss: nothing to score");
    return sum / static_cast<double>(n);
}

}  // namespace efpc
