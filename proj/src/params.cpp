// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>

#include "efpc/errors.hpp"
#include "efpc/model.hpp"
#include "efpc/rng.hpp"
#include "efpc/text.hpp"

namespace efpc {

Vocab::Vocab() : Vocab(std::vector<std::string>{"<pad>", "<unk>", "<sep>"}) {}

Vocab::Vocab(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.size() < kReserved) throw InvalidArgument("vocabulary is missing reserved entries");
    for (std::size_t i = 0; i < words_.size(); ++i) {
        const auto [it, inserted] = index_.emplace(words_[i], static_cast<std::int32_t>(i));
        if (!inserted) throw InvalidArgument("duplicate vocabulary entry '" + words_[i] + "'");
    }
}

std::string Vocab::key(std::string_view word) {
    std::string k = normalize_word(word);
    return k.empty() ? std::string(word) : k;
}

std::int32_t Vocab::id_of(std::string_view word) const {
    const auto it = index_.find(key(word));
    // Reserved ids are only reachable through the constants.
    if (it == index_.end() || it->second < static_cast<std::int32_t>(kReserved)) return kUnk;
    return it->second;
}

Vocab build_vocab(const std::vector<LabeledExample>& dataset) {
    if (dataset.empty()) throw EmptyDataset("build_vocab: empty dataset");
    std::map<std::string, std::size_t> freq;
    for (const auto& ex : dataset) {
        for (const auto& w : ex.instruction_words) ++freq[Vocab::key(w)];
        for (const auto& w : ex.original_words) ++freq[Vocab::key(w)];
    }
    std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> words{"<pad>", "<unk>", "<sep>"};
    for (auto& [w, n] : entries) {
        if (w == "<pad>" || w == "<unk>" || w == "<sep>") continue;
        words.push_back(std::move(w));
    }
    return Vocab(std::move(words));
}

void ModelConfig::validate() const {
    if (vocab_size < Vocab::kReserved) throw InvalidArgument("model config: vocab_size must cover reserved ids");
    if (embed_dim == 0 || num_heads == 0 || embed_dim % num_heads != 0)
        throw InvalidArgument("model config: embed_dim must be divisible by num_heads");
    if (num_layers == 0) throw InvalidArgument("model config: num_layers must be >= 1");
    if (ffn_dim == 0) throw InvalidArgument("model config: ffn_dim must be >= 1");
    if (max_seq_len < 8) throw InvalidArgument("model config: max_seq_len must be >= 8");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    const auto v = static_cast<Eigen::Index>(config.vocab_size);
    const auto d = static_cast<Eigen::Index>(config.embed_dim);
    const auto f = static_cast<Eigen::Index>(config.ffn_dim);
    const auto len = static_cast<Eigen::Index>(config.max_seq_len);

    ModelParams p;
    p.config = config;
    p.token_embedding = Matrix::Zero(v, d);
    p.position_embedding = Matrix::Zero(len, d);
    p.layers.resize(config.num_layers);
    for (auto& l : p.layers) {
        l.ln1_gamma = Vector::Zero(d);
        l.ln1_beta = Vector::Zero(d);
        l.wq = Matrix::Zero(d, d);
        l.wk = Matrix::Zero(d, d);
        l.wv = Matrix::Zero(d, d);
        l.wo = Matrix::Zero(d, d);
        l.ln2_gamma = Vector::Zero(d);
        l.ln2_beta = Vector::Zero(d);
        l.w1 = Matrix::Zero(d, f);
        l.b1 = Vector::Zero(f);
        l.w2 = Matrix::Zero(f, d);
        l.b2 = Vector::Zero(d);
    }
    p.final_ln_gamma = Vector::Zero(d);
    p.final_ln_beta = Vector::Zero(d);
    p.classifier_w = Matrix::Zero(2, d);
    p.classifier_b = Vector::Zero(2);
    return p;
}

namespace {

TensorRef ref(std::string name, Matrix& m) {
    return {std::move(name), m.data(), static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}

TensorRef ref(std::string name, Vector& v) {
    return {std::move(name), v.data(), static_cast<std::size_t>(v.size()), 1};
}

}  // namespace

std::vector<TensorRef> tensors(ModelParams& p) {
    std::vector<TensorRef> out;
    out.push_back(ref("token_embedding", p.token_embedding));
    out.push_back(ref("position_embedding", p.position_embedding));
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        auto& l = p.layers[i];
        const std::string prefix = "layers." + std::to_string(i) + ".";
        out.push_back(ref(prefix + "ln1_gamma", l.ln1_gamma));
        out.push_back(ref(prefix + "ln1_beta", l.ln1_beta));
        out.push_back(ref(prefix + "wq", l.wq));
        out.push_back(ref(prefix + "wk", l.wk));
        out.push_back(ref(prefix + "wv", l.wv));
        out.push_back(ref(prefix + "wo", l.wo));
        out.push_back(ref(prefix + "ln2_gamma", l.ln2_gamma));
        out.push_back(ref(prefix + "ln2_beta", l.ln2_beta));
        out.push_back(ref(prefix + "w1", l.w1));
        out.push_back(ref(prefix + "b1", l.b1));
        out.push_back(ref(prefix + "w2", l.w2));
        out.push_back(ref(prefix + "b2", l.b2));
    }
    out.push_back(ref("final_ln_gamma", p.final_ln_gamma));
    out.push_back(ref("final_ln_beta", p.final_ln_beta));
    out.push_back(ref("classifier_w", p.classifier_w));
    out.push_back(ref("classifier_b", p.classifier_b));
    return out;
}

std::vector<ConstTensorRef> tensors(const ModelParams& params) {
    std::vector<ConstTensorRef> out;
    for (auto& t : tensors(const_cast<ModelParams&>(params))) out.push_back({std::move(t.name), t.data, t.rows, t.cols});
    return out;
}

std::size_t parameter_count(const ModelParams& params) {
    std::size_t n = 0;
    for (const auto& t : tensors(params)) n += t.size();
    return n;
}

ModelParams init_params(const ModelConfig& config) {
    config.validate();
    ModelParams p = ModelParams::zeros(config);
    Rng rng(mix_seed(config.seed, 0xE11C0DE));
    auto fill = [&](Matrix& m, double stddev) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
    };
    const double d = static_cast<double>(config.embed_dim);
    const double f = static_cast<double>(config.ffn_dim);

    fill(p.token_embedding, 0.5);
    fill(p.position_embedding, 0.5);
    for (auto& l : p.layers) {
        l.ln1_gamma.setOnes();
        l.ln2_gamma.setOnes();
        fill(l.wq, 1.0 / std::sqrt(d));
        fill(l.wk, 1.0 / std::sqrt(d));
        fill(l.wv, 1.0 / std::sqrt(d));
        fill(l.wo, 1.0 / std::sqrt(d));
        fill(l.w1, 1.0 / std::sqrt(d));
        fill(l.w2, 1.0 / std::sqrt(f));
    }
    p.final_ln_gamma.setOnes();
    fill(p.classifier_w, 1.0 / std::sqrt(d));
    round_to_float(p);
    return p;
}

void round_to_float(ModelParams& params) {
    for (auto& t : tensors(params)) {
        for (double& x : t.values()) x = static_cast<double>(static_cast<float>(x));
    }
}

std::vector<TokenizedExample> tokenize_windows(const Vocab& vocab, const std::vector<std::string>& instruction,
                                               const std::vector<std::string>& original,
                                               const std::vector<int>& labels, std::size_t max_seq_len) {
    if (!labels.empty() && labels.size() != original.size())
        throw LengthMismatch("tokenize_windows: labels do not cover the original words");
    const std::size_t m = instruction.size();
    const std::size_t prefix = m == 0 ? 0 : m + 1;
    if (m > 0 && prefix >= max_seq_len) {
        throw InstructionTooLong("instruction of " + std::to_string(m) + " words leaves no room in max_seq_len " +
                                 std::to_string(max_seq_len));
    }
    const std::size_t window = max_seq_len - prefix;

    std::vector<std::int32_t> head;
    for (const auto& w : instruction) head.push_back(vocab.id_of(w));
    if (m > 0) head.push_back(Vocab::kSep);

    std::vector<TokenizedExample> out;
    for (std::size_t start = 0; start < original.size(); start += window) {
        const std::size_t stop = std::min(start + window, original.size());
        TokenizedExample ex;
        ex.token_ids = head;
        for (std::size_t i = start; i < stop; ++i) ex.token_ids.push_back(vocab.id_of(original[i]));
        if (!labels.empty()) ex.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(start),
                                              labels.begin() + static_cast<std::ptrdiff_t>(stop));
        ex.boundary = prefix;
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TokenizedExample> tokenize_windows(const Vocab& vocab, const LabeledExample& example,
                                               bool with_instruction, std::size_t max_seq_len) {
    static const std::vector<std::string> kNone;
    return tokenize_windows(vocab, with_instruction ? example.instruction_words : kNone, example.original_words,
                            example.labels, max_seq_len);
}

}  // namespace efpc
