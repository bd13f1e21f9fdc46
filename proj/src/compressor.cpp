// SPDX-License-Identifier: Apache-2.0
#include "efpc/compressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "efpc/errors.hpp"

namespace efpc {

void CompressionRequest::validate() const {
    if (keep_ratio.has_value() == unit_budget.has_value())
        throw ValidationError("exactly one of keep ratio or unit budget must be set");
    if (keep_ratio && !(*keep_ratio > 0.0 && *keep_ratio <= 1.0))
        throw ValidationError("keep ratio must lie in (0, 1]");
    if (unit_budget && *unit_budget == 0) throw ValidationError("unit budget must be positive");
}

std::size_t target_keep_count(std::size_t n, double tau) {
    if (n == 0) throw InvalidArgument("target_keep_count: n must be >= 1");
    const double exact = tau * static_cast<double>(n);
    const double rounded = std::floor(exact + 0.5 + 1e-9 * std::max(1.0, exact));
    const auto k = rounded < 1.0 ? std::size_t{1} : static_cast<std::size_t>(rounded);
    return std::min(k, n);
}

std::vector<std::size_t> select_top(const std::vector<double>& probabilities, std::size_t keep) {
    std::vector<std::size_t> idx(probabilities.size());
    std::iota(idx.begin(), idx.end(), 0);
    keep = std::min(keep, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (probabilities[a] != probabilities[b]) return probabilities[a] > probabilities[b];
                          return a < b;
                      });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<double> score_words(const Model& model, std::string_view instruction, const WordSeq& original) {
    if (original.empty()) throw InvalidArgument("score_words: original text has no words");
    const auto instr = split_words(instruction).words;
    const auto windows = tokenize_windows(model.vocab, instr, original.words, {}, model.params.config.max_seq_len);
    std::vector<double> out;
    out.reserve(original.size());
    for (const auto& w : windows) {
        const auto probs = classify(model.params, encode(model.params, w));
        for (std::size_t i = w.boundary; i < probs.size(); ++i) out.push_back(probs[i].preserve);
    }
    return out;
}

CompressionResult compress_scored(const WordSeq& original, std::vector<double> probabilities, double tau) {
    if (probabilities.size() != original.size())
        throw LengthMismatch("compress_scored: one probability per word is required");
    CompressionResult r;
    r.n_original = original.size();
    r.kept_indices = select_top(probabilities, target_keep_count(original.size(), tau));
    for (auto i : r.kept_indices) r.kept_words.push_back(original.words[i]);
    r.probabilities = std::move(probabilities);
    r.achieved_inverse_ratio = static_cast<double>(r.n_original) / static_cast<double>(r.kept_indices.size());
    return r;
}

CompressionResult compress(const Model& model, const CompressionRequest& request) {
    request.validate();
    const WordSeq original = split_words(request.original);
    if (original.empty()) throw InvalidArgument("compress: original text has no words");
    const double tau = request.keep_ratio
                           ? *request.keep_ratio
                           : std::min(1.0, static_cast<double>(*request.unit_budget) / static_cast<double>(original.size()));
    return compress_scored(original, score_words(model, request.instruction, original), tau);
}

std::vector<BatchItem> compress_batch(const Model& model, const std::vector<CompressionRequest>& requests) {
    std::vector<BatchItem> out(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        try {
            out[i].result = compress(model, requests[i]);
        } catch (const Error& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

nlohmann::ordered_json to_json(const CompressionResult& result) {
    nlohmann::ordered_json j;
    j["kept_text"] = result.kept_text();
    j["kept_indices"] = result.kept_indices;
    j["achieved_inverse_ratio"] = result.achieved_inverse_ratio;
    j["n_original"] = result.n_original;
    j["n_kept"] = result.kept_indices.size();
    return j;
}

}  // namespace efpc
