// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "efpc/model.hpp"
#include "efpc/text.hpp"

namespace efpc {

// An empty instruction selects task-agnostic compression. Exactly one of
// keep_ratio (tau in (0, 1]) or unit_budget (words, > 0) must be set.
struct CompressionRequest {
    std::string instruction;
    std::string original;
    std::optional<double> keep_ratio;
    std::optional<std::size_t> unit_budget;

    // Throws ValidationError.
    void validate() const;
};

struct CompressionResult {
    std::vector<std::string> kept_words;
    std::vector<std::size_t> kept_indices;  // strictly increasing
    std::vector<double> probabilities;      // preserve probability per original word
    std::size_t n_original = 0;
    double achieved_inverse_ratio = 1.0;  // n_original / kept

    std::string kept_text() const { return join_words(kept_words); }
};

// clamp(round_half_up(tau * n), 1, n). Products within 1e-9 of a .5
// boundary round up, so decimal ratios behave as written.
std::size_t target_keep_count(std::size_t n, double tau);

// Keep the `keep` highest-probability words, ties to the lower index, in
// original order.
std::vector<std::size_t> select_top(const std::vector<double>& probabilities, std::size_t keep);

// Preserve probability for every original word. Long inputs are scored in
// windows, each carrying the instruction and SEP. Throws InstructionTooLong.
std::vector<double> score_words(const Model& model, std::string_view instruction, const WordSeq& original);

// Selection step alone, for callers that already have scores.
CompressionResult compress_scored(const WordSeq& original, std::vector<double> probabilities, double tau);

CompressionResult compress(const Model& model, const CompressionRequest& request);

struct BatchItem {
    std::optional<CompressionResult> result;
    std::string error;  // set when result is empty

    bool ok() const { return result.has_value(); }
};

// Positionally aligned with requests; a failing request never aborts the
// batch.
std::vector<BatchItem> compress_batch(const Model& model, const std::vector<CompressionRequest>& requests);

// {"kept_text","kept_indices","achieved_inverse_ratio","n_original","n_kept"}
nlohmann::ordered_json to_json(const CompressionResult& result);

}  // namespace efpc
