// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "efpc/distill.hpp"

namespace efpc {

// One training example: optional instruction x_p (M words) followed by the
// original text x_o (N words) with one binary label per original word.
struct LabeledExample {
    std::vector<std::string> instruction_words;
    std::vector<std::string> original_words;
    std::vector<int> labels;  // 1 = preserve, 0 = discard
    std::size_t boundary_m = 0;

    bool operator==(const LabeledExample&) const = default;
};

struct AlignmentDiagnostics {
    std::size_t matched = 0;
    std::size_t unmatched_compressed = 0;
    double match_rate = 0.0;  // matched / compressed words; 0 when nothing was compressed
};

struct LabelResult {
    std::vector<int> labels;
    AlignmentDiagnostics diagnostics;
};

// Greedy in-order alignment. A forward-only cursor scans the original; each
// compressed word claims the first original word at or after the cursor with
// the same normalize_word and moves the cursor past it. Compressed words with
// no match are counted and otherwise ignored.
LabelResult label_pair(const std::vector<std::string>& original_words,
                       const std::vector<std::string>& compressed_words);

// Throws LengthMismatch if labels.size() differs from the original word count.
LabeledExample build_example(std::string_view instruction, std::string_view original,
                             const std::vector<int>& labels);

// label_pair + build_example over a distilled dataset, in input order.
std::vector<LabeledExample> label_dataset(const std::vector<DistilledPair>& pairs,
                                          std::vector<AlignmentDiagnostics>* diagnostics = nullptr);

// Degenerate-example flags: "all-zero", "empty-original", "invalid-label",
// "length-mismatch", "boundary-mismatch". Empty when the example is well formed.
std::vector<std::string> validate_example(const LabeledExample& example);

inline bool is_degenerate(const LabeledExample& example) { return !validate_example(example).empty(); }

// Fixed-size mixture: round_half_up(alpha * total) examples drawn without
// replacement from task_aware, the remainder from task_agnostic, then
// shuffled. Deterministic in seed. Throws InsufficientData when either
// source is too small.
std::vector<LabeledExample> mix_datasets(const std::vector<LabeledExample>& task_aware,
                                         const std::vector<LabeledExample>& task_agnostic, double alpha,
                                         std::size_t total, std::uint64_t seed);

// JSON-lines I/O: {"instruction","original_words","labels","boundary_m"}.
void write_examples_jsonl(std::ostream& out, const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> read_examples_jsonl(std::istream& in);

}  // namespace efpc
