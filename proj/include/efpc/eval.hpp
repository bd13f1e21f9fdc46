// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "efpc/compressor.hpp"
#include "efpc/distill.hpp"
#include "efpc/model.hpp"

namespace efpc {

// ---------------------------------------------------------------------------
// Text metrics. All operate on lowercased whitespace-delimited words.
// ---------------------------------------------------------------------------

std::vector<std::string> metric_tokens(std::string_view text);

// Bag-of-words F1. 1 when both sides are empty, 0 when exactly one is.
double token_f1(std::string_view predicted, std::string_view gold);
double token_f1_max(std::string_view predicted, const std::vector<std::string>& golds);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// n-gram multiset overlap. All zero when either side has no n-grams.
PrecisionRecallF1 rouge_n(std::string_view candidate, std::string_view reference, std::size_t n);

// LCS-based. Both empty counts as a perfect match.
PrecisionRecallF1 rouge_l(std::string_view candidate, std::string_view reference);

// Corpus-style BLEU for one candidate: geometric mean of clipped n-gram
// precisions (n = 1..max_n) times the brevity penalty exp(1 - r/c) when the
// candidate is not longer than the closest reference. For n >= 2 a zero
// match count is smoothed to 1 / (candidate n-grams + 1). 0 for an empty
// candidate or when no unigram matches.
double bleu(std::string_view candidate, const std::vector<std::string>& references, std::size_t max_n = 4);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct QARecord {
    std::string question;
    std::vector<std::string> gold_answers;
    std::string predicted;
};

// Per-example metric rows plus their arithmetic means.
struct MetricsReport {
    std::vector<std::map<std::string, double>> per_example;
    std::map<std::string, double> means;
    std::size_t n_items = 0;
    std::size_t n_failed = 0;
    std::vector<std::string> errors;

    std::size_t n_scored() const { return per_example.size(); }
    double mean(const std::string& metric) const;
    // Recomputes means from per_example (each metric over the rows that carry it).
    void finalize();
};

struct SweepCell {
    double fraction = 0.0;
    std::size_t n_extra = 0;
    MetricsReport report;
};

struct SweepReport {
    std::vector<SweepCell> cells;
};

// Prompt sent to the target model: context followed by the question.
MessageList build_qa_request(std::string_view context, std::string_view question);

// Deterministic stand-in for a target LLM: answers with the content words of
// the context sentence that overlaps the question most, minus words already
// in the question.
class ExtractiveQaMockProvider : public LlmProvider {
public:
    std::string complete(const MessageList& messages) override;
    std::string provider_id() const override { return "mock-qa"; }
};

struct DownstreamItem {
    CompressionResult compression;
    QARecord record;
};

// Sends each compressed context plus question to the target and scores the
// answer with token_f1 (max over golds). Transport failures are counted and
// left out of the means.
MetricsReport evaluate_downstream(LlmProvider& target, std::vector<DownstreamItem>& items);

// Label-level evaluation: per-example token accuracy against the gold labels,
// and token_f1 of the compression at the gold keep ratio against the gold
// kept words.
MetricsReport evaluate_labeled(const Model& model, const std::vector<LabeledExample>& eval_set,
                               bool with_instruction);

// For each fraction f, trains a copy of `base` on the first
// round_half_up(f * |extra|) examples of a seeded permutation of `extra`
// and evaluates it with evaluate_labeled. f = 0 evaluates `base` untouched.
// Throws InvalidArgument unless fractions are strictly increasing in [0, 1].
SweepReport data_efficiency_sweep(const Model& base, const std::vector<LabeledExample>& extra,
                                  const std::vector<double>& fractions,
                                  const std::vector<LabeledExample>& eval_set, const TrainConfig& config);

// {run_id, config_digest, metrics:{...}, per_example:[...]}
nlohmann::ordered_json report_to_json(const MetricsReport& report, std::string_view run_id,
                                      std::string_view config_digest);

// Tab-separated summary, one row per cell.
std::string sweep_summary_tsv(const SweepReport& sweep);

}  // namespace efpc
