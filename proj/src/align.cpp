// SPDX-License-Identifier: Apache-2.0
#include "efpc/align.hpp"

#include <cmath>
#include <ostream>

#include "efpc/errors.hpp"
#include "efpc/jsonl.hpp"
#include "efpc/rng.hpp"
#include "efpc/text.hpp"

namespace efpc {

LabelResult label_pair(const std::vector<std::string>& original_words,
                       const std::vector<std::string>& compressed_words) {
    LabelResult out;
    out.labels.assign(original_words.size(), 0);

    std::vector<std::string> norm_original;
    norm_original.reserve(original_words.size());
    for (const auto& w : original_words) norm_original.push_back(normalize_word(w));

    std::size_t cursor = 0;
    for (const auto& c : compressed_words) {
        const std::string key = normalize_word(c);
        std::size_t j = cursor;
        while (j < norm_original.size() && norm_original[j] != key) ++j;
        if (j < norm_original.size()) {
            out.labels[j] = 1;
            cursor = j + 1;
            ++out.diagnostics.matched;
        } else {
            ++out.diagnostics.unmatched_compressed;
        }
    }
    if (!compressed_words.empty()) {
        out.diagnostics.match_rate =
            static_cast<double>(out.diagnostics.matched) / static_cast<double>(compressed_words.size());
    }
    return out;
}

LabeledExample build_example(std::string_view instruction, std::string_view original,
                             const std::vector<int>& labels) {
    LabeledExample ex;
    ex.instruction_words = split_words(instruction).words;
    ex.original_words = split_words(original).words;
    if (labels.size() != ex.original_words.size()) {
        throw LengthMismatch("build_example: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(ex.original_words.size()) + " words");
    }
    ex.labels = labels;
    ex.boundary_m = ex.instruction_words.size();
    return ex;
}

std::vector<LabeledExample> label_dataset(const std::vector<DistilledPair>& pairs,
                                          std::vector<AlignmentDiagnostics>* diagnostics) {
    std::vector<LabeledExample> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto original = split_words(p.original).words;
        auto res = label_pair(original, split_words(p.compressed).words);
        out.push_back(build_example(p.instruction, p.original, res.labels));
        if (diagnostics) diagnostics->push_back(res.diagnostics);
    }
    return out;
}

std::vector<std::string> validate_example(const LabeledExample& example) {
    std::vector<std::string> flags;
    if (example.original_words.empty()) flags.emplace_back("empty-original");
    if (example.labels.size() != example.original_words.size()) flags.emplace_back("length-mismatch");
    if (example.boundary_m != example.instruction_words.size()) flags.emplace_back("boundary-mismatch");
    bool any_one = false;
    bool invalid = false;
    for (int y : example.labels) {
        if (y == 1) any_one = true;
        if (y != 0 && y != 1) invalid = true;
    }
    if (invalid) flags.emplace_back("invalid-label");
    if (!any_one && !example.labels.empty()) flags.emplace_back("all-zero");
    return flags;
}

std::vector<LabeledExample> mix_datasets(const std::vector<LabeledExample>& task_aware,
                                         const std::vector<LabeledExample>& task_agnostic, double alpha,
                                         std::size_t total, std::uint64_t seed) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("mix_datasets: alpha must lie in [0, 1]");
    const auto n_aware = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(total) + 0.5));
    const std::size_t n_agnostic = total - n_aware;
    if (n_aware > task_aware.size() || n_agnostic > task_agnostic.size()) {
        throw InsufficientData("mix_datasets: need " + std::to_string(n_aware) + " task-aware and " +
                               std::to_string(n_agnostic) + " task-agnostic examples, have " +
                               std::to_string(task_aware.size()) + " and " + std::to_string(task_agnostic.size()));
    }

    auto sample = [](std::size_t population, std::size_t k, Rng& rng) {
        std::vector<std::size_t> idx(population);
        for (std::size_t i = 0; i < population; ++i) idx[i] = i;
        rng.shuffle(idx);
        idx.resize(k);
        return idx;
    };

    Rng aware_rng(mix_seed(seed, 1));
    Rng agnostic_rng(mix_seed(seed, 2));
    Rng order_rng(mix_seed(seed, 3));

    std::vector<LabeledExample> out;
    out.reserve(total);
    for (auto i : sample(task_aware.size(), n_aware, aware_rng)) out.push_back(task_aware[i]);
    for (auto i : sample(task_agnostic.size(), n_agnostic, agnostic_rng)) out.push_back(task_agnostic[i]);
    order_rng.shuffle(out);
    return out;
}

void write_examples_jsonl(std::ostream& out, const std::vector<LabeledExample>& examples) {
    for (const auto& ex : examples) {
        nlohmann::ordered_json j;
        j["instruction"] = join_words(ex.instruction_words);
        j["original_words"] = ex.original_words;
        j["labels"] = ex.labels;
        j["boundary_m"] = ex.boundary_m;
        out << j.dump() << '\n';
    }
}

std::vector<LabeledExample> read_examples_jsonl(std::istream& in) {
    std::vector<LabeledExample> out;
    for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
        LabeledExample ex;
        ex.instruction_words = split_words(j.value("instruction", std::string())).words;
        ex.original_words = require_field<std::vector<std::string>>(j, "original_words", line);
        ex.labels = require_field<std::vector<int>>(j, "labels", line);
        ex.boundary_m = require_field<std::size_t>(j, "boundary_m", line);
        if (ex.labels.size() != ex.original_words.size())
            throw ParseError("line " + std::to_string(line) + ": labels and original_words differ in length");
        if (ex.boundary_m != ex.instruction_words.size())
            throw ParseError("line " + std::to_string(line) + ": boundary_m does not match instruction");
        out.push_back(std::move(ex));
    });
    return out;
}

}  // namespace efpc
