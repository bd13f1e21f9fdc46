// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "efpc/align.hpp"
#include "efpc/rng.hpp"

namespace efpc::testing {

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> w = {"the", "of", "to", "and", "in"};
    return w;
}

inline std::vector<std::string> content_words(std::size_t n) {
    std::vector<std::string> w;
    for (std::size_t i = 0; i < n; ++i) w.push_back("w" + std::to_string(i));
    return w;
}

struct CorpusShape {
    std::size_t min_len = 8;
    std::size_t max_len = 14;
    double filler_rate = 0.2;
    std::size_t n_content = 30;
};

inline std::vector<std::string> random_sentence(Rng& rng, const CorpusShape& shape) {
    const auto content = content_words(shape.n_content);
    const auto len = shape.min_len + rng.below(shape.max_len - shape.min_len + 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < len; ++i) {
        if (rng.uniform() < shape.filler_rate)
            out.push_back(filler_words()[rng.below(filler_words().size())]);
        else
            out.push_back(content[rng.below(content.size())]);
    }
    return out;
}

inline bool is_filler(const std::string& w) {
    for (const auto& f : filler_words())
        if (w == f) return true;
    return false;
}

// Instruction "A" keeps content words at odd 1-based positions, "B" keeps
// content words at even ones. Filler words are always dropped.
inline std::vector<LabeledExample> parity_corpus(std::size_t n, std::uint64_t seed, const CorpusShape& shape = {}) {
    Rng rng(seed);
    std::vector<LabeledExample> out;
    for (std::size_t k = 0; k < n; ++k) {
        const bool a = rng.below(2) == 0;
        LabeledExample ex;
        ex.instruction_words = {a ? "A" : "B"};
        ex.boundary_m = 1;
        ex.original_words = random_sentence(rng, shape);
        for (std::size_t i = 0; i < ex.original_words.size(); ++i) {
            const bool odd = (i + 1) % 2 == 1;
            ex.labels.push_back(!is_filler(ex.original_words[i]) && odd == a ? 1 : 0);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

// No instruction; filler words get 0, everything else 1.
inline std::vector<LabeledExample> filler_rule_corpus(std::size_t n, std::uint64_t seed,
                                                      const CorpusShape& shape = {}) {
    Rng rng(seed);
    std::vector<LabeledExample> out;
    for (std::size_t k = 0; k < n; ++k) {
        LabeledExample ex;
        ex.original_words = random_sentence(rng, shape);
        for (const auto& w : ex.original_words) ex.labels.push_back(is_filler(w) ? 0 : 1);
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<LabeledExample> without_instruction(std::vector<LabeledExample> ds) {
    for (auto& ex : ds) {
        ex.instruction_words.clear();
        ex.boundary_m = 0;
    }
    return ds;
}

}  // namespace efpc::testing
