// SPDX-License-Identifier: Apache-2.0
#include "efpc/distill.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "efpc/errors.hpp"
#include "efpc/jsonl.hpp"

namespace efpc {

namespace {

constexpr std::string_view kInstructionLabel = "User instruction: ";
constexpr std::string_view kOriginalLabel = "Original text:\n";
constexpr std::string_view kCompressedLabel = "\n\nCompressed text:";

const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words = {
        "a", "an", "the", "and", "or", "but", "nor", "so", "yet", "if", "then", "than",
        "of", "in", "on", "at", "to", "for", "from", "by", "with", "about", "as", "into",
        "onto", "over", "under", "up", "down", "out", "off", "through", "during", "before",
        "after", "above", "below", "between", "is", "are", "was", "were", "be", "been",
        "being", "am", "do", "does", "did", "have", "has", "had", "having", "will", "would",
        "shall", "should", "can", "could", "may", "might", "must", "it", "its", "this",
        "that", "these", "those", "there", "here", "i", "me", "my", "we", "us", "our", "you",
        "your", "he", "him", "his", "she", "her", "they", "them", "their", "what", "which",
        "who", "whom", "whose", "when", "where", "why", "how", "all", "any", "both", "each",
        "few", "more", "most", "other", "some", "such", "no", "not", "only", "own", "same",
        "too", "very", "just", "also", "again", "further", "once", "um", "uh", "okay", "oh",
    };
    return words;
}

std::string keep_content_words(const std::vector<std::string>& words) {
    std::vector<std::string> kept;
    for (const auto& w : words) {
        const auto norm = normalize_word(w);
        if (!norm.empty() && !is_stopword(norm)) kept.push_back(w);
    }
    return join_words(kept);
}

}  // namespace

const std::string_view kCompressionDirective =
    "Compress the given text into short expressions so that the compressed text can still be "
    "used to complete the user instruction below. You may ONLY remove words: do not reorder, "
    "change, abbreviate or add words or symbols. Keep every word the instruction depends on and "
    "remove everything else as aggressively as possible. Reply with the compressed text only.";

MessageList build_compression_request(std::string_view instruction, const Chunk& chunk) {
    if (chunk.text.empty()) throw InvalidArgument("build_compression_request: empty chunk");
    std::string content(kCompressionDirective);
    content += "\n\n";
    if (!instruction.empty()) {
        content += kInstructionLabel;
        content += instruction;
        content += "\n\n";
    }
    content += kOriginalLabel;
    content += chunk.text;
    content += kCompressedLabel;
    return {ChatMessage{"user", std::move(content)}};
}

std::optional<ParsedRequest> parse_compression_request(const MessageList& messages) {
    if (messages.size() != 1) return std::nullopt;
    const std::string& c = messages.front().content;
    if (!c.starts_with(kCompressionDirective)) return std::nullopt;
    const auto orig_pos = c.find(kOriginalLabel, kCompressionDirective.size());
    const auto end_pos = c.rfind(kCompressedLabel);
    if (orig_pos == std::string::npos || end_pos == std::string::npos || end_pos < orig_pos)
        return std::nullopt;

    ParsedRequest out;
    const auto head = std::string_view(c).substr(0, orig_pos);
    if (const auto ip = head.find(kInstructionLabel); ip != std::string_view::npos) {
        auto instr = head.substr(ip + kInstructionLabel.size());
        if (instr.ends_with("\n\n")) instr.remove_suffix(2);
        out.instruction = std::string(instr);
    }
    const auto body_start = orig_pos + kOriginalLabel.size();
    out.original = c.substr(body_start, end_pos - body_start);
    return out;
}

bool is_stopword(std::string_view normalized_word) { return stopwords().contains(normalized_word); }

std::string StopwordMockProvider::complete(const MessageList& messages) {
    const auto req = parse_compression_request(messages);
    if (!req) return {};
    return keep_content_words(split_words(req->original).words);
}

std::string InstructionAwareMockProvider::complete(const MessageList& messages) {
    const auto req = parse_compression_request(messages);
    if (!req) return {};
    const WordSeq seq = split_words(req->original);
    if (req->instruction.empty()) return keep_content_words(seq.words);

    std::set<std::string> query;
    for (const auto& w : split_words(req->instruction).words) {
        auto norm = normalize_word(w);
        if (!norm.empty() && !is_stopword(norm)) query.insert(std::move(norm));
    }

    std::vector<std::vector<std::string>> sentences(1);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        sentences.back().push_back(seq.words[i]);
        if (is_sentence_end(seq.words[i]) && i + 1 < seq.size()) sentences.emplace_back();
    }

    std::vector<std::string> kept;
    for (const auto& sentence : sentences) {
        const bool relevant = std::any_of(sentence.begin(), sentence.end(), [&](const std::string& w) {
            return query.contains(normalize_word(w));
        });
        if (relevant) kept.insert(kept.end(), sentence.begin(), sentence.end());
    }
    if (kept.empty()) kept = sentences.front();
    return keep_content_words(kept);
}

double compression_ratio(std::string_view original, std::string_view compressed) {
    const std::size_t after = count_units(compressed);
    if (after == 0) throw EmptyCompression("compression has no words");
    return static_cast<double>(count_units(original)) / static_cast<double>(after);
}

DistilledPair compress_chunk_via_llm(LlmProvider& provider, std::string_view instruction,
                                     const Chunk& chunk, const RetryPolicy& retry) {
    const MessageList request = build_compression_request(instruction, chunk);
    std::string reply;
    auto backoff = retry.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            reply = provider.complete(request);
            break;
        } catch (const TransportError&) {
            if (attempt >= retry.max_attempts) throw;
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<std::int64_t>(static_cast<double>(backoff.count()) * retry.backoff_multiplier));
        }
    }

    DistilledPair pair;
    pair.instruction = std::string(instruction);
    pair.original = chunk.text;
    pair.compressed = join_words(split_words(reply).words);
    pair.ratio = compression_ratio(pair.original, pair.compressed);
    return pair;
}

DistilledDataset distill_corpus(LlmProvider& provider, const std::vector<Document>& docs,
                                const DistillOptions& options) {
    if (docs.empty()) throw EmptyDataset("distill_corpus: no documents");

    struct Job {
        const Document* doc;
        std::size_t chunk_idx;
        Chunk chunk;
    };
    std::vector<Job> jobs;
    for (const auto& doc : docs) {
        auto chunks = chunk_document(doc.text, options.max_units);
        for (std::size_t c = 0; c < chunks.size(); ++c) jobs.push_back({&doc, c, std::move(chunks[c])});
    }

    std::vector<std::optional<DistilledPair>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job& job = jobs[j];
            const std::string instruction = options.task_agnostic ? std::string() : job.doc->instruction;
            try {
                auto pair = compress_chunk_via_llm(provider, instruction, job.chunk, options.retry);
                pair.doc_id = job.doc->doc_id;
                pair.chunk_idx = job.chunk_idx;
                results[j] = std::move(pair);
            } catch (const Error& e) {
                errors[j] = e.what();
                std::lock_guard lock(log_mutex);
                std::cerr << "[distill] doc=" << job.doc->doc_id << " chunk=" << job.chunk_idx
                          << " failed: " << e.what() << '\n';
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(jobs.size(), 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    DistilledDataset out;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (results[j]) {
            out.pairs.push_back(std::move(*results[j]));
        } else {
            out.failures.push_back({jobs[j].doc->doc_id, jobs[j].chunk_idx, errors[j]});
        }
    }
    if (!jobs.empty()) {
        const double failed = static_cast<double>(out.failures.size()) / static_cast<double>(jobs.size());
        if (failed > options.failure_threshold) {
            throw DistillationFailed(std::to_string(out.failures.size()) + " of " + std::to_string(jobs.size()) +
                                     " chunks failed, above threshold " +
                                     std::to_string(options.failure_threshold));
        }
    }
    return out;
}

RatioHistogram ratio_histogram(const std::vector<double>& ratios, double bin_width) {
    if (ratios.empty()) throw EmptyDataset("ratio_histogram: no ratios");
    if (!(bin_width > 0.0)) throw InvalidArgument("ratio_histogram: bin_width must be positive");

    const auto [lo_it, hi_it] = std::minmax_element(ratios.begin(), ratios.end());
    double start = 1.0;
    if (*lo_it < 1.0) start = 1.0 - std::ceil((1.0 - *lo_it) / bin_width) * bin_width;
    const auto bin_of = [&](double r) { return static_cast<std::size_t>(std::floor((r - start) / bin_width)); };
    const std::size_t n_bins = bin_of(*hi_it) + 1;

    RatioHistogram h;
    h.counts.assign(n_bins, 0);
    for (std::size_t k = 0; k <= n_bins; ++k) h.bin_edges.push_back(start + static_cast<double>(k) * bin_width);
    double sum = 0.0;
    for (double r : ratios) {
        ++h.counts[std::min(bin_of(r), n_bins - 1)];
        sum += r;
    }
    h.n = ratios.size();
    h.mean = sum / static_cast<double>(h.n);
    return h;
}

RatioHistogram ratio_histogram(const DistilledDataset& dataset, double bin_width) {
    std::vector<double> ratios;
    ratios.reserve(dataset.pairs.size());
    for (const auto& p : dataset.pairs) ratios.push_back(p.ratio);
    return ratio_histogram(ratios, bin_width);
}

void write_pairs_jsonl(std::ostream& out, const std::vector<DistilledPair>& pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["doc_id"] = p.doc_id;
        j["chunk_idx"] = p.chunk_idx;
        j["instruction"] = p.instruction;
        j["original"] = p.original;
        j["compressed"] = p.compressed;
        j["ratio"] = p.ratio;
        out << j.dump() << '\n';
    }
}

std::vector<DistilledPair> read_pairs_jsonl(std::istream& in) {
    std::vector<DistilledPair> pairs;
    for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
        DistilledPair p;
        p.doc_id = require_field<std::string>(j, "doc_id", line);
        p.chunk_idx = require_field<std::size_t>(j, "chunk_idx", line);
        p.instruction = j.value("instruction", std::string());
        p.original = require_field<std::string>(j, "original", line);
        p.compressed = require_field<std::string>(j, "compressed", line);
        p.ratio = require_field<double>(j, "ratio", line);
        pairs.push_back(std::move(p));
    });
    return pairs;
}

std::vector<Document> read_corpus_jsonl(std::istream& in) {
    std::vector<Document> docs;
    for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
        Document d;
        d.doc_id = require_field<std::string>(j, "doc_id", line);
        d.text = require_field<std::string>(j, "text", line);
        d.instruction = j.value("instruction", std::string());
        docs.push_back(std::move(d));
    });
    return docs;
}

}  // namespace efpc
