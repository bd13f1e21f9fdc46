// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "efpc/text.hpp"

namespace efpc {

struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

using MessageList = std::vector<ChatMessage>;

// A chat-completion backend. Implementations must be safe to call from
// several threads at once; distill_corpus issues concurrent requests.
class LlmProvider {
public:
    virtual ~LlmProvider() = default;

    // Throws TransportError on network/timeout failures.
    virtual std::string complete(const MessageList& messages) = 0;
    virtual std::string provider_id() const = 0;
    virtual std::chrono::milliseconds request_timeout() const { return std::chrono::seconds(60); }
};

// ---------------------------------------------------------------------------
// Request template
// ---------------------------------------------------------------------------

// Fixed directive sent ahead of every chunk. The compressed text has to stay
// usable for the user's instruction, and only deletions are allowed.
extern const std::string_view kCompressionDirective;

// Single user message: directive, then the instruction block (omitted when
// the instruction is empty), then the chunk verbatim.
MessageList build_compression_request(std::string_view instruction, const Chunk& chunk);

// Inverse of build_compression_request, used by the mock providers. Returns
// nullopt if the message does not follow the template.
struct ParsedRequest {
    std::string instruction;
    std::string original;
};
std::optional<ParsedRequest> parse_compression_request(const MessageList& messages);

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

bool is_stopword(std::string_view normalized_word);

// Drops every word whose normalize_word is a stopword. Ignores the
// instruction. Pure.
class StopwordMockProvider : public LlmProvider {
public:
    std::string complete(const MessageList& messages) override;
    std::string provider_id() const override { return "mock-stopword"; }
};

// Question-conditioned mock: drops stopwords and also drops every sentence
// that shares no content word with the instruction. With an empty
// instruction it behaves like StopwordMockProvider. If no sentence is
// relevant, the first sentence is kept. Pure.
class InstructionAwareMockProvider : public LlmProvider {
public:
    std::string complete(const MessageList& messages) override;
    std::string provider_id() const override { return "mock-instruct"; }
};

struct HttpProviderConfig {
    // e.g. "https://api.openai.com/v1"; "/chat/completions" is appended.
    std::string base_url;
    std::string model;
    std::string api_key_env = "EFPC_API_KEY";
    std::chrono::milliseconds timeout = std::chrono::seconds(60);
};

// OpenAI-style chat-completion client. Sends {model, messages, temperature:0}
// with a bearer credential read from the configured environment variable.
class HttpChatProvider : public LlmProvider {
public:
    explicit HttpChatProvider(HttpProviderConfig config);

    std::string complete(const MessageList& messages) override;
    std::string provider_id() const override;
    std::chrono::milliseconds request_timeout() const override { return config_.timeout; }

    // Request body exactly as sent on the wire.
    std::string request_body(const MessageList& messages) const;

private:
    HttpProviderConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::string api_key_;
};

// ---------------------------------------------------------------------------
// Distillation
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff = std::chrono::seconds(1);
    double backoff_multiplier = 2.0;
};

struct DistilledPair {
    std::string doc_id;
    std::size_t chunk_idx = 0;
    std::string instruction;
    std::string original;
    std::string compressed;
    double ratio = 1.0;

    bool operator==(const DistilledPair&) const = default;
};

struct DistillFailure {
    std::string doc_id;
    std::size_t chunk_idx = 0;
    std::string message;
};

struct DistilledDataset {
    std::vector<DistilledPair> pairs;
    std::vector<DistillFailure> failures;
};

struct Document {
    std::string doc_id;
    std::string text;
    std::string instruction;
};

struct DistillOptions {
    std::size_t max_units = 512;
    std::size_t concurrency = 4;
    double failure_threshold = 0.10;
    // Ignore per-document instructions (task-agnostic collection).
    bool task_agnostic = false;
    RetryPolicy retry;
};

// count_units(original) / count_units(compressed). Throws EmptyCompression
// when the compression has no words.
double compression_ratio(std::string_view original, std::string_view compressed);

// Retries TransportError per policy. Throws TransportError or
// EmptyCompression when the pair cannot be produced.
DistilledPair compress_chunk_via_llm(LlmProvider& provider, std::string_view instruction,
                                     const Chunk& chunk, const RetryPolicy& retry = {});

// Chunks every document and compresses each chunk. Pairs come back in
// (document, chunk) order regardless of concurrency. Throws
// DistillationFailed if the failed fraction exceeds options.failure_threshold.
DistilledDataset distill_corpus(LlmProvider& provider, const std::vector<Document>& docs,
                                const DistillOptions& options = {});

struct RatioHistogram {
    std::vector<double> bin_edges;  // counts.size() + 1 ascending edges
    std::vector<std::size_t> counts;
    double mean = 0.0;
    std::size_t n = 0;
};

// Fixed-width bins anchored at 1.0 (extended downward only if some ratio is
// below 1). Throws EmptyDataset on empty input.
RatioHistogram ratio_histogram(const std::vector<double>& ratios, double bin_width);
RatioHistogram ratio_histogram(const DistilledDataset& dataset, double bin_width);

// JSON-lines I/O: {"doc_id","chunk_idx","instruction","original","compressed","ratio"}.
void write_pairs_jsonl(std::ostream& out, const std::vector<DistilledPair>& pairs);
std::vector<DistilledPair> read_pairs_jsonl(std::istream& in);

// Corpus input: {"doc_id","text","instruction"?} per line.
std::vector<Document> read_corpus_jsonl(std::istream& in);

}  // namespace efpc
