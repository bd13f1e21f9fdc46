// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace efpc {

// Half-open byte range [begin, end) into some source string.
struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const ByteSpan&) const = default;
};

// A document decomposed into whitespace-delimited words. Every word keeps the
// byte range it came from so callers can slice the source back out.
struct WordSeq {
    std::vector<std::string> words;
    std::vector<ByteSpan> offsets;
    std::size_t source_len = 0;

    std::size_t size() const { return words.size(); }
    bool empty() const { return words.empty(); }
};

struct Chunk {
    std::string text;
    std::size_t unit_count = 0;
    bool ends_with_period = false;
    // Set when the chunk holds a slice of a sentence longer than max_units.
    bool force_split = false;
    ByteSpan span;
};

// Words are maximal runs of non-whitespace (ASCII and Unicode space
// separators). Punctuation stays attached to its word.
WordSeq split_words(std::string_view text);

inline std::size_t count_units(const WordSeq& seq) { return seq.size(); }
std::size_t count_units(std::string_view text);

// True when the word closes a sentence ('.', '!' or '?' as its last byte).
bool is_sentence_end(std::string_view word);

// Greedy packing of whole sentences into chunks of at most max_units words.
// A sentence longer than max_units is cut into max_units-sized pieces, each
// flagged force_split. Throws InvalidArgument if max_units == 0.
std::vector<Chunk> chunk_document(std::string_view text, std::size_t max_units);

// Lowercase (simple case folding) with leading/trailing Unicode punctuation
// removed. Only used for matching; never for output.
std::string normalize_word(std::string_view word);

// Simple case folding of every code point; nothing is stripped.
std::string lowercase(std::string_view text);

std::string join_words(const std::vector<std::string>& words, std::string_view sep = " ");

}  // namespace efpc
