// SPDX-License-Identifier: Apache-2.0
#include "efpc/text.hpp"

#include "efpc/errors.hpp"

namespace efpc {

namespace {

struct Decoded {
    char32_t cp;
    std::size_t len;
};

// Lenient UTF-8 decode: malformed bytes come back as a single U+FFFD-like unit
// of length 1 so callers never stall.
Decoded decode_at(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
    } else if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1), c2 = cont(2);
        if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    } else if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0)
            return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
    return {0xFFFD, 1};
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

struct Range {
    char32_t lo, hi;
};

// Code points in general categories Pc/Pd/Ps/Pe/Pi/Pf/Po for the blocks that
// show up in ordinary prose.
constexpr Range kPunctuation[] = {
    {0x21, 0x23},     {0x25, 0x2A},     {0x2C, 0x2F},     {0x3A, 0x3B},     {0x3F, 0x40},
    {0x5B, 0x5D},     {0x5F, 0x5F},     {0x7B, 0x7B},     {0x7D, 0x7D},     {0xA1, 0xA1},
    {0xA7, 0xA7},     {0xAB, 0xAB},     {0xB6, 0xB7},     {0xBB, 0xBB},     {0xBF, 0xBF},
    {0x37E, 0x37E},   {0x387, 0x387},   {0x55A, 0x55F},   {0x589, 0x58A},   {0x5BE, 0x5BE},
    {0x5C0, 0x5C0},   {0x5C3, 0x5C3},   {0x5C6, 0x5C6},   {0x5F3, 0x5F4},   {0x609, 0x60A},
    {0x60C, 0x60D},   {0x61B, 0x61B},   {0x61D, 0x61F},   {0x66A, 0x66D},   {0x6D4, 0x6D4},
    {0x964, 0x965},   {0x970, 0x970},   {0xE4F, 0xE4F},   {0xE5A, 0xE5B},   {0x2010, 0x2027},
    {0x2030, 0x2043}, {0x2045, 0x2051}, {0x2053, 0x205E}, {0x207D, 0x207E}, {0x208D, 0x208E},
    {0x2308, 0x230B}, {0x2329, 0x232A}, {0x2E00, 0x2E2E}, {0x2E30, 0x2E4F}, {0x3001, 0x3003},
    {0x3008, 0x3011}, {0x3014, 0x301F}, {0x3030, 0x3030}, {0x303D, 0x303D}, {0x30A0, 0x30A0},
    {0x30FB, 0x30FB}, {0xFE10, 0xFE19}, {0xFE30, 0xFE52}, {0xFE54, 0xFE61}, {0xFE63, 0xFE63},
    {0xFE68, 0xFE68}, {0xFE6A, 0xFE6B}, {0xFF01, 0xFF03}, {0xFF05, 0xFF0A}, {0xFF0C, 0xFF0F},
    {0xFF1A, 0xFF1B}, {0xFF1F, 0xFF20}, {0xFF3B, 0xFF3D}, {0xFF3F, 0xFF3F}, {0xFF5B, 0xFF5B},
    {0xFF5D, 0xFF5D}, {0xFF5F, 0xFF65},
};

bool is_punctuation(char32_t cp) {
    for (const auto& r : kPunctuation) {
        if (cp < r.lo) return false;
        if (cp <= r.hi) return true;
    }
    return false;
}

// Simple (1:1) case folding for Latin, Greek and Cyrillic.
char32_t fold_case(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp < 0x80) return cp;
    if ((cp >= 0xC0 && cp <= 0xDE) && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x17F) {
        if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
        if (cp == 0x178) return 0xFF;
        const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

}  // namespace

WordSeq split_words(std::string_view text) {
    WordSeq seq;
    seq.source_len = text.size();
    std::size_t i = 0;
    std::size_t word_start = 0;
    bool in_word = false;
    while (i < text.size()) {
        const auto d = decode_at(text, i);
        if (is_space(d.cp)) {
            if (in_word) {
                seq.words.emplace_back(text.substr(word_start, i - word_start));
                seq.offsets.push_back({word_start, i});
                in_word = false;
            }
        } else if (!in_word) {
            word_start = i;
            in_word = true;
        }
        i += d.len;
    }
    if (in_word) {
        seq.words.emplace_back(text.substr(word_start));
        seq.offsets.push_back({word_start, text.size()});
    }
    return seq;
}

std::size_t count_units(std::string_view text) { return split_words(text).size(); }

bool is_sentence_end(std::string_view word) {
    if (word.empty()) return false;
    const char c = word.back();
    return c == '.' || c == '!' || c == '?';
}

std::vector<Chunk> chunk_document(std::string_view text, std::size_t max_units) {
    if (max_units == 0) throw InvalidArgument("chunk_document: max_units must be >= 1");
    const WordSeq seq = split_words(text);
    std::vector<Chunk> chunks;

    auto emit = [&](std::size_t first, std::size_t last, bool forced) {
        Chunk c;
        c.span = {seq.offsets[first].begin, seq.offsets[last - 1].end};
        c.text = std::string(text.substr(c.span.begin, c.span.size()));
        c.unit_count = last - first;
        c.ends_with_period = is_sentence_end(seq.words[last - 1]);
        c.force_split = forced;
        chunks.push_back(std::move(c));
    };

    std::size_t chunk_first = 0;  // first word of the chunk being packed
    std::size_t chunk_len = 0;
    std::size_t sent_first = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const bool last_word = i + 1 == seq.size();
        if (!is_sentence_end(seq.words[i]) && !last_word) continue;

        const std::size_t sent_len = i + 1 - sent_first;
        if (sent_len > max_units) {
            if (chunk_len > 0) emit(chunk_first, chunk_first + chunk_len, false);
            for (std::size_t p = sent_first; p <= i; p += max_units) {
                emit(p, std::min(p + max_units, i + 1), true);
            }
            chunk_len = 0;
            chunk_first = i + 1;
        } else if (chunk_len + sent_len > max_units) {
            emit(chunk_first, chunk_first + chunk_len, false);
            chunk_first = sent_first;
            chunk_len = sent_len;
        } else {
            if (chunk_len == 0) chunk_first = sent_first;
            chunk_len += sent_len;
        }
        sent_first = i + 1;
    }
    if (chunk_len > 0) emit(chunk_first, chunk_first + chunk_len, false);
    return chunks;
}

std::string normalize_word(std::string_view word) {
    std::vector<char32_t> cps;
    cps.reserve(word.size());
    for (std::size_t i = 0; i < word.size();) {
        const auto d = decode_at(word, i);
        cps.push_back(d.cp);
        i += d.len;
    }
    std::size_t lo = 0, hi = cps.size();
    while (lo < hi && is_punctuation(cps[lo])) ++lo;
    while (hi > lo && is_punctuation(cps[hi - 1])) --hi;
    std::string out;
    out.reserve(word.size());
    for (std::size_t k = lo; k < hi; ++k) encode_utf8(fold_case(cps[k]), out);
    return out;
}

std::string lowercase(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        const auto d = decode_at(text, i);
        encode_utf8(fold_case(d.cp), out);
        i += d.len;
    }
    return out;
}

std::string join_words(const std::vector<std::string>& words, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += sep;
        out += words[i];
    }
    return out;
}

}  // namespace efpc
