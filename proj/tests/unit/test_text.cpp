// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "efpc/errors.hpp"
#include "efpc/text.hpp"

using namespace efpc;

TEST_CASE("split_words on whitespace runs") {
    CHECK(split_words("").empty());

    const auto s = split_words("cat sat.");
    REQUIRE(s.size() == 2);
    CHECK(s.words[0] == "cat");
    CHECK(s.words[1] == "sat.");
    CHECK(s.offsets[0] == ByteSpan{0, 3});
    CHECK(s.offsets[1] == ByteSpan{4, 8});
    CHECK(s.source_len == 8);

    const auto t = split_words("a  b\tc");
    CHECK(t.words == std::vector<std::string>{"a", "b", "c"});

    // U+3000 ideographic space and U+00A0 no-break space separate words.
    const auto u = split_words("x　y z");
    CHECK(u.words == std::vector<std::string>{"x", "y", "z"});
    CHECK(u.offsets[1] == ByteSpan{4, 5});
}

TEST_CASE("offsets slice the source back out") {
    const std::string text = "  The council, after debate, approved it.  ";
    const auto s = split_words(text);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(text.substr(s.offsets[i].begin, s.offsets[i].size()) == s.words[i]);
}

TEST_CASE("count_units") {
    CHECK(count_units(WordSeq{}) == 0);
    CHECK(count_units("cat sat.") == 2);
    std::string big;
    for (int i = 0; i < 512; ++i) big += "w" + std::to_string(i) + (i % 7 == 6 ? ".\n" : " ");
    CHECK(count_units(big) == 512);
}

TEST_CASE("chunk_document packs whole sentences") {
    const auto c = chunk_document("w1 w2. w3 w4. w5.", 4);
    REQUIRE(c.size() == 2);
    CHECK(c[0].text == "w1 w2. w3 w4.");
    CHECK(c[0].unit_count == 4);
    CHECK(c[0].ends_with_period);
    CHECK_FALSE(c[0].force_split);
    CHECK(c[1].text == "w5.");

    const auto one = chunk_document("w1 w2 w3", 10);
    REQUIRE(one.size() == 1);
    CHECK_FALSE(one[0].ends_with_period);

    const auto forced = chunk_document("a b c d e f", 4);
    REQUIRE(forced.size() == 2);
    CHECK(forced[0].unit_count == 4);
    CHECK(forced[1].unit_count == 2);
    CHECK(forced[0].force_split);
    CHECK(forced[1].force_split);

    CHECK(chunk_document("", 4).empty());
    CHECK_THROWS_AS(chunk_document("a", 0), InvalidArgument);
}

TEST_CASE("chunks cover every word exactly once and respect the limit") {
    const std::string text =
        "One two three. Four five six seven eight nine ten eleven! Twelve? Thirteen fourteen. "
        "Fifteen sixteen seventeen eighteen nineteen twenty twentyone twentytwo";
    for (std::size_t max_units = 1; max_units <= 12; ++max_units) {
        const auto chunks = chunk_document(text, max_units);
        std::vector<std::string> rejoined;
        for (const auto& c : chunks) {
            CHECK(c.unit_count <= max_units);
            CHECK(c.unit_count == count_units(c.text));
            CHECK(text.substr(c.span.begin, c.span.size()) == c.text);
            for (auto& w : split_words(c.text).words) rejoined.push_back(w);
        }
        CHECK(rejoined == split_words(text).words);
    }
}

TEST_CASE("normalize_word") {
    CHECK(normalize_word("The") == "the");
    CHECK(normalize_word("budget,") == "budget");
    CHECK(normalize_word("\u2014") == "");
    CHECK(normalize_word("«Quoted»") == "quoted");
    CHECK(normalize_word("don't") == "don't");
    CHECK(normalize_word("ÉCOLE") == "école");
    CHECK(normalize_word("ΑΒΓ") == "αβγ");
    CHECK(normalize_word("МИР.") == "мир");
    CHECK(normalize_word("...") == "");
}

TEST_CASE("lowercase keeps punctuation") {
    CHECK(lowercase("Hello, World!") == "hello, world!");
    CHECK(lowercase("ÉTÉ") == "été");
}

TEST_CASE("join_words") {
    CHECK(join_words({}) == "");
    CHECK(join_words({"a", "b", "c"}) == "a b c");
    CHECK(join_words({"a", "b"}, "|") == "a|b");
}
