// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "efpc/compressor.hpp"
#include "efpc/errors.hpp"
#include "support/synthetic.hpp"

using namespace efpc;

namespace {

Model tiny_model(std::size_t max_seq_len = 8) {
    const auto ds = testing::filler_rule_corpus(10, 21);
    ModelConfig c;
    c.embed_dim = 4;
    c.num_layers = 1;
    c.num_heads = 1;
    c.ffn_dim = 8;
    c.max_seq_len = max_seq_len;
    c.seed = 2;
    return make_model(ds, c);
}

}  // namespace

TEST_CASE("target_keep_count") {
    CHECK(target_keep_count(4, 0.5) == 2);
    CHECK(target_keep_count(10, 0.05) == 1);
    CHECK(target_keep_count(5, 0.5) == 3);
    CHECK(target_keep_count(7, 1.0) == 7);
    CHECK(target_keep_count(10, 0.35) == 4);  // 3.5 up
    CHECK(target_keep_count(10, 0.34) == 3);
    CHECK(target_keep_count(1, 0.01) == 1);
    CHECK_THROWS_AS(target_keep_count(0, 0.5), InvalidArgument);
}

TEST_CASE("select_top") {
    CHECK(select_top({0.9, 0.1, 0.8, 0.2}, 2) == std::vector<std::size_t>{0, 2});
    CHECK(select_top({0.5, 0.5, 0.5, 0.5}, 2) == std::vector<std::size_t>{0, 1});
    CHECK(select_top({0.1, 0.3, 0.3, 0.2}, 1) == std::vector<std::size_t>{1});
    CHECK(select_top({0.1, 0.2}, 5) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("compress_scored keeps original order") {
    const auto seq = split_words("w0 w1 w2 w3");
    const auto r = compress_scored(seq, {0.9, 0.1, 0.8, 0.2}, 0.5);
    CHECK(r.kept_indices == std::vector<std::size_t>{0, 2});
    CHECK(r.kept_text() == "w0 w2");
    CHECK(r.achieved_inverse_ratio == 2.0);
    CHECK_THROWS_AS(compress_scored(seq, {0.5}, 0.5), LengthMismatch);
}

TEST_CASE("request validation") {
    CompressionRequest req{"", "a b", 0.5, 3};
    CHECK_THROWS_AS(req.validate(), ValidationError);
    req.unit_budget.reset();
    CHECK_NOTHROW(req.validate());
    req.keep_ratio = 0.0;
    CHECK_THROWS_AS(req.validate(), ValidationError);
    req.keep_ratio.reset();
    CHECK_THROWS_AS(req.validate(), ValidationError);
    req.unit_budget = 0;
    CHECK_THROWS_AS(req.validate(), ValidationError);
}

TEST_CASE("score_words windows long inputs") {
    const Model m = tiny_model(8);
    std::string text;
    for (int i = 0; i < 30; ++i) text += "w" + std::to_string(i % 9) + " ";
    const auto seq = split_words(text);
    const auto with_instr = score_words(m, "why the", seq);
    CHECK(with_instr.size() == 30);
    CHECK(score_words(m, "", seq).size() == 30);
    CHECK(score_words(m, "why the", seq) == with_instr);
    CHECK_THROWS_AS(score_words(m, "a b c d e f g", seq), InstructionTooLong);
}

TEST_CASE("compress and budgets") {
    const Model m = tiny_model();
    const std::string text = "the w1 of w2 and w3 in w4";
    const auto id = compress(m, {"", text, 1.0, std::nullopt});
    CHECK(id.kept_text() == text);
    CHECK(id.achieved_inverse_ratio == 1.0);

    const auto half = compress(m, {"w2?", text, std::nullopt, 4});
    CHECK(half.kept_indices.size() == 4);
    const auto over = compress(m, {"", text, std::nullopt, 100});
    CHECK(over.kept_indices.size() == 8);

    CHECK_THROWS_AS(compress(m, {"", "   ", 0.5, std::nullopt}), InvalidArgument);
}

TEST_CASE("compress_batch isolates failures") {
    const Model m = tiny_model();
    const std::vector<CompressionRequest> reqs = {
        {"", "w1 w2 w3", 0.5, std::nullopt},
        {"", "w1 w2 w3", 0.5, 2},
    };
    const auto out = compress_batch(m, reqs);
    REQUIRE(out.size() == 2);
    CHECK(out[0].ok());
    CHECK(out[0].result->kept_indices == compress(m, reqs[0]).kept_indices);
    CHECK_FALSE(out[1].ok());
    CHECK_FALSE(out[1].error.empty());
}

TEST_CASE("output record") {
    const auto r = compress_scored(split_words("a b c d"), {0.9, 0.1, 0.8, 0.2}, 0.5);
    CHECK(to_json(r).dump() ==
          R"({"kept_text":"a c","kept_indices":[0,2],"achieved_inverse_ratio":2.0,"n_original":4,"n_kept":2})");
}
