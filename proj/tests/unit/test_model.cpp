// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "efpc/errors.hpp"
#include "efpc/model.hpp"
#include "support/oracles.hpp"

using namespace efpc;

namespace {

ModelConfig tiny_config(std::size_t vocab) {
    ModelConfig c;
    c.vocab_size = vocab;
    c.embed_dim = 4;
    c.num_layers = 1;
    c.num_heads = 2;
    c.ffn_dim = 6;
    c.max_seq_len = 8;
    c.seed = 11;
    return c;
}

TokenizedExample window(std::vector<std::int32_t> ids, std::vector<int> labels, std::size_t boundary) {
    return TokenizedExample{std::move(ids), std::move(labels), boundary};
}

}  // namespace

TEST_CASE("vocabulary") {
    const std::vector<LabeledExample> ds = {build_example("", "a b a", {1, 0, 1})};
    const Vocab v = build_vocab(ds);
    CHECK(v.size() == 5);
    CHECK(v.word_of(Vocab::kPad) == "<pad>");
    CHECK(v.word_of(Vocab::kSep) == "<sep>");
    CHECK(v.word_of(3) == "a");
    CHECK(v.id_of("A,") == 3);
    CHECK(v.id_of("never-seen") == Vocab::kUnk);
    CHECK(v.id_of("<sep>") == Vocab::kUnk);
    CHECK(build_vocab(ds) == v);
    CHECK_THROWS_AS(build_vocab({}), EmptyDataset);
}

TEST_CASE("config invariants") {
    auto c = tiny_config(10);
    CHECK_NOTHROW(c.validate());
    c.num_heads = 3;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = tiny_config(2);
    CHECK_THROWS_AS(c.validate(), InvalidArgument);

    TrainConfig t;
    t.epochs = 0;
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
}

TEST_CASE("tokenize_windows") {
    const std::vector<LabeledExample> ds = {build_example("why", "a b c d e", {1, 0, 1, 0, 1})};
    const Vocab v = build_vocab(ds);
    const auto w = tokenize_windows(v, ds[0], true, 5);
    REQUIRE(w.size() == 2);
    CHECK(w[0].boundary == 2);
    CHECK(w[0].token_ids[1] == Vocab::kSep);
    CHECK(w[0].original_len() == 3);
    CHECK(w[1].original_len() == 2);
    CHECK(w[1].token_ids[0] == v.id_of("why"));
    CHECK(w[1].labels == std::vector<int>{0, 1});

    const auto blind = tokenize_windows(v, ds[0], false, 5);
    REQUIRE(blind.size() == 1);
    CHECK(blind[0].boundary == 0);
    CHECK(blind[0].instruction_len() == 0);

    CHECK_THROWS_AS(tokenize_windows(v, ds[0], true, 2), InstructionTooLong);
}

TEST_CASE("encoder shape and position sensitivity") {
    const auto p = init_params(tiny_config(8));
    const std::vector<std::int32_t> ids = {3, 4, 5, 6};
    const Matrix h = encode(p, ids);
    CHECK(h.rows() == 4);
    CHECK(h.cols() == 4);
    CHECK(encode(p, ids) == h);
    const std::vector<std::int32_t> swapped = {4, 3, 5, 6};
    CHECK_FALSE(encode(p, swapped) == h);
    const std::vector<std::int32_t> too_long(9, 3);
    CHECK_THROWS_AS(encode(p, too_long), SequenceTooLong);
}

TEST_CASE("classifier head") {
    auto p = init_params(tiny_config(8));
    const Matrix h = encode(p, std::vector<std::int32_t>{3, 4});
    for (const auto& pp : classify(p, h)) CHECK(pp.preserve + pp.discard == doctest::Approx(1.0));

    p.classifier_w.setZero();
    p.classifier_b.setZero();
    for (const auto& pp : classify(p, h)) {
        CHECK(pp.preserve == 0.5);
        CHECK(pp.discard == 0.5);
    }
    p.classifier_b(0) = std::log(3.0);
    for (const auto& pp : classify(p, h)) {
        CHECK(pp.preserve == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(pp.discard == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("loss functions") {
    const std::vector<ProbPair> perfect = {{1.0, 0.0}, {0.0, 1.0}};
    CHECK(loss_agnostic(perfect, std::vector<int>{1, 0}) == doctest::Approx(0.0).epsilon(1e-9));

    const std::vector<ProbPair> uniform = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    CHECK(loss_agnostic(uniform, std::vector<int>{1, 0, 1}) == doctest::Approx(std::log(2.0)));

    const std::vector<ProbPair> two = {{0.75, 0.25}, {0.25, 0.75}};
    CHECK(loss_agnostic(two, std::vector<int>{1, 0}) == doctest::Approx(-(std::log(0.75) + std::log(0.75)) / 2));
    CHECK(loss_agnostic(two, std::vector<int>{1, 0}) == doctest::Approx(0.287682).epsilon(1e-6));

    CHECK(loss_drop(two, std::vector<int>{1, 0}, 0) == loss_agnostic(two, std::vector<int>{1, 0}));
    CHECK(loss_mask(two, std::vector<int>{1, 0}, 0) == loss_agnostic(two, std::vector<int>{1, 0}));

    const std::vector<ProbPair> drop_perfect = {{0.0, 1.0}, {1.0, 0.0}};
    CHECK(loss_drop(drop_perfect, std::vector<int>{1}, 1) == doctest::Approx(0.0).epsilon(1e-9));
    const std::vector<ProbPair> drop_uniform = {{0.5, 0.5}, {0.5, 0.5}};
    CHECK(loss_drop(drop_uniform, std::vector<int>{1}, 1) == doctest::Approx(std::log(2.0)));

    for (std::size_t m : {1u, 3u}) {
        std::vector<ProbPair> probs(m, ProbPair{0.123, 0.877});
        probs.push_back({0.75, 0.25});
        CHECK(loss_mask(probs, std::vector<int>{1}, m) == doctest::Approx(-std::log(0.75)));
    }

    CHECK_THROWS_AS(loss_agnostic(two, std::vector<int>{1}), LengthMismatch);
    CHECK_THROWS_AS(loss_mask(two, std::vector<int>{1, 0}, 1), LengthMismatch);
    CHECK(cross_entropy({0.0, 1.0}, 1) == doctest::Approx(-std::log(kProbClamp)));
}

TEST_CASE("loss variant names") {
    for (auto v : {LossVariant::Agnostic, LossVariant::Drop, LossVariant::Mask})
        CHECK(parse_loss_variant(to_string(v)) == v);
    CHECK_THROWS_AS(parse_loss_variant("focal"), InvalidArgument);
}

TEST_CASE("analytic gradient matches finite differences on a tiny model") {
    const auto p = init_params(tiny_config(8));
    const auto with_instr = window({3, Vocab::kSep, 4, 5, 6, 7}, {1, 0, 1, 1}, 2);
    const auto plain = window({3, 4, 5, 6, 7}, {1, 0, 0, 1, 1}, 0);
    for (auto variant : {LossVariant::Agnostic, LossVariant::Drop, LossVariant::Mask}) {
        const auto& ex = variant == LossVariant::Agnostic ? plain : with_instr;
        const auto lg = backward(p, ex, variant);
        CHECK(lg.loss == doctest::Approx(example_loss(p, ex, variant)).epsilon(1e-14));
        const auto numeric =
            testing::numeric_gradient(p, [&](const ModelParams& q) { return example_loss(q, ex, variant); }, 1e-5);
        const auto cmp = testing::compare_gradients(testing::flatten(lg.grad), numeric, 1e-6);
        INFO("variant " << to_string(variant) << " worst index " << cmp.worst_index);
        CHECK(cmp.max_relative_error < 1e-4);
    }
    CHECK_THROWS_AS(example_loss(p, with_instr, LossVariant::Agnostic), InvalidArgument);
}

TEST_CASE("mask loss sends no gradient through instruction-position logits") {
    const auto p = init_params(tiny_config(8));
    const auto ex = window({3, 4, Vocab::kSep, 5, 6}, {1, 0}, 3);
    const auto lg = backward(p, ex, LossVariant::Mask);
    // dL/db = mean over scored positions of (p - onehot(y)); only the two
    // original positions may contribute.
    double expect_preserve = 0.0;
    for (std::size_t i = 3; i < 5; ++i) expect_preserve += (lg.probs[i].preserve - (ex.labels[i - 3] == 1)) / 2.0;
    CHECK(lg.grad.classifier_b(0) == doctest::Approx(expect_preserve).epsilon(1e-12));
    CHECK(lg.grad.classifier_b(1) == doctest::Approx(-expect_preserve).epsilon(1e-12));

    const auto drop = backward(p, ex, LossVariant::Drop);
    double expect_drop = 0.0;
    for (std::size_t i : {0u, 1u}) expect_drop += drop.probs[i].preserve / 4.0;
    for (std::size_t i = 3; i < 5; ++i) expect_drop += (drop.probs[i].preserve - (ex.labels[i - 3] == 1)) / 4.0;
    CHECK(drop.grad.classifier_b(0) == doctest::Approx(expect_drop).epsilon(1e-12));
}

TEST_CASE("clamped perfect predictions give a vanishing gradient") {
    auto p = init_params(tiny_config(8));
    p.classifier_w.setZero();
    p.classifier_b << 40.0, -40.0;
    const auto ex = window({3, 4, 5}, {1, 1, 1}, 0);
    const auto lg = backward(p, ex, LossVariant::Agnostic);
    double max_abs = 0.0;
    for (double g : testing::flatten(lg.grad)) max_abs = std::max(max_abs, std::abs(g));
    CHECK(max_abs < 1e-12);
}

TEST_CASE("adam step") {
    auto cfg = tiny_config(8);
    auto p = init_params(cfg);
    const auto before = p;
    auto state = AdamState::for_params(p);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    adam_step(p, ModelParams::zeros(cfg), state, tc);
    CHECK(testing::flatten(p) == testing::flatten(before));

    auto g = ModelParams::zeros(cfg);
    g.classifier_b(0) = 1.0;
    auto q = before;
    auto s2 = AdamState::for_params(q);
    adam_step(q, g, s2, tc);
    // m_hat = 1, v_hat = 1: the step is lr / (1 + eps).
    CHECK(before.classifier_b(0) - q.classifier_b(0) == doctest::Approx(1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(q.classifier_b(1) == before.classifier_b(1));

    auto wrong = ModelParams::zeros(tiny_config(9));
    CHECK_THROWS_AS(adam_step(q, wrong, s2, tc), ShapeMismatch);
}

TEST_CASE("initialization is seeded and float-exact") {
    const auto a = init_params(tiny_config(8));
    const auto b = init_params(tiny_config(8));
    CHECK(testing::flatten(a) == testing::flatten(b));
    auto c = tiny_config(8);
    c.seed = 12;
    CHECK_FALSE(testing::flatten(init_params(c)) == testing::flatten(a));
    for (double x : testing::flatten(a)) CHECK(static_cast<double>(static_cast<float>(x)) == x);
    CHECK(parameter_count(a) == testing::flatten(a).size());
}
