// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "efpc/errors.hpp"
#include "efpc/eval.hpp"
#include "support/metric_fixtures.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace efpc;

namespace {

class EchoGoldProvider : public LlmProvider {
public:
    explicit EchoGoldProvider(std::vector<std::string> answers, int fail_at = -1)
        : answers_(std::move(answers)), fail_at_(fail_at) {}
    std::string complete(const MessageList&) override {
        const int i = next_++;
        if (i == fail_at_) throw TransportError("unreachable");
        return answers_.at(static_cast<std::size_t>(i));
    }
    std::string provider_id() const override { return "echo"; }

private:
    std::vector<std::string> answers_;
    int fail_at_;
    int next_ = 0;
};

std::vector<DownstreamItem> qa_items() {
    std::vector<DownstreamItem> items;
    const std::vector<std::pair<std::string, std::string>> qa = {
        {"Who won?", "the red team"}, {"Where?", "paris"}, {"When?", "in june"}};
    for (const auto& [q, a] : qa) {
        DownstreamItem item;
        item.compression = compress_scored(split_words("some context words here"), {0.4, 0.3, 0.2, 0.1}, 0.5);
        item.record.question = q;
        item.record.gold_answers = {a, "unused alternative"};
        items.push_back(item);
    }
    return items;
}

}  // namespace

TEST_CASE("token_f1 fixtures") {
    for (const auto& f : testing::token_f1_fixtures()) {
        INFO(f.a << " | " << f.b);
        CHECK(token_f1(f.a, f.b) == doctest::Approx(f.expected).epsilon(1e-12));
        CHECK(token_f1(f.b, f.a) == doctest::Approx(f.expected).epsilon(1e-12));
    }
    CHECK(token_f1_max("paris", {"london", "Paris"}) == 1.0);
}

TEST_CASE("rouge and bleu fixtures") {
    for (const auto& f : testing::rouge_l_fixtures()) {
        const auto r = rouge_l(f.candidate, f.reference);
        INFO(f.candidate << " | " << f.reference);
        CHECK(r.f1 == doctest::Approx(f.f1).epsilon(1e-12));
    }
    for (const auto& f : testing::bleu_fixtures()) {
        INFO(f.candidate);
        CHECK(bleu(f.candidate, f.references, f.max_n) == doctest::Approx(f.expected).epsilon(1e-12));
    }
    CHECK(rouge_n("a b", "a b", 5).f1 == 0.0);
    CHECK_THROWS_AS(rouge_n("a", "a", 0), InvalidArgument);
    CHECK_THROWS_AS(bleu("a", {}, 4), InvalidArgument);
}

TEST_CASE("rouge_l agrees with a brute-force LCS") {
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::string> a, b;
        for (std::size_t i = rng.below(7); i > 0; --i) a.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
        for (std::size_t i = 1 + rng.below(7); i > 0; --i) b.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
        const auto r = rouge_l(join_words(a), join_words(b));
        const double lcs = static_cast<double>(testing::lcs_length(a, b));
        if (a.empty()) {
            CHECK(r.f1 == 0.0);
            continue;
        }
        CHECK(r.precision == lcs / static_cast<double>(a.size()));
        CHECK(r.recall == lcs / static_cast<double>(b.size()));
        CHECK((r.f1 == 1.0) == (a == b));
    }
}

TEST_CASE("downstream evaluation") {
    auto items = qa_items();
    EchoGoldProvider gold({"the red team", "Paris", "in june"});
    const auto report = evaluate_downstream(gold, items);
    CHECK(report.mean("qa_f1") == 1.0);
    CHECK(report.n_scored() == 3);
    CHECK(report.mean("kept_units") == 2.0);
    CHECK(report.mean("inverse_ratio") == 2.0);
    CHECK(items[1].record.predicted == "Paris");

    auto empty_items = qa_items();
    EchoGoldProvider empty({"", "", ""});
    CHECK(evaluate_downstream(empty, empty_items).mean("qa_f1") == 0.0);

    auto mixed_items = qa_items();
    EchoGoldProvider mixed({"the red team", "x", "in june"}, 1);
    const auto m = evaluate_downstream(mixed, mixed_items);
    CHECK(m.n_items == 3);
    CHECK(m.n_scored() == 2);
    CHECK(m.n_failed == 1);
    CHECK(m.mean("qa_f1") == 1.0);
}

TEST_CASE("extractive mock target") {
    ExtractiveQaMockProvider qa;
    const auto msgs = build_qa_request("The budget passed. Alice chaired the council meeting.", "Who chaired the meeting?");
    CHECK(qa.complete(msgs) == "alice council");
    CHECK(qa.complete({ChatMessage{"user", "no template"}}).empty());
}

TEST_CASE("report means are arithmetic means") {
    MetricsReport r;
    r.per_example = {{{"x", 0.1}}, {{"x", 0.2}, {"y", 1.0}}, {{"x", 0.6}}};
    r.finalize();
    CHECK(r.mean("x") == doctest::Approx((0.1 + 0.2 + 0.6) / 3).epsilon(1e-15));
    CHECK(r.mean("y") == 1.0);
    CHECK_THROWS_AS(r.mean("z"), InvalidArgument);

    const auto j = report_to_json(r, "run-1", "abc");
    CHECK(j.dump().rfind(R"({"run_id":"run-1","config_digest":"abc","metrics":{"x":)", 0) == 0);
    CHECK(j["per_example"].size() == 3);
}

TEST_CASE("sweep boundaries and determinism") {
    const auto ds = testing::parity_corpus(20, 31);
    ModelConfig c;
    c.embed_dim = 8;
    c.num_layers = 1;
    c.num_heads = 2;
    c.ffn_dim = 8;
    c.max_seq_len = 20;
    const Model base = make_model(ds, c);
    TrainConfig t;
    t.learning_rate = 1e-3;
    t.epochs = 1;
    t.batch_size = 4;
    const auto eval_set = testing::parity_corpus(6, 32);

    const auto zero = data_efficiency_sweep(base, ds, {0.0}, eval_set, t);
    REQUIRE(zero.cells.size() == 1);
    CHECK(zero.cells[0].n_extra == 0);
    CHECK(zero.cells[0].report.means == evaluate_labeled(base, eval_set, true).means);

    const auto a = data_efficiency_sweep(base, ds, {0.0, 0.5, 1.0}, eval_set, t);
    const auto b = data_efficiency_sweep(base, ds, {0.0, 0.5, 1.0}, eval_set, t);
    REQUIRE(a.cells.size() == 3);
    CHECK(a.cells[1].n_extra == 10);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.cells[i].report.per_example == b.cells[i].report.per_example);
    CHECK(sweep_summary_tsv(a) == sweep_summary_tsv(b));
    CHECK(sweep_summary_tsv(a).rfind("fraction\tn_extra\t", 0) == 0);

    CHECK_THROWS_AS(data_efficiency_sweep(base, ds, {0.5, 0.5}, eval_set, t), InvalidArgument);
    CHECK_THROWS_AS(data_efficiency_sweep(base, ds, {0.0, 1.5}, eval_set, t), InvalidArgument);
    CHECK_THROWS_AS(data_efficiency_sweep(base, {}, {0.0, 0.5}, eval_set, t), InsufficientData);
}
