// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "efpc/errors.hpp"
#include "efpc/model.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace efpc;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.embed_dim = 8;
    c.num_layers = 1;
    c.num_heads = 2;
    c.ffn_dim = 16;
    c.max_seq_len = 24;
    c.seed = 5;
    return c;
}

TrainConfig fast_train(std::size_t epochs) {
    TrainConfig t;
    t.learning_rate = 5e-3;
    t.batch_size = 8;
    t.epochs = epochs;
    t.seed = 9;
    return t;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("efpc_unit_" + name);
}

}  // namespace

TEST_CASE("training is deterministic and reduces the loss") {
    const auto ds = testing::filler_rule_corpus(40, 1);
    Model a = make_model(ds, small_config());
    Model b = make_model(ds, small_config());
    const double before = dataset_loss(a, ds, LossVariant::Mask);
    const auto ra = train(a, ds, fast_train(3));
    const auto rb = train(b, ds, fast_train(3));
    CHECK(testing::flatten(a.params) == testing::flatten(b.params));
    REQUIRE(ra.epochs.size() == 3);
    CHECK(ra.epochs[2].mean_loss == rb.epochs[2].mean_loss);
    CHECK(dataset_loss(a, ds, LossVariant::Mask) < before);
    for (double x : testing::flatten(a.params)) REQUIRE(static_cast<double>(static_cast<float>(x)) == x);
}

TEST_CASE("incremental training on extra examples lowers their loss") {
    const auto base_ds = testing::filler_rule_corpus(30, 2);
    Model m = make_model(base_ds, small_config());
    train(m, base_ds, fast_train(2));
    const auto path = temp_file("incremental.ckpt");
    save_checkpoint(m, path);

    Model resumed = load_checkpoint(path);
    const auto extra = testing::filler_rule_corpus(10, 3);
    const double before = dataset_loss(resumed, extra, LossVariant::Mask);
    train(resumed, extra, fast_train(1));
    CHECK(dataset_loss(resumed, extra, LossVariant::Mask) < before);
    std::filesystem::remove(path);
}

TEST_CASE("degenerate examples are skipped unless requested") {
    auto ds = testing::filler_rule_corpus(5, 4);
    ds.push_back(build_example("", "the of", {0, 0}));
    Model m = make_model(ds, small_config());
    CHECK_NOTHROW(train(m, ds, fast_train(1)));
    std::vector<LabeledExample> only_bad = {build_example("", "the of", {0, 0})};
    CHECK_THROWS_AS(train(m, only_bad, fast_train(1)), EmptyDataset);
    auto cfg = fast_train(1);
    cfg.include_degenerate = true;
    CHECK_NOTHROW(train(m, only_bad, cfg));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const auto ds = testing::parity_corpus(10, 6);
    Model m = make_model(ds, small_config());
    train(m, ds, fast_train(1));
    const auto bytes = serialize_checkpoint(m);
    const Model back = deserialize_checkpoint(bytes);
    CHECK(back.vocab == m.vocab);
    CHECK(back.params.config == m.params.config);
    CHECK(testing::flatten(back.params) == testing::flatten(m.params));
    CHECK(serialize_checkpoint(back) == bytes);

    const auto path = temp_file("roundtrip.ckpt");
    save_checkpoint(m, path);
    CHECK(testing::flatten(load_checkpoint(path).params) == testing::flatten(m.params));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint corruption is detected") {
    const auto ds = testing::filler_rule_corpus(3, 7);
    const Model m = make_model(ds, small_config());
    const auto bytes = serialize_checkpoint(m);

    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() / 2));
    CHECK_THROWS_AS(deserialize_checkpoint(truncated), ChecksumMismatch);
    CHECK_THROWS_AS(deserialize_checkpoint(std::vector<std::uint8_t>(5, 0)), ChecksumMismatch);

    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(deserialize_checkpoint(flipped), ChecksumMismatch);

    CHECK_THROWS_AS(load_checkpoint(temp_file("does-not-exist.ckpt")), IoError);
}

TEST_CASE("older checkpoint format is refused with an explicit message") {
    const auto ds = testing::filler_rule_corpus(3, 8);
    const Model m = make_model(ds, small_config());
    auto bytes = serialize_checkpoint(m);
    const std::string needle = "\"format_version\":1";
    std::string as_text(bytes.begin(), bytes.end());
    const auto pos = as_text.find(needle);
    REQUIRE(pos != std::string::npos);
    bytes[pos + needle.size() - 1] = '0';
    // Re-seal so that only the version is wrong.
    bytes.resize(bytes.size() - 4);
    // Bitwise reflected CRC-32, polynomial 0xEDB88320.
    std::uint32_t crc = 0xFFFFFFFFu;
    for (auto byte : bytes) {
        crc ^= byte;
        for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
    }
    crc ^= 0xFFFFFFFFu;
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    try {
        deserialize_checkpoint(bytes);
        FAIL("expected FormatVersionMismatch");
    } catch (const FormatVersionMismatch& e) {
        CHECK(std::string(e.what()).find("format_version 0") != std::string::npos);
    }
}
