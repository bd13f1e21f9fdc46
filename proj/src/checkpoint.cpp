// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <zlib.h>

#include "efpc/errors.hpp"
#include "efpc/model.hpp"

namespace efpc {

namespace {

constexpr char kMagic[8] = {'E', 'F', 'P', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::span<const std::uint8_t> take(std::size_t n) {
        if (n > bytes_.size() - pos_) throw ChecksumMismatch("checkpoint truncated");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::uint64_t u64() {
        const auto s = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | s[static_cast<std::size_t>(i)];
        return v;
    }

    std::uint32_t u32() {
        const auto s = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | s[static_cast<std::size_t>(i)];
        return v;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in slices.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["vocab_size"] = c.vocab_size;
    j["embed_dim"] = c.embed_dim;
    j["num_layers"] = c.num_layers;
    j["num_heads"] = c.num_heads;
    j["ffn_dim"] = c.ffn_dim;
    j["max_seq_len"] = c.max_seq_len;
    j["seed"] = c.seed;
    return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
    nlohmann::ordered_json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["model_config"] = config_to_json(model.params.config);
    header["vocab"] = model.vocab.words();
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u64(out, header_text.size());
    out.insert(out.end(), header_text.begin(), header_text.end());
    for (const auto& t : tensors(model.params)) {
        put_u64(out, t.size());
        for (double x : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
    put_u32(out, crc32_of(out));
    return out;
}

Model deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic) + 8 + 4) throw ChecksumMismatch("checkpoint truncated");
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    if (crc32_of(body) != tail.u32()) throw ChecksumMismatch("checkpoint CRC32 does not match its contents");

    Reader r(body);
    const auto magic = r.take(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) throw IoError("not an EFPC checkpoint (bad magic)");

    const std::uint64_t header_len = r.u64();
    const auto header_bytes = r.take(static_cast<std::size_t>(header_len));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    const auto version = header.value("format_version", 0u);
    if (version != kCheckpointFormatVersion) {
        throw FormatVersionMismatch("checkpoint format_version " + std::to_string(version) +
                                    " is not supported (this build reads version " +
                                    std::to_string(kCheckpointFormatVersion) + ")");
    }

    Model model;
    try {
        const ModelConfig config = config_from_json(header.at("model_config"));
        config.validate();
        model.vocab = Vocab(header.at("vocab").get<std::vector<std::string>>());
        if (model.vocab.size() != config.vocab_size)
            throw IoError("checkpoint vocabulary size disagrees with model_config");
        model.params = ModelParams::zeros(config);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint header is incomplete: ") + e.what());
    }

    for (auto& t : tensors(model.params)) {
        const std::uint64_t n = r.u64();
        if (n != t.size()) {
            throw ShapeMismatch("tensor " + t.name + ": checkpoint has " + std::to_string(n) + " values, expected " +
                                std::to_string(t.size()));
        }
        for (double& x : t.values()) x = static_cast<double>(std::bit_cast<float>(r.u32()));
    }
    if (r.remaining() != 0) throw IoError("trailing bytes after the last tensor");
    return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace efpc
