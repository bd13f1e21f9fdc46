// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <algorithm>

#include <yaml-cpp/yaml.h>

#include "efpc/errors.hpp"

namespace efpc::cli {

namespace {

class Section {
public:
    Section(const YAML::Node& node, std::string prefix, std::string file)
        : node_(node), prefix_(std::move(prefix)), file_(std::move(file)) {}

    template <typename T>
    void read(const std::string& key, T& target) {
        seen_.push_back(key);
        const YAML::Node v = node_[key];
        if (!v) return;
        try {
            target = v.as<T>();
        } catch (const YAML::Exception&) {
            fail(v, key, "has the wrong type");
        }
    }

    template <typename T>
    void read(const std::string& key, std::optional<T>& target) {
        T value{};
        seen_.push_back(key);
        const YAML::Node v = node_[key];
        if (!v || v.IsNull()) return;
        try {
            value = v.as<T>();
        } catch (const YAML::Exception&) {
            fail(v, key, "has the wrong type");
        }
        target = value;
    }

    void read_loss(const std::string& key, LossVariant& target) {
        std::string name;
        const bool present = static_cast<bool>(node_[key]);
        read(key, name);
        if (!present) return;
        try {
            target = parse_loss_variant(name);
        } catch (const InvalidArgument&) {
            fail(node_[key], key, "must be one of agnostic, drop, mask");
        }
    }

    Section child(const std::string& key) {
        seen_.push_back(key);
        const YAML::Node v = node_[key];
        if (v && !v.IsMap() && !v.IsNull()) fail(v, key, "must be a mapping");
        return Section(v && v.IsMap() ? v : YAML::Node(YAML::NodeType::Map), prefix_ + key + ".", file_);
    }

    // Any key that was never read is a typo or an unsupported option.
    void reject_unknown() const {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) fail(kv.first, key, "is not a known option");
        }
    }

private:
    [[noreturn]] void fail(const YAML::Node& at, const std::string& key, const std::string& what) const {
        throw ParseError(file_ + ":" + std::to_string(at.Mark().line + 1) + ": field '" + prefix_ + key + "' " + what);
    }

    YAML::Node node_;
    std::string prefix_;
    std::string file_;
    std::vector<std::string> seen_;
};

void read_provider(Section s, ProviderSettings& p) {
    s.read("kind", p.kind);
    s.read("base_url", p.base_url);
    s.read("model_name", p.model_name);
    s.read("api_key_env", p.api_key_env);
    s.read("timeout_ms", p.timeout_ms);
    s.read("max_attempts", p.max_attempts);
    s.reject_unknown();
}

nlohmann::ordered_json provider_json(const ProviderSettings& p) {
    nlohmann::ordered_json j;
    j["kind"] = p.kind;
    j["base_url"] = p.base_url;
    j["model_name"] = p.model_name;
    j["timeout_ms"] = p.timeout_ms;
    j["max_attempts"] = p.max_attempts;
    return j;
}

[[noreturn]] void invalid(const std::string& what) { throw ValidationError("invalid configuration: " + what); }

}  // namespace

void RunConfig::validate() const {
    const std::vector<std::pair<const ProviderSettings*, std::vector<std::string>>> roles = {
        {&provider, {"mock", "mock-stopword", "http"}}, {&target, {"mock-qa", "http"}}};
    for (const auto& [p, kinds] : roles) {
        if (std::find(kinds.begin(), kinds.end(), p->kind) == kinds.end()) {
            std::string allowed;
            for (const auto& k : kinds) allowed += (allowed.empty() ? "" : ", ") + k;
            invalid(std::string(p == &provider ? "provider" : "target") + ".kind '" + p->kind + "' is not one of " +
                    allowed);
        }
        if (p->kind == "http" && (p->base_url.empty() || p->model_name.empty()))
            invalid("an http provider needs base_url and model_name");
        if (p->max_attempts < 1) invalid("max_attempts must be >= 1");
        if (p->timeout_ms <= 0) invalid("timeout_ms must be positive");
    }
    if (max_units == 0) invalid("distill.max_units must be >= 1");
    if (concurrency == 0) invalid("distill.concurrency must be >= 1");
    if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0))
        invalid("distill.failure_threshold must lie in [0, 1]");
    if (ratio && budget) invalid("compression target: set either ratio or budget, not both");
    if (ratio && !(*ratio > 0.0 && *ratio <= 1.0)) invalid("compress.ratio must lie in (0, 1]");
    if (budget && *budget == 0) invalid("compress.budget must be positive");
    if (!(bin_width > 0.0)) invalid("stats.bin_width must be positive");
    try {
        train.validate();
        ModelConfig probe = model;
        probe.vocab_size = Vocab::kReserved + 1;
        probe.validate();
    } catch (const InvalidArgument& e) {
        invalid(e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    const std::string file = path.string();
    if (!std::filesystem::is_regular_file(path)) throw ParseError(file + ": config file not found");
    YAML::Node root;
    try {
        root = YAML::LoadFile(file);
    } catch (const YAML::ParserException& e) {
        throw ParseError(file + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    } catch (const YAML::Exception& e) {
        throw ParseError(file + ": " + e.what());
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) throw ParseError(file + ":1: the document must be a mapping");

    RunConfig c;
    Section top(root, "", file);
    top.read("seed", c.seed);
    read_provider(top.child("provider"), c.provider);
    read_provider(top.child("target"), c.target);

    Section distill = top.child("distill");
    distill.read("max_units", c.max_units);
    distill.read("concurrency", c.concurrency);
    distill.read("failure_threshold", c.failure_threshold);
    distill.read("task_agnostic", c.task_agnostic);
    distill.reject_unknown();

    Section model = top.child("model");
    model.read("embed_dim", c.model.embed_dim);
    model.read("num_layers", c.model.num_layers);
    model.read("num_heads", c.model.num_heads);
    model.read("ffn_dim", c.model.ffn_dim);
    model.read("max_seq_len", c.model.max_seq_len);
    model.reject_unknown();

    Section train = top.child("train");
    train.read_loss("loss", c.train.loss_variant);
    train.read("learning_rate", c.train.learning_rate);
    train.read("batch_size", c.train.batch_size);
    train.read("epochs", c.train.epochs);
    train.read("include_degenerate", c.train.include_degenerate);
    train.reject_unknown();

    Section compress = top.child("compress");
    compress.read("ratio", c.ratio);
    compress.read("budget", c.budget);
    compress.read("instruction", c.instruction);
    compress.reject_unknown();

    Section stats = top.child("stats");
    stats.read("bin_width", c.bin_width);
    stats.reject_unknown();

    Section sweep = top.child("sweep");
    sweep.read("fractions", c.fractions);
    sweep.reject_unknown();

    Section paths = top.child("paths");
    paths.read("corpus", c.paths.corpus);
    paths.read("pairs", c.paths.pairs);
    paths.read("examples", c.paths.examples);
    paths.read("checkpoint", c.paths.checkpoint);
    paths.read("input", c.paths.input);
    paths.read("qa", c.paths.qa);
    paths.read("extra", c.paths.extra);
    paths.read("eval_data", c.paths.eval_data);
    paths.read("out", c.paths.out);
    paths.read("out_dir", c.paths.out_dir);
    paths.read("manifest", c.paths.manifest);
    paths.reject_unknown();

    top.reject_unknown();
    c.validate();
    return c;
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["provider"] = provider_json(c.provider);
    j["target"] = provider_json(c.target);
    j["distill"] = {{"max_units", c.max_units},
                    {"concurrency", c.concurrency},
                    {"failure_threshold", c.failure_threshold},
                    {"task_agnostic", c.task_agnostic}};
    j["model"] = {{"embed_dim", c.model.embed_dim},
                  {"num_layers", c.model.num_layers},
                  {"num_heads", c.model.num_heads},
                  {"ffn_dim", c.model.ffn_dim},
                  {"max_seq_len", c.model.max_seq_len}};
    j["train"] = {{"loss", std::string(to_string(c.train.loss_variant))},
                  {"learning_rate", c.train.learning_rate},
                  {"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"include_degenerate", c.train.include_degenerate}};
    nlohmann::ordered_json compress;
    compress["ratio"] = c.ratio ? nlohmann::ordered_json(*c.ratio) : nlohmann::ordered_json(nullptr);
    compress["budget"] = c.budget ? nlohmann::ordered_json(*c.budget) : nlohmann::ordered_json(nullptr);
    compress["instruction"] = c.instruction;
    j["compress"] = std::move(compress);
    j["stats"] = {{"bin_width", c.bin_width}};
    j["sweep"] = {{"fractions", c.fractions}};
    return j;
}

}  // namespace efpc::cli
