// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "efpc/distill.hpp"
#include "efpc/model.hpp"

namespace efpc::cli {

struct ProviderSettings {
    // "mock" (instruction-aware), "mock-stopword", "mock-qa" or "http".
    std::string kind;
    std::string base_url;
    std::string model_name;
    std::string api_key_env = "EFPC_API_KEY";
    std::int64_t timeout_ms = 60000;
    int max_attempts = 3;
};

struct PathSettings {
    std::string corpus;
    std::string pairs;
    std::string examples;
    std::string checkpoint;
    std::string input;
    std::string qa;
    std::string extra;
    std::string eval_data;
    std::string out;
    std::string out_dir;
    std::string manifest;
};

inline ProviderSettings provider_of_kind(std::string kind) {
    ProviderSettings p;
    p.kind = std::move(kind);
    return p;
}

struct RunConfig {
    std::uint64_t seed = 0;
    ProviderSettings provider = provider_of_kind("mock");
    ProviderSettings target = provider_of_kind("mock-qa");

    std::size_t max_units = 512;
    std::size_t concurrency = 4;
    double failure_threshold = 0.10;
    bool task_agnostic = false;

    ModelConfig model;
    TrainConfig train;

    std::optional<double> ratio;
    std::optional<std::size_t> budget;
    std::string instruction;

    double bin_width = 1.0;
    std::vector<double> fractions = {0.0, 0.1, 0.5, 1.0};

    PathSettings paths;

    // Checks cross-field invariants; throws ValidationError.
    void validate() const;
};

// Reads a YAML document with optional top-level sections provider, target,
// distill, model, train, compress, stats, sweep and paths. Unknown keys and
// type errors raise ParseError naming the line and field; a missing file
// raises ParseError too.
RunConfig load_config(const std::filesystem::path& path);

// Effective configuration without paths or secrets, in a fixed key order.
// Its SHA-256 is the config digest recorded in manifests and reports.
nlohmann::ordered_json config_to_json(const RunConfig& config);

}  // namespace efpc::cli
