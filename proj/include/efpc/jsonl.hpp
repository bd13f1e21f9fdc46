// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "efpc/errors.hpp"

namespace efpc {

// Calls fn(json, line_number) for each non-blank line. Throws ParseError
// naming the 1-based line on malformed JSON.
template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        fn(j, line_no);
    }
}

template <typename T>
T require_field(const nlohmann::json& j, std::string_view key, std::size_t line_no) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ParseError("line " + std::to_string(line_no) + ": missing field '" + std::string(key) + "'");
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(line_no) + ": field '" + std::string(key) + "': " + e.what());
    }
}

}  // namespace efpc
