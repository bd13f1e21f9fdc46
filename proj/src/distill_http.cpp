// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "efpc/distill.hpp"
#include "efpc/errors.hpp"

#include <json.hpp>

namespace efpc {

HttpChatProvider::HttpChatProvider(HttpProviderConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidArgument("base_url must include a scheme: " + config_.base_url);
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? std::string() : config_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (config_.model.empty()) throw InvalidArgument("HttpChatProvider: model name is required");
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpChatProvider::provider_id() const { return "http:" + config_.model; }

std::string HttpChatProvider::request_body(const MessageList& messages) const {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    body["temperature"] = 0;
    return body.dump();
}

std::string HttpChatProvider::complete(const MessageList& messages) {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto res = client.Post(path_prefix_ + "/chat/completions", headers, request_body(messages),
                                 "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("provider returned HTTP " + std::to_string(res->status));

    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw EmptyCompression(std::string("unusable provider response: ") + e.what());
    }
}

}  // namespace efpc
