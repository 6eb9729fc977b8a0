// SPDX-License-Identifier: Apache-2.0
#ifdef HIPLAN_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "hiplan/http_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace hiplan::llm
{

using Json = nlohmann::ordered_json;

namespace
{

std::string envOr(const char* name, std::string fallback = {})
{
    if (const char* v = std::getenv(name); v && *v)
        return v;
    return fallback;
}

} // namespace

HttpConfig HttpConfig::from_env(const std::string& model)
{
    HttpConfig config;
    config.base_url = envOr("HIPLAN_API_BASE", "https://api.openai.com/v1");
    config.api_key = envOr("HIPLAN_API_KEY");
    config.model = model.empty() ? envOr("HIPLAN_MODEL", "gpt-4o") : model;
    return config;
}

HttpBackend::HttpBackend(HttpConfig config): _config(std::move(config))
{
    auto url = _config.base_url;
    while (!url.empty() && url.back() == '/')
        url.pop_back();
    const auto scheme = url.find("://");
    if (scheme == std::string::npos)
        throw Error("invalid API base URL: " + _config.base_url);
    const auto slash = url.find('/', scheme + 3);
    _origin = slash == std::string::npos ? url : url.substr(0, slash);
    _path = (slash == std::string::npos ? std::string() : url.substr(slash)) + "/chat/completions";
}

Json HttpBackend::request_body(const CompletionRequest& request, const std::string& model)
{
    Json body;
    body["model"] = model;
    body["messages"] = Json::array({Json {{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (!request.stop.empty())
        body["stop"] = request.stop;
    return body;
}

std::string HttpBackend::parse_response(const std::string& body)
{
    try
    {
        auto j = Json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string())
            throw GatewayError(GatewayError::Kind::Protocol, "choices[0].message.content is not a string");
        return content.get<std::string>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw GatewayError(GatewayError::Kind::Protocol, std::string("malformed completion response: ") + e.what());
    }
}

std::string HttpBackend::complete(const CompletionRequest& request)
{
    const auto model = request.model.empty() || request.model == "default" ? _config.model : request.model;
    const auto payload = request_body(request, model).dump();

    httplib::Client client(_origin);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(_config.timeout).count());
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(_config.timeout).count());
    if (!_config.api_key.empty())
        client.set_bearer_token_auth(_config.api_key);

    auto record = [&](std::optional<std::string> response, std::optional<std::string> error) {
        std::lock_guard lock(_mutex);
        _log.push_back({payload, std::move(response), std::move(error)});
    };

    std::string lastError;
    for (int attempt = 0; attempt <= _config.max_retries; ++attempt)
    {
        if (attempt > 0)
            std::this_thread::sleep_for(_config.backoff);

        auto res = client.Post(_path, payload, "application/json");
        if (!res)
        {
            lastError = "POST " + _origin + _path + " failed: " + httplib::to_string(res.error());
            record(std::nullopt, lastError);
            continue;
        }
        if (res->status == 429 || res->status >= 500)
        {
            lastError = "POST " + _origin + _path + " returned HTTP " + std::to_string(res->status);
            record(res->body, lastError);
            continue;
        }
        record(res->body, std::nullopt);
        if (res->status < 200 || res->status >= 300)
            throw GatewayError(GatewayError::Kind::Protocol,
                               "POST " + _origin + _path + " returned HTTP " + std::to_string(res->status));
        return parse_response(res->body);
    }
    throw GatewayError(GatewayError::Kind::Transport, lastError);
}

std::vector<Exchange> HttpBackend::exchanges() const
{
    std::lock_guard lock(_mutex);
    return _log;
}

} // namespace hiplan::llm
