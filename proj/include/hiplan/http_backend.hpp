// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/llm.hpp"

#include <chrono>

namespace hiplan::llm
{

struct HttpConfig
{
    std::string base_url;  ///< e.g. https://api.openai.com/v1
    std::string api_key;
    std::string model;
    int max_retries = 2;
    std::chrono::milliseconds backoff {1000};
    std::chrono::seconds timeout {120};

    /// HIPLAN_API_BASE, HIPLAN_API_KEY and HIPLAN_MODEL; a nonempty `model`
    /// overrides HIPLAN_MODEL.
    static HttpConfig from_env(const std::string& model = {});
};

/// OpenAI-compatible chat completion client: one user message per request,
/// reply read from choices[0].message.content. Transport failures (no
/// connection, HTTP 429 or 5xx) are retried `max_retries` times.
class HttpBackend final: public Backend
{
  public:
    explicit HttpBackend(HttpConfig config);

    std::string complete(const CompletionRequest& request) override;

    /// Raw request and response bodies, in call order.
    [[nodiscard]] std::vector<Exchange> exchanges() const;

    static nlohmann::ordered_json request_body(const CompletionRequest& request, const std::string& model);
    static std::string parse_response(const std::string& body);

  private:
    HttpConfig _config;
    std::string _origin;
    std::string _path;
    mutable std::mutex _mutex;
    std::vector<Exchange> _log;
};

} // namespace hiplan::llm
