// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hiplan::llm
{

inline constexpr int kDefaultMaxTokens = 512;
inline constexpr double kDefaultTemperature = 0.0;

struct CompletionRequest
{
    std::string prompt;
    int max_tokens = kDefaultMaxTokens;
    double temperature = kDefaultTemperature;
    std::vector<std::string> stop;
    std::string model = "default";

    /// Throws Error when temperature < 0 or max_tokens < 1.
    void validate() const;
};

class GatewayError: public Error
{
  public:
    enum class Kind
    {
        Transport,
        Protocol,
        ScriptExhausted,
        NoPatternMatch,
        Store,
    };

    GatewayError(Kind kind, const std::string& message): Error(message), _kind(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return _kind; }

  private:
    Kind _kind;
};

/// Text-completion backend. Implementations must be safe to call from
/// several threads at once.
class Backend
{
  public:
    virtual ~Backend() = default;

    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Validates the request, then forwards it.
std::string complete(Backend& backend, const CompletionRequest& request);

/// Script for ScriptedBackend.
///   {"mode": "queue", "responses": [str, ...]}
///   {"mode": "keyed", "rules": [{"pattern": str, "response": str}, ...]}
struct Transcript
{
    enum class Mode
    {
        Queue,
        Keyed,
    };

    struct Rule
    {
        std::string pattern;
        std::string response;
    };

    Mode mode = Mode::Queue;
    std::vector<std::string> queue;
    std::vector<Rule> rules;

    static Transcript queued(std::vector<std::string> responses);
    static Transcript keyed(std::vector<Rule> rules);

    static Transcript from_json(const nlohmann::ordered_json& j);
    static Transcript load(const std::filesystem::path& path);
    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Deterministic test double. Queue mode hands out responses in order;
/// keyed mode answers with the first rule whose pattern occurs in the prompt.
class ScriptedBackend final: public Backend
{
  public:
    explicit ScriptedBackend(Transcript transcript);

    std::string complete(const CompletionRequest& request) override;

    [[nodiscard]] std::size_t consumed() const;

  private:
    Transcript _transcript;
    mutable std::mutex _mutex;
    std::size_t _next = 0;
};

struct Exchange
{
    std::string prompt;
    std::optional<std::string> response;
    std::optional<std::string> error;
};

/// Records every request and its outcome, in call order.
class AuditingBackend final: public Backend
{
  public:
    explicit AuditingBackend(Backend& inner): _inner(inner) {}

    std::string complete(const CompletionRequest& request) override;

    [[nodiscard]] std::vector<Exchange> exchanges() const;
    [[nodiscard]] std::size_t calls() const;

  private:
    Backend& _inner;
    mutable std::mutex _mutex;
    std::vector<Exchange> _log;
};

/// SHA-256 over a canonical JSON encoding of every request field.
std::string cache_key(const CompletionRequest& request);

/// Completion store with atomic get-or-insert. With a file it loads the
/// existing {key, response} lines and appends each new entry.
class CompletionCache
{
  public:
    CompletionCache() = default;
    explicit CompletionCache(std::filesystem::path file);

    /// Returns the stored response, or runs `compute` exactly once per key
    /// (concurrent callers for the same key wait for that call). Exceptions
    /// from `compute` propagate and leave nothing stored.
    std::string get_or_insert(const std::string& key, const std::function<std::string()>& compute);

    [[nodiscard]] std::optional<std::string> find(const std::string& key) const;
    [[nodiscard]] std::size_t size() const;

  private:
    void append(const std::string& key, const std::string& response);

    std::optional<std::filesystem::path> _file;
    mutable std::mutex _mutex;
    std::map<std::string, std::string> _entries;
    std::map<std::string, std::shared_future<std::string>> _inflight;
};

class CachedBackend final: public Backend
{
  public:
    CachedBackend(Backend& inner, CompletionCache& store): _inner(inner), _store(store) {}

    std::string complete(const CompletionRequest& request) override;

  private:
    Backend& _inner;
    CompletionCache& _store;
};

std::unique_ptr<Backend> with_cache(Backend& inner, CompletionCache& store);

} // namespace hiplan::llm
