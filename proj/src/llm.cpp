// SPDX-License-Identifier: Apache-2.0
#include "hiplan/llm.hpp"

#include "hiplan/digest.hpp"

#include <sstream>

namespace hiplan::llm
{

using Json = nlohmann::ordered_json;

void CompletionRequest::validate() const
{
    if (!(temperature >= 0.0))
        throw Error("completion temperature must be >= 0");
    if (max_tokens < 1)
        throw Error("completion max_tokens must be >= 1");
}

std::string complete(Backend& backend, const CompletionRequest& request)
{
    request.validate();
    return backend.complete(request);
}

Transcript Transcript::queued(std::vector<std::string> responses)
{
    Transcript t;
    t.mode = Mode::Queue;
    t.queue = std::move(responses);
    return t;
}

Transcript Transcript::keyed(std::vector<Rule> rules)
{
    Transcript t;
    t.mode = Mode::Keyed;
    t.rules = std::move(rules);
    return t;
}

Transcript Transcript::from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("mode"))
        throw Error("transcript: missing \"mode\"");
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "queue")
        return queued(j.at("responses").get<std::vector<std::string>>());
    if (mode == "keyed")
    {
        std::vector<Rule> rules;
        for (const auto& r: j.at("rules"))
            rules.push_back({r.at("pattern").get<std::string>(), r.at("response").get<std::string>()});
        return keyed(std::move(rules));
    }
    throw Error("transcript: unknown mode \"" + mode + "\"");
}

Transcript Transcript::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read transcript: " + path.string());
    try
    {
        return from_json(Json::parse(in));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error("transcript " + path.string() + ": " + e.what());
    }
}

Json Transcript::to_json() const
{
    Json j;
    if (mode == Mode::Queue)
    {
        j["mode"] = "queue";
        j["responses"] = queue;
    }
    else
    {
        j["mode"] = "keyed";
        auto arr = Json::array();
        for (const auto& r: rules)
            arr.push_back(Json {{"pattern", r.pattern}, {"response", r.response}});
        j["rules"] = std::move(arr);
    }
    return j;
}

ScriptedBackend::ScriptedBackend(Transcript transcript): _transcript(std::move(transcript))
{
}

std::string ScriptedBackend::complete(const CompletionRequest& request)
{
    if (_transcript.mode == Transcript::Mode::Queue)
    {
        std::lock_guard lock(_mutex);
        if (_next >= _transcript.queue.size())
            throw GatewayError(GatewayError::Kind::ScriptExhausted,
                               "scripted backend exhausted after " + std::to_string(_next) + " responses");
        return _transcript.queue[_next++];
    }

    for (const auto& rule: _transcript.rules)
        if (request.prompt.find(rule.pattern) != std::string::npos)
            return rule.response;
    throw GatewayError(GatewayError::Kind::NoPatternMatch, "scripted backend: no rule matches the prompt");
}

std::size_t ScriptedBackend::consumed() const
{
    std::lock_guard lock(_mutex);
    return _next;
}

std::string AuditingBackend::complete(const CompletionRequest& request)
{
    Exchange exchange {request.prompt, std::nullopt, std::nullopt};
    try
    {
        auto response = _inner.complete(request);
        exchange.response = response;
        std::lock_guard lock(_mutex);
        _log.push_back(std::move(exchange));
        return response;
    }
    catch (const std::exception& e)
    {
        exchange.error = e.what();
        std::lock_guard lock(_mutex);
        _log.push_back(std::move(exchange));
        throw;
    }
}

std::vector<Exchange> AuditingBackend::exchanges() const
{
    std::lock_guard lock(_mutex);
    return _log;
}

std::size_t AuditingBackend::calls() const
{
    std::lock_guard lock(_mutex);
    return _log.size();
}

std::string cache_key(const CompletionRequest& request)
{
    Json j {{"prompt", request.prompt},
            {"model", request.model},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
            {"stop", request.stop}};
    return sha256_hex(j.dump());
}

CompletionCache::CompletionCache(std::filesystem::path file): _file(std::move(file))
{
    std::ifstream in(*_file, std::ios::binary);
    if (!in)
        return;  // created on first insert
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line.empty())
            continue;
        try
        {
            auto j = Json::parse(line);
            _entries[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw GatewayError(GatewayError::Kind::Store,
                               "cache " + _file->string() + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
}

std::optional<std::string> CompletionCache::find(const std::string& key) const
{
    std::lock_guard lock(_mutex);
    if (auto it = _entries.find(key); it != _entries.end())
        return it->second;
    return std::nullopt;
}

std::size_t CompletionCache::size() const
{
    std::lock_guard lock(_mutex);
    return _entries.size();
}

void CompletionCache::append(const std::string& key, const std::string& response)
{
    if (!_file)
        return;
    std::ofstream out(*_file, std::ios::binary | std::ios::app);
    out << Json {{"key", key}, {"response", response}}.dump() << '\n';
    out.flush();
    if (!out)
        throw GatewayError(GatewayError::Kind::Store, "cannot append to cache " + _file->string());
}

std::string CompletionCache::get_or_insert(const std::string& key, const std::function<std::string()>& compute)
{
    std::unique_lock lock(_mutex);
    if (auto it = _entries.find(key); it != _entries.end())
        return it->second;
    if (auto it = _inflight.find(key); it != _inflight.end())
    {
        auto pending = it->second;
        lock.unlock();
        return pending.get();
    }

    std::promise<std::string> promise;
    _inflight.emplace(key, promise.get_future().share());
    lock.unlock();

    try
    {
        auto response = compute();
        lock.lock();
        _inflight.erase(key);
        append(key, response);
        _entries.emplace(key, response);
        lock.unlock();
        promise.set_value(response);
        return response;
    }
    catch (...)
    {
        if (!lock.owns_lock())
            lock.lock();
        _inflight.erase(key);
        lock.unlock();
        promise.set_exception(std::current_exception());
        throw;
    }
}

std::string CachedBackend::complete(const CompletionRequest& request)
{
    return _store.get_or_insert(cache_key(request), [&] { return _inner.complete(request); });
}

std::unique_ptr<Backend> with_cache(Backend& inner, CompletionCache& store)
{
    return std::make_unique<CachedBackend>(inner, store);
}

} // namespace hiplan::llm
