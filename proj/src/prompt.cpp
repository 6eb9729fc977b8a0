// SPDX-License-Identifier: Apache-2.0
#include "hiplan/prompt.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#ifndef HIPLAN_DEFAULT_PROMPTS_DIR
#define HIPLAN_DEFAULT_PROMPTS_DIR "prompts"
#endif

namespace hiplan
{

namespace
{

bool isPlaceholderName(std::string_view name)
{
    if (name.empty() || !std::isupper(static_cast<unsigned char>(name.front())))
        return false;
    for (unsigned char c: name)
        if (!(std::isupper(c) || std::isdigit(c) || c == '_'))
            return false;
    return true;
}

// "{#NAME}" / "{/NAME}" on a line by itself.
std::optional<std::pair<char, std::string>> sectionMarker(std::string_view line)
{
    if (line.size() < 4 || line.front() != '{' || line.back() != '}')
        return std::nullopt;
    const char kind = line[1];
    if (kind != '#' && kind != '/')
        return std::nullopt;
    auto name = line.substr(2, line.size() - 3);
    if (!isPlaceholderName(name))
        return std::nullopt;
    return std::pair {kind, std::string(name)};
}

std::string applySections(const std::string& templateName, const std::string& text,
                          const std::set<std::string>& sections)
{
    std::string out;
    std::vector<std::pair<std::string, bool>> open;  // name, emitting
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        auto nl = text.find('\n', pos);
        const bool last = nl == std::string::npos;
        auto line = std::string_view(text).substr(pos, last ? std::string::npos : nl - pos);
        const bool emitting = open.empty() || open.back().second;

        if (auto marker = sectionMarker(line))
        {
            if (marker->first == '#')
                open.emplace_back(marker->second, emitting && sections.contains(marker->second));
            else
            {
                if (open.empty() || open.back().first != marker->second)
                    throw TemplateError(templateName + ": unbalanced section {/" + marker->second + "}");
                open.pop_back();
            }
        }
        else if (emitting)
        {
            out.append(line);
            if (!last)
                out += '\n';
        }
        if (last)
            break;
        pos = nl + 1;
    }
    if (!open.empty())
        throw TemplateError(templateName + ": unterminated section {#" + open.back().first + "}");
    return out;
}

} // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text): _name(std::move(name)), _text(std::move(text))
{
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TemplateError("missing prompt template: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return PromptTemplate(path.filename().string(), buffer.str());
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values,
                                   const std::set<std::string>& sections) const
{
    const auto body = applySections(_name, _text, sections);

    std::string out;
    out.reserve(body.size());
    std::size_t pos = 0;
    while (pos < body.size())
    {
        auto open = body.find('{', pos);
        if (open == std::string::npos)
        {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        auto close = body.find('}', open + 1);
        if (close != std::string::npos)
        {
            auto name = std::string_view(body).substr(open + 1, close - open - 1);
            if (isPlaceholderName(name))
            {
                auto it = values.find(std::string(name));
                if (it == values.end())
                    throw TemplateError(_name + ": unresolved placeholder {" + std::string(name) + "}");
                out += it->second;
                pos = close + 1;
                continue;
            }
        }
        out += '{';
        pos = open + 1;
    }
    return out;
}

PromptStore::PromptStore(std::filesystem::path dir): _dir(std::move(dir))
{
}

std::filesystem::path PromptStore::default_dir()
{
    if (const char* env = std::getenv("HIPLAN_PROMPTS_DIR"); env && *env)
        return env;
    return HIPLAN_DEFAULT_PROMPTS_DIR;
}

const PromptTemplate& PromptStore::get(std::string_view name) const
{
    std::lock_guard lock(_mutex);
    if (auto it = _cache.find(name); it != _cache.end())
        return *it->second;
    auto tpl = std::make_unique<PromptTemplate>(PromptTemplate::load(_dir / std::string(name)));
    auto [it, inserted] = _cache.emplace(std::string(name), std::move(tpl));
    return *it->second;
}

} // namespace hiplan
