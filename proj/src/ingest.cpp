// SPDX-License-Identifier: Apache-2.0
#include "hiplan/ingest.hpp"

#include "hiplan/serialize.hpp"

#include <fstream>
#include <map>
#include <set>

namespace hiplan
{

namespace
{

using Kind = ExtractionError::Kind;

// End of the bracketed span opening at `open`, respecting JSON strings.
std::optional<std::size_t> matchingBracket(std::string_view text, std::size_t open)
{
    int depth = 0;
    bool inString = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i)
    {
        const char c = text[i];
        if (inString)
        {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                inString = false;
            continue;
        }
        if (c == '"')
            inString = true;
        else if (c == '[')
            ++depth;
        else if (c == ']' && --depth == 0)
            return i;
    }
    return std::nullopt;
}

std::optional<Json> firstArray(std::string_view raw)
{
    for (auto open = raw.find('['); open != std::string_view::npos; open = raw.find('[', open + 1))
    {
        auto close = matchingBracket(raw, open);
        if (!close)
            continue;
        auto parsed = Json::parse(raw.substr(open, *close - open + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_array())
            return parsed;
    }
    return std::nullopt;
}

} // namespace

std::string_view to_string(ExtractionError::Kind kind)
{
    switch (kind)
    {
        case Kind::MalformedOutput: return "MalformedOutput";
        case Kind::IndexOutOfRange: return "IndexOutOfRange";
        case Kind::OverlappingSegments: return "OverlappingSegments";
        case Kind::EmptyMilestone: return "EmptyMilestone";
        case Kind::NonContiguousItem: return "NonContiguousItem";
    }
    return "MalformedOutput";
}

nlohmann::ordered_json to_json(const ExtractionResult& ext)
{
    auto out = Json::array();
    for (const auto& item: ext.items)
        out.push_back({{"milestone", item.description}, {"actions", item.actions}});
    return out;
}

std::string build_extraction_prompt(const Trajectory& traj, const PromptStore& prompts)
{
    return prompts.get(kExtractionPrompt)
        .render({{"TASK", escape_line(traj.task.text())}, {"TRAJECTORY", render_trajectory(traj)}});
}

ExtractionResult parse_extraction(std::string_view raw, std::size_t traj_len)
{
    if (traj_len == 0)
        throw Error("parse_extraction requires a nonempty trajectory");

    auto array = firstArray(raw);
    if (!array)
        throw ExtractionError(Kind::MalformedOutput, "no JSON array in model output");
    if (array->empty())
        throw ExtractionError(Kind::MalformedOutput, "milestone list is empty");

    ExtractionResult result;
    std::set<long long> seen;
    for (std::size_t n = 0; n < array->size(); ++n)
    {
        const auto& entry = (*array)[n];
        const auto where = "item " + std::to_string(n);
        if (!entry.is_object() || !entry.contains("milestone") || !entry.contains("actions")
            || !entry["milestone"].is_string() || !entry["actions"].is_array())
            throw ExtractionError(Kind::MalformedOutput, where + ": expected {\"milestone\": str, \"actions\": [int]}");

        ExtractionResult::Item item;
        item.description = trim(entry["milestone"].get<std::string>());
        if (item.description.empty())
            throw ExtractionError(Kind::EmptyMilestone, where + ": empty milestone description");

        const auto& actions = entry["actions"];
        if (actions.empty())
            throw ExtractionError(Kind::MalformedOutput, where + ": empty action list");
        for (const auto& a: actions)
        {
            if (!a.is_number_integer())
                throw ExtractionError(Kind::MalformedOutput, where + ": non-integer action index");
            const auto index = a.get<long long>();
            if (index < 0 || index >= static_cast<long long>(traj_len))
                throw ExtractionError(Kind::IndexOutOfRange, where + ": action index " + std::to_string(index)
                                                                 + " outside [0, " + std::to_string(traj_len) + ")");
            if (!seen.insert(index).second)
                throw ExtractionError(Kind::OverlappingSegments,
                                      where + ": action index " + std::to_string(index) + " already assigned");
            if (!item.actions.empty() && index < item.actions.back())
                throw ExtractionError(Kind::MalformedOutput, where + ": action indices not increasing");
            item.actions.push_back(static_cast<int>(index));
        }
        if (!result.items.empty() && item.actions.front() < result.items.back().actions.back())
            throw ExtractionError(Kind::MalformedOutput, where + ": items out of trajectory order");
        result.items.push_back(std::move(item));
    }
    return result;
}

std::vector<SegmentedMilestone> segment(const Trajectory& traj, const ExtractionResult& ext)
{
    std::vector<SegmentedMilestone> out;
    for (std::size_t k = 0; k < ext.items.size(); ++k)
    {
        const auto& item = ext.items[k];
        for (std::size_t i = 1; i < item.actions.size(); ++i)
            if (item.actions[i] != item.actions[i - 1] + 1)
                throw ExtractionError(Kind::NonContiguousItem,
                                      traj.traj_id + " item " + std::to_string(k) + ": indices are not contiguous");
        const auto begin = static_cast<std::size_t>(item.actions.front());
        const auto end = static_cast<std::size_t>(item.actions.back()) + 1;
        if (end > traj.steps.size())
            throw ExtractionError(Kind::IndexOutOfRange, traj.traj_id + ": segment exceeds trajectory");

        SegmentedMilestone sm;
        sm.milestone = Milestone {static_cast<int>(k) + 1, item.description};
        sm.segment.traj_id = traj.traj_id;
        sm.segment.milestone_index = sm.milestone.index;
        sm.segment.begin = begin;
        sm.segment.steps.assign(traj.steps.begin() + static_cast<std::ptrdiff_t>(begin),
                                traj.steps.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(sm));
    }
    return out;
}

std::size_t gap_count(const ExtractionResult& ext, std::size_t traj_len)
{
    std::size_t covered = 0;
    for (const auto& item: ext.items)
        covered += item.actions.size();
    return traj_len - std::min(covered, traj_len);
}

LlmMilestoneExtractor::LlmMilestoneExtractor(llm::Backend& backend,
                                             const PromptStore& prompts,
                                             llm::CompletionRequest base):
    _backend(backend), _prompts(prompts), _base(std::move(base))
{
}

ExtractionResult LlmMilestoneExtractor::extract(const Trajectory& traj)
{
    auto request = _base;
    request.prompt = build_extraction_prompt(traj, _prompts);
    return parse_extraction(llm::complete(_backend, request), traj.steps.size());
}

std::vector<Trajectory> load_demos(std::istream& in)
{
    std::vector<Trajectory> out;
    std::map<std::string, std::size_t> firstLine;
    std::string line;
    for (std::size_t lineNo = 1; std::getline(in, line); ++lineNo)
    {
        if (trim(line).empty())
            continue;
        const auto prefix = "line " + std::to_string(lineNo) + ": ";
        Trajectory traj;
        try
        {
            traj = trajectory_from_json(Json::parse(line));
        }
        catch (const std::exception& e)
        {
            throw CorpusError(prefix + e.what());
        }
        auto validation = validate_trajectory(traj);
        if (!validation.ok())
            throw CorpusError(prefix + validation.violations.front());
        auto [it, inserted] = firstLine.emplace(traj.traj_id, lineNo);
        if (!inserted)
            throw CorpusError(prefix + "duplicate traj_id \"" + traj.traj_id + "\" (first seen on line "
                              + std::to_string(it->second) + ")");
        out.push_back(std::move(traj));
    }
    return out;
}

std::vector<Trajectory> load_demos(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw CorpusError("cannot read " + path.string());
    return load_demos(in);
}

} // namespace hiplan
