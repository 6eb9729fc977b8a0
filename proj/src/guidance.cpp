// SPDX-License-Identifier: Apache-2.0
#include "hiplan/guidance.hpp"

#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>

namespace hiplan
{

namespace
{

constexpr std::string_view kStateLabel = "Current State:";
constexpr std::string_view kMilestoneLabel = "Current Milestone:";
constexpr std::string_view kGapLabel = "Milestone Gap:";
constexpr std::string_view kCorrectionLabel = "Action Correction:";

const std::regex& numberedLine()
{
    static const std::regex re(R"(^(\d+)\s*[.)]\s*(.*)$)");
    return re;
}

const std::regex& milestoneLine()
{
    static const std::regex re(R"(^[Mm]ilestone\s+(\d+)\s*(?::|-|–|—)\s*(.*)$)");
    return re;
}

std::vector<std::string> splitLines(std::string_view text)
{
    std::vector<std::string> lines;
    std::string current;
    for (char c: text)
    {
        if (c == '\n')
        {
            lines.push_back(std::move(current));
            current.clear();
        }
        else if (c != '\r')
            current += c;
    }
    lines.push_back(std::move(current));
    return lines;
}

std::optional<std::pair<int, std::string>> splitMilestoneRef(const std::string& value)
{
    std::smatch m;
    if (std::regex_match(value, m, milestoneLine()) || std::regex_match(value, m, numberedLine()))
    {
        try
        {
            return std::pair {std::stoi(m[1].str()), trim(m[2].str())};
        }
        catch (const std::out_of_range&)
        {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

} // namespace

std::vector<Milestone> parse_guide(std::string_view text)
{
    std::vector<Milestone> out;
    for (const auto& raw: splitLines(text))
    {
        const auto line = trim(raw);
        std::smatch m;
        if (!std::regex_match(line, m, milestoneLine()) && !std::regex_match(line, m, numberedLine()))
            continue;
        auto description = trim(m[2].str());
        if (description.empty())
            continue;
        out.push_back(Milestone {static_cast<int>(out.size()) + 1, std::move(description)});
    }
    return out;
}

std::string render_guide(const std::vector<Milestone>& milestones)
{
    std::string out;
    for (std::size_t i = 0; i < milestones.size(); ++i)
    {
        if (i > 0)
            out += '\n';
        out += std::to_string(i + 1) + ". " + milestones[i].description;
    }
    return out;
}

std::string milestone_label(const Milestone& milestone)
{
    return "Milestone " + std::to_string(milestone.index) + " – " + milestone.description;
}

std::string render_hint(const StepHint& hint)
{
    std::string out;
    out += std::string(kStateLabel) + " " + hint.state_context + "\n";
    out += std::string(kMilestoneLabel) + " " + milestone_label({hint.milestone_index, hint.milestone_text}) + "\n";
    out += std::string(kGapLabel) + " " + hint.milestone_gap;
    if (hint.action_correction)
        out += "\n" + std::string(kCorrectionLabel) + " " + *hint.action_correction;
    return out;
}

StepHint parse_hint(std::string_view text)
{
    std::map<std::string_view, std::string> fields;
    std::string_view active;
    for (const auto& raw: splitLines(text))
    {
        const auto line = trim(raw);
        bool labelled = false;
        for (auto label: {kStateLabel, kMilestoneLabel, kGapLabel, kCorrectionLabel})
        {
            if (line.compare(0, label.size(), label) != 0)
                continue;
            active = label;
            if (fields.count(label))
                throw UnparseableHint("repeated field " + std::string(label));
            fields[label] = trim(std::string_view(line).substr(label.size()));
            labelled = true;
            break;
        }
        if (labelled || active.empty() || line.empty())
            continue;
        auto& field = fields[active];
        field += (field.empty() ? "" : "\n") + line;
    }

    if (!fields.count(kMilestoneLabel))
        throw UnparseableHint("hint has no Current Milestone");
    if (!fields.count(kGapLabel) || fields[kGapLabel].empty())
        throw UnparseableHint("hint has no Milestone Gap");

    auto ref = splitMilestoneRef(fields[kMilestoneLabel]);
    if (!ref || ref->first < 1)
        throw UnparseableHint("Current Milestone has no milestone number");

    StepHint hint;
    hint.state_context = fields[kStateLabel];
    hint.milestone_index = ref->first;
    hint.milestone_text = ref->second;
    hint.milestone_gap = fields[kGapLabel];
    if (fields.count(kCorrectionLabel))
        hint.action_correction = fields[kCorrectionLabel];
    return hint;
}

std::string render_history(const Trajectory& history, std::size_t limit)
{
    if (history.steps.size() <= limit)
        return render_trajectory(history);
    static std::once_flag warned;
    std::call_once(warned, [&] {
        std::clog << "warning: hint history truncated to the last " << limit << " of " << history.steps.size()
                  << " steps\n";
    });
    return task_line(history.task) + "\n" + render_steps(std::span(history.steps).last(limit));
}

std::string build_guide_prompt(const TaskInstruction& task,
                               const std::vector<TaskBundle>& bundles,
                               const PromptStore& prompts)
{
    std::string examples;
    for (const auto& b: bundles)
    {
        if (!examples.empty())
            examples += "\n\n";
        examples += render_trajectory(b.trajectory) + "\nMilestone action guide:\n" + render_guide(b.guide.milestones);
    }
    if (examples.empty())
        examples = kNoReferences;
    return prompts.get(kGuidePrompt).render({{"EXAMPLES", examples}, {"TASK", escape_line(task.text())}});
}

MilestoneGuide generate_guide(const TaskInstruction& task,
                              const std::vector<TaskBundle>& bundles,
                              llm::Backend& backend,
                              const PromptStore& prompts,
                              const llm::CompletionRequest& base)
{
    auto request = base;
    request.prompt = build_guide_prompt(task, bundles, prompts);
    auto milestones = parse_guide(llm::complete(backend, request));
    if (milestones.empty())
        throw UnparseableGuide("no milestone lines in guide response");
    return MilestoneGuide {task, std::move(milestones)};
}

std::string build_hint_prompt(const MilestoneGuide& guide,
                              const Milestone& milestone,
                              const Trajectory& history,
                              const std::vector<MilestoneReference>& refs,
                              const PromptStore& prompts)
{
    std::string demos;
    for (const auto& r: refs)
    {
        if (!demos.empty())
            demos += "\n\n";
        demos += "Milestone: " + escape_line(r.milestone_text) + "\n" + render_steps(r.steps);
    }
    if (demos.empty())
        demos = kNoReferences;
    return prompts.get(kHintPrompt)
        .render({{"TASK", escape_line(history.task.text())},
                 {"TRAJECTORY", render_history(history)},
                 {"GUIDE", render_guide(guide.milestones)},
                 {"CURRENT_MILESTONE", milestone_label(milestone)},
                 {"MILESTONE_DEMOS", demos}});
}

StepHint generate_hint(const MilestoneGuide& guide,
                       const Milestone& milestone,
                       const Trajectory& history,
                       const std::vector<MilestoneReference>& refs,
                       llm::Backend& backend,
                       const PromptStore& prompts,
                       const llm::CompletionRequest& base)
{
    auto request = base;
    request.prompt = build_hint_prompt(guide, milestone, history, refs, prompts);
    return parse_hint(llm::complete(backend, request));
}

MilestoneTracker::MilestoneTracker(int guide_length, int current): _size(guide_length), _current(current)
{
    if (guide_length < 1)
        throw Error("milestone tracker needs a guide of at least one milestone");
    if (current < 1 || current > guide_length)
        throw Error("milestone tracker position out of range");
}

MilestoneTracker advance(const MilestoneTracker& tracker, const StepHint& hint)
{
    return MilestoneTracker(tracker.size(), std::min(tracker.size(), std::max(tracker.current(), hint.milestone_index)));
}

} // namespace hiplan
