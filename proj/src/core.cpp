// SPDX-License-Identifier: Apache-2.0
#include "hiplan/core.hpp"

#include <algorithm>
#include <cctype>

namespace hiplan
{

std::string trim(std::string_view text)
{
    auto isSpace = [](unsigned char c) { return std::isspace(c) != 0; };
    auto first = std::find_if_not(text.begin(), text.end(), isSpace);
    auto last = std::find_if_not(text.rbegin(), text.rend(), isSpace).base();
    if (first >= last)
        return {};
    return std::string(first, last);
}

TaskInstruction::TaskInstruction(std::string_view text): _text(trim(text))
{
    if (_text.empty())
        throw Error("task instruction is empty");
}

std::string_view to_string(ExecutionMode mode)
{
    switch (mode)
    {
        case ExecutionMode::Full: return "full";
        case ExecutionMode::Direct: return "direct";
        case ExecutionMode::MilestoneOnly: return "milestone_only";
        case ExecutionMode::NoMilestoneDemos: return "no_milestone_demos";
    }
    return "full";
}

ExecutionMode parse_mode(std::string_view text)
{
    if (text == "full")
        return ExecutionMode::Full;
    if (text == "direct")
        return ExecutionMode::Direct;
    if (text == "milestone_only")
        return ExecutionMode::MilestoneOnly;
    if (text == "no_milestone_demos")
        return ExecutionMode::NoMilestoneDemos;
    throw Error("unknown execution mode: " + std::string(text));
}

ValidationResult validate_trajectory(const Trajectory& traj)
{
    ValidationResult result;
    if (trim(traj.traj_id).empty())
        result.violations.emplace_back("empty traj_id");
    if (traj.task.empty())
        result.violations.emplace_back("empty task");
    if (traj.steps.empty())
        result.violations.emplace_back("empty steps");

    for (std::size_t i = 0; i < traj.steps.size(); ++i)
    {
        const auto& step = traj.steps[i];
        if (trim(step.action).empty())
            result.violations.push_back("empty action at step " + std::to_string(i));
        else if (i > 0 && step.action == kStartAction)
            result.violations.push_back("start sentinel at step " + std::to_string(i));
        if (i > 0 && step.observation.empty())
            result.violations.push_back("empty observation at step " + std::to_string(i));
    }
    return result;
}

std::string escape_line(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c: text)
    {
        switch (c)
        {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string escape_observation(std::string_view text)
{
    auto line = escape_line(text);
    if (!line.empty() && line.front() == '>')
        line.insert(line.begin(), '\\');
    return line;
}

std::string task_line(const TaskInstruction& task)
{
    return "Your task is to: " + escape_line(task.text());
}

namespace
{

void appendStep(std::string& out, const Step& step, bool isStart)
{
    if (!isStart)
    {
        out += "> ";
        out += escape_line(step.action);
        out += '\n';
    }
    out += escape_observation(step.observation);
}

} // namespace

std::string render_steps(std::span<const Step> steps)
{
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
        if (i > 0)
            out += '\n';
        appendStep(out, steps[i], i == 0 && steps[i].action == kStartAction);
    }
    return out;
}

std::string render_trajectory(const Trajectory& traj, std::size_t upto)
{
    if (upto > traj.steps.size())
        throw std::out_of_range("render_trajectory: upto " + std::to_string(upto) + " exceeds "
                                + std::to_string(traj.steps.size()) + " steps");
    auto out = task_line(traj.task);
    if (upto > 0)
    {
        out += '\n';
        out += render_steps(std::span(traj.steps).first(upto));
    }
    return out;
}

std::string render_trajectory(const Trajectory& traj)
{
    return render_trajectory(traj, traj.steps.size());
}

} // namespace hiplan
