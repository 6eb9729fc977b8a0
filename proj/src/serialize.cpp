// SPDX-License-Identifier: Apache-2.0
#include "hiplan/serialize.hpp"

namespace hiplan
{

namespace
{

const Json& require(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw Error(std::string("missing key \"") + key + "\"");
    return j.at(key);
}

std::string requireString(const Json& j, const char* key)
{
    const auto& v = require(j, key);
    if (!v.is_string())
        throw Error(std::string("key \"") + key + "\" must be a string");
    return v.get<std::string>();
}

} // namespace

Json to_json(const Step& step)
{
    return Json {{"obs", step.observation}, {"action", step.action}};
}

Step step_from_json(const Json& j)
{
    return Step {requireString(j, "obs"), requireString(j, "action")};
}

Json steps_to_json(std::span<const Step> steps)
{
    auto arr = Json::array();
    for (const auto& s: steps)
        arr.push_back(to_json(s));
    return arr;
}

std::vector<Step> steps_from_json(const Json& j)
{
    if (!j.is_array())
        throw Error("steps must be an array");
    std::vector<Step> steps;
    steps.reserve(j.size());
    for (const auto& s: j)
        steps.push_back(step_from_json(s));
    return steps;
}

Json to_json(const Trajectory& traj)
{
    return Json {{"traj_id", traj.traj_id}, {"task", traj.task.text()}, {"steps", steps_to_json(traj.steps)}};
}

Trajectory trajectory_from_json(const Json& j)
{
    Trajectory traj;
    traj.traj_id = requireString(j, "traj_id");
    traj.task = TaskInstruction(requireString(j, "task"));
    traj.steps = steps_from_json(require(j, "steps"));
    return traj;
}

Json to_json(const StepHint& hint)
{
    Json j {{"state_context", hint.state_context},
            {"milestone_index", hint.milestone_index},
            {"milestone_text", hint.milestone_text},
            {"milestone_gap", hint.milestone_gap}};
    j["action_correction"] = hint.action_correction ? Json(*hint.action_correction) : Json(nullptr);
    return j;
}

StepHint hint_from_json(const Json& j)
{
    StepHint hint;
    hint.state_context = requireString(j, "state_context");
    hint.milestone_index = require(j, "milestone_index").get<int>();
    hint.milestone_text = requireString(j, "milestone_text");
    hint.milestone_gap = requireString(j, "milestone_gap");
    if (j.contains("action_correction") && !j.at("action_correction").is_null())
        hint.action_correction = j.at("action_correction").get<std::string>();
    return hint;
}

Json guide_to_json(const MilestoneGuide& guide)
{
    auto arr = Json::array();
    for (const auto& m: guide.milestones)
        arr.push_back(m.description);
    return arr;
}

Json to_json(const EpisodeRecord& record)
{
    Json j;
    j["task"] = record.task.text();
    j["mode"] = std::string(to_string(record.mode));
    j["seed"] = record.seed;
    j["initial_observation"] = record.initial_observation;
    j["guide"] = record.guide ? guide_to_json(*record.guide) : Json(nullptr);
    j["guide_fallback"] = record.guide_fallback;

    auto steps = Json::array();
    for (const auto& s: record.steps)
    {
        Json step;
        step["obs"] = s.observation;
        step["hint"] = s.hint ? to_json(*s.hint) : Json(nullptr);
        step["action"] = s.action;
        step["milestone"] = s.milestone_index;
        Json prompts {{"hint_digest", s.hint_digest.empty() ? Json(nullptr) : Json(s.hint_digest)},
                      {"action_digest", s.action_digest}};
        if (s.hint_prompt)
            prompts["hint"] = *s.hint_prompt;
        if (s.action_prompt)
            prompts["action"] = *s.action_prompt;
        step["prompts"] = std::move(prompts);
        steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);
    j["success"] = record.success;
    j["reward"] = record.reward;
    j["steps_taken"] = record.steps_taken;
    j["llm_calls"] = record.llm_calls;
    j["error"] = record.error ? Json(*record.error) : Json(nullptr);
    return j;
}

EpisodeRecord record_from_json(const Json& j)
{
    EpisodeRecord record;
    record.task = TaskInstruction(requireString(j, "task"));
    record.mode = parse_mode(requireString(j, "mode"));
    record.seed = require(j, "seed").get<std::uint64_t>();
    if (j.contains("initial_observation"))
        record.initial_observation = j.at("initial_observation").get<std::string>();
    if (const auto& guide = require(j, "guide"); !guide.is_null())
    {
        MilestoneGuide g;
        g.task = record.task;
        int index = 1;
        for (const auto& m: guide)
            g.milestones.push_back(Milestone {index++, m.get<std::string>()});
        record.guide = std::move(g);
    }
    record.guide_fallback = j.value("guide_fallback", false);
    for (const auto& s: require(j, "steps"))
    {
        EpisodeStep step;
        step.observation = requireString(s, "obs");
        if (const auto& hint = require(s, "hint"); !hint.is_null())
            step.hint = hint_from_json(hint);
        step.action = requireString(s, "action");
        step.milestone_index = s.value("milestone", 0);
        const auto& prompts = require(s, "prompts");
        if (const auto& hd = require(prompts, "hint_digest"); !hd.is_null())
            step.hint_digest = hd.get<std::string>();
        step.action_digest = requireString(prompts, "action_digest");
        if (prompts.contains("hint"))
            step.hint_prompt = prompts.at("hint").get<std::string>();
        if (prompts.contains("action"))
            step.action_prompt = prompts.at("action").get<std::string>();
        record.steps.push_back(std::move(step));
    }
    record.success = require(j, "success").get<bool>();
    record.reward = require(j, "reward").get<double>();
    record.steps_taken = require(j, "steps_taken").get<int>();
    record.llm_calls = require(j, "llm_calls").get<int>();
    if (const auto& err = require(j, "error"); !err.is_null())
        record.error = err.get<std::string>();
    return record;
}

} // namespace hiplan
