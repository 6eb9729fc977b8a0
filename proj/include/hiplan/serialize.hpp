// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"

#include <nlohmann/json.hpp>

namespace hiplan
{

using Json = nlohmann::ordered_json;

Json to_json(const Step& step);
Step step_from_json(const Json& j);

Json steps_to_json(std::span<const Step> steps);
std::vector<Step> steps_from_json(const Json& j);

/// Demonstration corpus line: {"traj_id", "task", "steps": [{"obs", "action"}]}.
Json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const Json& j);

Json to_json(const StepHint& hint);
StepHint hint_from_json(const Json& j);

Json guide_to_json(const MilestoneGuide& guide);

/// {task, mode, seed, guide|null, steps: [{obs, hint|null, action,
/// prompts: {hint_digest, action_digest}}], success, reward, steps_taken,
/// llm_calls, error|null}, plus initial_observation, guide_fallback and the
/// per-step milestone index.
Json to_json(const EpisodeRecord& record);
EpisodeRecord record_from_json(const Json& j);

} // namespace hiplan
