// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"
#include "hiplan/household.hpp"
#include "hiplan/ingest.hpp"
#include "hiplan/llm.hpp"
#include "hiplan/serialize.hpp"

#include <map>
#include <string>
#include <vector>

namespace hiplan::golden
{

/// Scripted expert run on one household world.
struct ExpertDemo
{
    sim::TaskSpec spec;
    std::uint64_t seed = 0;
    std::vector<Milestone> milestones;
    std::vector<std::string> actions;
    std::vector<int> milestone_of_action;  ///< 1-based, one per action
    std::vector<std::string> states;       ///< agent situation before each action
    Trajectory trajectory;                 ///< step 0 is the reset observation
    bool success = false;
};

/// Searches locations in listed order, remembering what it has seen.
/// Throws Error when the task is not solved within `max_actions`.
ExpertDemo solve(const sim::TaskSpec& spec, std::uint64_t seed, std::size_t max_actions = 50);

/// {spec, seed, task, actions, expect_success, guide, milestone_of_action}
Json fixture_json(const ExpertDemo& demo);

/// Replays fixture actions directly against the simulator.
bool replay_succeeds(const Json& fixture);

/// Keyed rules answering the guide, every hint and every action prompt of
/// this demo's episode, in any execution mode.
std::vector<llm::Transcript::Rule> episode_rules(const ExpertDemo& demo);

/// Milestone-aligned segmentation, or one item spanning everything.
ExtractionResult expert_segmentation(const ExpertDemo& demo, bool single_milestone = false);

/// Every shipped fixture file keyed by its path relative to fixtures/.
std::map<std::string, std::string> generate_fixtures();

} // namespace hiplan::golden
