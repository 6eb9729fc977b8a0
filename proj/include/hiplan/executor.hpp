// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"
#include "hiplan/environment.hpp"
#include "hiplan/guidance.hpp"
#include "hiplan/library.hpp"
#include "hiplan/llm.hpp"
#include "hiplan/prompt.hpp"
#include "hiplan/serialize.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hiplan
{

inline constexpr int kDefaultMaxSteps = 50;

/// Substituted when the model's answer holds no action.
inline constexpr std::string_view kNoopAction = "look";

struct ExecConfig
{
    ExecutionMode mode = ExecutionMode::Full;
    std::size_t m = kDefaultTaskK;
    std::size_t p = kDefaultMilestoneK;
    int max_steps = kDefaultMaxSteps;
    std::uint64_t seed = 0;
    TrajIdSet exclude_traj_ids;
    bool verbose_prompts = false;
    llm::CompletionRequest request;  ///< template for every call; prompt is overwritten

    /// Throws Error unless max_steps, m and p are positive.
    void validate() const;
};

class EmptyAction: public Error
{
  public:
    using Error::Error;
};

/// First nonempty line with any "Action:" / ">" prefix and surrounding
/// quotes removed, lowercased, whitespace collapsed. Throws EmptyAction.
std::string parse_action(std::string_view raw);

/// parse_action, falling back to the no-op action.
std::string parse_action_or_noop(std::string_view raw);

/// Guide and hint sections appear only when the mode allows them and the
/// corresponding pointer is set.
std::string build_action_prompt(const TaskInstruction& task,
                                const MilestoneGuide* guide,
                                const Trajectory& history,
                                const std::vector<TaskBundle>& bundles,
                                const StepHint* hint,
                                ExecutionMode mode,
                                const PromptStore& prompts);

struct EpisodeServices
{
    const MilestoneLibrary& library;
    const Embedder& embedder;
    const PromptStore& prompts;
};

/// One planning episode. Gateway failures end the episode with `error` set;
/// every other exception propagates.
EpisodeRecord run_episode(const TaskInstruction& task,
                          Environment& env,
                          const EpisodeServices& services,
                          llm::Backend& backend,
                          const ExecConfig& config);

struct GroupMetrics
{
    std::size_t episodes = 0;
    std::size_t error_count = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    double avg_reward = 0.0;
    double avg_steps = 0.0;
    bool defined = false;  ///< false when every episode errored

    bool operator==(const GroupMetrics&) const = default;
};

/// Error episodes are counted but excluded from the rates.
struct Metrics
{
    GroupMetrics overall;
    std::map<std::string, GroupMetrics> by_kind;

    bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(const std::vector<EpisodeRecord>& records, const std::vector<std::string>& kinds);

/// {success_rate, avg_reward, avg_steps, error_count, episodes, defined, by_kind: {...}}
Json to_json(const Metrics& metrics);

struct EvalTask
{
    TaskInstruction task;
    std::string kind;
    std::uint64_t seed = 0;
    std::function<std::unique_ptr<Environment>()> make_env;
};

struct EvalResult
{
    Metrics metrics;
    std::vector<EpisodeRecord> records;  ///< in task order
};

/// Runs every task once on up to `parallel` threads. `backend` is shared
/// by all episodes.
EvalResult evaluate(const std::vector<EvalTask>& tasks,
                    const EpisodeServices& services,
                    llm::Backend& backend,
                    const ExecConfig& config,
                    std::size_t parallel = 1);

} // namespace hiplan
