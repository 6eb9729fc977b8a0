// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hiplan
{

/// Base class for every error thrown by the library.
class Error: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Action recorded for the reset observation of a trajectory. Never rendered.
inline constexpr std::string_view kStartAction = "<start>";

std::string trim(std::string_view text);

/// Natural-language task. Always trimmed and nonempty.
class TaskInstruction
{
  public:
    TaskInstruction() = default;
    explicit TaskInstruction(std::string_view text);

    [[nodiscard]] const std::string& text() const noexcept { return _text; }
    [[nodiscard]] bool empty() const noexcept { return _text.empty(); }

    bool operator==(const TaskInstruction&) const = default;

  private:
    std::string _text;
};

/// One action and the observation it produced. Step 0 of a trajectory carries
/// the reset observation and the kStartAction sentinel.
struct Step
{
    std::string observation;
    std::string action;

    bool operator==(const Step&) const = default;
};

struct Trajectory
{
    std::string traj_id;
    TaskInstruction task;
    std::vector<Step> steps;

    bool operator==(const Trajectory&) const = default;
};

struct Milestone
{
    int index = 1;
    std::string description;

    bool operator==(const Milestone&) const = default;
};

/// Contiguous slice steps[begin, begin + steps.size()) of a source trajectory.
struct TrajectorySegment
{
    std::string traj_id;
    int milestone_index = 1;
    std::size_t begin = 0;
    std::vector<Step> steps;

    [[nodiscard]] std::size_t end() const noexcept { return begin + steps.size(); }

    bool operator==(const TrajectorySegment&) const = default;
};

struct MilestoneGuide
{
    TaskInstruction task;
    std::vector<Milestone> milestones;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(milestones.size()); }

    bool operator==(const MilestoneGuide&) const = default;
};

struct StepHint
{
    std::string state_context;
    int milestone_index = 1;
    std::string milestone_text;
    std::string milestone_gap;
    std::optional<std::string> action_correction;

    bool operator==(const StepHint&) const = default;
};

enum class ExecutionMode
{
    Full,
    Direct,
    MilestoneOnly,
    NoMilestoneDemos,
};

std::string_view to_string(ExecutionMode mode);
ExecutionMode parse_mode(std::string_view text);

struct EpisodeStep
{
    std::string observation;  ///< observation produced by `action`
    std::optional<StepHint> hint;
    std::string action;
    int milestone_index = 0;  ///< tracker position after this step, 0 without a guide
    std::string hint_digest;
    std::string action_digest;
    std::optional<std::string> hint_prompt;
    std::optional<std::string> action_prompt;

    bool operator==(const EpisodeStep&) const = default;
};

struct EpisodeRecord
{
    TaskInstruction task;
    ExecutionMode mode = ExecutionMode::Full;
    std::uint64_t seed = 0;
    std::string initial_observation;
    std::optional<MilestoneGuide> guide;
    bool guide_fallback = false;
    std::vector<EpisodeStep> steps;
    bool success = false;
    double reward = 0.0;
    int steps_taken = 0;
    int llm_calls = 0;
    std::optional<std::string> error;

    bool operator==(const EpisodeRecord&) const = default;
};

struct ValidationResult
{
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

ValidationResult validate_trajectory(const Trajectory& traj);

/// Escapes a single field so it occupies one line: backslash, newline and
/// carriage return become two-character escapes.
std::string escape_line(std::string_view text);

/// escape_line, plus a leading backslash when the text starts with '>' so an
/// observation line can never be mistaken for an action line.
std::string escape_observation(std::string_view text);

/// Task line followed by two lines per step ("> action", observation) for the
/// first `upto` steps. The start sentinel renders as its observation only.
/// Throws std::out_of_range when upto exceeds the step count.
std::string render_trajectory(const Trajectory& traj, std::size_t upto);
std::string render_trajectory(const Trajectory& traj);

/// Body lines only, for fragments that are not prefixed by their task. A start
/// sentinel is recognised in the first position only.
std::string render_steps(std::span<const Step> steps);

std::string task_line(const TaskInstruction& task);

} // namespace hiplan
