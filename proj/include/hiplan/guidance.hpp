// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"
#include "hiplan/library.hpp"
#include "hiplan/llm.hpp"
#include "hiplan/prompt.hpp"

#include <string>
#include <vector>

namespace hiplan
{

class UnparseableGuide: public Error
{
  public:
    using Error::Error;
};

class UnparseableHint: public Error
{
  public:
    using Error::Error;
};

/// Hint prompts carry at most this many trailing steps of history.
inline constexpr std::size_t kHintHistoryLimit = 30;

/// Block used wherever a reference list is empty or disabled.
inline constexpr std::string_view kNoReferences = "None.";

/// Accepts `N.`, `N)`, `Milestone N:` and `Milestone N –` (also `-`, `—`)
/// lines; everything else is ignored. Result is renumbered from 1.
std::vector<Milestone> parse_guide(std::string_view text);

/// "1. first\n2. second"
std::string render_guide(const std::vector<Milestone>& milestones);

/// "Milestone k – text"
std::string milestone_label(const Milestone& milestone);

/// Labelled-line hint format; Action Correction only when present.
std::string render_hint(const StepHint& hint);

/// Inverse of render_hint, tolerant of preamble and continuation lines.
/// Throws UnparseableHint when Current Milestone or Milestone Gap is missing.
StepHint parse_hint(std::string_view text);

/// Trajectory rendering for hint prompts, keeping only the last `limit` steps.
/// The first truncation in a process is reported on std::clog.
std::string render_history(const Trajectory& history, std::size_t limit = kHintHistoryLimit);

std::string build_guide_prompt(const TaskInstruction& task,
                               const std::vector<TaskBundle>& bundles,
                               const PromptStore& prompts);

/// Throws UnparseableGuide.
MilestoneGuide generate_guide(const TaskInstruction& task,
                              const std::vector<TaskBundle>& bundles,
                              llm::Backend& backend,
                              const PromptStore& prompts,
                              const llm::CompletionRequest& base = {});

/// An empty `refs` renders the "None." block.
std::string build_hint_prompt(const MilestoneGuide& guide,
                              const Milestone& milestone,
                              const Trajectory& history,
                              const std::vector<MilestoneReference>& refs,
                              const PromptStore& prompts);

/// Throws UnparseableHint.
StepHint generate_hint(const MilestoneGuide& guide,
                       const Milestone& milestone,
                       const Trajectory& history,
                       const std::vector<MilestoneReference>& refs,
                       llm::Backend& backend,
                       const PromptStore& prompts,
                       const llm::CompletionRequest& base = {});

/// Position k in a guide of K milestones; 1 <= k <= K.
class MilestoneTracker
{
  public:
    explicit MilestoneTracker(int guide_length, int current = 1);

    [[nodiscard]] int current() const noexcept { return _current; }
    [[nodiscard]] int size() const noexcept { return _size; }

    bool operator==(const MilestoneTracker&) const = default;

  private:
    int _size;
    int _current;
};

/// k' = min(K, max(k, hint.milestone_index))
MilestoneTracker advance(const MilestoneTracker& tracker, const StepHint& hint);

} // namespace hiplan
