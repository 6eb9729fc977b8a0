// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"
#include "hiplan/llm.hpp"
#include "hiplan/prompt.hpp"

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace hiplan
{

class ExtractionError: public Error
{
  public:
    enum class Kind
    {
        MalformedOutput,
        IndexOutOfRange,
        OverlappingSegments,
        EmptyMilestone,
        NonContiguousItem,
    };

    ExtractionError(Kind kind, const std::string& message): Error(message), _kind(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return _kind; }

  private:
    Kind _kind;
};

std::string_view to_string(ExtractionError::Kind kind);

/// Segmentation proposed for one trajectory. Indices address
/// Trajectory::steps, so index 0 is the reset observation.
struct ExtractionResult
{
    struct Item
    {
        std::string description;
        std::vector<int> actions;

        bool operator==(const Item&) const = default;
    };

    std::vector<Item> items;

    bool operator==(const ExtractionResult&) const = default;
};

/// `[{"milestone": ..., "actions": [...]}, ...]`
nlohmann::ordered_json to_json(const ExtractionResult& ext);

std::string build_extraction_prompt(const Trajectory& traj, const PromptStore& prompts);

/// Reads the first JSON array embedded in `raw` and validates it against a
/// trajectory of `traj_len` steps. Throws ExtractionError.
ExtractionResult parse_extraction(std::string_view raw, std::size_t traj_len);

struct SegmentedMilestone
{
    Milestone milestone;
    TrajectorySegment segment;

    bool operator==(const SegmentedMilestone&) const = default;
};

/// One segment per item; throws ExtractionError(NonContiguousItem) when an
/// item's indices skip a step.
std::vector<SegmentedMilestone> segment(const Trajectory& traj, const ExtractionResult& ext);

/// Steps covered by no item.
std::size_t gap_count(const ExtractionResult& ext, std::size_t traj_len);

/// Milestone source for library construction.
class MilestoneExtractor
{
  public:
    virtual ~MilestoneExtractor() = default;

    virtual ExtractionResult extract(const Trajectory& traj) = 0;
};

/// Prompts a backend with the extraction template and parses the answer.
class LlmMilestoneExtractor final: public MilestoneExtractor
{
  public:
    LlmMilestoneExtractor(llm::Backend& backend, const PromptStore& prompts, llm::CompletionRequest base = {});

    ExtractionResult extract(const Trajectory& traj) override;

  private:
    llm::Backend& _backend;
    const PromptStore& _prompts;
    llm::CompletionRequest _base;
};

class CorpusError: public Error
{
  public:
    using Error::Error;
};

/// JSONL demonstration corpus. Blank lines are skipped; the first bad line
/// aborts with its 1-based line number.
std::vector<Trajectory> load_demos(std::istream& in);
std::vector<Trajectory> load_demos(const std::filesystem::path& path);

} // namespace hiplan
