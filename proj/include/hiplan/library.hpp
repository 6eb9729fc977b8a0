// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"
#include "hiplan/embedding.hpp"
#include "hiplan/ingest.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hiplan
{

inline constexpr int kLibraryVersion = 1;
inline constexpr std::size_t kDefaultTaskK = 2;
inline constexpr std::size_t kDefaultMilestoneK = 2;

struct LibraryEntry
{
    EntryId entry_id = 0;
    std::string traj_id;
    TaskInstruction task;
    Embedding task_vec;
    int milestone_index = 1;
    std::string milestone_text;
    Embedding milestone_vec;
    TrajectorySegment segment;

    bool operator==(const LibraryEntry&) const = default;
};

struct TaskBundle
{
    TaskInstruction task;
    Trajectory trajectory;
    MilestoneGuide guide;

    bool operator==(const TaskBundle&) const = default;
};

/// A retrieved milestone with its segment plus at most one following step.
struct MilestoneReference
{
    EntryId entry_id = 0;
    double score = 0.0;
    std::string traj_id;
    std::string milestone_text;
    std::vector<Step> steps;

    bool operator==(const MilestoneReference&) const = default;
};

struct LibraryStats
{
    std::size_t demo_count = 0;
    std::size_t entry_count = 0;
    double avg_milestones_per_traj = 0.0;
    double avg_actions_per_milestone = 0.0;

    /// Zero denominators give zero averages.
    static LibraryStats from_counts(std::size_t demos, std::size_t entries, std::size_t segment_steps);

    bool operator==(const LibraryStats&) const = default;
};

using TrajIdSet = std::set<std::string, std::less<>>;

class LibraryFormatError: public Error
{
  public:
    using Error::Error;
};

/// Two-level store: one task vector per source trajectory and one milestone
/// vector per entry. Immutable once built, so queries may run concurrently.
class MilestoneLibrary
{
  public:
    struct Source
    {
        Trajectory trajectory;
        MilestoneGuide guide;

        bool operator==(const Source&) const = default;
    };

    explicit MilestoneLibrary(int dimension = HashingEmbedder::kDefaultDimension);

    [[nodiscard]] int dimension() const noexcept { return _milestoneIndex.dimension(); }
    [[nodiscard]] const std::vector<LibraryEntry>& entries() const noexcept { return _entries; }
    [[nodiscard]] const std::vector<std::string>& source_order() const noexcept { return _order; }
    [[nodiscard]] const Source& source(std::string_view traj_id) const;
    [[nodiscard]] const VectorIndex<double>& task_index() const noexcept { return _taskIndex; }
    [[nodiscard]] const VectorIndex<double>& milestone_index() const noexcept { return _milestoneIndex; }
    [[nodiscard]] const LibraryEntry& entry(EntryId id) const;

    /// Appends one trajectory and its milestones; entry ids continue from the
    /// last one. Vectors must already be unit-norm.
    void add(const Trajectory& traj,
             const std::vector<SegmentedMilestone>& milestones,
             const Embedding& task_vec,
             const std::vector<Embedding>& milestone_vecs);

    /// Top-m trajectories by task similarity, then ordered by step count and
    /// traj_id.
    [[nodiscard]] std::vector<TaskBundle> retrieve_tasks(const Embedding& query,
                                                         std::size_t m = kDefaultTaskK,
                                                         const TrajIdSet& exclude = {}) const;

    /// Greedy walk down the milestone ranking keeping one entry per
    /// trajectory, until p entries are chosen.
    [[nodiscard]] std::vector<MilestoneReference> retrieve_milestones(const Embedding& query,
                                                                      std::size_t p = kDefaultMilestoneK,
                                                                      const TrajIdSet& exclude = {}) const;

    [[nodiscard]] LibraryStats stats() const;

    bool operator==(const MilestoneLibrary& other) const;

  private:
    friend MilestoneLibrary load_library(std::istream& in);

    void addSource(Trajectory traj, MilestoneGuide guide);
    void addEntry(LibraryEntry entry);
    [[nodiscard]] EntryFilter excluding(const TrajIdSet& exclude) const;

    std::vector<LibraryEntry> _entries;
    std::map<EntryId, std::size_t> _position;
    std::map<std::string, Source, std::less<>> _sources;
    std::vector<std::string> _order;
    VectorIndex<double> _taskIndex;
    VectorIndex<double> _milestoneIndex;
};

/// Failure while ingesting one demonstration.
class LibraryBuildError: public Error
{
  public:
    LibraryBuildError(std::string traj_id, const std::string& message):
        Error(traj_id + ": " + message), _trajId(std::move(traj_id))
    {
    }

    [[nodiscard]] const std::string& traj_id() const noexcept { return _trajId; }

  private:
    std::string _trajId;
};

struct BuildReport
{
    struct Item
    {
        std::string traj_id;
        std::size_t milestones = 0;
        std::size_t gaps = 0;
    };

    std::vector<Item> items;
};

MilestoneLibrary build_library(const std::vector<Trajectory>& demos,
                               MilestoneExtractor& extractor,
                               const Embedder& embedder,
                               BuildReport* report = nullptr);

void save_library(const MilestoneLibrary& lib, std::ostream& out);
void save_library(const MilestoneLibrary& lib, const std::filesystem::path& path);
MilestoneLibrary load_library(std::istream& in);
MilestoneLibrary load_library(const std::filesystem::path& path);

} // namespace hiplan
