// SPDX-License-Identifier: Apache-2.0
#include "hiplan/library.hpp"

#include "hiplan/serialize.hpp"

#include <algorithm>
#include <fstream>

namespace hiplan
{

namespace
{

constexpr std::string_view kSourceMarker = "---SOURCE---";

Json vectorToJson(const Embedding& v)
{
    auto out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

Embedding vectorFromJson(const Json& j, int dimension)
{
    if (!j.is_array() || static_cast<int>(j.size()) != dimension)
        throw LibraryFormatError("vector must be an array of " + std::to_string(dimension) + " numbers");
    Embedding v(dimension);
    for (int i = 0; i < dimension; ++i)
        v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

std::optional<std::size_t> findSegment(const std::vector<Step>& haystack, const std::vector<Step>& needle)
{
    if (needle.empty() || needle.size() > haystack.size())
        return std::nullopt;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end());
    if (it == haystack.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - haystack.begin());
}

} // namespace

LibraryStats LibraryStats::from_counts(std::size_t demos, std::size_t entries, std::size_t segment_steps)
{
    LibraryStats s;
    s.demo_count = demos;
    s.entry_count = entries;
    s.avg_milestones_per_traj = demos == 0 ? 0.0 : static_cast<double>(entries) / static_cast<double>(demos);
    s.avg_actions_per_milestone =
        entries == 0 ? 0.0 : static_cast<double>(segment_steps) / static_cast<double>(entries);
    return s;
}

MilestoneLibrary::MilestoneLibrary(int dimension): _taskIndex(dimension), _milestoneIndex(dimension)
{
    if (dimension < 1)
        throw Error("library dimension must be >= 1");
}

const MilestoneLibrary::Source& MilestoneLibrary::source(std::string_view traj_id) const
{
    auto it = _sources.find(traj_id);
    if (it == _sources.end())
        throw Error("unknown traj_id \"" + std::string(traj_id) + "\"");
    return it->second;
}

const LibraryEntry& MilestoneLibrary::entry(EntryId id) const
{
    auto it = _position.find(id);
    if (it == _position.end())
        throw Error("unknown entry id " + std::to_string(id));
    return _entries[it->second];
}

void MilestoneLibrary::addSource(Trajectory traj, MilestoneGuide guide)
{
    auto id = traj.traj_id;
    if (_sources.count(id))
        throw Error("duplicate traj_id \"" + id + "\" in library");
    _sources.emplace(id, Source {std::move(traj), std::move(guide)});
    _order.push_back(std::move(id));
}

void MilestoneLibrary::addEntry(LibraryEntry entry)
{
    auto src = _sources.find(entry.traj_id);
    if (src == _sources.end())
        throw Error("entry " + std::to_string(entry.entry_id) + " references unknown traj_id \"" + entry.traj_id
                    + "\"");
    if (entry.milestone_index < 1 || entry.segment.traj_id != entry.traj_id || entry.segment.steps.empty()
        || entry.segment.end() > src->second.trajectory.steps.size())
        throw Error("entry " + std::to_string(entry.entry_id) + " has an invalid segment");

    const bool firstOfTrajectory = std::none_of(_entries.begin(), _entries.end(),
                                                [&](const LibraryEntry& e) { return e.traj_id == entry.traj_id; });
    _milestoneIndex.add(entry.entry_id, entry.milestone_vec);
    if (firstOfTrajectory)
        _taskIndex.add(entry.entry_id, entry.task_vec);
    _position.emplace(entry.entry_id, _entries.size());
    _entries.push_back(std::move(entry));
}

void MilestoneLibrary::add(const Trajectory& traj,
                           const std::vector<SegmentedMilestone>& milestones,
                           const Embedding& task_vec,
                           const std::vector<Embedding>& milestone_vecs)
{
    if (milestones.empty())
        throw Error(traj.traj_id + ": no milestones");
    if (milestones.size() != milestone_vecs.size())
        throw Error(traj.traj_id + ": one milestone vector per milestone required");

    MilestoneGuide guide {traj.task, {}};
    for (const auto& sm: milestones)
        guide.milestones.push_back(sm.milestone);
    addSource(traj, std::move(guide));

    EntryId next = _entries.empty() ? 0 : _entries.back().entry_id + 1;
    for (std::size_t k = 0; k < milestones.size(); ++k)
    {
        LibraryEntry e;
        e.entry_id = next++;
        e.traj_id = traj.traj_id;
        e.task = traj.task;
        e.task_vec = task_vec;
        e.milestone_index = milestones[k].milestone.index;
        e.milestone_text = milestones[k].milestone.description;
        e.milestone_vec = milestone_vecs[k];
        e.segment = milestones[k].segment;
        addEntry(std::move(e));
    }
}

EntryFilter MilestoneLibrary::excluding(const TrajIdSet& exclude) const
{
    if (exclude.empty())
        return {};
    return [this, &exclude](EntryId id) { return exclude.count(entry(id).traj_id) == 0; };
}

std::vector<TaskBundle> MilestoneLibrary::retrieve_tasks(const Embedding& query,
                                                         std::size_t m,
                                                         const TrajIdSet& exclude) const
{
    if (m == 0)
        throw Error("retrieve_tasks requires m >= 1");
    if (_taskIndex.empty())
        return {};

    std::vector<TaskBundle> out;
    for (const auto& hit: _taskIndex.top_k(query, m, excluding(exclude)))
    {
        const auto& src = source(entry(hit.id).traj_id);
        out.push_back(TaskBundle {src.trajectory.task, src.trajectory, src.guide});
    }
    std::stable_sort(out.begin(), out.end(), [](const TaskBundle& a, const TaskBundle& b) {
        if (a.trajectory.steps.size() != b.trajectory.steps.size())
            return a.trajectory.steps.size() < b.trajectory.steps.size();
        return a.trajectory.traj_id < b.trajectory.traj_id;
    });
    return out;
}

std::vector<MilestoneReference> MilestoneLibrary::retrieve_milestones(const Embedding& query,
                                                                      std::size_t p,
                                                                      const TrajIdSet& exclude) const
{
    if (p == 0)
        throw Error("retrieve_milestones requires p >= 1");
    if (_milestoneIndex.empty())
        return {};

    std::vector<MilestoneReference> out;
    std::set<std::string, std::less<>> taken;
    for (const auto& hit: _milestoneIndex.top_k(query, _milestoneIndex.size(), excluding(exclude)))
    {
        const auto& e = entry(hit.id);
        if (!taken.insert(e.traj_id).second)
            continue;
        const auto& steps = source(e.traj_id).trajectory.steps;
        const auto end = std::min(e.segment.end() + 1, steps.size());
        MilestoneReference ref;
        ref.entry_id = e.entry_id;
        ref.score = hit.score;
        ref.traj_id = e.traj_id;
        ref.milestone_text = e.milestone_text;
        ref.steps.assign(steps.begin() + static_cast<std::ptrdiff_t>(e.segment.begin),
                         steps.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(ref));
        if (out.size() == p)
            break;
    }
    return out;
}

LibraryStats MilestoneLibrary::stats() const
{
    std::size_t steps = 0;
    for (const auto& e: _entries)
        steps += e.segment.steps.size();
    return LibraryStats::from_counts(_sources.size(), _entries.size(), steps);
}

bool MilestoneLibrary::operator==(const MilestoneLibrary& other) const
{
    return dimension() == other.dimension() && _entries == other._entries && _sources == other._sources
           && _order == other._order;
}

MilestoneLibrary build_library(const std::vector<Trajectory>& demos,
                               MilestoneExtractor& extractor,
                               const Embedder& embedder,
                               BuildReport* report)
{
    MilestoneLibrary lib(embedder.dimension());
    for (const auto& traj: demos)
    {
        try
        {
            auto validation = validate_trajectory(traj);
            if (!validation.ok())
                throw Error(validation.violations.front());
            const auto ext = extractor.extract(traj);
            const auto milestones = segment(traj, ext);
            std::vector<Embedding> vecs;
            for (const auto& sm: milestones)
                vecs.push_back(embedder.embed(sm.milestone.description));
            lib.add(traj, milestones, embedder.embed(traj.task.text()), vecs);
            if (report)
                report->items.push_back({traj.traj_id, milestones.size(), gap_count(ext, traj.steps.size())});
        }
        catch (const LibraryBuildError&)
        {
            throw;
        }
        catch (const std::exception& e)
        {
            throw LibraryBuildError(traj.traj_id, e.what());
        }
    }
    return lib;
}

void save_library(const MilestoneLibrary& lib, std::ostream& out)
{
    out << Json {{"version", kLibraryVersion}, {"dimension", lib.dimension()}}.dump() << '\n';
    for (const auto& e: lib.entries())
    {
        Json j;
        j["entry_id"] = e.entry_id;
        j["traj_id"] = e.traj_id;
        j["task"] = e.task.text();
        j["task_vec"] = vectorToJson(e.task_vec);
        j["milestone_index"] = e.milestone_index;
        j["milestone"] = e.milestone_text;
        j["milestone_vec"] = vectorToJson(e.milestone_vec);
        j["segment"] = steps_to_json(e.segment.steps);
        j["segment_start"] = e.segment.begin;
        out << j.dump() << '\n';
    }
    out << kSourceMarker << '\n';
    for (const auto& id: lib.source_order())
    {
        const auto& src = lib.source(id);
        auto j = to_json(src.trajectory);
        j["guide"] = guide_to_json(src.guide);
        out << j.dump() << '\n';
    }
}

void save_library(const MilestoneLibrary& lib, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    save_library(lib, out);
    if (!out)
        throw Error("write failed: " + path.string());
}

MilestoneLibrary load_library(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw LibraryFormatError("missing library header");
    const auto header = Json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("version"))
        throw LibraryFormatError("malformed library header");
    if (header["version"] != kLibraryVersion)
        throw LibraryFormatError("unsupported library version " + header["version"].dump() + " (expected "
                                 + std::to_string(kLibraryVersion) + ")");
    const int dimension = header.at("dimension").get<int>();

    std::vector<Json> entryLines;
    bool sawMarker = false;
    std::size_t lineNo = 1;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line == kSourceMarker)
        {
            sawMarker = true;
            break;
        }
        if (trim(line).empty())
            continue;
        auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw LibraryFormatError("line " + std::to_string(lineNo) + ": invalid JSON");
        entryLines.push_back(std::move(j));
    }
    if (!sawMarker)
        throw LibraryFormatError("missing " + std::string(kSourceMarker) + " section");

    MilestoneLibrary lib(dimension);
    try
    {
        while (std::getline(in, line))
        {
            ++lineNo;
            if (trim(line).empty())
                continue;
            const auto j = Json::parse(line);
            auto traj = trajectory_from_json(j);
            MilestoneGuide guide {traj.task, {}};
            for (const auto& text: j.at("guide"))
                guide.milestones.push_back(Milestone {guide.size() + 1, text.get<std::string>()});
            lib.addSource(std::move(traj), std::move(guide));
        }

        for (const auto& j: entryLines)
        {
            LibraryEntry e;
            e.entry_id = j.at("entry_id").get<EntryId>();
            e.traj_id = j.at("traj_id").get<std::string>();
            e.task = TaskInstruction(j.at("task").get<std::string>());
            e.task_vec = vectorFromJson(j.at("task_vec"), dimension);
            e.milestone_index = j.at("milestone_index").get<int>();
            e.milestone_text = j.at("milestone").get<std::string>();
            e.milestone_vec = vectorFromJson(j.at("milestone_vec"), dimension);
            e.segment.traj_id = e.traj_id;
            e.segment.milestone_index = e.milestone_index;
            e.segment.steps = steps_from_json(j.at("segment"));

            const auto& src = lib.source(e.traj_id);
            if (j.contains("segment_start"))
                e.segment.begin = j["segment_start"].get<std::size_t>();
            else if (auto found = findSegment(src.trajectory.steps, e.segment.steps))
                e.segment.begin = *found;
            else
                throw LibraryFormatError("entry " + std::to_string(e.entry_id) + ": segment not found in source");

            const auto& steps = src.trajectory.steps;
            if (e.segment.end() > steps.size()
                || !std::equal(e.segment.steps.begin(), e.segment.steps.end(),
                               steps.begin() + static_cast<std::ptrdiff_t>(e.segment.begin)))
                throw LibraryFormatError("entry " + std::to_string(e.entry_id) + ": segment does not match source");
            if (e.milestone_index > src.guide.size()
                || src.guide.milestones[static_cast<std::size_t>(e.milestone_index - 1)].description
                       != e.milestone_text)
                throw LibraryFormatError("entry " + std::to_string(e.entry_id) + ": milestone not in source guide");
            lib.addEntry(std::move(e));
        }
    }
    catch (const LibraryFormatError&)
    {
        throw;
    }
    catch (const std::exception& e)
    {
        throw LibraryFormatError(e.what());
    }
    return lib;
}

MilestoneLibrary load_library(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    return load_library(in);
}

} // namespace hiplan
