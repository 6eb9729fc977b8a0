// SPDX-License-Identifier: Apache-2.0
#include "hiplan/library.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace hiplan;

namespace
{

Trajectory traj(const std::string& id, const std::string& task, std::size_t n)
{
    Trajectory t {id, TaskInstruction(task), {{"start " + id, std::string(kStartAction)}}};
    for (std::size_t i = 1; i < n; ++i)
        t.steps.push_back({id + " o" + std::to_string(i), id + " a" + std::to_string(i)});
    return t;
}

/// Splits the trajectory into `cuts`-delimited segments named after their id.
std::vector<SegmentedMilestone> split(const Trajectory& t, const std::vector<std::size_t>& cuts)
{
    std::vector<SegmentedMilestone> out;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    {
        SegmentedMilestone sm;
        sm.milestone = {static_cast<int>(k) + 1, t.traj_id + " milestone " + std::to_string(k + 1)};
        sm.segment = {t.traj_id, sm.milestone.index, cuts[k],
                      std::vector<Step>(t.steps.begin() + cuts[k], t.steps.begin() + cuts[k + 1])};
        out.push_back(sm);
    }
    return out;
}

void addWithEmbedder(MilestoneLibrary& lib, const Embedder& e, const Trajectory& t, const std::vector<std::size_t>& cuts)
{
    const auto sms = split(t, cuts);
    std::vector<Embedding> vecs;
    for (const auto& sm: sms)
        vecs.push_back(e.embed(sm.milestone.description));
    lib.add(t, sms, e.embed(t.task.text()), vecs);
}

class FixedExtractor final: public MilestoneExtractor
{
  public:
    std::map<std::string, ExtractionResult> results;

    ExtractionResult extract(const Trajectory& t) override { return results.at(t.traj_id); }
};

} // namespace

TEST(BuildLibrary, OneEntryPerMilestone)
{
    FixedExtractor ex;
    ex.results["a"] = {{{"m1", {0}}, {"m2", {1}}, {"m3", {2}}}};
    ex.results["b"] = {{{"n1", {0, 1}}, {"n2", {2}}}};
    HashingEmbedder e(32);
    const auto lib = build_library({traj("a", "task a", 3), traj("b", "task b", 3)}, ex, e);
    EXPECT_EQ(lib.entries().size(), 5u);
    EXPECT_DOUBLE_EQ(lib.stats().avg_milestones_per_traj, 2.5);
    for (std::size_t i = 0; i < 5; ++i)
        EXPECT_EQ(lib.entries()[i].entry_id, static_cast<EntryId>(i));
    EXPECT_EQ(lib.source("a").guide.size(), 3);
    EXPECT_EQ(lib.source("b").guide.milestones[1], (Milestone {2, "n2"}));
}

TEST(BuildLibrary, ErrorsCarryTrajId)
{
    FixedExtractor ex;
    ex.results["a"] = {{{"m1", {0, 2}}}};
    HashingEmbedder e(8);
    try
    {
        (void)build_library({traj("a", "task a", 3)}, ex, e);
        FAIL();
    }
    catch (const LibraryBuildError& err)
    {
        EXPECT_EQ(err.traj_id(), "a");
    }
}

TEST(BuildLibrary, EmptyCorpus)
{
    FixedExtractor ex;
    HashingEmbedder e(8);
    const auto lib = build_library({}, ex, e);
    EXPECT_TRUE(lib.entries().empty());
    EXPECT_TRUE(lib.retrieve_tasks(e.embed("x")).empty());
    EXPECT_TRUE(lib.retrieve_milestones(e.embed("x")).empty());
    EXPECT_EQ(lib.stats(), LibraryStats {});
}

TEST(LibraryStats, TableRatios)
{
    EXPECT_DOUBLE_EQ(LibraryStats::from_counts(500, 2945, 0).avg_milestones_per_traj, 5.89);
    EXPECT_DOUBLE_EQ(LibraryStats::from_counts(77, 385, 0).avg_milestones_per_traj, 5.0);
    EXPECT_EQ(LibraryStats::from_counts(500 + 77, 2945 + 385, 0).entry_count, 3330u);
    EXPECT_EQ(LibraryStats::from_counts(0, 0, 0).avg_actions_per_milestone, 0.0);
}

TEST(LibraryStats, SingleDemoSingleMilestone)
{
    MilestoneLibrary lib(8);
    HashingEmbedder e(8);
    addWithEmbedder(lib, e, traj("a", "x", 4), {0, 3});
    const auto s = lib.stats();
    EXPECT_DOUBLE_EQ(s.avg_milestones_per_traj, 1.0);
    EXPECT_DOUBLE_EQ(s.avg_actions_per_milestone, 3.0);
}

TEST(RetrieveTasks, ExactQueryIsSelected)
{
    MilestoneLibrary lib(64);
    HashingEmbedder e(64);
    addWithEmbedder(lib, e, traj("a", "put a mug in desk", 3), {0, 3});
    addWithEmbedder(lib, e, traj("b", "heat an egg", 3), {0, 3});
    addWithEmbedder(lib, e, traj("c", "cool a tomato", 3), {0, 3});
    const auto got = lib.retrieve_tasks(e.embed("heat an egg"), 2);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_TRUE(got[0].trajectory.traj_id == "b" || got[1].trajectory.traj_id == "b");
}

TEST(RetrieveTasks, SelectedSetIsOrderedByLength)
{
    MilestoneLibrary lib(4);
    const std::vector<Embedding> none;
    auto add = [&](const Trajectory& t, const Embedding& v) {
        lib.add(t, split(t, {0, t.steps.size()}), v, {Embedding::Unit(4, 3)});
    };
    add(traj("long", "x", 7), Embedding::Unit(4, 0));
    add(traj("short", "y", 5), normalized_or_basis(Embedding(Eigen::Vector4d(1, 1, 0, 0))));
    add(traj("other", "z", 2), Embedding::Unit(4, 2));
    const auto got = lib.retrieve_tasks(Embedding::Unit(4, 0), 2);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].trajectory.steps.size(), 5u);
    EXPECT_EQ(got[1].trajectory.steps.size(), 7u);
    EXPECT_EQ(got[0].guide, lib.source("short").guide);
}

TEST(RetrieveTasks, ExcludeFilter)
{
    MilestoneLibrary lib(64);
    HashingEmbedder e(64);
    addWithEmbedder(lib, e, traj("a", "put a mug in desk", 3), {0, 3});
    addWithEmbedder(lib, e, traj("b", "put a pen in desk", 3), {0, 3});
    const auto got = lib.retrieve_tasks(e.embed("put a mug in desk"), 2, {"a"});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].trajectory.traj_id, "b");
    EXPECT_THROW((void)lib.retrieve_tasks(e.embed("x"), 0), Error);
}

TEST(RetrieveTasks, MatchesOracleOnRandomLibraries)
{
    std::mt19937_64 rng(99);
    for (int n = 0; n < 100; ++n)
    {
        auto r = hiplan::testing::random_library(rng);
        const auto& lib = r.library;
        for (int q = 0; q < 10; ++q)
        {
            const auto query = q % 2 ? r.pool[rng() % r.pool.size()] : hiplan::testing::dyadic_vector(rng, 16);
            const auto m = 1 + rng() % 4;
            const auto got = lib.retrieve_tasks(query, m);
            auto expected = hiplan::testing::oracle_task_selection(lib, query, m);
            std::vector<std::string> gotIds;
            for (const auto& b: got)
                gotIds.push_back(b.trajectory.traj_id);
            EXPECT_EQ(std::set<std::string>(gotIds.begin(), gotIds.end()),
                      std::set<std::string>(expected.begin(), expected.end()));
            for (std::size_t i = 1; i < got.size(); ++i)
            {
                const auto& a = got[i - 1].trajectory;
                const auto& b = got[i].trajectory;
                EXPECT_TRUE(a.steps.size() < b.steps.size() || (a.steps.size() == b.steps.size() && a.traj_id < b.traj_id));
            }
        }
    }
}

TEST(RetrieveMilestones, DedupReplacesSameTrajectoryHit)
{
    MilestoneLibrary lib(4);
    const auto t1 = traj("t1", "x", 4);
    const auto t2 = traj("t2", "y", 4);
    const Embedding near = normalized_or_basis(Embedding(Eigen::Vector4d(1, 0.5, 0, 0)));
    lib.add(t1, split(t1, {0, 2, 4}), Embedding::Unit(4, 3), {Embedding::Unit(4, 0), near});
    lib.add(t2, split(t2, {0, 4}), Embedding::Unit(4, 3), {normalized_or_basis(Embedding(Eigen::Vector4d(1, 1, 0, 0)))});
    const auto got = lib.retrieve_milestones(Embedding::Unit(4, 0), 2);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].entry_id, 0);
    EXPECT_EQ(got[1].traj_id, "t2");
}

TEST(RetrieveMilestones, SegmentGetsOneForwardStep)
{
    MilestoneLibrary lib(4);
    const auto t = traj("t", "x", 6);
    lib.add(t, split(t, {0, 2, 4, 6}), Embedding::Unit(4, 3),
            {Embedding::Unit(4, 0), Embedding::Unit(4, 1), Embedding::Unit(4, 2)});
    auto got = lib.retrieve_milestones(Embedding::Unit(4, 1), 1);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].steps, std::vector<Step>(t.steps.begin() + 2, t.steps.begin() + 5));

    got = lib.retrieve_milestones(Embedding::Unit(4, 2), 1);
    EXPECT_EQ(got[0].steps, std::vector<Step>(t.steps.begin() + 4, t.steps.end()));
}

TEST(RetrieveMilestones, SingleTrajectoryLibraryYieldsOneResult)
{
    MilestoneLibrary lib(4);
    const auto t = traj("t", "x", 6);
    lib.add(t, split(t, {0, 2, 4, 6}), Embedding::Unit(4, 3),
            {Embedding::Unit(4, 0), Embedding::Unit(4, 1), Embedding::Unit(4, 2)});
    EXPECT_EQ(lib.retrieve_milestones(Embedding::Unit(4, 1), 5).size(), 1u);
}

TEST(RetrieveMilestones, MatchesOracleAndProperties)
{
    std::mt19937_64 rng(123);
    for (int n = 0; n < 100; ++n)
    {
        auto r = hiplan::testing::random_library(rng);
        const auto& lib = r.library;
        std::set<std::string> distinct;
        for (const auto& e: lib.entries())
            distinct.insert(e.traj_id);
        for (int q = 0; q < 10; ++q)
        {
            const auto query = r.pool[rng() % r.pool.size()];
            const auto p = 1 + rng() % 4;
            TrajIdSet exclude;
            if (q == 9)
                exclude.insert(*distinct.begin());
            const auto got = lib.retrieve_milestones(query, p, exclude);
            const auto expected = hiplan::testing::oracle_milestones(lib, query, p, exclude);
            ASSERT_EQ(got.size(), expected.size());
            for (std::size_t i = 0; i < got.size(); ++i)
            {
                EXPECT_EQ(got[i].entry_id, expected[i].entry_id);
                EXPECT_EQ(got[i].steps, expected[i].steps);
            }
            if (exclude.empty())
                EXPECT_EQ(got.size(), std::min<std::size_t>(p, distinct.size()));
        }
    }
}

TEST(Persistence, RoundTripPreservesQueries)
{
    std::mt19937_64 rng(7);
    auto r = hiplan::testing::random_library(rng);
    std::stringstream buffer;
    save_library(r.library, buffer);
    const auto text = buffer.str();
    const auto loaded = load_library(buffer);
    EXPECT_TRUE(loaded == r.library);

    for (int q = 0; q < 50; ++q)
    {
        const auto query = hiplan::testing::gaussian_vector(rng, 16);
        EXPECT_EQ(loaded.retrieve_tasks(query), r.library.retrieve_tasks(query));
        EXPECT_EQ(loaded.retrieve_milestones(query, 3), r.library.retrieve_milestones(query, 3));
    }

    std::stringstream again;
    save_library(loaded, again);
    EXPECT_EQ(again.str(), text);
}

TEST(Persistence, FileLayout)
{
    MilestoneLibrary lib(4);
    const auto t = traj("t", "x", 3);
    lib.add(t, split(t, {0, 1, 3}), Embedding::Unit(4, 3), {Embedding::Unit(4, 0), Embedding::Unit(4, 1)});
    std::stringstream buffer;
    save_library(lib, buffer);
    std::vector<std::string> lines;
    for (std::string line; std::getline(buffer, line);)
        lines.push_back(line);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0], R"({"version":1,"dimension":4})");
    EXPECT_EQ(lines[1].rfind(R"({"entry_id":0,"traj_id":"t","task":"x","task_vec":[0.0,0.0,0.0,1.0],"milestone_index":1,"milestone":"t milestone 1","milestone_vec":)", 0), 0u);
    EXPECT_EQ(lines[3], "---SOURCE---");
    EXPECT_NE(lines[4].find(R"("guide":["t milestone 1","t milestone 2"])"), std::string::npos);
}

TEST(Persistence, SegmentStartIsOptional)
{
    MilestoneLibrary lib(4);
    const auto t = traj("t", "x", 5);
    lib.add(t, split(t, {0, 2, 5}), Embedding::Unit(4, 3), {Embedding::Unit(4, 0), Embedding::Unit(4, 1)});
    std::stringstream buffer;
    save_library(lib, buffer);
    auto text = buffer.str();
    for (auto pos = text.find(",\"segment_start\":"); pos != std::string::npos;
         pos = text.find(",\"segment_start\":"))
        text.erase(pos, text.find('}', pos) - pos);
    std::istringstream in(text);
    EXPECT_TRUE(load_library(in) == lib);
}

TEST(Persistence, VersionMismatch)
{
    std::istringstream in("{\"version\":2,\"dimension\":4}\n---SOURCE---\n");
    EXPECT_THROW((void)load_library(in), LibraryFormatError);
}

TEST(Persistence, EmptyLibraryRoundTrips)
{
    MilestoneLibrary lib(16);
    std::stringstream buffer;
    save_library(lib, buffer);
    const auto loaded = load_library(buffer);
    EXPECT_TRUE(loaded == lib);
    EXPECT_EQ(loaded.dimension(), 16);
}

TEST(Persistence, CorruptSegmentIsRejected)
{
    MilestoneLibrary lib(4);
    const auto t = traj("t", "x", 3);
    lib.add(t, split(t, {0, 3}), Embedding::Unit(4, 3), {Embedding::Unit(4, 0)});
    std::stringstream buffer;
    save_library(lib, buffer);
    auto text = buffer.str();
    text.replace(text.find("t a1"), 4, "t zz");
    std::istringstream in(text);
    EXPECT_THROW((void)load_library(in), LibraryFormatError);
}
