// SPDX-License-Identifier: Apache-2.0
#include "hiplan/ingest.hpp"
#include "hiplan/library.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hiplan;
using Kind = ExtractionError::Kind;

namespace
{

Trajectory demo(const std::string& id, const std::string& task, std::size_t n)
{
    Trajectory t {id, TaskInstruction(task), {{"room of " + id, std::string(kStartAction)}}};
    for (std::size_t i = 1; i < n; ++i)
        t.steps.push_back({id + " obs " + std::to_string(i), "act " + std::to_string(i)});
    return t;
}

Kind kindOf(std::string_view raw, std::size_t len)
{
    try
    {
        (void)parse_extraction(raw, len);
    }
    catch (const ExtractionError& e)
    {
        return e.kind();
    }
    ADD_FAILURE() << "no error for " << raw;
    return Kind::MalformedOutput;
}

PromptStore prompts()
{
    return PromptStore(HIPLAN_TEST_PROMPTS_DIR);
}

} // namespace

TEST(ExtractionPrompt, ContainsInstructionAndTrajectory)
{
    const auto t = demo("a", "put a mug in desk", 3);
    const auto prompt = build_extraction_prompt(t, prompts());
    EXPECT_NE(prompt.find("Identify the key milestones"), std::string::npos);
    EXPECT_NE(prompt.find(render_trajectory(t)), std::string::npos);
    EXPECT_EQ(prompt.find("{TASK}"), std::string::npos);
    EXPECT_EQ(prompt.find("{TRAJECTORY}"), std::string::npos);
}

TEST(ExtractionPrompt, SameTaskDiffersOnlyInTrajectoryBlock)
{
    const auto a = demo("a", "put a mug in desk", 3);
    const auto b = demo("b", "put a mug in desk", 4);
    auto pa = build_extraction_prompt(a, prompts());
    const auto pb = build_extraction_prompt(b, prompts());
    ASSERT_NE(pa, pb);
    const auto at = pa.find(render_trajectory(a));
    pa.replace(at, render_trajectory(a).size(), render_trajectory(b));
    EXPECT_EQ(pa, pb);
}

TEST(ExtractionPrompt, TemplateErrors)
{
    EXPECT_THROW((void)PromptTemplate("t", "Task: {TASK} {MISSING}").render({{"TASK", "x"}}), TemplateError);
    const auto empty = std::filesystem::temp_directory_path() / "hiplan_no_prompts";
    std::filesystem::create_directories(empty);
    EXPECT_THROW((void)build_extraction_prompt(demo("a", "x", 1), PromptStore(empty)), TemplateError);
}

TEST(ParseExtraction, DirectParse)
{
    const auto ext =
        parse_extraction(R"([{"milestone":"find soapbar","actions":[0,1]},{"milestone":"dispose","actions":[2]}])", 3);
    ASSERT_EQ(ext.items.size(), 2u);
    EXPECT_EQ(ext.items[0].description, "find soapbar");
    EXPECT_EQ(ext.items[0].actions, (std::vector<int> {0, 1}));
    EXPECT_EQ(ext.items[1].actions, (std::vector<int> {2}));
}

TEST(ParseExtraction, ProseAndFencesAreIgnored)
{
    const auto ext = parse_extraction(
        "Sure [see below]:\n```json\n[{\"milestone\": \"  take [the] mug \", \"actions\": [0]}]\n```\nDone.", 2);
    ASSERT_EQ(ext.items.size(), 1u);
    EXPECT_EQ(ext.items[0].description, "take [the] mug");
}

TEST(ParseExtraction, Errors)
{
    EXPECT_EQ(kindOf(R"([{"milestone":"x","actions":[5]}])", 3), Kind::IndexOutOfRange);
    EXPECT_EQ(kindOf(R"([{"milestone":"x","actions":[-1]}])", 3), Kind::IndexOutOfRange);
    EXPECT_EQ(kindOf(R"([{"milestone":"a","actions":[0,1]},{"milestone":"b","actions":[1,2]}])", 3),
              Kind::OverlappingSegments);
    EXPECT_EQ(kindOf(R"([{"milestone":"a","actions":[0,0]}])", 3), Kind::OverlappingSegments);
    EXPECT_EQ(kindOf(R"([{"milestone":"  ","actions":[0]}])", 3), Kind::EmptyMilestone);
    EXPECT_EQ(kindOf("no json here", 3), Kind::MalformedOutput);
    EXPECT_EQ(kindOf("[]", 3), Kind::MalformedOutput);
    EXPECT_EQ(kindOf(R"({"milestone":"a","actions":[0]})", 3), Kind::MalformedOutput);
    EXPECT_EQ(kindOf(R"([{"name":"a","actions":[0]}])", 3), Kind::MalformedOutput);
    EXPECT_EQ(kindOf(R"([{"milestone":"a","actions":[]}])", 3), Kind::MalformedOutput);
    EXPECT_EQ(kindOf(R"([{"milestone":"a","actions":[1,0]}])", 3), Kind::MalformedOutput);
    EXPECT_EQ(kindOf(R"([{"milestone":"a","actions":[2]},{"milestone":"b","actions":[0]}])", 3),
              Kind::MalformedOutput);
    EXPECT_EQ(kindOf(R"([{"milestone":"a","actions":["0"]}])", 3), Kind::MalformedOutput);
}

TEST(Segment, TwoHalves)
{
    const auto t = demo("a", "x", 4);
    const auto out = segment(t, parse_extraction(R"([{"milestone":"m1","actions":[0,1]},{"milestone":"m2","actions":[2,3]}])", 4));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].milestone, (Milestone {1, "m1"}));
    EXPECT_EQ(out[1].milestone, (Milestone {2, "m2"}));
    EXPECT_EQ(out[1].segment.begin, 2u);
    EXPECT_EQ(out[1].segment.steps, (std::vector<Step>(t.steps.begin() + 2, t.steps.end())));
    EXPECT_EQ(out[1].segment.traj_id, "a");
}

TEST(Segment, NonContiguousItemIsRejected)
{
    const auto t = demo("a", "x", 4);
    try
    {
        (void)segment(t, parse_extraction(R"([{"milestone":"m","actions":[0,2]}])", 4));
        FAIL();
    }
    catch (const ExtractionError& e)
    {
        EXPECT_EQ(e.kind(), Kind::NonContiguousItem);
    }
}

TEST(Segment, SingleItemCoversEverything)
{
    const auto t = demo("a", "x", 3);
    const auto out = segment(t, parse_extraction(R"([{"milestone":"all","actions":[0,1,2]}])", 3));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].segment.steps, t.steps);
}

TEST(Segment, RoundTripAndCoverageOnRandomExtractions)
{
    std::mt19937_64 rng(11);
    for (int n = 0; n < 500; ++n)
    {
        const std::size_t len = 1 + rng() % 20;
        const auto t = demo("r", "x", len);
        ExtractionResult ext;
        std::size_t i = rng() % 2;
        while (i < len)
        {
            ExtractionResult::Item item {"m" + std::to_string(ext.items.size()), {}};
            const auto run = 1 + rng() % 4;
            for (std::size_t r = 0; r < run && i < len; ++r)
                item.actions.push_back(static_cast<int>(i++));
            ext.items.push_back(item);
            i += rng() % 2;
        }
        if (ext.items.empty())
            continue;
        ASSERT_EQ(parse_extraction(to_json(ext).dump(), len), ext);

        const auto segs = segment(t, ext);
        ExtractionResult rebuilt;
        std::set<int> covered;
        for (const auto& s: segs)
        {
            ExtractionResult::Item item {s.milestone.description, {}};
            for (std::size_t k = 0; k < s.segment.steps.size(); ++k)
            {
                item.actions.push_back(static_cast<int>(s.segment.begin + k));
                covered.insert(static_cast<int>(s.segment.begin + k));
                EXPECT_EQ(s.segment.steps[k], t.steps[s.segment.begin + k]);
            }
            rebuilt.items.push_back(item);
        }
        EXPECT_EQ(rebuilt, ext);
        EXPECT_EQ(gap_count(ext, len), len - covered.size());
    }
}

TEST(LoadDemos, EmptyFileIsEmptyCorpus)
{
    std::istringstream in("");
    EXPECT_TRUE(load_demos(in).empty());
}

TEST(LoadDemos, KeepsFileOrder)
{
    std::istringstream in(R"({"traj_id":"b","task":"x","steps":[{"obs":"o","action":"a"}]}
{"traj_id":"a","task":"y","steps":[{"obs":"o","action":"a"}]}
)");
    const auto demos = load_demos(in);
    ASSERT_EQ(demos.size(), 2u);
    EXPECT_EQ(demos[0].traj_id, "b");
    EXPECT_EQ(demos[1].traj_id, "a");
}

TEST(LoadDemos, DuplicateNamesBothLines)
{
    std::istringstream in(R"({"traj_id":"a","task":"x","steps":[{"obs":"o","action":"a"}]}

{"traj_id":"a","task":"y","steps":[{"obs":"o","action":"a"}]}
)");
    try
    {
        (void)load_demos(in);
        FAIL();
    }
    catch (const CorpusError& e)
    {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    }
}

TEST(LoadDemos, SchemaViolationCarriesLineNumber)
{
    std::istringstream in("{\"traj_id\":\"a\",\"task\":\"x\",\"steps\":[{\"obs\":\"o\",\"action\":\"a\"}]}\n"
                          "{\"traj_id\":\"b\",\"task\":\"x\",\"steps\":[]}\n");
    try
    {
        (void)load_demos(in);
        FAIL();
    }
    catch (const CorpusError& e)
    {
        EXPECT_EQ(std::string(e.what()), "line 2: empty steps");
    }
    EXPECT_THROW((void)load_demos(std::filesystem::path("/nonexistent/demos.jsonl")), CorpusError);
}

TEST(LlmExtractor, FixtureCorpusSegmentsIntoHandCountedMilestones)
{
    const auto demos = load_demos(std::filesystem::path(HIPLAN_FIXTURES_DIR) / "demos/demos.jsonl");
    ASSERT_EQ(demos.size(), 10u);
    llm::ScriptedBackend backend(
        llm::Transcript::load(std::filesystem::path(HIPLAN_FIXTURES_DIR) / "demos/extraction.script.json"));
    auto store = prompts();
    LlmMilestoneExtractor extractor(backend, store);

    const std::vector<std::size_t> expected = {1, 1, 2, 2, 2, 2, 3, 3, 3, 4};
    std::size_t total = 0;
    for (std::size_t i = 0; i < demos.size(); ++i)
    {
        const auto segs = segment(demos[i], extractor.extract(demos[i]));
        EXPECT_EQ(segs.size(), expected[i]) << demos[i].traj_id;
        total += segs.size();
    }
    EXPECT_EQ(total, 23u);

    HashingEmbedder embedder;
    llm::ScriptedBackend again(
        llm::Transcript::load(std::filesystem::path(HIPLAN_FIXTURES_DIR) / "demos/extraction.script.json"));
    LlmMilestoneExtractor extractor2(again, store);
    const auto lib = build_library(demos, extractor2, embedder);
    EXPECT_DOUBLE_EQ(lib.stats().avg_milestones_per_traj, static_cast<double>(total) / 10.0);
}
