// SPDX-License-Identifier: Apache-2.0
#include "hiplan/household.hpp"
#include "oracles.hpp"
#include "sim_driver.hpp"

#include <gtest/gtest.h>

using namespace hiplan;
using namespace hiplan::sim;
using namespace hiplan::testing;

namespace
{

/// Hand-built scene: desk 1 holds mug 1, drawer 1 (closed) holds pen 1.
WorldState tinyWorld()
{
    WorldState s;
    s.locations = {{"desk 1", "desk", false, false},
                   {"drawer 1", "drawer", true, false},
                   {"fridge 1", "fridge", true, false},
                   {"microwave 1", "microwave", true, false},
                   {"sidetable 1", "sidetable", false, false},
                   {"sinkbasin 1", "sinkbasin", false, false}};
    s.object_positions = {{"mug 1", "desk 1"}, {"pen 1", "drawer 1"}, {"desklamp 1", "sidetable 1"}};
    for (const auto& [id, where]: s.object_positions)
        s.object_flags[id] = {};
    return s;
}

std::vector<TaskSpec> sampleSpecs()
{
    return {{TaskKind::Put, "mug", "desk"},          {TaskKind::Examine, "book", "desklamp"},
            {TaskKind::Clean, "cloth", "cabinet"},   {TaskKind::Heat, "potato", "countertop"},
            {TaskKind::Cool, "lettuce", "diningtable"}, {TaskKind::PutTwo, "pencil", "dresser"}};
}

} // namespace

TEST(TaskText, RendersAndParses)
{
    for (const auto& spec: sampleSpecs())
    {
        const auto text = task_text(spec);
        EXPECT_EQ(parse_task_text(text, spec.kind), spec) << text;
        EXPECT_EQ(parse_task_text(text + ".", spec.kind), spec);
    }
    EXPECT_EQ(task_text({TaskKind::Heat, "egg", "diningtable"}), "put a hot egg in diningtable");
    EXPECT_EQ(task_text({TaskKind::Examine, "cd", ""}), "look at cd under the desklamp");
    EXPECT_FALSE(parse_task_text("put a mug in desk", TaskKind::Heat));
    EXPECT_EQ(parse_task_kind("puttwo"), TaskKind::PutTwo);
    EXPECT_THROW(parse_task_kind("fly"), Error);
}

TEST(GenerateWorld, DeterministicPerSeed)
{
    for (const auto& spec: sampleSpecs())
    {
        const auto a = generate_world(spec, 3);
        const auto b = generate_world(spec, 3);
        EXPECT_EQ(a.state, b.state);
        EXPECT_EQ(a.initial_observation, b.initial_observation);
        bool differs = false;
        for (std::uint64_t seed = 4; seed < 20 && !differs; ++seed)
            differs = generate_world(spec, seed).state != a.state;
        EXPECT_TRUE(differs);
    }
}

TEST(GenerateWorld, BoundsAndRequiredContent)
{
    for (const auto& spec: sampleSpecs())
        for (std::uint64_t seed = 0; seed < 200; ++seed)
        {
            const auto w = generate_world(spec, seed);
            const auto& s = w.state;
            EXPECT_GE(s.locations.size(), 6u);
            EXPECT_LE(s.locations.size(), 12u);
            EXPECT_GE(s.object_positions.size(), 8u);
            EXPECT_LE(s.object_positions.size(), 15u);
            EXPECT_TRUE(s.agent_location.empty());
            EXPECT_FALSE(s.inventory);
            EXPECT_FALSE(is_success(s, spec));

            int taskObjects = 0;
            for (const auto& [id, where]: s.object_positions)
            {
                ASSERT_NE(s.find_location(where), nullptr);
                if (class_of(id) == spec.object_class)
                {
                    ++taskObjects;
                    if (spec.kind != TaskKind::Examine)
                        EXPECT_NE(s.find_location(where)->cls, spec.target);
                }
            }
            EXPECT_GE(taskObjects, spec.kind == TaskKind::PutTwo ? 2 : 1);

            auto hasClass = [&](const std::string& cls) {
                return std::any_of(s.locations.begin(), s.locations.end(), [&](const auto& l) { return l.cls == cls; });
            };
            if (spec.kind != TaskKind::Examine)
                EXPECT_TRUE(hasClass(spec.target));
            if (spec.kind == TaskKind::Clean)
                EXPECT_TRUE(hasClass("sinkbasin"));
            if (spec.kind == TaskKind::Heat)
                EXPECT_TRUE(hasClass("microwave"));
            if (spec.kind == TaskKind::Cool)
                EXPECT_TRUE(hasClass("fridge"));
            if (spec.kind == TaskKind::Examine)
                EXPECT_TRUE(s.object_positions.count("desklamp 1"));
            EXPECT_NE(w.initial_observation.find("Your task is to: " + task_text(spec) + "."), std::string::npos);
        }
}

TEST(GenerateWorld, RejectsUnsatisfiableSpecs)
{
    EXPECT_THROW(generate_world({TaskKind::Put, "desklamp", "desk"}, 1), UnsatisfiableSpec);
    EXPECT_THROW(generate_world({TaskKind::Put, "sofa", "desk"}, 1), UnsatisfiableSpec);
    EXPECT_THROW(generate_world({TaskKind::Put, "mug", "moon"}, 1), UnsatisfiableSpec);
}

TEST(Step, Examples)
{
    auto s = tinyWorld();
    const TaskSpec spec {TaskKind::Put, "pen", "desk"};
    EXPECT_EQ(step(s, spec, "go to desk 1").observation, "You arrive at desk 1. On the desk 1, you see a mug 1.");
    EXPECT_EQ(step(s, spec, "go to desk 1").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "take pen 1 from drawer 1").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "go to drawer 1").observation, "You arrive at drawer 1. The drawer 1 is closed.");
    EXPECT_EQ(step(s, spec, "take pen 1 from drawer 1").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "open drawer 1").observation, "You open the drawer 1. The drawer 1 is open. In it, you see a pen 1.");
    EXPECT_EQ(step(s, spec, "Take  PEN 1 from drawer 1").observation, "You pick up the pen 1 from the drawer 1.");
    EXPECT_EQ(s.inventory, "pen 1");
    EXPECT_EQ(step(s, spec, "take mug 1 from desk 1").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "go to drawer 1").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "go to sidetable 1").observation, "You arrive at sidetable 1. On the sidetable 1, you see a desklamp 1.");
    EXPECT_EQ(step(s, spec, "take desklamp 1 from sidetable 1").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "go to desk 1").observation, "You arrive at desk 1. On the desk 1, you see a mug 1.");
    const auto done = step(s, spec, "put pen 1 in/on desk 1");
    EXPECT_EQ(done.observation, "You put the pen 1 in/on the desk 1.");
    EXPECT_TRUE(done.done);
    EXPECT_TRUE(done.success);
    EXPECT_EQ(done.reward, 1.0);
    EXPECT_EQ(step(s, spec, "look").observation, "Nothing happens.");
    EXPECT_EQ(step(s, spec, "take pen 1 from desk 1").observation, "Nothing happens.");
    EXPECT_EQ(s.object_positions.at("pen 1"), "desk 1");
}

TEST(Step, TreatmentsAndLamp)
{
    auto s = tinyWorld();
    const TaskSpec spec {TaskKind::Examine, "mug", "desklamp"};
    step(s, spec, "go to desk 1");
    step(s, spec, "take mug 1 from desk 1");
    EXPECT_EQ(step(s, spec, "heat mug 1 with microwave 1").observation, "Nothing happens.");
    step(s, spec, "go to microwave 1");
    EXPECT_EQ(step(s, spec, "heat mug 1 with microwave 1").observation, "You heat the mug 1 using the microwave 1.");
    EXPECT_EQ(step(s, spec, "cool mug 1 with microwave 1").observation, "Nothing happens.");
    step(s, spec, "go to sinkbasin 1");
    EXPECT_EQ(step(s, spec, "clean mug 1 with sinkbasin 1").observation, "You clean the mug 1 using the sinkbasin 1.");
    EXPECT_TRUE(s.object_flags.at("mug 1").hot);
    EXPECT_TRUE(s.object_flags.at("mug 1").clean);
    EXPECT_EQ(step(s, spec, "use desklamp 1").observation, "Nothing happens.");
    step(s, spec, "go to sidetable 1");
    const auto r = step(s, spec, "use desklamp 1");
    EXPECT_EQ(r.observation, "You turn on the desklamp 1.");
    EXPECT_TRUE(r.success);
}

TEST(IsSuccess, Examples)
{
    auto s = tinyWorld();
    EXPECT_FALSE(is_success(s, {TaskKind::Put, "mug", "drawer"}));
    EXPECT_TRUE(is_success(s, {TaskKind::Put, "mug", "desk"}));
    EXPECT_FALSE(is_success(s, {TaskKind::Heat, "mug", "desk"}));
    s.object_flags["mug 1"].hot = true;
    EXPECT_TRUE(is_success(s, {TaskKind::Heat, "mug", "desk"}));
    EXPECT_FALSE(is_success(s, {TaskKind::Cool, "mug", "desk"}));

    s.object_positions["mug 2"] = "drawer 1";
    s.object_flags["mug 2"] = {};
    EXPECT_FALSE(is_success(s, {TaskKind::PutTwo, "mug", "desk"}));
    s.object_positions["mug 2"] = "desk 1";
    EXPECT_TRUE(is_success(s, {TaskKind::PutTwo, "mug", "desk"}));
    EXPECT_FALSE(is_success(s, {TaskKind::Examine, "mug", "desklamp"}));
}

TEST(Step, ConservationAndAbsorptionUnderRandomActions)
{
    std::mt19937_64 rng(99);
    const auto specs = sampleSpecs();
    for (int episode = 0; episode < 300; ++episode)
    {
        const auto& spec = specs[static_cast<std::size_t>(episode) % specs.size()];
        auto s = generate_world(spec, rng()).state;
        const auto objects = object_multiset(s);
        const auto locations = s.locations.size();
        bool wasComplete = false;
        for (int t = 0; t < 60; ++t)
        {
            const auto before = state_hash(s);
            const auto r = step(s, spec, random_action(rng, s));
            ASSERT_EQ(object_multiset(s), objects);
            ASSERT_EQ(s.locations.size(), locations);
            int held = 0;
            for (const auto& [id, where]: s.object_positions)
            {
                if (where == kInventory)
                {
                    ++held;
                    ASSERT_EQ(s.inventory, id);
                }
                else
                    ASSERT_NE(s.find_location(where), nullptr);
            }
            ASSERT_LE(held, 1);
            ASSERT_EQ(held == 1, s.inventory.has_value());
            if (r.observation == kNothingHappens && !(wasComplete && r.done))
                ASSERT_EQ(state_hash(s), before);
            if (wasComplete)
            {
                ASSERT_TRUE(r.done);
                ASSERT_EQ(state_hash(s), before);
            }
            ASSERT_EQ(r.done, s.completed);
            wasComplete = s.completed;
        }
    }
}

TEST(HouseholdEnv, ResetRestoresInitialState)
{
    HouseholdEnv env({TaskKind::Put, "mug", "desk"}, 5);
    const auto first = env.reset();
    const auto initial = env.state();
    const auto& loc = env.state().locations.front().id;
    env.step("go to " + loc);
    EXPECT_NE(env.state(), initial);
    EXPECT_EQ(env.reset(), first);
    EXPECT_EQ(env.state(), initial);
}
