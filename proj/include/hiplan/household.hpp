// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"
#include "hiplan/environment.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hiplan::sim
{

enum class TaskKind
{
    Put,
    Examine,
    Clean,
    Heat,
    Cool,
    PutTwo,
};

inline constexpr TaskKind kAllTaskKinds[] = {TaskKind::Put,  TaskKind::Examine, TaskKind::Clean,
                                             TaskKind::Heat, TaskKind::Cool,    TaskKind::PutTwo};

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// `target` is a receptacle class (any instance satisfies the task); it is
/// ignored for Examine.
struct TaskSpec
{
    TaskKind kind = TaskKind::Put;
    std::string object_class;
    std::string target;

    bool operator==(const TaskSpec&) const = default;
};

std::string task_text(const TaskSpec& spec);
std::optional<TaskSpec> parse_task_text(std::string_view text, TaskKind kind);

nlohmann::ordered_json to_json(const TaskSpec& spec);
TaskSpec spec_from_json(const nlohmann::ordered_json& j);

class UnsatisfiableSpec: public Error
{
  public:
    using Error::Error;
};

inline constexpr std::string_view kNothingHappens = "Nothing happens.";
inline constexpr std::string_view kInventory = "inventory";

bool is_openable_class(std::string_view cls);

struct Location
{
    std::string id;
    std::string cls;
    bool openable = false;
    bool open = false;

    bool operator==(const Location&) const = default;
};

struct ObjectFlags
{
    bool clean = false;
    bool hot = false;
    bool cool = false;
    bool examined_under_light = false;

    bool operator==(const ObjectFlags&) const = default;
};

struct WorldState
{
    std::string agent_location;  ///< empty while in the middle of the room
    std::optional<std::string> inventory;
    std::vector<Location> locations;
    std::map<std::string, std::string> object_positions;  ///< id -> location id or "inventory"
    std::map<std::string, ObjectFlags> object_flags;
    bool completed = false;

    [[nodiscard]] const Location* find_location(std::string_view id) const;
    [[nodiscard]] std::vector<std::string> objects_at(std::string_view location) const;

    bool operator==(const WorldState&) const = default;
};

std::string class_of(std::string_view id);

/// Debug snapshot.
nlohmann::ordered_json to_json(const WorldState& state);

struct World
{
    TaskSpec spec;
    std::uint64_t seed = 0;
    WorldState state;
    std::string initial_observation;
};

/// Seeded scene sampler: 6-12 locations, 8-15 objects, every object and
/// receptacle the task needs. Throws UnsatisfiableSpec.
World generate_world(const TaskSpec& spec, std::uint64_t seed);

bool is_success(const WorldState& state, const TaskSpec& spec);

/// Applies one action. Unparseable or inapplicable input yields
/// "Nothing happens." and leaves the state untouched. Once the task is
/// complete every further action is absorbed the same way.
StepResult step(WorldState& state, const TaskSpec& spec, std::string_view action);

/// The household world as an Environment.
class HouseholdEnv final: public Environment
{
  public:
    HouseholdEnv(TaskSpec spec, std::uint64_t seed);

    std::string reset() override;
    StepResult step(std::string_view action) override;

    [[nodiscard]] const WorldState& state() const noexcept { return _state; }
    [[nodiscard]] const World& world() const noexcept { return _world; }

  private:
    World _world;
    WorldState _state;
};

} // namespace hiplan::sim
