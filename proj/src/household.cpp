// SPDX-License-Identifier: Apache-2.0
#include "hiplan/household.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <set>

namespace hiplan::sim
{

namespace
{

constexpr std::array kOpenableClasses = {"cabinet", "drawer", "fridge", "microwave", "safe"};
constexpr std::array kMultiInstanceClasses = {"cabinet", "drawer", "shelf", "countertop"};
constexpr std::array kReceptacleClasses = {"cabinet",  "coffeetable", "countertop",  "desk",    "diningtable",
                                           "drawer",   "dresser",     "fridge",      "garbagecan", "microwave",
                                           "safe",     "shelf",       "sidetable",   "sinkbasin",  "stoveburner",
                                           "toilet"};
constexpr std::array kTakeableClasses = {"alarmclock", "apple",   "book",       "bowl",       "bread",   "candle",
                                         "cd",         "cellphone", "cloth",    "creditcard", "cup",     "dishsponge",
                                         "egg",        "fork",    "keychain",   "knife",      "lettuce", "mug",
                                         "pan",        "pen",     "pencil",     "plate",      "potato",  "soapbar",
                                         "spatula",    "spoon",   "spraybottle", "tomato",    "vase",    "watch"};
constexpr std::string_view kDesklamp = "desklamp";

template <std::size_t N>
bool contains(const std::array<const char*, N>& set, std::string_view value)
{
    return std::any_of(set.begin(), set.end(), [&](const char* s) { return value == s; });
}

std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c: text)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Portable bounded draw (std::uniform_int_distribution is implementation-defined).
class Rng
{
  public:
    explicit Rng(std::uint64_t seed): _engine(seed) {}

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(_engine() % n); }

  private:
    std::mt19937_64 _engine;
};

std::pair<std::string, int> splitId(std::string_view id)
{
    auto space = id.rfind(' ');
    if (space == std::string_view::npos)
        return {std::string(id), 0};
    int number = 0;
    for (char c: id.substr(space + 1))
    {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return {std::string(id), 0};
        number = number * 10 + (c - '0');
    }
    return {std::string(id.substr(0, space)), number};
}

bool naturalLess(const std::string& a, const std::string& b)
{
    return splitId(a) < splitId(b);
}

std::string listItems(const std::vector<std::string>& items)
{
    if (items.empty())
        return "nothing";
    if (items.size() == 1)
        return "a " + items.front();
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
    {
        if (i > 0)
            out += ", ";
        if (i + 1 == items.size())
            out += "and ";
        out += "a " + items[i];
    }
    return out;
}

std::string describeContents(const WorldState& state, const Location& loc)
{
    const auto items = listItems(state.objects_at(loc.id));
    if (loc.openable)
    {
        if (!loc.open)
            return "The " + loc.id + " is closed.";
        return "The " + loc.id + " is open. In it, you see " + items + ".";
    }
    return "On the " + loc.id + ", you see " + items + ".";
}

bool accessible(const Location& loc)
{
    return !loc.openable || loc.open;
}

std::string normalizeAction(std::string_view action)
{
    std::string out;
    bool pendingSpace = false;
    for (unsigned char c: action)
    {
        if (std::isspace(c))
        {
            pendingSpace = !out.empty();
            continue;
        }
        if (pendingSpace)
            out += ' ';
        pendingSpace = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

bool consumePrefix(std::string_view& text, std::string_view prefix)
{
    if (text.substr(0, prefix.size()) != prefix)
        return false;
    text.remove_prefix(prefix.size());
    return true;
}

std::optional<std::pair<std::string, std::string>> splitOn(std::string_view text, std::string_view sep)
{
    auto pos = text.find(sep);
    if (pos == std::string_view::npos || pos == 0 || pos + sep.size() >= text.size())
        return std::nullopt;
    return std::pair {std::string(text.substr(0, pos)), std::string(text.substr(pos + sep.size()))};
}

Location* findLocation(WorldState& state, std::string_view id)
{
    auto it = std::find_if(state.locations.begin(), state.locations.end(), [&](const Location& l) { return l.id == id; });
    return it == state.locations.end() ? nullptr : &*it;
}

std::string applyAction(WorldState& state, std::string_view action)
{
    const std::string nothing(kNothingHappens);
    auto text = action;

    if (consumePrefix(text, "go to "))
    {
        auto* loc = findLocation(state, text);
        if (!loc || state.agent_location == loc->id)
            return nothing;
        state.agent_location = loc->id;
        return "You arrive at " + loc->id + ". " + describeContents(state, *loc);
    }

    if (consumePrefix(text, "open "))
    {
        auto* loc = findLocation(state, text);
        if (!loc || state.agent_location != loc->id || !loc->openable || loc->open)
            return nothing;
        loc->open = true;
        return "You open the " + loc->id + ". " + describeContents(state, *loc);
    }

    if (consumePrefix(text, "take "))
    {
        auto parts = splitOn(text, " from ");
        if (!parts)
            return nothing;
        const auto& [object, source] = *parts;
        const auto* loc = state.find_location(source);
        auto pos = state.object_positions.find(object);
        if (!loc || pos == state.object_positions.end() || state.inventory || state.agent_location != loc->id
            || pos->second != loc->id || !accessible(*loc) || class_of(object) == kDesklamp)
            return nothing;
        pos->second = std::string(kInventory);
        state.inventory = object;
        return "You pick up the " + object + " from the " + loc->id + ".";
    }

    if (consumePrefix(text, "put "))
    {
        auto parts = splitOn(text, " in/on ");
        if (!parts)
            parts = splitOn(text, " in ");
        if (!parts)
            parts = splitOn(text, " on ");
        if (!parts)
            return nothing;
        const auto& [object, target] = *parts;
        const auto* loc = state.find_location(target);
        if (!loc || state.inventory != object || state.agent_location != loc->id || !accessible(*loc))
            return nothing;
        state.object_positions[object] = loc->id;
        state.inventory.reset();
        return "You put the " + object + " in/on the " + loc->id + ".";
    }

    struct Treatment
    {
        std::string_view verb;
        std::string_view station;
        bool ObjectFlags::*flag;
    };
    static constexpr std::array kTreatments = {
        Treatment {"clean", "sinkbasin", &ObjectFlags::clean},
        Treatment {"heat", "microwave", &ObjectFlags::hot},
        Treatment {"cool", "fridge", &ObjectFlags::cool},
    };
    for (const auto& treatment: kTreatments)
    {
        auto rest = text;
        if (!consumePrefix(rest, treatment.verb) || !consumePrefix(rest, " "))
            continue;
        auto parts = splitOn(rest, " with ");
        if (!parts)
            return nothing;
        const auto& [object, station] = *parts;
        const auto* loc = state.find_location(station);
        if (!loc || loc->cls != treatment.station || state.agent_location != loc->id || state.inventory != object)
            return nothing;
        state.object_flags[object].*treatment.flag = true;
        return "You " + std::string(treatment.verb) + " the " + object + " using the " + loc->id + ".";
    }

    if (consumePrefix(text, "use "))
    {
        auto pos = state.object_positions.find(std::string(text));
        if (pos == state.object_positions.end() || class_of(text) != kDesklamp || state.agent_location.empty()
            || pos->second != state.agent_location)
            return nothing;
        if (state.inventory)
            state.object_flags[*state.inventory].examined_under_light = true;
        return "You turn on the " + std::string(text) + ".";
    }

    return nothing;
}

} // namespace

std::string_view to_string(TaskKind kind)
{
    switch (kind)
    {
        case TaskKind::Put: return "put";
        case TaskKind::Examine: return "examine";
        case TaskKind::Clean: return "clean";
        case TaskKind::Heat: return "heat";
        case TaskKind::Cool: return "cool";
        case TaskKind::PutTwo: return "puttwo";
    }
    return "put";
}

TaskKind parse_task_kind(std::string_view text)
{
    for (auto kind: kAllTaskKinds)
        if (to_string(kind) == text)
            return kind;
    throw Error("unknown household task kind: " + std::string(text));
}

std::string task_text(const TaskSpec& spec)
{
    switch (spec.kind)
    {
        case TaskKind::Put: return "put a " + spec.object_class + " in " + spec.target;
        case TaskKind::Examine: return "look at " + spec.object_class + " under the desklamp";
        case TaskKind::Clean: return "put a clean " + spec.object_class + " in " + spec.target;
        case TaskKind::Heat: return "put a hot " + spec.object_class + " in " + spec.target;
        case TaskKind::Cool: return "put a cool " + spec.object_class + " in " + spec.target;
        case TaskKind::PutTwo: return "put two " + spec.object_class + " in " + spec.target;
    }
    return {};
}

std::optional<TaskSpec> parse_task_text(std::string_view text, TaskKind kind)
{
    auto normalized = normalizeAction(text);
    while (!normalized.empty() && normalized.back() == '.')
        normalized.pop_back();
    std::string_view rest = normalized;

    if (kind == TaskKind::Examine)
    {
        if (!consumePrefix(rest, "look at "))
            return std::nullopt;
        constexpr std::string_view suffix = " under the desklamp";
        if (rest.size() <= suffix.size() || rest.substr(rest.size() - suffix.size()) != suffix)
            return std::nullopt;
        return TaskSpec {kind, std::string(rest.substr(0, rest.size() - suffix.size())), std::string(kDesklamp)};
    }

    std::string_view prefix;
    switch (kind)
    {
        case TaskKind::Put: prefix = "put a "; break;
        case TaskKind::Clean: prefix = "put a clean "; break;
        case TaskKind::Heat: prefix = "put a hot "; break;
        case TaskKind::Cool: prefix = "put a cool "; break;
        case TaskKind::PutTwo: prefix = "put two "; break;
        case TaskKind::Examine: break;
    }
    if (!consumePrefix(rest, prefix))
        return std::nullopt;
    auto parts = splitOn(rest, " in ");
    if (!parts || parts->first.find(' ') != std::string::npos)
        return std::nullopt;
    return TaskSpec {kind, parts->first, parts->second};
}

nlohmann::ordered_json to_json(const TaskSpec& spec)
{
    return {{"kind", std::string(to_string(spec.kind))}, {"object", spec.object_class}, {"target", spec.target}};
}

TaskSpec spec_from_json(const nlohmann::ordered_json& j)
{
    return TaskSpec {parse_task_kind(j.at("kind").get<std::string>()), j.at("object").get<std::string>(),
                     j.value("target", std::string(kDesklamp))};
}

bool is_openable_class(std::string_view cls)
{
    return contains(kOpenableClasses, cls);
}

std::string class_of(std::string_view id)
{
    return splitId(id).first;
}

const Location* WorldState::find_location(std::string_view id) const
{
    auto it = std::find_if(locations.begin(), locations.end(), [&](const Location& l) { return l.id == id; });
    return it == locations.end() ? nullptr : &*it;
}

std::vector<std::string> WorldState::objects_at(std::string_view location) const
{
    std::vector<std::string> out;
    for (const auto& [id, where]: object_positions)
        if (where == location)
            out.push_back(id);
    std::sort(out.begin(), out.end(), naturalLess);
    return out;
}

nlohmann::ordered_json to_json(const WorldState& state)
{
    nlohmann::ordered_json j;
    j["agent_location"] = state.agent_location.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(state.agent_location);
    j["inventory"] = state.inventory ? nlohmann::ordered_json(*state.inventory) : nlohmann::ordered_json(nullptr);
    auto locs = nlohmann::ordered_json::array();
    for (const auto& l: state.locations)
        locs.push_back({{"id", l.id}, {"openable", l.openable}, {"open", l.open}});
    j["locations"] = std::move(locs);
    nlohmann::ordered_json objects = nlohmann::ordered_json::object();
    for (const auto& [id, where]: state.object_positions)
    {
        const auto& f = state.object_flags.at(id);
        objects[id] = {{"position", where},
                       {"clean", f.clean},
                       {"hot", f.hot},
                       {"cool", f.cool},
                       {"examined_under_light", f.examined_under_light}};
    }
    j["objects"] = std::move(objects);
    j["completed"] = state.completed;
    return j;
}

World generate_world(const TaskSpec& spec, std::uint64_t seed)
{
    if (!contains(kTakeableClasses, spec.object_class))
        throw UnsatisfiableSpec("object class \"" + spec.object_class + "\" cannot be picked up");
    if (spec.kind != TaskKind::Examine && !contains(kReceptacleClasses, spec.target))
        throw UnsatisfiableSpec("unknown receptacle \"" + spec.target + "\"");

    Rng rng(seed * 0x9E3779B97F4A7C15ull ^ fnv1a(task_text(spec)));

    // Receptacles the task depends on come first, then random fill.
    std::vector<std::string> required;
    auto need = [&](std::string cls) {
        if (std::find(required.begin(), required.end(), cls) == required.end())
            required.push_back(std::move(cls));
    };
    if (spec.kind != TaskKind::Examine)
        need(spec.target);
    if (spec.kind == TaskKind::Clean)
        need("sinkbasin");
    if (spec.kind == TaskKind::Heat)
        need("microwave");
    if (spec.kind == TaskKind::Cool)
        need("fridge");
    const std::string lampStand = rng.below(2) == 0 ? "desk" : "sidetable";
    if (spec.kind == TaskKind::Examine)
        need(lampStand);

    const std::size_t locationCount = std::max<std::size_t>(6 + rng.below(7), required.size());
    std::vector<std::string> locationClasses = required;
    while (locationClasses.size() < locationCount)
    {
        std::string cls = kReceptacleClasses[rng.below(kReceptacleClasses.size())];
        const bool present = std::find(locationClasses.begin(), locationClasses.end(), cls) != locationClasses.end();
        if (present && !contains(kMultiInstanceClasses, cls))
            continue;
        locationClasses.push_back(std::move(cls));
    }

    WorldState state;
    std::map<std::string, int> counter;
    for (const auto& cls: locationClasses)
    {
        const auto id = cls + " " + std::to_string(++counter[cls]);
        const bool openable = is_openable_class(cls);
        state.locations.push_back(Location {id, cls, openable, false});
    }
    std::sort(state.locations.begin(), state.locations.end(),
              [](const Location& a, const Location& b) { return naturalLess(a.id, b.id); });

    std::vector<std::size_t> anywhere(state.locations.size());
    std::vector<std::size_t> awayFromTarget;
    std::vector<std::size_t> lampStands;
    for (std::size_t i = 0; i < state.locations.size(); ++i)
    {
        anywhere[i] = i;
        const auto& cls = state.locations[i].cls;
        if (spec.kind == TaskKind::Examine || cls != spec.target)
            awayFromTarget.push_back(i);
        if (cls == lampStand)
            lampStands.push_back(i);
    }
    if (awayFromTarget.empty())
        throw UnsatisfiableSpec("no room to place the task object away from its target");

    counter.clear();
    auto place = [&](const std::string& cls, const std::vector<std::size_t>& candidates) {
        const auto id = cls + " " + std::to_string(++counter[cls]);
        state.object_positions[id] = state.locations[candidates[rng.below(candidates.size())]].id;
        state.object_flags[id] = ObjectFlags {};
    };

    const std::size_t objectCount = 8 + rng.below(8);
    const std::size_t taskObjects = spec.kind == TaskKind::PutTwo ? 2 + rng.below(2) : 1 + (rng.below(3) == 0 ? 1 : 0);
    for (std::size_t i = 0; i < taskObjects; ++i)
        place(spec.object_class, awayFromTarget);
    if (spec.kind == TaskKind::Examine)
        place(std::string(kDesklamp), lampStands);

    while (state.object_positions.size() < objectCount)
    {
        std::string cls = kTakeableClasses[rng.below(kTakeableClasses.size())];
        if (cls == spec.object_class)
            continue;
        place(cls, anywhere);
    }

    World world;
    world.spec = spec;
    world.seed = seed;
    world.state = std::move(state);

    std::vector<std::string> ids;
    for (const auto& l: world.state.locations)
        ids.push_back(l.id);
    world.initial_observation = "You are in the middle of a room. Looking quickly around you, you see " + listItems(ids)
                                + ". Your task is to: " + task_text(spec) + ".";
    return world;
}

bool is_success(const WorldState& state, const TaskSpec& spec)
{
    auto atTarget = [&](const std::string& where) {
        const auto* loc = state.find_location(where);
        return loc && loc->cls == spec.target;
    };

    std::map<std::string, int> perTargetInstance;
    for (const auto& [id, where]: state.object_positions)
    {
        if (class_of(id) != spec.object_class)
            continue;
        const auto& flags = state.object_flags.at(id);
        switch (spec.kind)
        {
            case TaskKind::Put:
                if (atTarget(where))
                    return true;
                break;
            case TaskKind::Examine:
                if (flags.examined_under_light)
                    return true;
                break;
            case TaskKind::Clean:
                if (flags.clean && atTarget(where))
                    return true;
                break;
            case TaskKind::Heat:
                if (flags.hot && atTarget(where))
                    return true;
                break;
            case TaskKind::Cool:
                if (flags.cool && atTarget(where))
                    return true;
                break;
            case TaskKind::PutTwo:
                if (atTarget(where) && ++perTargetInstance[where] >= 2)
                    return true;
                break;
        }
    }
    return false;
}

StepResult step(WorldState& state, const TaskSpec& spec, std::string_view action)
{
    if (state.completed)
        return StepResult {std::string(kNothingHappens), true, true, 1.0};

    auto observation = applyAction(state, normalizeAction(action));
    if (observation != kNothingHappens && is_success(state, spec))
        state.completed = true;
    return StepResult {std::move(observation), state.completed, state.completed, state.completed ? 1.0 : 0.0};
}

HouseholdEnv::HouseholdEnv(TaskSpec spec, std::uint64_t seed): _world(generate_world(spec, seed)), _state(_world.state)
{
}

std::string HouseholdEnv::reset()
{
    _state = _world.state;
    return _world.initial_observation;
}

StepResult HouseholdEnv::step(std::string_view action)
{
    return sim::step(_state, _world.spec, action);
}

} // namespace hiplan::sim
