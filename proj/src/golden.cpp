// SPDX-License-Identifier: Apache-2.0
#include "hiplan/golden.hpp"

#include "hiplan/executor.hpp"
#include "hiplan/guidance.hpp"

#include <algorithm>
#include <set>

namespace hiplan::golden
{

namespace
{

using sim::TaskKind;
using sim::TaskSpec;

class Expert
{
  public:
    Expert(const TaskSpec& spec, std::uint64_t seed, std::size_t maxActions):
        _world(sim::generate_world(spec, seed)), _state(_world.state), _maxActions(maxActions)
    {
        _demo.spec = spec;
        _demo.seed = seed;
        _demo.trajectory = Trajectory {"expert", TaskInstruction(sim::task_text(spec)),
                                       {Step {_world.initial_observation, std::string(kStartAction)}}};
    }

    ExpertDemo run()
    {
        const auto& spec = _demo.spec;
        const auto& o = spec.object_class;
        const auto& t = spec.target;
        switch (spec.kind)
        {
            case TaskKind::Put:
                milestone("Go to where the " + o + " may be located and take it");
                takeOne({});
                milestone("Go to the " + t + " and put the " + o + " in it");
                putAtTarget();
                break;
            case TaskKind::Examine:
                milestone("Go to where the " + o + " may be located and take it");
                takeOne({});
                milestone("Go to the desklamp and use it to look at the " + o);
                useLamp();
                break;
            case TaskKind::Clean:
            case TaskKind::Heat:
            case TaskKind::Cool: {
                const std::string verb =
                    spec.kind == TaskKind::Clean ? "clean" : spec.kind == TaskKind::Heat ? "heat" : "cool";
                const std::string station = spec.kind == TaskKind::Clean  ? "sinkbasin"
                                            : spec.kind == TaskKind::Heat ? "microwave"
                                                                          : "fridge";
                milestone("Go to where the " + o + " may be located and take it");
                takeOne({});
                milestone("Go to the " + station + " and " + verb + " the " + o);
                treat(verb, station);
                milestone("Go to the " + t + " and put the " + o + " in it");
                putAtTarget();
                break;
            }
            case TaskKind::PutTwo: {
                milestone("Go to where the first " + o + " may be located and take it");
                const auto first = takeOne({});
                milestone("Go to the " + t + " and put the first " + o + " in it");
                putAtTarget();
                milestone("Go to where the second " + o + " may be located and take it");
                takeOne({first});
                milestone("Go to the " + t + " and put the second " + o + " in it");
                putAtTarget();
                break;
            }
        }
        _demo.success = _state.completed;
        if (!_demo.success)
            throw Error("expert failed on \"" + sim::task_text(spec) + "\" seed " + std::to_string(_demo.seed));
        return _demo;
    }

  private:
    void milestone(std::string text)
    {
        _demo.milestones.push_back(Milestone {static_cast<int>(_demo.milestones.size()) + 1, std::move(text)});
    }

    std::string situation() const
    {
        std::string s = _state.agent_location.empty() ? "The agent is in the middle of the room"
                                                      : "The agent is at " + _state.agent_location;
        s += _state.inventory ? " and is holding " + *_state.inventory : " with empty hands";
        return s + ".";
    }

    void act(const std::string& action)
    {
        if (_demo.actions.size() >= _maxActions)
            throw Error("expert exceeded " + std::to_string(_maxActions) + " actions");
        _demo.states.push_back(situation());
        auto result = sim::step(_state, _demo.spec, action);
        if (result.observation == sim::kNothingHappens)
            throw Error("expert action had no effect: " + action);
        _demo.actions.push_back(action);
        _demo.milestone_of_action.push_back(static_cast<int>(_demo.milestones.size()));
        _demo.trajectory.steps.push_back(Step {result.observation, action});
    }

    void visit(const sim::Location& loc)
    {
        if (_state.agent_location != loc.id)
            act("go to " + loc.id);
        if (loc.openable && !_state.find_location(loc.id)->open)
            act("open " + loc.id);
        _seen[loc.id] = _state.objects_at(loc.id);
    }

    bool skippable(const sim::Location& loc) const
    {
        return _demo.spec.kind != TaskKind::Examine && loc.cls == _demo.spec.target;
    }

    std::optional<std::string> visibleHere(const std::string& cls, const std::set<std::string>& exclude) const
    {
        for (const auto& id: _state.objects_at(_state.agent_location))
            if (sim::class_of(id) == cls && !exclude.count(id))
                return id;
        return std::nullopt;
    }

    // Remembered sightings first, then unvisited locations in listed order.
    std::optional<std::string> seek(const std::string& cls, const std::set<std::string>& exclude)
    {
        for (const auto& loc: _state.locations)
        {
            auto it = _seen.find(loc.id);
            if (it == _seen.end() || skippable(loc))
                continue;
            auto hit = std::find_if(it->second.begin(), it->second.end(), [&](const std::string& id) {
                return sim::class_of(id) == cls && !exclude.count(id);
            });
            if (hit == it->second.end())
                continue;
            visit(loc);
            if (auto found = visibleHere(cls, exclude))
                return found;
        }
        for (const auto& loc: _state.locations)
        {
            if (_seen.count(loc.id) || skippable(loc))
                continue;
            visit(loc);
            if (auto found = visibleHere(cls, exclude))
                return found;
        }
        return std::nullopt;
    }

    std::string takeOne(const std::set<std::string>& exclude)
    {
        auto found = seek(_demo.spec.object_class, exclude);
        if (!found)
            throw Error("expert could not find a " + _demo.spec.object_class);
        act("take " + *found + " from " + _state.agent_location);
        return *found;
    }

    const sim::Location& firstOf(const std::string& cls) const
    {
        auto it = std::find_if(_state.locations.begin(), _state.locations.end(),
                               [&](const sim::Location& l) { return l.cls == cls; });
        if (it == _state.locations.end())
            throw Error("world has no " + cls);
        return *it;
    }

    void putAtTarget()
    {
        const auto held = *_state.inventory;
        const auto& loc = firstOf(_demo.spec.target);
        visit(loc);
        act("put " + held + " in/on " + loc.id);
    }

    void treat(const std::string& verb, const std::string& station)
    {
        const auto held = *_state.inventory;
        const auto& loc = firstOf(station);
        if (_state.agent_location != loc.id)
            act("go to " + loc.id);
        act(verb + " " + held + " with " + loc.id);
    }

    void useLamp()
    {
        const auto lamp = _world.state.object_positions.find("desklamp 1");
        if (lamp == _world.state.object_positions.end())
            throw Error("world has no desklamp");
        if (_state.agent_location != lamp->second)
            act("go to " + lamp->second);
        act("use desklamp 1");
    }

    sim::World _world;
    sim::WorldState _state;
    std::size_t _maxActions;
    ExpertDemo _demo;
    std::map<std::string, std::vector<std::string>> _seen;
};

struct DemoPlan
{
    std::string id;
    TaskSpec spec;
    std::uint64_t seed;
    bool single = false;
};

const std::vector<DemoPlan>& demoPlans()
{
    static const std::vector<DemoPlan> plans = {
        {"demo-put-1", {TaskKind::Put, "mug", "desk"}, 101, true},
        {"demo-put-2", {TaskKind::Put, "pen", "drawer"}, 102, true},
        {"demo-put-3", {TaskKind::Put, "apple", "countertop"}, 103},
        {"demo-put-4", {TaskKind::Put, "keychain", "sidetable"}, 104},
        {"demo-examine-1", {TaskKind::Examine, "book", "desklamp"}, 105},
        {"demo-examine-2", {TaskKind::Examine, "cd", "desklamp"}, 106},
        {"demo-clean-1", {TaskKind::Clean, "cloth", "cabinet"}, 107},
        {"demo-heat-1", {TaskKind::Heat, "potato", "countertop"}, 108},
        {"demo-cool-1", {TaskKind::Cool, "lettuce", "diningtable"}, 109},
        {"demo-puttwo-1", {TaskKind::PutTwo, "pencil", "dresser"}, 110},
    };
    return plans;
}

const std::vector<std::pair<TaskSpec, std::uint64_t>>& goldenPlans()
{
    static const std::vector<std::pair<TaskSpec, std::uint64_t>> plans = {
        {{TaskKind::Put, "book", "shelf"}, 7},
        {{TaskKind::Examine, "alarmclock", "desklamp"}, 7},
        {{TaskKind::Clean, "soapbar", "countertop"}, 7},
        {{TaskKind::Heat, "egg", "diningtable"}, 7},
        {{TaskKind::Cool, "tomato", "microwave"}, 7},
        {{TaskKind::PutTwo, "cd", "safe"}, 7},
    };
    return plans;
}

std::string dumpLine(const Json& j)
{
    return j.dump() + "\n";
}

std::string dumpPretty(const Json& j)
{
    return j.dump(2) + "\n";
}

} // namespace

ExpertDemo solve(const sim::TaskSpec& spec, std::uint64_t seed, std::size_t max_actions)
{
    return Expert(spec, seed, max_actions).run();
}

Json fixture_json(const ExpertDemo& demo)
{
    Json guide = Json::array();
    for (const auto& m: demo.milestones)
        guide.push_back(m.description);
    return {{"spec", sim::to_json(demo.spec)},
            {"seed", demo.seed},
            {"task", sim::task_text(demo.spec)},
            {"actions", demo.actions},
            {"expect_success", demo.success},
            {"guide", std::move(guide)},
            {"milestone_of_action", demo.milestone_of_action}};
}

bool replay_succeeds(const Json& fixture)
{
    sim::HouseholdEnv env(sim::spec_from_json(fixture.at("spec")), fixture.at("seed").get<std::uint64_t>());
    env.reset();
    bool done = false;
    for (const auto& action: fixture.at("actions"))
    {
        if (done)
            return false;
        done = env.step(action.get<std::string>()).done;
    }
    return done && sim::is_success(env.state(), env.world().spec);
}

std::vector<llm::Transcript::Rule> episode_rules(const ExpertDemo& demo)
{
    const auto& task = demo.trajectory.task;
    std::vector<llm::Transcript::Rule> rules;
    rules.push_back({"Task: \n" + escape_line(task.text()) + "\n\nFollowing the provided style",
                     render_guide(demo.milestones)});

    Trajectory history {"episode", task, {demo.trajectory.steps.front()}};
    for (std::size_t t = 0; t < demo.actions.size(); ++t)
    {
        const int k = demo.milestone_of_action[t];
        std::string remaining;
        for (std::size_t u = t; u < demo.actions.size() && demo.milestone_of_action[u] == k; ++u)
            remaining += (remaining.empty() ? "" : "; ") + demo.actions[u];

        StepHint hint;
        hint.state_context = demo.states[t];
        hint.milestone_index = k;
        hint.milestone_text = demo.milestones[static_cast<std::size_t>(k - 1)].description;
        hint.milestone_gap = "Remaining for this milestone: " + remaining + ".";

        rules.push_back({"Current Trajectory: \n" + render_history(history) + "\n\n", render_hint(hint)});
        rules.push_back({"as follows:\n" + render_trajectory(history) + "\n\n", demo.actions[t]});
        history.steps.push_back(demo.trajectory.steps[t + 1]);
    }
    return rules;
}

ExtractionResult expert_segmentation(const ExpertDemo& demo, bool single_milestone)
{
    ExtractionResult ext;
    const auto& steps = demo.trajectory.steps;
    if (single_milestone)
    {
        ExtractionResult::Item item;
        item.description = "Find the " + demo.spec.object_class + " and put it in the " + demo.spec.target;
        for (std::size_t i = 0; i < steps.size(); ++i)
            item.actions.push_back(static_cast<int>(i));
        ext.items.push_back(std::move(item));
        return ext;
    }
    for (const auto& m: demo.milestones)
        ext.items.push_back({m.description, {}});
    ext.items.front().actions.push_back(0);
    for (std::size_t t = 0; t < demo.actions.size(); ++t)
        ext.items[static_cast<std::size_t>(demo.milestone_of_action[t] - 1)].actions.push_back(static_cast<int>(t + 1));
    return ext;
}

std::map<std::string, std::string> generate_fixtures()
{
    std::map<std::string, std::string> files;

    std::string demos;
    std::vector<llm::Transcript::Rule> extractionRules;
    for (const auto& plan: demoPlans())
    {
        auto demo = solve(plan.spec, plan.seed);
        demo.trajectory.traj_id = plan.id;
        demos += dumpLine(to_json(demo.trajectory));
        extractionRules.push_back(
            {render_trajectory(demo.trajectory), to_json(expert_segmentation(demo, plan.single)).dump()});
    }
    files["demos/demos.jsonl"] = demos;
    files["demos/extraction.script.json"] = dumpPretty(llm::Transcript::keyed(extractionRules).to_json());

    std::string suite;
    std::vector<llm::Transcript::Rule> suiteRules;
    for (const auto& [spec, seed]: goldenPlans())
    {
        const auto demo = solve(spec, seed);
        const std::string kind(sim::to_string(spec.kind));
        files["golden/" + kind + ".json"] = dumpPretty(fixture_json(demo));
        auto rules = episode_rules(demo);
        files["golden/" + kind + ".script.json"] = dumpPretty(llm::Transcript::keyed(rules).to_json());
        suiteRules.insert(suiteRules.end(), rules.begin(), rules.end());
        suite += dumpLine(Json {{"task", sim::task_text(spec)}, {"env", "household:" + kind}, {"seed", seed}});
    }
    files["golden/suite.jsonl"] = suite;
    files["golden/suite.script.json"] = dumpPretty(llm::Transcript::keyed(suiteRules).to_json());

    Json table = Json::array();
    table.push_back({{"name", "ALFWorld"}, {"demos", 500}, {"entries", 2945}, {"segment_steps", 5242}});
    table.push_back({{"name", "WebShop"}, {"demos", 77}, {"entries", 385}, {"segment_steps", 427}});
    files["metadata/library_table.json"] = dumpPretty(Json {{"datasets", std::move(table)}});

    files["scripts/looping.script.json"] =
        dumpPretty(llm::Transcript::keyed({{"", std::string(kNoopAction)}}).to_json());
    return files;
}

} // namespace hiplan::golden
