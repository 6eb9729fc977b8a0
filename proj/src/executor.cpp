// SPDX-License-Identifier: Apache-2.0
#include "hiplan/executor.hpp"

#include "hiplan/digest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

namespace hiplan
{

namespace
{

bool stripPrefixIgnoreCase(std::string& text, std::string_view prefix)
{
    if (text.size() < prefix.size())
        return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(text[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    text = trim(std::string_view(text).substr(prefix.size()));
    return true;
}

std::string collapse(std::string_view text)
{
    std::string out;
    bool space = false;
    for (unsigned char c: text)
    {
        if (std::isspace(c))
        {
            space = !out.empty();
            continue;
        }
        if (space)
            out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

bool usesGuide(ExecutionMode mode)
{
    return mode != ExecutionMode::Direct;
}

bool usesHints(ExecutionMode mode)
{
    return mode == ExecutionMode::Full || mode == ExecutionMode::NoMilestoneDemos;
}

GroupMetrics summarize(const std::vector<const EpisodeRecord*>& records)
{
    GroupMetrics g;
    g.episodes = records.size();
    double reward = 0.0;
    double steps = 0.0;
    for (const auto* r: records)
    {
        if (r->error)
        {
            ++g.error_count;
            continue;
        }
        g.successes += r->success ? 1 : 0;
        reward += r->reward;
        steps += r->steps_taken;
    }
    const auto counted = g.episodes - g.error_count;
    g.defined = counted > 0;
    if (g.defined)
    {
        g.success_rate = static_cast<double>(g.successes) / static_cast<double>(counted);
        g.avg_reward = reward / static_cast<double>(counted);
        g.avg_steps = steps / static_cast<double>(counted);
    }
    return g;
}

Json groupToJson(const GroupMetrics& g)
{
    return {{"success_rate", g.success_rate},
            {"avg_reward", g.avg_reward},
            {"avg_steps", g.avg_steps},
            {"error_count", g.error_count},
            {"episodes", g.episodes},
            {"successes", g.successes},
            {"defined", g.defined}};
}

} // namespace

void ExecConfig::validate() const
{
    if (max_steps < 1)
        throw Error("max_steps must be >= 1");
    if (m < 1 || p < 1)
        throw Error("m and p must be >= 1");
    request.validate();
}

std::string parse_action(std::string_view raw)
{
    std::string line;
    std::size_t start = 0;
    while (start <= raw.size())
    {
        auto end = raw.find('\n', start);
        if (end == std::string_view::npos)
            end = raw.size();
        line = trim(raw.substr(start, end - start));
        if (!line.empty())
            break;
        start = end + 1;
    }

    stripPrefixIgnoreCase(line, "action:");
    while (!line.empty() && line.front() == '>')
        line = trim(std::string_view(line).substr(1));
    for (auto quote: {'"', '\'', '`'})
        if (line.size() >= 2 && line.front() == quote && line.back() == quote)
            line = trim(std::string_view(line).substr(1, line.size() - 2));

    auto action = collapse(line);
    if (action.empty())
        throw EmptyAction("no action in model output");
    return action;
}

std::string parse_action_or_noop(std::string_view raw)
{
    try
    {
        return parse_action(raw);
    }
    catch (const EmptyAction&)
    {
        return std::string(kNoopAction);
    }
}

std::string build_action_prompt(const TaskInstruction& task,
                                const MilestoneGuide* guide,
                                const Trajectory& history,
                                const std::vector<TaskBundle>& bundles,
                                const StepHint* hint,
                                ExecutionMode mode,
                                const PromptStore& prompts)
{
    std::string demos;
    for (const auto& b: bundles)
    {
        if (!demos.empty())
            demos += "\n\n";
        demos += render_trajectory(b.trajectory);
    }
    if (demos.empty())
        demos = kNoReferences;

    std::map<std::string, std::string> values {{"TASK_DEMOS", demos},
                                               {"TRAJECTORY", render_trajectory(history)},
                                               {"TASK", escape_line(task.text())}};
    std::set<std::string> sections;
    if (guide && usesGuide(mode))
    {
        sections.insert("GUIDE");
        values["GUIDE"] = render_guide(guide->milestones);
    }
    if (hint && usesHints(mode))
    {
        sections.insert("HINT");
        values["HINT"] = render_hint(*hint);
    }
    return prompts.get(kActionPrompt).render(values, sections);
}

EpisodeRecord run_episode(const TaskInstruction& task,
                          Environment& env,
                          const EpisodeServices& services,
                          llm::Backend& backend,
                          const ExecConfig& config)
{
    config.validate();

    EpisodeRecord record;
    record.task = task;
    record.mode = config.mode;
    record.seed = config.seed;
    record.initial_observation = env.reset();

    Trajectory history {"episode", task, {Step {record.initial_observation, std::string(kStartAction)}}};

    auto ask = [&](const std::string& prompt) {
        auto request = config.request;
        request.prompt = prompt;
        ++record.llm_calls;
        return llm::complete(backend, request);
    };

    try
    {
        const auto taskVec = services.embedder.embed(task.text());
        const auto bundles = services.library.retrieve_tasks(taskVec, config.m, config.exclude_traj_ids);

        std::optional<MilestoneTracker> tracker;
        if (usesGuide(config.mode))
        {
            auto milestones = parse_guide(ask(build_guide_prompt(task, bundles, services.prompts)));
            if (milestones.empty())
                record.guide_fallback = true;
            else
            {
                record.guide = MilestoneGuide {task, std::move(milestones)};
                tracker.emplace(record.guide->size());
            }
        }
        const auto mode = record.guide ? config.mode : ExecutionMode::Direct;

        for (int t = 0; t < config.max_steps; ++t)
        {
            EpisodeStep step;
            if (usesHints(mode))
            {
                const auto& milestone = record.guide->milestones[static_cast<std::size_t>(tracker->current() - 1)];
                std::vector<MilestoneReference> refs;
                if (mode == ExecutionMode::Full)
                    refs = services.library.retrieve_milestones(services.embedder.embed(milestone.description),
                                                                config.p, config.exclude_traj_ids);
                const auto prompt = build_hint_prompt(*record.guide, milestone, history, refs, services.prompts);
                step.hint_digest = sha256_hex(prompt);
                if (config.verbose_prompts)
                    step.hint_prompt = prompt;
                try
                {
                    step.hint = parse_hint(ask(prompt));
                    tracker = advance(*tracker, *step.hint);
                }
                catch (const UnparseableHint&)
                {
                    step.hint.reset();
                }
            }

            const auto prompt = build_action_prompt(task, record.guide ? &*record.guide : nullptr, history, bundles,
                                                    step.hint ? &*step.hint : nullptr, mode, services.prompts);
            step.action_digest = sha256_hex(prompt);
            if (config.verbose_prompts)
                step.action_prompt = prompt;
            step.action = parse_action_or_noop(ask(prompt));

            auto result = env.step(step.action);
            step.observation = result.observation;
            step.milestone_index = tracker ? tracker->current() : 0;
            history.steps.push_back(Step {step.observation, step.action});
            record.steps.push_back(std::move(step));
            record.success = result.success;
            record.reward = result.reward;
            if (result.done)
                break;
        }
    }
    catch (const llm::GatewayError& e)
    {
        record.error = e.what();
        record.success = false;
        record.reward = 0.0;
    }

    record.steps_taken = static_cast<int>(record.steps.size());
    return record;
}

Metrics compute_metrics(const std::vector<EpisodeRecord>& records, const std::vector<std::string>& kinds)
{
    if (kinds.size() != records.size())
        throw Error("one kind label per record required");
    std::vector<const EpisodeRecord*> all;
    std::map<std::string, std::vector<const EpisodeRecord*>> grouped;
    for (std::size_t i = 0; i < records.size(); ++i)
    {
        all.push_back(&records[i]);
        grouped[kinds[i]].push_back(&records[i]);
    }
    Metrics m;
    m.overall = summarize(all);
    for (const auto& [kind, group]: grouped)
        m.by_kind[kind] = summarize(group);
    return m;
}

Json to_json(const Metrics& metrics)
{
    auto j = groupToJson(metrics.overall);
    Json kinds = Json::object();
    for (const auto& [kind, g]: metrics.by_kind)
        kinds[kind] = groupToJson(g);
    j["by_kind"] = std::move(kinds);
    return j;
}

EvalResult evaluate(const std::vector<EvalTask>& tasks,
                    const EpisodeServices& services,
                    llm::Backend& backend,
                    const ExecConfig& config,
                    std::size_t parallel)
{
    if (tasks.empty())
        throw Error("evaluate needs at least one task");
    config.validate();

    EvalResult result;
    result.records.resize(tasks.size());
    std::vector<std::exception_ptr> failures(tasks.size());
    std::atomic<std::size_t> next {0};

    auto worker = [&] {
        for (auto i = next++; i < tasks.size(); i = next++)
        {
            try
            {
                auto cfg = config;
                cfg.seed = tasks[i].seed;
                auto env = tasks[i].make_env();
                result.records[i] = run_episode(tasks[i].task, *env, services, backend, cfg);
            }
            catch (...)
            {
                failures[i] = std::current_exception();
            }
        }
    };

    const auto width = std::clamp<std::size_t>(parallel, 1, tasks.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < width; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& th: pool)
        th.join();
    for (const auto& f: failures)
        if (f)
            std::rethrow_exception(f);

    std::vector<std::string> kinds;
    for (const auto& t: tasks)
        kinds.push_back(t.kind);
    result.metrics = compute_metrics(result.records, kinds);
    return result;
}

} // namespace hiplan
