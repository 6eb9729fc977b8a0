// SPDX-License-Identifier: Apache-2.0
#include "hiplan/cli.hpp"

#include "hiplan/executor.hpp"
#include "hiplan/http_backend.hpp"
#include "hiplan/ingest.hpp"
#include "hiplan/library.hpp"
#include "hiplan/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hiplan::cli
{

namespace
{

std::string fixed(double value, int digits = 2)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << value;
    return s.str();
}

std::string oneLine(std::string_view text)
{
    return escape_line(text);
}

Json readJsonFile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read " + path.string());
    try
    {
        return Json::parse(in);
    }
    catch (const std::exception& e)
    {
        throw Error(path.string() + ": " + e.what());
    }
}

void writeFile(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content))
        throw Error("cannot write " + path.string());
}

struct Common
{
    std::string prompts;
    std::string library;
    std::string backend;
    std::string mode = "full";
    int max_steps = kDefaultMaxSteps;
    std::size_t m = kDefaultTaskK;
    std::size_t p = kDefaultMilestoneK;
    std::vector<std::string> exclude;

    ExecConfig config() const
    {
        ExecConfig c;
        try
        {
            c.mode = parse_mode(mode);
        }
        catch (const Error& e)
        {
            throw UsageError(e.what());
        }
        c.max_steps = max_steps;
        c.m = m;
        c.p = p;
        c.exclude_traj_ids.insert(exclude.begin(), exclude.end());
        try
        {
            c.validate();
        }
        catch (const Error& e)
        {
            throw UsageError(e.what());
        }
        return c;
    }
};

void addExecOptions(CLI::App& cmd, Common& c)
{
    cmd.add_option("--library", c.library, "library file")->required();
    cmd.add_option("--backend", c.backend, "scripted:PATH | http:MODEL | cached:INNER@PATH")->required();
    cmd.add_option("--mode", c.mode, "full | direct | milestone_only | no_milestone_demos")->capture_default_str();
    cmd.add_option("--max-steps", c.max_steps, "step cap")->capture_default_str();
    cmd.add_option("--m", c.m, "task-level demonstrations")->capture_default_str();
    cmd.add_option("--p", c.p, "milestone-level references")->capture_default_str();
    cmd.add_option("--exclude", c.exclude, "traj_id to keep out of retrieval");
}

PromptStore makePrompts(const std::string& dir)
{
    return dir.empty() ? PromptStore() : PromptStore(dir);
}

int cmdBuildLibrary(const std::string& prompts,
                    const std::string& demosPath,
                    const std::string& outPath,
                    const std::string& backendSpec,
                    int dim,
                    bool report,
                    std::ostream& out,
                    std::ostream& err)
{
    if (dim < 1)
        throw UsageError("--dim must be >= 1");
    const auto demos = load_demos(std::filesystem::path(demosPath));
    BackendStack backend(backendSpec);
    auto store = makePrompts(prompts);
    LlmMilestoneExtractor extractor(backend.top(), store);
    HashingEmbedder embedder(dim);
    BuildReport buildReport;
    const auto lib = build_library(demos, extractor, embedder, &buildReport);
    save_library(lib, std::filesystem::path(outPath));

    const auto s = lib.stats();
    out << "entries=" << s.entry_count << " avg_milestones=" << fixed(s.avg_milestones_per_traj) << '\n';
    out << "demos=" << s.demo_count << " avg_actions=" << fixed(s.avg_actions_per_milestone) << '\n';
    if (report)
        for (const auto& item: buildReport.items)
        {
            out << item.traj_id << " milestones=" << item.milestones << " gaps=" << item.gaps << '\n';
            if (item.gaps > 0)
                err << "warning: " << item.traj_id << " leaves " << item.gaps << " step(s) unsegmented\n";
        }
    return exit_code::kOk;
}

int cmdRun(const Common& common,
           const std::string& task,
           const std::string& env,
           std::uint64_t seed,
           const std::string& recordPath,
           bool verbose,
           std::ostream& out,
           std::ostream& err)
{
    auto config = common.config();
    config.seed = seed;
    config.verbose_prompts = verbose;
    const TaskInstruction instruction(task);
    const auto spec = parse_env(env, instruction.text());

    const auto lib = load_library(std::filesystem::path(common.library));
    HashingEmbedder embedder(lib.dimension());
    auto prompts = makePrompts(common.prompts);
    BackendStack backend(common.backend);
    sim::HouseholdEnv household(spec, seed);

    const auto record = run_episode(instruction, household, {lib, embedder, prompts}, backend.top(), config);
    if (!recordPath.empty())
        writeFile(recordPath, to_json(record).dump(2) + "\n");

    out << "success=" << (record.success ? "true" : "false") << " steps=" << record.steps_taken
        << " mode=" << to_string(record.mode) << '\n';
    if (record.error)
    {
        err << "error: " << *record.error << '\n';
        return exit_code::kInternal;
    }
    return record.success ? exit_code::kOk : exit_code::kTaskFailure;
}

int cmdEval(const Common& common,
            const std::string& suitePath,
            std::size_t parallel,
            const std::string& outDir,
            std::optional<double> minSuccess,
            std::ostream& out)
{
    const auto config = common.config();
    if (parallel < 1)
        throw UsageError("--parallel must be >= 1");

    std::ifstream in(suitePath);
    if (!in)
        throw Error("cannot read " + suitePath);
    std::vector<EvalTask> tasks;
    std::string line;
    for (std::size_t lineNo = 1; std::getline(in, line); ++lineNo)
    {
        if (trim(line).empty())
            continue;
        try
        {
            const auto j = Json::parse(line);
            EvalTask t;
            t.task = TaskInstruction(j.at("task").get<std::string>());
            t.seed = j.value("seed", std::uint64_t {0});
            const auto spec = parse_env(j.at("env").get<std::string>(), t.task.text());
            t.kind = std::string(sim::to_string(spec.kind));
            t.make_env = [spec, seed = t.seed] { return std::make_unique<sim::HouseholdEnv>(spec, seed); };
            tasks.push_back(std::move(t));
        }
        catch (const std::exception& e)
        {
            throw UsageError(suitePath + " line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
    if (tasks.empty())
        throw UsageError(suitePath + " holds no tasks");

    const auto lib = load_library(std::filesystem::path(common.library));
    HashingEmbedder embedder(lib.dimension());
    auto prompts = makePrompts(common.prompts);
    BackendStack backend(common.backend);
    const auto result = evaluate(tasks, {lib, embedder, prompts}, backend.top(), config, parallel);

    if (!outDir.empty())
    {
        std::filesystem::create_directories(outDir);
        writeFile(std::filesystem::path(outDir) / "metrics.json", to_json(result.metrics).dump(2) + "\n");
        std::string records;
        for (const auto& r: result.records)
            records += to_json(r).dump() + "\n";
        writeFile(std::filesystem::path(outDir) / "episodes.jsonl", records);
    }

    auto row = [&](const std::string& name, const GroupMetrics& g) {
        out << std::left << std::setw(10) << name << std::right << std::setw(9) << g.episodes << std::setw(9)
            << g.error_count << std::setw(9) << (g.defined ? fixed(g.success_rate) : "n/a") << std::setw(11)
            << fixed(g.avg_reward) << std::setw(10) << fixed(g.avg_steps) << '\n';
    };
    out << std::left << std::setw(10) << "kind" << std::right << std::setw(9) << "episodes" << std::setw(9)
        << "errors" << std::setw(9) << "success" << std::setw(11) << "avg_reward" << std::setw(10) << "avg_steps"
        << '\n';
    for (const auto& [kind, g]: result.metrics.by_kind)
        row(kind, g);
    row("all", result.metrics.overall);

    if (minSuccess)
    {
        const auto& g = result.metrics.overall;
        if (!g.defined || g.success_rate < *minSuccess)
            return exit_code::kBelowThreshold;
    }
    return exit_code::kOk;
}

int inspectMetadata(const std::string& path, std::ostream& out)
{
    const auto j = readJsonFile(path);
    std::size_t demos = 0;
    std::size_t entries = 0;
    std::size_t steps = 0;
    auto row = [&](const std::string& name, const LibraryStats& s) {
        out << std::left << std::setw(10) << name << std::right << std::setw(7) << s.demo_count << std::setw(9)
            << s.entry_count << std::setw(16) << fixed(s.avg_milestones_per_traj) << std::setw(13)
            << fixed(s.avg_actions_per_milestone) << '\n';
    };
    out << std::left << std::setw(10) << "dataset" << std::right << std::setw(7) << "demos" << std::setw(9)
        << "entries" << std::setw(16) << "avg_milestones" << std::setw(13) << "avg_actions" << '\n';
    for (const auto& d: j.at("datasets"))
    {
        const auto s = LibraryStats::from_counts(d.at("demos").get<std::size_t>(), d.at("entries").get<std::size_t>(),
                                                 d.at("segment_steps").get<std::size_t>());
        demos += s.demo_count;
        entries += s.entry_count;
        steps += d.at("segment_steps").get<std::size_t>();
        row(d.at("name").get<std::string>(), s);
    }
    row("Total", LibraryStats::from_counts(demos, entries, steps));
    return exit_code::kOk;
}

int inspectRecord(const std::string& path, std::ostream& out)
{
    const auto record = record_from_json(readJsonFile(path));
    out << "task: " << record.task.text() << '\n';
    out << "mode: " << to_string(record.mode) << " seed: " << record.seed << '\n';
    if (record.guide)
        for (const auto& m: record.guide->milestones)
            out << "guide " << m.index << ": " << m.description << '\n';
    else
        out << "guide: none" << (record.guide_fallback ? " (unparseable, ran direct)" : "") << '\n';
    for (std::size_t t = 0; t < record.steps.size(); ++t)
    {
        const auto& s = record.steps[t];
        out << std::setw(3) << (t + 1) << " | m" << s.milestone_index << " | ";
        if (s.hint)
            out << "hint: " << oneLine(milestone_label({s.hint->milestone_index, s.hint->milestone_text})) << " | ";
        out << "> " << s.action << " | " << oneLine(s.observation) << '\n';
    }
    out << "success=" << (record.success ? "true" : "false") << " steps=" << record.steps_taken
        << " llm_calls=" << record.llm_calls << '\n';
    if (record.error)
        out << "error: " << *record.error << '\n';
    return exit_code::kOk;
}

int inspectLibrary(const std::string& path,
                   const std::optional<std::string>& query,
                   const std::string& level,
                   std::size_t k,
                   std::ostream& out)
{
    const auto lib = load_library(std::filesystem::path(path));
    if (!query)
    {
        const auto s = lib.stats();
        out << "demos=" << s.demo_count << " entries=" << s.entry_count
            << " avg_milestones=" << fixed(s.avg_milestones_per_traj)
            << " avg_actions=" << fixed(s.avg_actions_per_milestone) << " dimension=" << lib.dimension() << '\n';
        return exit_code::kOk;
    }
    if (k < 1)
        throw UsageError("--k must be >= 1");
    HashingEmbedder embedder(lib.dimension());
    const auto q = embedder.embed(*query);
    if (lib.entries().empty())
        return exit_code::kOk;
    if (level == "task")
    {
        std::size_t rank = 0;
        for (const auto& hit: lib.task_index().top_k(q, k))
        {
            const auto& e = lib.entry(hit.id);
            out << ++rank << ' ' << fixed(hit.score, 3) << ' ' << e.traj_id << ' ' << oneLine(e.task.text()) << '\n';
        }
    }
    else
    {
        std::size_t rank = 0;
        for (const auto& hit: lib.milestone_index().top_k(q, k))
        {
            const auto& e = lib.entry(hit.id);
            out << ++rank << ' ' << fixed(hit.score, 3) << " entry=" << e.entry_id << ' ' << e.traj_id << " #"
                << e.milestone_index << ' ' << oneLine(e.milestone_text) << '\n';
        }
    }
    return exit_code::kOk;
}

} // namespace

BackendStack::BackendStack(const std::string& spec)
{
    build(spec);
}

void BackendStack::build(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos || colon + 1 == spec.size())
        throw UsageError("backend spec must be scripted:PATH, http:MODEL or cached:INNER@PATH, got \"" + spec + "\"");
    const auto scheme = spec.substr(0, colon);
    const auto rest = spec.substr(colon + 1);

    if (scheme == "scripted")
        _layers.push_back(std::make_unique<llm::ScriptedBackend>(llm::Transcript::load(rest)));
    else if (scheme == "http")
        _layers.push_back(std::make_unique<llm::HttpBackend>(llm::HttpConfig::from_env(rest)));
    else if (scheme == "cached")
    {
        const auto at = rest.rfind('@');
        if (at == std::string::npos || at == 0 || at + 1 == rest.size())
            throw UsageError("cached backend needs INNER@PATH, got \"" + rest + "\"");
        build(rest.substr(0, at));
        _caches.push_back(std::make_unique<llm::CompletionCache>(std::filesystem::path(rest.substr(at + 1))));
        _layers.push_back(llm::with_cache(*_layers.back(), *_caches.back()));
    }
    else
        throw UsageError("unknown backend scheme \"" + scheme + "\"");
}

sim::TaskSpec parse_env(const std::string& env, const std::string& task)
{
    std::vector<std::string> parts;
    std::stringstream ss(env);
    for (std::string part; std::getline(ss, part, ':');)
        parts.push_back(part);
    if (parts.size() < 2 || parts[0] != "household" || (parts.size() != 2 && parts.size() != 4))
        throw UsageError("env must be household:KIND or household:KIND:OBJECT:TARGET, got \"" + env + "\"");

    sim::TaskKind kind;
    try
    {
        kind = sim::parse_task_kind(parts[1]);
    }
    catch (const Error& e)
    {
        throw UsageError(e.what());
    }
    if (parts.size() == 4)
        return sim::TaskSpec {kind, parts[2], parts[3]};
    auto spec = sim::parse_task_text(task, kind);
    if (!spec)
        throw UsageError("task \"" + task + "\" does not read as a " + parts[1] + " task");
    return *spec;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app {"Hierarchical retrieval-augmented planner"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--prompts", common.prompts, "prompt template directory");

    auto* build = app.add_subcommand("build-library", "segment demonstrations and write a library");
    std::string demos, outPath;
    int dim = HashingEmbedder::kDefaultDimension;
    bool report = false;
    build->add_option("--demos", demos, "demonstration JSONL")->required();
    build->add_option("--out", outPath, "library file to write")->required();
    build->add_option("--backend", common.backend, "extraction backend")->required();
    build->add_option("--dim", dim, "embedding dimension")->capture_default_str();
    build->add_flag("--report", report, "per-trajectory segmentation report");

    auto* run = app.add_subcommand("run", "run one episode");
    std::string task, env, recordPath;
    std::uint64_t seed = 0;
    bool verbose = false;
    run->add_option("--task", task, "task instruction")->required();
    run->add_option("--env", env, "household:KIND[:OBJECT:TARGET]")->required();
    run->add_option("--seed", seed, "world seed")->capture_default_str();
    run->add_option("--record", recordPath, "write the episode record here");
    run->add_flag("--verbose-prompts", verbose, "store full prompts in the record");
    addExecOptions(*run, common);

    auto* ev = app.add_subcommand("eval", "run a task suite");
    std::string suite, outDir;
    std::size_t parallel = 1;
    std::optional<double> minSuccess;
    ev->add_option("--suite", suite, "suite JSONL of {task, env, seed}")->required();
    ev->add_option("--parallel", parallel, "concurrent episodes")->capture_default_str();
    ev->add_option("--out", outDir, "directory for metrics.json and episodes.jsonl");
    ev->add_option("--min-success", minSuccess, "exit 2 below this success rate");
    addExecOptions(*ev, common);

    auto* inspect = app.add_subcommand("inspect", "inspect a library, record or statistics table");
    std::string inspectLib, inspectRec, metadata, level = "milestone";
    std::optional<std::string> query;
    std::size_t k = 5;
    auto* libOpt = inspect->add_option("--library", inspectLib, "library file");
    auto* recOpt = inspect->add_option("--record", inspectRec, "episode record");
    auto* metaOpt = inspect->add_option("--metadata", metadata, "library statistics table");
    auto* queryOpt = inspect->add_option("--query", query, "retrieval query text")->needs(libOpt);
    inspect->add_option("--level", level, "task | milestone")
        ->check(CLI::IsMember({"task", "milestone"}))
        ->needs(queryOpt)
        ->capture_default_str();
    inspect->add_option("--k", k, "results to list")->needs(queryOpt)->capture_default_str();
    libOpt->excludes(recOpt)->excludes(metaOpt);
    recOpt->excludes(metaOpt);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp& e)
    {
        out << app.help();
        return exit_code::kOk;
    }
    catch (const CLI::CallForAllHelp& e)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::kOk;
    }
    catch (const CLI::ParseError& e)
    {
        err << "usage error: " << e.what() << '\n';
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return exit_code::kUsage;
    }

    try
    {
        if (build->parsed())
            return cmdBuildLibrary(common.prompts, demos, outPath, common.backend, dim, report, out, err);
        if (run->parsed())
            return cmdRun(common, task, env, seed, recordPath, verbose, out, err);
        if (ev->parsed())
            return cmdEval(common, suite, parallel, outDir, minSuccess, out);
        if (!metadata.empty())
            return inspectMetadata(metadata, out);
        if (!inspectRec.empty())
            return inspectRecord(inspectRec, out);
        if (!inspectLib.empty())
            return inspectLibrary(inspectLib, query, level, k, out);
        throw UsageError("inspect needs --library, --record or --metadata");
    }
    catch (const UsageError& e)
    {
        err << "usage error: " << e.what() << '\n';
        return exit_code::kUsage;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return exit_code::kInternal;
    }
    catch (...)
    {
        err << "error: unknown failure\n";
        return exit_code::kInternal;
    }
}

} // namespace hiplan::cli
