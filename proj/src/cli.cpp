#include "metamorph/cli.hpp"

#include <CLI11.hpp>

#include <sstream>

#include "metamorph/workflow.hpp"

namespace metamorph {

namespace fs = std::filesystem;

namespace {

struct Flags {
    SessionConfig config;
    std::optional<double> grid_start;
    std::optional<double> grid_stop;
    std::optional<double> grid_step;
    std::string bridge_cmd;
    bool no_timings = false;
};

void add_session_flags(CLI::App *cmd, Flags &f) {
    SessionConfig &c = f.config;
    cmd->add_option("--sut", c.sut_ref, "System under test: builtin:loc or a path to an .fmu")->capture_default_str();
    cmd->add_option("--requirements", c.requirements, "Requirements document (tagged markdown)")->required();
    cmd->add_option("--provider", c.provider, "rule-based, llm or replay")->capture_default_str();
    cmd->add_option("--replay-file", c.replay_file, "Replay file for the replay provider");
    cmd->add_option("--model", c.model, "Chat model name for the llm and replay providers")->capture_default_str();
    cmd->add_option("--seed", c.rng_seed, "Random seed")->capture_default_str();
    cmd->add_option("--iterations", c.max_iterations, "Maximum number of iterations")->capture_default_str();
    cmd->add_option("--mr-count", c.mr_count, "MRs to generate per iteration")->capture_default_str();
    cmd->add_option("--tests-per-mr", c.test_cases_per_mr, "Test cases to generate per MR")->capture_default_str();
    cmd->add_option("--repair-attempts", c.repair_attempts, "MR repair rounds during refinement")
        ->capture_default_str();
    cmd->add_option("--system-name", c.system_name, "System name (defaults to the model name)");
    cmd->add_option("--system-abv", c.system_abv, "System abbreviation");
    cmd->add_option("--grid-start", f.grid_start, "Simulation start time (s)");
    cmd->add_option("--grid-stop", f.grid_stop, "Simulation stop time (s)");
    cmd->add_option("--grid-step", f.grid_step, "Simulation step (s)");
    cmd->add_option("--bridge-cmd", f.bridge_cmd, "Command line of the FMU bridge process");
    cmd->add_flag("--no-timings", f.no_timings, "Record zero durations (byte-identical reruns)");
}

void finish_config(Flags &f, const fs::path &out, int jobs) {
    SessionConfig &c = f.config;
    c.output_dir = out;
    c.jobs = jobs;
    c.record_timings = !f.no_timings;
    if (!f.bridge_cmd.empty()) {
        std::istringstream words(f.bridge_cmd);
        c.bridge_command.clear();
        for (std::string w; words >> w;) {
            c.bridge_command.push_back(w);
        }
    }
    const int given = (f.grid_start ? 1 : 0) + (f.grid_stop ? 1 : 0) + (f.grid_step ? 1 : 0);
    if (given != 0 && given != 3) {
        throw ConfigError("--grid-start, --grid-stop and --grid-step must be given together");
    }
    if (given == 3) {
        try {
            c.sim_grid = TimeGrid(*f.grid_start, *f.grid_stop, *f.grid_step);
        } catch (const GridError &e) {
            throw ConfigError(e.what());
        }
    }
    c.validate();
}

/// Removes artifacts of an earlier session in `out`.
void clear_artifacts(const fs::path &out) {
    if (!fs::exists(out)) {
        return;
    }
    for (const char *name : {"state.json", "session_report.json", "report.md", "extraction"}) {
        fs::remove_all(out / name);
    }
    for (const auto &entry : fs::directory_iterator(out)) {
        if (entry.is_directory() && entry.path().filename().string().starts_with("iteration_")) {
            fs::remove_all(entry.path());
        }
    }
}

void print_summary(const SessionReport &r, const fs::path &out, std::ostream &os) {
    os << "coverage " << r.coverage.percent() << "% (" << r.coverage.covered << "/" << r.coverage.total
       << " test conditions)\n";
    os << "tests " << r.tests.executed << " executed, " << r.tests.passed << " passed (" << r.tests.pass_rate()
       << "%), " << r.tests.failed << " failed (" << r.tests.fail_rate() << "%)\n";
    if (r.mutation) {
        os << "mutation " << r.mutation->generated << " mutants, " << r.mutation->killed << " killed, score "
           << r.mutation->score_display() << "\n";
    } else {
        os << "mutation none (no passed tests)\n";
    }
    os << "report " << (out / "session_report.json").string() << "\n";
}

std::string phase_list(std::initializer_list<Phase> phases) {
    std::string s;
    for (Phase p : phases) {
        s += (s.empty() ? "" : "/") + to_string(p);
    }
    return s;
}

int run_step(const fs::path &out, const std::string &name, std::initializer_list<Phase> phases,
             const AdvanceOptions &options, std::optional<int> jobs, std::ostream &os, std::ostream &err) {
    if (!Session::exists(out)) {
        err << "error: no session in " << out.string() << " (run `extract` first)\n";
        return kExitPhaseFailure;
    }
    Session session = Session::resume(out);
    if (jobs) {
        session.mutable_config().jobs = *jobs;
    }
    const Phase at = session.state().phase;
    if (std::find(phases.begin(), phases.end(), at) == phases.end()) {
        err << "error: session is at phase " << to_string(at) << "; `" << name << "` runs " << phase_list(phases)
            << "\n";
        return kExitPhaseFailure;
    }
    session.run_phases(phases, options);
    os << name << ": session now at phase " << to_string(session.state().phase) << " (iteration "
       << session.state().iteration << ")\n";
    return kExitOk;
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Metamorphic testing engine for FMU-style simulation models"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    Flags run_flags;
    Flags extract_flags;
    fs::path dir = "out";
    int jobs = 1;
    std::optional<int> step_jobs;

    auto *run = app.add_subcommand("run", "Run a complete session");
    add_session_flags(run, run_flags);
    auto *extract = app.add_subcommand("extract", "Start a session and run extraction");
    add_session_flags(extract, extract_flags);
    for (auto *cmd : {run, extract}) {
        cmd->add_option("--out", dir, "Artifact directory")->capture_default_str();
        cmd->add_option("--jobs", jobs, "Worker threads for execution and mutation")->capture_default_str();
    }

    auto *gen_mrs = app.add_subcommand("generate-mrs", "MR generation and refinement");
    auto *gen_tests = app.add_subcommand("generate-tests", "Test generation and validation");
    auto *execute = app.add_subcommand("execute", "Input instantiation and test execution");
    auto *mutate = app.add_subcommand("mutate", "Mutation analysis (fails without passed tests)");
    auto *report = app.add_subcommand("report", "Close the iteration and write the session report");
    auto *resume = app.add_subcommand("resume", "Continue a session from its last persisted phase");
    for (auto *cmd : {gen_mrs, gen_tests, execute, mutate, report, resume}) {
        cmd->add_option("--out", dir, "Artifact directory")->capture_default_str();
        cmd->add_option("--jobs", step_jobs, "Worker threads for execution and mutation");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run || *extract) {
            Flags &f = *run ? run_flags : extract_flags;
            finish_config(f, dir, jobs);
            clear_artifacts(dir);
            Session session(f.config);
            if (*run) {
                const SessionReport r = session.run();
                print_summary(r, dir, out);
            } else {
                session.run_phases({Phase::Init, Phase::Extraction});
                const auto &ex = *session.state().extraction;
                out << "extract: " << ex.test_conditions.size() << " test conditions, " << ex.relationships.size()
                    << " variable relationships\n";
            }
            return kExitOk;
        }
        if (*gen_mrs) {
            return run_step(dir, "generate-mrs", {Phase::MrGeneration, Phase::MrRefinement}, {}, step_jobs, out, err);
        }
        if (*gen_tests) {
            return run_step(dir, "generate-tests", {Phase::TestGeneration, Phase::TestValidation}, {}, step_jobs, out,
                            err);
        }
        if (*execute) {
            return run_step(dir, "execute", {Phase::Instantiation, Phase::Execution}, {}, step_jobs, out, err);
        }
        if (*mutate) {
            if (!Session::exists(dir)) {
                err << "error: NoPassedTests: no executed tests in " << dir.string() << "\n";
                return kExitPhaseFailure;
            }
            AdvanceOptions strict;
            strict.strict_mutation = true;
            return run_step(dir, "mutate", {Phase::MutationAnalysis}, strict, step_jobs, out, err);
        }
        if (*report) {
            if (Session::exists(dir)) {
                Session session = Session::resume(dir);
                if (session.state().phase == Phase::Completed) {
                    session.write_reports();
                    print_summary(session.report(), dir, out);
                    return kExitOk;
                }
            }
            const int code = run_step(dir, "report", {Phase::IterationEnd}, {}, step_jobs, out, err);
            if (code == kExitOk) {
                print_summary(Session::resume(dir).report(), dir, out);
            }
            return code;
        }
        if (*resume) {
            if (!Session::exists(dir)) {
                err << "error: no session in " << dir.string() << "\n";
                return kExitPhaseFailure;
            }
            Session session = Session::resume(dir);
            if (step_jobs) {
                session.mutable_config().jobs = *step_jobs;
            }
            print_summary(session.run(), dir, out);
            return kExitOk;
        }
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitPhaseFailure;
    }
    return kExitUsage;
}

} // namespace metamorph
