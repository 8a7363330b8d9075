#include "metamorph/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "metamorph/parallel.hpp"
#include "metamorph/schema.hpp"

namespace metamorph {

namespace fs = std::filesystem;

namespace {

constexpr Phase kPhaseOrder[] = {Phase::Init,           Phase::Extraction,     Phase::MrGeneration,
                                 Phase::MrRefinement,   Phase::TestGeneration, Phase::TestValidation,
                                 Phase::Instantiation,  Phase::Execution,      Phase::MutationAnalysis,
                                 Phase::IterationEnd,   Phase::Completed};

int order(Phase p) { return static_cast<int>(p); }

Phase next_phase(Phase p) { return kPhaseOrder[order(p) + 1]; }

Json mr_array(const std::vector<MetamorphicRelation> &mrs) {
    Json a = Json::array();
    for (const auto &mr : mrs) {
        a.push_back(mr.to_json());
    }
    return a;
}

std::vector<MetamorphicRelation> mrs_from(const Json &a, const std::string &path) {
    std::vector<MetamorphicRelation> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(parse_mr(a[i], json_path(path, i)));
    }
    return out;
}

std::vector<std::string> string_list(const Json &a, const std::string &path) {
    if (!a.is_array()) {
        throw SchemaError(path, "ExpectedArray");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(expect_string(a[i], json_path(path, i)));
    }
    return out;
}

} // namespace

std::string to_string(Phase p) {
    static const char *names[] = {"Init",          "Extraction", "MrGeneration",     "MrRefinement",
                                  "TestGeneration", "TestValidation", "Instantiation", "Execution",
                                  "MutationAnalysis", "IterationEnd", "Completed"};
    return names[order(p)];
}

std::optional<Phase> parse_phase(std::string_view text) {
    for (Phase p : kPhaseOrder) {
        if (to_string(p) == text) {
            return p;
        }
    }
    return std::nullopt;
}

std::string phase_dir(Phase p) {
    static const char *names[] = {"init",          "extraction",      "mr_generation", "mr_refinement",
                                  "test_generation", "test_validation", "instantiation", "execution",
                                  "mutation_analysis", "iteration_end", "completed"};
    return names[order(p)];
}

// ---------------------------------------------------------------------------
// Config

void SessionConfig::validate() const {
    auto check = [](bool ok, const std::string &what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    check(max_iterations >= 1, "max_iterations must be >= 1");
    check(mr_count >= 1, "mr_count must be >= 1");
    check(test_cases_per_mr >= 1, "test_cases_per_mr must be >= 1");
    check(repair_attempts >= 0, "repair_attempts must be >= 0");
    check(jobs >= 1, "jobs must be >= 1");
    check(!sut_ref.empty(), "sut_ref is empty");
    check(!requirements.empty(), "requirements path is empty");
    check(provider == "rule-based" || provider == "llm" || provider == "replay",
          "unknown provider '" + provider + "' (rule-based, llm, replay)");
    check(provider != "replay" || !replay_file.empty(), "the replay provider needs a replay file");
    check(!bridge_command.empty(), "bridge command is empty");
    relation_defaults.validate();
}

Json SessionConfig::to_json() const {
    return Json{{"system_name", system_name},
                {"system_abv", system_abv},
                {"sut_ref", sut_ref},
                {"requirements", requirements.generic_string()},
                {"max_iterations", max_iterations},
                {"mr_count", mr_count},
                {"test_cases_per_mr", test_cases_per_mr},
                {"provider", provider},
                {"replay_file", replay_file.generic_string()},
                {"model", model},
                {"rng_seed", rng_seed},
                {"sim_grid", sim_grid ? sim_grid->to_json() : Json(nullptr)},
                {"relation_defaults", relation_defaults.to_json()},
                {"repair_attempts", repair_attempts},
                {"jobs", jobs},
                {"record_timings", record_timings},
                {"bridge_command", bridge_command}};
}

SessionConfig SessionConfig::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    SessionConfig c;
    c.system_name = r.string("system_name");
    c.system_abv = r.string("system_abv");
    c.sut_ref = r.string("sut_ref");
    c.requirements = r.string("requirements");
    c.max_iterations = static_cast<int>(r.integer("max_iterations"));
    c.mr_count = static_cast<int>(r.integer("mr_count"));
    c.test_cases_per_mr = static_cast<int>(r.integer("test_cases_per_mr"));
    c.provider = r.string("provider");
    c.replay_file = r.string("replay_file");
    c.model = r.string("model");
    c.rng_seed = static_cast<std::uint64_t>(r.integer("rng_seed"));
    if (const Json &g = r.required("sim_grid"); !g.is_null()) {
        c.sim_grid = TimeGrid::from_json(g, r.path_of("sim_grid"));
    }
    c.relation_defaults = ToleranceConfig::from_json(r.required("relation_defaults"), r.path_of("relation_defaults"));
    c.repair_attempts = static_cast<int>(r.integer("repair_attempts"));
    c.jobs = static_cast<int>(r.integer("jobs"));
    c.record_timings = r.boolean("record_timings");
    c.bridge_command = string_list(r.required("bridge_command"), r.path_of("bridge_command"));
    r.finish();
    return c;
}

// ---------------------------------------------------------------------------
// Results

Json TestResult::to_json() const {
    Json rel = Json::array();
    for (const auto &r : relations) {
        rel.push_back(r.to_json());
    }
    return Json{{"test_id", test_id},
                {"mr_id", mr_id},
                {"passed", verdict.passed},
                {"relations", std::move(rel)},
                {"verdict", verdict.to_json()},
                {"seed_outputs", seed_outputs.to_json()},
                {"followup_outputs", followup_outputs.to_json()}};
}

TestResult TestResult::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    const std::string test_id = r.string("test_id");
    const std::string mr_id = r.string("mr_id");
    r.ignore("passed");
    std::vector<RelationSpec> relations;
    const Json &rel = r.required("relations");
    for (std::size_t i = 0; i < rel.size(); ++i) {
        relations.push_back(RelationSpec::from_json(rel[i], json_path(r.path_of("relations"), i)));
    }
    TestVerdict verdict = TestVerdict::from_json(r.required("verdict"), r.path_of("verdict"));
    SignalBundle seed = SignalBundle::from_json(r.required("seed_outputs"), r.path_of("seed_outputs"));
    SignalBundle followup = SignalBundle::from_json(r.required("followup_outputs"), r.path_of("followup_outputs"));
    r.finish();
    return TestResult{test_id, mr_id, std::move(relations), std::move(verdict), std::move(seed), std::move(followup)};
}

void SessionState::reset_iteration() {
    current_mrs.clear();
    current_raw_tests.clear();
    current_tests.clear();
    current_inputs.clear();
    current_results.clear();
    current_mutation.reset();
}

// ---------------------------------------------------------------------------
// Providers

std::unique_ptr<Provider> make_provider(const SessionConfig &config) {
    if (config.provider == "rule-based") {
        return std::make_unique<RuleBasedProvider>();
    }
    if (config.provider == "llm") {
        return std::make_unique<LlmProvider>(HttpTransport::from_environment(config.model), config.model);
    }
    if (config.provider == "replay") {
        return std::make_unique<LlmProvider>(std::make_unique<ReplayTransport>(config.replay_file), config.model);
    }
    throw ConfigError("unknown provider '" + config.provider + "'");
}

// ---------------------------------------------------------------------------
// Session

namespace {

Json state_json(const SessionConfig &config, const SessionState &s) {
    Json history = Json::array();
    for (const auto &batch : s.mr_history) {
        history.push_back(mr_array(batch));
    }
    Json rows = Json::array();
    for (const auto &row : s.rows) {
        rows.push_back(row.to_json());
    }
    Json j{{"config", config.to_json()},
           {"phase", to_string(s.phase)},
           {"iteration", s.iteration},
           {"next_mr_id", s.next_mr_id},
           {"mr_history", std::move(history)},
           {"session_mrs", mr_array(s.session_mrs)},
           {"rows", std::move(rows)},
           {"stats", s.stats.to_json(0, 0, 0)}};
    j["error"] = s.error ? Json{{"phase", to_string(s.error->phase)}, {"message", s.error->message}} : Json(nullptr);
    return j;
}

std::string csv_name(const std::string &test_id, const char *side) { return test_id + "_" + side + ".csv"; }

} // namespace

Session::Session(SessionConfig config) : config_(std::move(config)) { config_.validate(); }

Session::Session(SessionConfig config, SessionState state) : config_(std::move(config)), state_(std::move(state)) {}

Session::~Session() = default;
Session::Session(Session &&) noexcept = default;
Session &Session::operator=(Session &&) noexcept = default;

bool Session::exists(const fs::path &output_dir) { return fs::exists(output_dir / "state.json"); }

Session Session::resume(const fs::path &output_dir) {
    const Json payload = read_document(output_dir / "state.json", "state");
    ObjectReader r(payload, ".");
    SessionConfig config = SessionConfig::from_json(r.required("config"), ".config");
    config.output_dir = output_dir;
    config.validate();
    SessionState s;
    auto phase = parse_phase(r.string("phase"));
    if (!phase) {
        throw SchemaError(".phase", "UnknownPhase");
    }
    s.phase = *phase;
    s.iteration = static_cast<int>(r.integer("iteration"));
    s.next_mr_id = static_cast<int>(r.integer("next_mr_id"));
    const Json &history = r.required("mr_history");
    for (std::size_t i = 0; i < history.size(); ++i) {
        s.mr_history.push_back(mrs_from(history[i], json_path(".mr_history", i)));
    }
    s.session_mrs = mrs_from(r.required("session_mrs"), ".session_mrs");
    const Json &rows = r.required("rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.rows.push_back(IterationRow::from_json(rows[i], json_path(".rows", i)));
    }
    s.stats = RuntimeStats::from_json(r.required("stats"), ".stats");
    if (const Json &e = r.required("error"); !e.is_null()) {
        s.error = PhaseError{parse_phase(e.at("phase").get<std::string>()).value_or(s.phase),
                             e.at("message").get<std::string>()};
    }
    r.finish();

    Session session(std::move(config), std::move(s));
    SessionState &st = session.state_;
    const int at = order(st.phase);
    const bool in_iteration = st.phase != Phase::Completed;
    if (at > order(Phase::Extraction)) {
        st.extraction = ExtractionOutput::from_json(read_document(output_dir / "extraction" / "extraction.json",
                                                                  "extraction"));
    }
    auto done = [&](Phase p) { return in_iteration && at > order(p); };
    const int k = st.iteration;
    if (done(Phase::MrGeneration) && !done(Phase::MrRefinement)) {
        st.current_mrs = mrs_from(
            read_document(session.artifact_path(k, Phase::MrGeneration, "mrs.json"), "mrs").at("mrs"), ".mrs");
    }
    if (done(Phase::MrRefinement)) {
        st.current_mrs =
            mrs_from(read_document(session.artifact_path(k, Phase::MrRefinement, "refined_mrs.json"), "refined_mrs")
                         .at("mrs"),
                     ".mrs");
    }
    if (done(Phase::TestGeneration)) {
        const Json t = read_document(session.artifact_path(k, Phase::TestGeneration, "tests.json"), "tests");
        st.current_raw_tests.assign(t.at("tests").begin(), t.at("tests").end());
    }
    if (done(Phase::TestValidation)) {
        const Json t =
            read_document(session.artifact_path(k, Phase::TestValidation, "validated_tests.json"), "validated_tests");
        for (std::size_t i = 0; i < t.at("tests").size(); ++i) {
            st.current_tests.push_back(TestCase::from_json(t.at("tests")[i], json_path(".tests", i)));
        }
    }
    if (done(Phase::Instantiation)) {
        const Json t = read_document(session.artifact_path(k, Phase::Instantiation, "inputs.json"), "inputs");
        for (const auto &e : t.at("tests")) {
            st.current_inputs.push_back(InstantiatedTest{
                e.at("test_id").get<std::string>(), e.at("mr_id").get<std::string>(),
                InstantiatedInputs{SignalBundle::from_json(e.at("seed")), SignalBundle::from_json(e.at("followup"))}});
        }
    }
    if (done(Phase::Execution)) {
        const Json t = read_document(session.artifact_path(k, Phase::Execution, "results.json"), "results");
        for (std::size_t i = 0; i < t.at("results").size(); ++i) {
            st.current_results.push_back(TestResult::from_json(t.at("results")[i], json_path(".results", i)));
        }
    }
    if (done(Phase::MutationAnalysis)) {
        const Json t =
            read_document(session.artifact_path(k, Phase::MutationAnalysis, "mutation_report.json"), "mutation_report");
        if (!t.at("report").is_null()) {
            st.current_mutation = MutationReport::from_json(t.at("report"), ".report");
        }
    }
    return session;
}

const SutDescriptor &Session::descriptor() const {
    if (!descriptor_) {
        descriptor_ = resolve_sut(config_.sut_ref);
    }
    return *descriptor_;
}

const TimeGrid &Session::grid() const {
    if (!grid_) {
        if (config_.sim_grid) {
            grid_ = config_.sim_grid;
        } else {
            const InterfaceSpec &iface =
                state_.extraction ? state_.extraction->variables : descriptor().interface;
            const auto &de = iface.default_experiment;
            if (de && de->start && de->stop && de->step) {
                grid_ = TimeGrid(*de->start, *de->stop, *de->step);
            } else {
                grid_ = TimeGrid(0.0, 3000.0, 1.0);
            }
        }
    }
    return *grid_;
}

Provider &Session::provider() {
    if (!provider_) {
        provider_ = make_provider(config_);
    }
    return *provider_;
}

Sut &Session::sut() {
    if (!sut_) {
        SutOptions options;
        options.bridge_command = config_.bridge_command;
        sut_ = open_sut(descriptor(), options);
    }
    return *sut_;
}

fs::path Session::artifact_path(int iteration, Phase phase, const std::string &file) const {
    if (phase == Phase::Extraction) {
        return config_.output_dir / "extraction" / file;
    }
    return config_.output_dir / ("iteration_" + std::to_string(iteration)) / phase_dir(phase) / file;
}

void Session::persist_state() const {
    write_document(config_.output_dir / "state.json", "state", state_json(config_, state_));
}

SessionReport Session::report() const {
    SessionReport r;
    r.system_name = config_.system_name;
    r.sut = config_.sut_ref;
    r.provider = config_.provider;
    r.rng_seed = config_.rng_seed;
    r.iterations = static_cast<int>(state_.rows.size());
    r.rows = state_.rows;
    r.runtime = state_.stats;
    if (state_.extraction) {
        r.coverage = requirement_coverage(*state_.extraction, state_.session_mrs);
    }
    for (const auto &row : state_.rows) {
        r.mr_summary.generated += row.mrs.generated;
        r.mr_summary.dropped += row.mrs.dropped;
        r.mr_summary.refined_survivors += row.mrs.refined_survivors;
        r.tests.generated += row.tests.generated;
        r.tests.executed += row.tests.executed;
        r.tests.passed += row.tests.passed;
        r.tests.failed += row.tests.failed;
        if (row.mutation) {
            if (!r.mutation) {
                r.mutation = MutationReport{};
            }
            r.mutation->generated += row.mutation->generated;
            r.mutation->killed += row.mutation->killed;
            r.mutation->discarded_null += row.mutation->discarded_null;
            for (const auto &[name, c] : row.mutation->per_operator) {
                r.mutation->per_operator[name].generated += c.generated;
                r.mutation->per_operator[name].killed += c.killed;
            }
        }
    }
    return r;
}

void Session::write_reports() const {
    const SessionReport r = report();
    write_document(config_.output_dir / "session_report.json", "session_report", r.to_json());
    write_text(config_.output_dir / "report.md", render_markdown(r));
}

void Session::advance(const AdvanceOptions &options) {
    if (state_.phase == Phase::Completed) {
        throw Error("session is already completed");
    }
    const Phase phase = state_.phase;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        execute(phase, options);
    } catch (const std::exception &e) {
        state_.error = PhaseError{phase, e.what()};
        try {
            persist_state();
        } catch (const std::exception &) {
        }
        throw PhaseFailure(phase, e.what());
    }
    const double dt = elapsed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    RuntimeStats &st = state_.stats;
    switch (phase) {
    case Phase::Extraction:
        st.extraction += dt;
        break;
    case Phase::MrGeneration:
    case Phase::MrRefinement:
        st.mr_generation += dt;
        break;
    case Phase::TestGeneration:
    case Phase::TestValidation:
        st.test_generation += dt;
        break;
    case Phase::Instantiation:
    case Phase::Execution:
        st.test_execution += dt;
        break;
    case Phase::MutationAnalysis:
        st.mutation_analysis += dt;
        break;
    default:
        break;
    }
    st.total += dt;
    state_.error.reset();
    if (phase == Phase::IterationEnd) {
        write_reports();
        if (state_.iteration < config_.max_iterations) {
            ++state_.iteration;
            state_.reset_iteration();
            state_.phase = Phase::MrGeneration;
        } else {
            state_.phase = Phase::Completed;
        }
    } else {
        state_.phase = next_phase(phase);
    }
    persist_state();
}

SessionReport Session::run(const AdvanceOptions &options) {
    while (state_.phase != Phase::Completed) {
        advance(options);
    }
    return report();
}

void Session::run_phases(std::initializer_list<Phase> phases, const AdvanceOptions &options) {
    while (std::find(phases.begin(), phases.end(), state_.phase) != phases.end()) {
        advance(options);
    }
}

void Session::execute(Phase phase, const AdvanceOptions &options) {
    SessionState &s = state_;
    const int k = s.iteration;
    switch (phase) {
    case Phase::Init: {
        fs::create_directories(config_.output_dir);
        break;
    }
    case Phase::Extraction: {
        const InterfaceSpec &iface = descriptor().interface;
        const RequirementsDoc doc = load_requirements(read_text(config_.requirements), iface);
        ExtractionOutput ex = build_extraction_output(iface, doc);
        write_document(artifact_path(0, Phase::Extraction, "extraction.json"), "extraction", ex.to_json());
        if (config_.system_name.empty()) {
            config_.system_name = iface.model_name;
        }
        s.extraction = std::move(ex);
        s.iteration = 1;
        break;
    }
    case Phase::MrGeneration: {
        ProviderRequest req;
        req.kind = RequestKind::MrGeneration;
        req.extraction = &*s.extraction;
        req.history = s.mr_history;
        req.budget = config_.mr_count;
        req.grid = grid();
        req.rng_seed = config_.rng_seed;
        req.tolerances = config_.relation_defaults;
        std::vector<MetamorphicRelation> mrs;
        try {
            mrs = generate_mrs(provider(), req, s.next_mr_id);
        } catch (const ExhaustedError &) {
        }
        write_document(artifact_path(k, phase, "mrs.json"), "mrs", Json{{"mrs", mr_array(mrs)}});
        s.next_mr_id += static_cast<int>(mrs.size());
        s.current_mrs = std::move(mrs);
        break;
    }
    case Phase::MrRefinement: {
        std::vector<MetamorphicRelation> refined;
        if (!s.current_mrs.empty()) {
            refined = refine_mrs(provider(), s.current_mrs, *s.extraction, config_.repair_attempts,
                                 config_.relation_defaults);
        }
        write_document(artifact_path(k, phase, "refined_mrs.json"), "refined_mrs", Json{{"mrs", mr_array(refined)}});
        if (!refined.empty()) {
            s.mr_history.push_back(refined);
            while (s.mr_history.size() > kHistoryWindow) {
                s.mr_history.pop_front();
            }
        }
        s.current_mrs = std::move(refined);
        break;
    }
    case Phase::TestGeneration: {
        std::vector<Json> raw;
        for (const auto &mr : s.current_mrs) {
            if (mr.dropped()) {
                continue;
            }
            try {
                auto docs = generate_test_documents(provider(), mr, *s.extraction, grid(), config_.test_cases_per_mr,
                                                    config_.rng_seed, config_.relation_defaults);
                raw.insert(raw.end(), docs.begin(), docs.end());
            } catch (const InfeasibleTransform &) {
            }
        }
        write_document(artifact_path(k, phase, "tests.json"), "tests", Json{{"tests", raw}});
        s.current_raw_tests = std::move(raw);
        break;
    }
    case Phase::TestValidation: {
        std::vector<TestCase> tests;
        if (!s.current_raw_tests.empty()) {
            tests = validate_tests(provider(), s.current_raw_tests, *s.extraction, grid(), config_.relation_defaults);
        }
        std::stable_sort(tests.begin(), tests.end(), [](const TestCase &a, const TestCase &b) { return a.id < b.id; });
        Json arr = Json::array();
        for (const auto &t : tests) {
            arr.push_back(t.to_json());
        }
        write_document(artifact_path(k, phase, "validated_tests.json"), "validated_tests", Json{{"tests", arr}});
        s.current_tests = std::move(tests);
        break;
    }
    case Phase::Instantiation: {
        std::vector<InstantiatedTest> out;
        Json arr = Json::array();
        for (const auto &t : s.current_tests) {
            if (t.dropped()) {
                continue;
            }
            InstantiatedTest it{t.id, t.mr_id, instantiate(t.inputs, grid())};
            write_text(artifact_path(k, phase, csv_name(t.id, "seed")), it.inputs.seed.to_csv());
            write_text(artifact_path(k, phase, csv_name(t.id, "followup")), it.inputs.followup.to_csv());
            arr.push_back(Json{{"test_id", t.id},
                               {"mr_id", t.mr_id},
                               {"seed", it.inputs.seed.to_json()},
                               {"followup", it.inputs.followup.to_json()},
                               {"seed_csv", csv_name(t.id, "seed")},
                               {"followup_csv", csv_name(t.id, "followup")}});
            out.push_back(std::move(it));
        }
        write_document(artifact_path(k, phase, "inputs.json"), "inputs", Json{{"grid", grid().to_json()}, {"tests", arr}});
        s.current_inputs = std::move(out);
        break;
    }
    case Phase::Execution: {
        std::map<std::string, const TestCase *> by_id;
        for (const auto &t : s.current_tests) {
            by_id[t.id] = &t;
        }
        Sut &target = sut();
        const int jobs = descriptor().backend == Backend::BuiltinLoc ? config_.jobs : 1;
        std::vector<std::optional<TestResult>> results(s.current_inputs.size());
        parallel_for(s.current_inputs.size(), jobs, [&](std::size_t i) {
            const InstantiatedTest &it = s.current_inputs[i];
            const TestCase &tc = *by_id.at(it.test_id);
            SignalBundle seed_out = target.simulate(it.inputs.seed, grid());
            SignalBundle follow_out = target.simulate(it.inputs.followup, grid());
            TestVerdict verdict = evaluate_relations(tc.relations, seed_out, follow_out, config_.relation_defaults);
            results[i] = TestResult{it.test_id, it.mr_id, tc.relations, std::move(verdict), std::move(seed_out),
                                    std::move(follow_out)};
        });
        std::vector<TestResult> done;
        Json arr = Json::array();
        for (auto &r : results) {
            arr.push_back(r->to_json());
            done.push_back(std::move(*r));
        }
        write_document(artifact_path(k, phase, "results.json"), "results",
                       Json{{"grid", grid().to_json()}, {"results", arr}});
        s.current_results = std::move(done);
        break;
    }
    case Phase::MutationAnalysis: {
        std::vector<ExecutedTest> executed;
        for (const auto &r : s.current_results) {
            executed.push_back(ExecutedTest{r.test_id, r.relations, r.seed_outputs, r.followup_outputs, r.verdict.passed});
        }
        MutationOptions mo;
        mo.jobs = config_.jobs;
        std::optional<MutationReport> report;
        try {
            report = run_mutation_analysis(executed, s.extraction->variables, config_.relation_defaults,
                                           config_.rng_seed, mo);
        } catch (const NoPassedTests &) {
            if (options.strict_mutation) {
                throw;
            }
        }
        write_document(artifact_path(k, phase, "mutation_report.json"), "mutation_report",
                       Json{{"status", report ? "ok" : "no_passed_tests"},
                            {"report", report ? report->to_json() : Json(nullptr)}});
        s.current_mutation = std::move(report);
        break;
    }
    case Phase::IterationEnd: {
        IterationRow row;
        row.iteration = k;
        for (const auto &mr : s.current_mrs) {
            ++row.mrs.generated;
            ++(mr.dropped() ? row.mrs.dropped : row.mrs.refined_survivors);
        }
        std::vector<bool> passed;
        for (const auto &r : s.current_results) {
            passed.push_back(r.verdict.passed);
        }
        row.tests = test_summary(s.current_tests.size(), passed);
        row.coverage = requirement_coverage(*s.extraction, s.current_mrs);
        row.mutation = s.current_mutation;
        if (row.mutation) {
            row.mutation->mutants.clear();
        }
        s.session_mrs.insert(s.session_mrs.end(), s.current_mrs.begin(), s.current_mrs.end());
        s.rows.push_back(std::move(row));
        break;
    }
    case Phase::Completed:
        break;
    }
}

SessionReport run_session(const SessionConfig &config) {
    Session session(config);
    return session.run();
}

} // namespace metamorph
