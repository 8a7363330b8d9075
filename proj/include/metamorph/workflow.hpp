#pragma once

/**
 * @file workflow.hpp
 * @brief Session configuration, the phase state machine and artifact
 *        persistence.
 *
 * Artifact layout under output_dir:
 *
 *     state.json, session_report.json, report.md
 *     extraction/extraction.json
 *     iteration_k/mr_generation/mrs.json
 *     iteration_k/mr_refinement/refined_mrs.json
 *     iteration_k/test_generation/tests.json
 *     iteration_k/test_validation/validated_tests.json
 *     iteration_k/instantiation/inputs.json, <test>_seed.csv, <test>_followup.csv
 *     iteration_k/execution/results.json
 *     iteration_k/mutation_analysis/mutation_report.json
 */

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metamorph/extraction.hpp"
#include "metamorph/generation.hpp"
#include "metamorph/mr.hpp"
#include "metamorph/mutation.hpp"
#include "metamorph/relations.hpp"
#include "metamorph/reporting.hpp"
#include "metamorph/signals.hpp"
#include "metamorph/sut.hpp"

namespace metamorph {

enum class Phase {
    Init,
    Extraction,
    MrGeneration,
    MrRefinement,
    TestGeneration,
    TestValidation,
    Instantiation,
    Execution,
    MutationAnalysis,
    IterationEnd,
    Completed
};

std::string to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view text);
/// Directory name of a phase ("mr_generation").
std::string phase_dir(Phase p);

/// A phase node raised; the session state was persisted with the error.
class PhaseFailure : public Error {
  public:
    PhaseFailure(Phase phase, std::string cause)
        : Error("PhaseFailure(" + to_string(phase) + "): " + cause), phase_(phase), cause_(std::move(cause)) {}
    Phase phase() const noexcept { return phase_; }
    const std::string &cause() const noexcept { return cause_; }

  private:
    Phase phase_;
    std::string cause_;
};

struct SessionConfig {
    std::string system_name;
    std::string system_abv;
    std::string sut_ref = kBuiltinLocId;
    std::filesystem::path requirements;
    std::filesystem::path output_dir = "out";
    int max_iterations = 1;
    int mr_count = 5;
    int test_cases_per_mr = 2;
    /// "rule-based", "llm" or "replay".
    std::string provider = "rule-based";
    std::filesystem::path replay_file;
    std::string model = "gpt-4o-mini";
    std::uint64_t rng_seed = 42;
    /// Defaults to the interface's default experiment, else [0, 3000] step 1.
    std::optional<TimeGrid> sim_grid;
    ToleranceConfig relation_defaults;
    int repair_attempts = 2;
    int jobs = 1;
    /// When false every recorded duration is zero (byte-identical reruns).
    bool record_timings = true;
    std::vector<std::string> bridge_command = SutOptions{}.bridge_command;

    /// Throws ConfigError.
    void validate() const;
    /// Everything except output_dir.
    Json to_json() const;
    static SessionConfig from_json(const Json &j, const std::string &path = ".config");
};

/// Seed and follow-up inputs of one executable test.
struct InstantiatedTest {
    std::string test_id;
    std::string mr_id;
    InstantiatedInputs inputs;
};

struct TestResult {
    std::string test_id;
    std::string mr_id;
    std::vector<RelationSpec> relations;
    TestVerdict verdict;
    SignalBundle seed_outputs;
    SignalBundle followup_outputs;

    Json to_json() const;
    static TestResult from_json(const Json &j, const std::string &path);
};

struct PhaseError {
    Phase phase = Phase::Init;
    std::string message;
};

struct SessionState {
    Phase phase = Phase::Init;
    int iteration = 0;
    int next_mr_id = 1;
    std::optional<ExtractionOutput> extraction;
    /// Most recent last; at most kHistoryWindow batches.
    std::deque<MrBatch> mr_history;
    /// Refined MRs of every completed iteration.
    std::vector<MetamorphicRelation> session_mrs;
    std::vector<IterationRow> rows;
    RuntimeStats stats;
    std::optional<PhaseError> error;

    // Per-iteration artifacts, reloaded from disk on resume.
    std::vector<MetamorphicRelation> current_mrs;
    std::vector<Json> current_raw_tests;
    std::vector<TestCase> current_tests;
    std::vector<InstantiatedTest> current_inputs;
    std::vector<TestResult> current_results;
    std::optional<MutationReport> current_mutation;

    void reset_iteration();
};

/// Provider selected by config.provider. Throws ConfigError, ProviderError.
std::unique_ptr<Provider> make_provider(const SessionConfig &config);

struct AdvanceOptions {
    /// Fail the MutationAnalysis phase on NoPassedTests instead of recording
    /// an empty analysis.
    bool strict_mutation = false;
};

/**
 * Runs the phase stored in a session and persists the outcome. Keeps the
 * provider and the SUT handle alive across phases.
 */
class Session {
  public:
    /// A fresh session at Init. Throws ConfigError.
    explicit Session(SessionConfig config);
    /// Loads <output_dir>/state.json and the current iteration's artifacts.
    static Session resume(const std::filesystem::path &output_dir);
    static bool exists(const std::filesystem::path &output_dir);
    ~Session();
    Session(Session &&) noexcept;
    Session &operator=(Session &&) noexcept;

    const SessionConfig &config() const noexcept { return config_; }
    const SessionState &state() const noexcept { return state_; }
    SessionConfig &mutable_config() noexcept { return config_; }
    const TimeGrid &grid() const;

    /// Executes exactly one phase. Throws PhaseFailure after persisting.
    void advance(const AdvanceOptions &options = {});
    /// Advances until Completed.
    SessionReport run(const AdvanceOptions &options = {});
    /// Advances while the phase is one of `phases`.
    void run_phases(std::initializer_list<Phase> phases, const AdvanceOptions &options = {});

    /// Report over the current state.
    SessionReport report() const;
    /// Writes session_report.json and report.md.
    void write_reports() const;

    std::filesystem::path artifact_path(int iteration, Phase phase, const std::string &file) const;

  private:
    Session(SessionConfig config, SessionState state);
    void execute(Phase phase, const AdvanceOptions &options);
    void persist_state() const;
    Provider &provider();
    Sut &sut();
    const SutDescriptor &descriptor() const;
    double elapsed(double seconds) const { return config_.record_timings ? seconds : 0.0; }

    SessionConfig config_;
    SessionState state_;
    mutable std::optional<SutDescriptor> descriptor_;
    mutable std::optional<TimeGrid> grid_;
    std::unique_ptr<Provider> provider_;
    std::unique_ptr<Sut> sut_;
};

/// Fresh session run to completion. Throws ConfigError, PhaseFailure.
SessionReport run_session(const SessionConfig &config);

} // namespace metamorph
