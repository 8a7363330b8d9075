#include <gtest/gtest.h>

#include "metamorph/schema.hpp"
#include "metamorph/workflow.hpp"
#include "support.hpp"

namespace metamorph {
namespace {

using testing::golden_config;
using testing::read_tree;
using testing::TempDir;

TEST(Phases, NamesAndDirectories) {
    EXPECT_EQ(to_string(Phase::MrGeneration), "MrGeneration");
    EXPECT_EQ(phase_dir(Phase::MrGeneration), "mr_generation");
    EXPECT_EQ(phase_dir(Phase::MutationAnalysis), "mutation_analysis");
    for (Phase p : {Phase::Init, Phase::Extraction, Phase::Execution, Phase::IterationEnd, Phase::Completed}) {
        EXPECT_EQ(parse_phase(to_string(p)), p);
    }
    EXPECT_FALSE(parse_phase("Done"));
}

TEST(Session, ArtifactPaths) {
    TempDir dir("paths");
    const Session s(golden_config(dir.path()));
    EXPECT_EQ(s.artifact_path(1, Phase::MrGeneration, "mrs.json"), dir.path() / "iteration_1/mr_generation/mrs.json");
    EXPECT_EQ(s.artifact_path(0, Phase::Extraction, "extraction.json"), dir.path() / "extraction/extraction.json");
}

TEST(Session, ConfigErrors) {
    TempDir dir("config");
    SessionConfig c = golden_config(dir.path());
    c.max_iterations = 0;
    EXPECT_THROW(run_session(c), ConfigError);
    c = golden_config(dir.path());
    c.mr_count = 0;
    EXPECT_THROW(Session{c}, ConfigError);
    c = golden_config(dir.path());
    c.test_cases_per_mr = 0;
    EXPECT_THROW(Session{c}, ConfigError);
    c = golden_config(dir.path());
    c.provider = "oracle";
    EXPECT_THROW(make_provider(c), ConfigError);
}

TEST(Session, PhaseOrderAndIterationReset) {
    TempDir dir("order");
    SessionConfig c = golden_config(dir.path());
    c.max_iterations = 2;
    c.mr_count = 2;
    c.test_cases_per_mr = 1;
    Session s(c);
    std::vector<Phase> seen;
    while (s.state().phase != Phase::Completed) {
        const Phase before = s.state().phase;
        seen.push_back(before);
        s.advance();
        if (before == Phase::IterationEnd && s.state().phase != Phase::Completed) {
            EXPECT_EQ(s.state().phase, Phase::MrGeneration);
            EXPECT_EQ(s.state().iteration, 2);
            EXPECT_TRUE(s.state().current_mrs.empty());
            EXPECT_TRUE(s.state().current_results.empty());
        }
    }
    const std::vector<Phase> iteration{Phase::MrGeneration,   Phase::MrRefinement, Phase::TestGeneration,
                                       Phase::TestValidation, Phase::Instantiation, Phase::Execution,
                                       Phase::MutationAnalysis, Phase::IterationEnd};
    std::vector<Phase> expected{Phase::Init, Phase::Extraction};
    expected.insert(expected.end(), iteration.begin(), iteration.end());
    expected.insert(expected.end(), iteration.begin(), iteration.end());
    EXPECT_EQ(seen, expected);
    EXPECT_EQ(s.state().rows.size(), 2u);
    EXPECT_THROW(s.advance(), Error);
}

TEST(Session, GoldenRun) {
    TempDir dir("golden");
    const SessionReport r = run_session(golden_config(dir.path()));
    EXPECT_EQ(r.mr_summary, (MrSummary{5, 0, 5}));
    EXPECT_EQ(r.coverage.percent(), "29.41");
    EXPECT_EQ(r.coverage.covered_ids, (std::vector<std::string>{"TC001", "TC002", "TC003", "TC004", "TC005"}));
    EXPECT_EQ(r.tests.generated, 10u);
    EXPECT_EQ(r.tests.passed, 10u);
    ASSERT_TRUE(r.mutation);
    EXPECT_EQ(r.mutation->generated, 20u);
    EXPECT_EQ(r.mutation->killed, 12u);
    EXPECT_EQ(r.mutation->per_operator.at("Mirror"), (OperatorCount{10, 10}));
    EXPECT_EQ(r.mutation->per_operator.at("Polynomial"), (OperatorCount{10, 2}));
    EXPECT_EQ(r.runtime, RuntimeStats{});
    const Json report = read_document(dir.path() / "session_report.json", "session_report");
    EXPECT_EQ(report, r.to_json());
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "report.md"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "iteration_1/instantiation/MR001_T001_seed.csv"));
}

TEST(Session, ByteIdenticalReruns) {
    TempDir a("rerun_a");
    TempDir b("rerun_b");
    run_session(golden_config(a.path()));
    SessionConfig c = golden_config(b.path());
    c.jobs = 4;
    run_session(c);
    const auto ta = read_tree(a.path());
    const auto tb = read_tree(b.path());
    ASSERT_EQ(ta.size(), tb.size());
    for (const auto &[rel, text] : ta) {
        if (rel == "state.json") {
            continue;
        }
        EXPECT_EQ(text, tb.at(rel)) << rel;
    }
}

TEST(Session, CandidateBudget) {
    TempDir dir("budget");
    SessionConfig c = golden_config(dir.path());
    c.max_iterations = 4;
    c.mr_count = 2;
    c.test_cases_per_mr = 1;
    c.record_timings = true;
    Session s(c);
    const SessionReport r = s.run();
    EXPECT_LE(r.mr_summary.generated, 8u);
    EXPECT_LE(r.tests.generated, 8u);
    EXPECT_LE(s.state().mr_history.size(), 3u);
    const RuntimeStats &t = r.runtime;
    for (double d : {t.extraction, t.mr_generation, t.test_generation, t.test_execution, t.mutation_analysis}) {
        EXPECT_GE(d, 0.0);
    }
    EXPECT_LE(t.extraction + t.mr_generation + t.test_generation + t.test_execution + t.mutation_analysis,
              t.total + 1e-9);
}

TEST(Session, ResumesAfterFailure) {
    TempDir ref("resume_ref");
    run_session(golden_config(ref.path()));

    TempDir dir("resume");
    const auto req = dir / "requirements.md";
    SessionConfig c = golden_config(dir / "out");
    c.requirements = req;
    Session s(c);
    s.advance();
    try {
        s.advance();
        FAIL();
    } catch (const PhaseFailure &e) {
        EXPECT_EQ(e.phase(), Phase::Extraction);
    }
    const Json state = read_document(dir / "out/state.json", "state");
    EXPECT_EQ(state.at("phase"), "Extraction");
    EXPECT_EQ(state.at("error").at("phase"), "Extraction");

    write_text(req, read_text(testing::fixture("loc_requirements.md")));
    Session resumed = Session::resume(dir / "out");
    EXPECT_EQ(resumed.state().phase, Phase::Extraction);
    resumed.run();
    EXPECT_EQ(read_text(dir / "out/session_report.json"), read_text(ref.path() / "session_report.json"));
}

TEST(Session, ResumeMidIterationMatchesStraightRun) {
    TempDir ref("mid_ref");
    run_session(golden_config(ref.path()));
    TempDir dir("mid");
    {
        Session s(golden_config(dir.path()));
        s.run_phases({Phase::Init, Phase::Extraction, Phase::MrGeneration, Phase::MrRefinement, Phase::TestGeneration,
                      Phase::TestValidation, Phase::Instantiation});
        EXPECT_EQ(s.state().phase, Phase::Execution);
    }
    Session::resume(dir.path()).run();
    const auto ta = read_tree(ref.path());
    const auto tb = read_tree(dir.path());
    ASSERT_EQ(ta.size(), tb.size());
    for (const auto &[rel, text] : ta) {
        EXPECT_EQ(text, tb.at(rel)) << rel;
    }
}

TEST(Session, ReplayProviderMissFailsMrGeneration) {
    TempDir dir("replay");
    const auto replay = dir / "replay.json";
    write_text(replay, "{\"entries\": []}\n");
    SessionConfig c = golden_config(dir / "out");
    c.provider = "replay";
    c.replay_file = replay;
    Session s(c);
    s.run_phases({Phase::Init, Phase::Extraction});
    try {
        s.advance();
        FAIL();
    } catch (const PhaseFailure &e) {
        EXPECT_EQ(e.phase(), Phase::MrGeneration);
    }
    EXPECT_EQ(Session::resume(dir / "out").state().phase, Phase::MrGeneration);
}

} // namespace
} // namespace metamorph
