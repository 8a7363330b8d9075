#include <gtest/gtest.h>

#include "metamorph/metrics.hpp"
#include "metamorph/reporting.hpp"
#include "support.hpp"

namespace metamorph {
namespace {

using testing::covering_mrs;
using testing::Gen;
using testing::verdict_flags;

TEST(Metrics, HalfUpRounding) {
    EXPECT_EQ(format_percent(11, 17), "64.71");
    EXPECT_EQ(format_percent(14, 17), "82.35");
    EXPECT_EQ(format_ratio(1, 8), "0.13");
    EXPECT_EQ(format_ratio(3, 8), "0.38");
    EXPECT_EQ(format_ratio(0, 0), "0.00");
    EXPECT_EQ(format_percent(1, 1), "100.00");
    EXPECT_EQ(format_ratio(1, 3, 3), "0.333");
}

TEST(Coverage, PaperRows) {
    const auto ex = testing::loc_extraction();
    EXPECT_EQ(requirement_coverage(ex, covering_mrs(ex, 11)).percent(), "64.71");
    EXPECT_EQ(requirement_coverage(ex, covering_mrs(ex, 14)).percent(), "82.35");
    EXPECT_EQ(requirement_coverage(ex, covering_mrs(ex, 17)).percent(), "100.00");
    EXPECT_EQ(requirement_coverage(ex, {}).percent(), "0.00");
}

TEST(Coverage, DroppedMrsAndRelationshipIds) {
    const auto ex = testing::loc_extraction();
    auto mrs = covering_mrs(ex, 2);
    mrs[1].refinement = Refinement{"bad", true};
    EXPECT_EQ(requirement_coverage(ex, mrs).covered, 1u);
    MetamorphicRelation via_vr;
    via_vr.id = "MR010";
    via_vr.req_ids = {ex.relationships[0].id};
    const Coverage c = requirement_coverage(ex, {via_vr});
    EXPECT_EQ(c.covered_ids, std::vector<std::string>{ex.relationships[0].test_condition});
}

TEST(Coverage, EmptyRequirements) { EXPECT_THROW(requirement_coverage(ExtractionOutput{}, {}), EmptyRequirements); }

TEST(CoverageProperty, MonotoneInMrSet) {
    const auto ex = testing::loc_extraction();
    Gen gen(51, "coverage");
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<MetamorphicRelation> mrs;
        std::uint64_t last = 0;
        for (int k = 0; k < 8; ++k) {
            MetamorphicRelation mr;
            mr.id = "MR001";
            const bool vr = gen.coin();
            mr.req_ids = {vr ? ex.relationships[static_cast<std::size_t>(gen.integer(0, 8))].id
                             : ex.test_conditions[static_cast<std::size_t>(gen.integer(0, 16))].id};
            mrs.push_back(mr);
            const Coverage c = requirement_coverage(ex, mrs);
            ASSERT_GE(c.covered, last);
            ASSERT_LE(c.value(), 100.0);
            last = c.covered;
        }
    }
}

TEST(TestSummary, PaperRows) {
    const TestSummary a = test_summary(41, verdict_flags(41, 35));
    EXPECT_EQ(a.pass_rate(), "85.37");
    EXPECT_EQ(a.fail_rate(), "14.63");
    const TestSummary b = test_summary(60, verdict_flags(60, 46));
    EXPECT_EQ(b.pass_rate(), "76.67");
    EXPECT_EQ(b.fail_rate(), "23.33");
    const TestSummary none = test_summary(3, {});
    EXPECT_TRUE(none.degenerate());
    EXPECT_EQ(none.pass_rate(), "0.00");
}

SessionReport sample_report() {
    const auto ex = testing::loc_extraction();
    SessionReport s;
    s.system_name = "LOC";
    s.sut = "builtin:loc";
    s.provider = "template";
    s.rng_seed = 42;
    s.iterations = 1;
    s.mr_summary = {5, 1, 4};
    s.coverage = requirement_coverage(ex, covering_mrs(ex, 11));
    s.tests = test_summary(41, verdict_flags(41, 35));
    s.runtime.extraction = 0.25;
    s.runtime.total = 1.5;
    s.mutation = testing::ledger_report(104, 65);
    IterationRow row;
    row.iteration = 0;
    row.mrs = s.mr_summary;
    row.tests = s.tests;
    row.coverage = s.coverage;
    row.mutation = s.mutation;
    s.rows.push_back(row);
    return s;
}

TEST(SessionReport, JsonRoundTrip) {
    const SessionReport s = sample_report();
    const Json j = s.to_json();
    EXPECT_EQ(SessionReport::from_json(j).to_json(), j);
    EXPECT_EQ(j.at("test_summary").at("pass_rate"), "85.37");
    EXPECT_EQ(j.at("coverage").at("percent"), "64.71");
    EXPECT_EQ(j.at("mutation").at("score_display"), "0.63");
}

TEST(SessionReport, RejectsInconsistentCounts) {
    Json j = sample_report().to_json();
    j["test_summary"]["passed"] = 40;
    try {
        SessionReport::from_json(j);
        FAIL();
    } catch (const SchemaError &e) {
        EXPECT_EQ(e.cause(), "CountMismatch");
        EXPECT_EQ(e.path(), ".test_summary");
    }
    j = sample_report().to_json();
    j["mr_summary"]["dropped"] = 3;
    EXPECT_THROW(SessionReport::from_json(j), SchemaError);
}

TEST(SessionReport, Markdown) {
    const SessionReport s = sample_report();
    const std::string md = render_markdown(s);
    EXPECT_EQ(md, render_markdown(s));
    EXPECT_NE(md.find("Requirement Coverage"), std::string::npos);
    EXPECT_NE(md.find("Mutation"), std::string::npos);
    EXPECT_NE(md.find("| Session | 104 | 65 | 0.63 |"), std::string::npos);
    EXPECT_NE(md.find("85.37"), std::string::npos);
}

TEST(RuntimeStats, PerUnitGuardsZero) {
    EXPECT_EQ(RuntimeStats::per_unit(3.0, 0), 0.0);
    EXPECT_DOUBLE_EQ(RuntimeStats::per_unit(3.0, 4), 0.75);
    RuntimeStats r;
    r.test_execution = 2.0;
    const Json j = r.to_json(0, 0, 4);
    EXPECT_DOUBLE_EQ(j.at("exec_time_per_testcase").get<double>(), 0.5);
    EXPECT_EQ(RuntimeStats::from_json(j, ".runtime"), r);
}

} // namespace
} // namespace metamorph
