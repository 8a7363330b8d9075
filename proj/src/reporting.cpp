#include "metamorph/reporting.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "metamorph/metrics.hpp"

namespace metamorph {

std::string Coverage::percent() const { return format_percent(covered, total); }

Coverage requirement_coverage(const ExtractionOutput &extraction, const std::vector<MetamorphicRelation> &mrs) {
    if (extraction.test_conditions.empty()) {
        throw EmptyRequirements();
    }
    std::set<std::string> ids;
    for (const auto &mr : mrs) {
        if (mr.dropped()) {
            continue;
        }
        for (const auto &r : mr.req_ids) {
            if (extraction.find_condition(r) != nullptr) {
                ids.insert(r);
            } else if (const auto *vr = extraction.find_relationship(r); vr != nullptr) {
                if (extraction.find_condition(vr->test_condition) != nullptr) {
                    ids.insert(vr->test_condition);
                }
            }
        }
    }
    Coverage c;
    c.covered = ids.size();
    c.total = extraction.test_conditions.size();
    c.covered_ids.assign(ids.begin(), ids.end());
    return c;
}

std::string TestSummary::pass_rate() const { return format_percent(passed, executed); }
std::string TestSummary::fail_rate() const { return format_percent(failed, executed); }

TestSummary test_summary(std::uint64_t generated, const std::vector<bool> &passed) {
    TestSummary s;
    s.generated = generated;
    s.executed = passed.size();
    for (bool p : passed) {
        ++(p ? s.passed : s.failed);
    }
    return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::uint64_t count(ObjectReader &r, std::string_view key) {
    const long long v = r.integer(key);
    if (v < 0) {
        throw SchemaError(r.path_of(key), "Negative");
    }
    return static_cast<std::uint64_t>(v);
}

Json coverage_json(const Coverage &c) {
    return Json{{"covered", c.covered}, {"total", c.total}, {"percent", c.percent()}, {"covered_ids", c.covered_ids}};
}

Coverage coverage_from(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    Coverage c;
    c.covered = count(r, "covered");
    c.total = count(r, "total");
    r.ignore("percent");
    const Json &ids = r.required("covered_ids");
    if (!ids.is_array()) {
        throw SchemaError(r.path_of("covered_ids"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        c.covered_ids.push_back(expect_string(ids[i], json_path(r.path_of("covered_ids"), i)));
    }
    r.finish();
    return c;
}

Json tests_json(const TestSummary &s) {
    return Json{{"generated", s.generated}, {"executed", s.executed},     {"passed", s.passed},
                {"failed", s.failed},       {"pass_rate", s.pass_rate()}, {"fail_rate", s.fail_rate()},
                {"degenerate", s.degenerate()}};
}

TestSummary tests_from(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    TestSummary s;
    s.generated = count(r, "generated");
    s.executed = count(r, "executed");
    s.passed = count(r, "passed");
    s.failed = count(r, "failed");
    r.ignore("pass_rate");
    r.ignore("fail_rate");
    r.ignore("degenerate");
    r.finish();
    if (s.passed + s.failed != s.executed) {
        throw SchemaError(path, "CountMismatch");
    }
    return s;
}

Json mrs_json(const MrSummary &m) {
    return Json{{"generated", m.generated}, {"dropped", m.dropped}, {"refined_survivors", m.refined_survivors}};
}

MrSummary mrs_from(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    MrSummary m;
    m.generated = count(r, "generated");
    m.dropped = count(r, "dropped");
    m.refined_survivors = count(r, "refined_survivors");
    r.finish();
    if (m.dropped + m.refined_survivors != m.generated) {
        throw SchemaError(path, "CountMismatch");
    }
    return m;
}

} // namespace

Json RuntimeStats::to_json(std::uint64_t mrs, std::uint64_t tests, std::uint64_t executed) const {
    return Json{{"extraction", extraction},
                {"mr_generation", mr_generation},
                {"test_generation", test_generation},
                {"test_execution", test_execution},
                {"mutation_analysis", mutation_analysis},
                {"total", total},
                {"gen_time_per_mr", per_unit(mr_generation, mrs)},
                {"gen_time_per_testcase", per_unit(test_generation, tests)},
                {"exec_time_per_testcase", per_unit(test_execution, executed)}};
}

RuntimeStats RuntimeStats::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    RuntimeStats s;
    s.extraction = r.number("extraction");
    s.mr_generation = r.number("mr_generation");
    s.test_generation = r.number("test_generation");
    s.test_execution = r.number("test_execution");
    s.mutation_analysis = r.number("mutation_analysis");
    s.total = r.number("total");
    r.ignore("gen_time_per_mr");
    r.ignore("gen_time_per_testcase");
    r.ignore("exec_time_per_testcase");
    r.finish();
    return s;
}

Json IterationRow::to_json() const {
    Json j{{"iteration", iteration},
           {"mr_summary", mrs_json(mrs)},
           {"test_summary", tests_json(tests)},
           {"coverage", coverage_json(coverage)}};
    j["mutation"] = mutation ? mutation->to_json() : Json(nullptr);
    return j;
}

IterationRow IterationRow::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    IterationRow row;
    row.iteration = static_cast<int>(r.integer("iteration"));
    row.mrs = mrs_from(r.required("mr_summary"), r.path_of("mr_summary"));
    row.tests = tests_from(r.required("test_summary"), r.path_of("test_summary"));
    row.coverage = coverage_from(r.required("coverage"), r.path_of("coverage"));
    if (const Json &m = r.required("mutation"); !m.is_null()) {
        row.mutation = MutationReport::from_json(m, r.path_of("mutation"));
    }
    r.finish();
    return row;
}

Json SessionReport::to_json() const {
    Json rs = Json::array();
    for (const auto &row : rows) {
        rs.push_back(row.to_json());
    }
    Json j{{"system_name", system_name},
           {"sut", sut},
           {"provider", provider},
           {"rng_seed", rng_seed},
           {"iterations", iterations},
           {"mr_summary", mrs_json(mr_summary)},
           {"coverage", coverage_json(coverage)},
           {"test_summary", tests_json(tests)},
           {"runtime", runtime.to_json(mr_summary.generated, tests.generated, tests.executed)},
           {"iteration_rows", std::move(rs)}};
    j["mutation"] = mutation ? mutation->to_json() : Json(nullptr);
    return j;
}

SessionReport SessionReport::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    SessionReport s;
    s.system_name = r.string("system_name");
    s.sut = r.string("sut");
    s.provider = r.string("provider");
    s.rng_seed = static_cast<std::uint64_t>(r.integer("rng_seed"));
    s.iterations = static_cast<int>(r.integer("iterations"));
    s.mr_summary = mrs_from(r.required("mr_summary"), r.path_of("mr_summary"));
    s.coverage = coverage_from(r.required("coverage"), r.path_of("coverage"));
    s.tests = tests_from(r.required("test_summary"), r.path_of("test_summary"));
    s.runtime = RuntimeStats::from_json(r.required("runtime"), r.path_of("runtime"));
    if (const Json &m = r.required("mutation"); !m.is_null()) {
        s.mutation = MutationReport::from_json(m, r.path_of("mutation"));
    }
    const Json &rows = r.required("iteration_rows");
    if (!rows.is_array()) {
        throw SchemaError(r.path_of("iteration_rows"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.rows.push_back(IterationRow::from_json(rows[i], json_path(r.path_of("iteration_rows"), i)));
    }
    r.finish();
    return s;
}

// ---------------------------------------------------------------------------
// Markdown

namespace {

std::string seconds(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", s);
    return buf;
}

void mutation_row(std::ostringstream &out, const std::string &label, const MutationReport &m) {
    out << "| " << label << " | " << m.generated << " | " << m.killed << " | " << m.score_display() << " |\n";
}

} // namespace

std::string render_markdown(const SessionReport &report) {
    std::ostringstream out;
    out << "# Session report: " << report.system_name << "\n\n";
    out << "- SUT: `" << report.sut << "`\n";
    out << "- Provider: " << report.provider << "\n";
    out << "- Seed: " << report.rng_seed << "\n";
    out << "- Iterations: " << report.iterations << "\n\n";

    out << "## Requirement Coverage\n\n";
    out << "| Iteration | MRs generated | MRs dropped | Covered | Coverage (%) |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto &row : report.rows) {
        out << "| " << row.iteration << " | " << row.mrs.generated << " | " << row.mrs.dropped << " | "
            << row.coverage.covered << "/" << row.coverage.total << " | " << row.coverage.percent() << " |\n";
    }
    out << "| Session | " << report.mr_summary.generated << " | " << report.mr_summary.dropped << " | "
        << report.coverage.covered << "/" << report.coverage.total << " | " << report.coverage.percent() << " |\n\n";
    if (!report.coverage.covered_ids.empty()) {
        out << "Covered test conditions: ";
        for (std::size_t i = 0; i < report.coverage.covered_ids.size(); ++i) {
            out << (i == 0 ? "" : ", ") << report.coverage.covered_ids[i];
        }
        out << "\n\n";
    }

    out << "## Tests\n\n";
    out << "| Iteration | Generated | Executed | Passed (%) | Failed (%) |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto &row : report.rows) {
        out << "| " << row.iteration << " | " << row.tests.generated << " | " << row.tests.executed << " | "
            << row.tests.pass_rate() << " | " << row.tests.fail_rate() << " |\n";
    }
    out << "| Session | " << report.tests.generated << " | " << report.tests.executed << " | "
        << report.tests.pass_rate() << " | " << report.tests.fail_rate() << " |\n\n";

    const RuntimeStats &rt = report.runtime;
    out << "## Runtime\n\n";
    out << "| Extraction (s) | MR generation (s) | Test generation (s) | Test execution (s) | Mutation (s) | "
           "Gen time / MR (s) | Gen time / test (s) | Exec time / test (s) |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    out << "| " << seconds(rt.extraction) << " | " << seconds(rt.mr_generation) << " | "
        << seconds(rt.test_generation) << " | " << seconds(rt.test_execution) << " | "
        << seconds(rt.mutation_analysis) << " | "
        << seconds(RuntimeStats::per_unit(rt.mr_generation, report.mr_summary.generated)) << " | "
        << seconds(RuntimeStats::per_unit(rt.test_generation, report.tests.generated)) << " | "
        << seconds(RuntimeStats::per_unit(rt.test_execution, report.tests.executed)) << " |\n\n";

    out << "## Mutation\n\n";
    if (!report.mutation) {
        out << "No mutation analysis (no passed tests).\n";
        return out.str();
    }
    out << "| Iteration | Mutants | Killed | Score |\n";
    out << "|---|---|---|---|\n";
    for (const auto &row : report.rows) {
        if (row.mutation) {
            mutation_row(out, std::to_string(row.iteration), *row.mutation);
        }
    }
    mutation_row(out, "Session", *report.mutation);
    out << "\n| Operator | Mutants | Killed | Score |\n";
    out << "|---|---|---|---|\n";
    for (const auto &[name, c] : report.mutation->per_operator) {
        out << "| " << name << " | " << c.generated << " | " << c.killed << " | "
            << format_ratio(c.killed, c.generated) << " |\n";
    }
    return out.str();
}

} // namespace metamorph
