#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "metamorph/cli.hpp"
#include "metamorph/generation.hpp"
#include "metamorph/metrics.hpp"
#include "metamorph/mutation.hpp"
#include "metamorph/relations.hpp"
#include "metamorph/reporting.hpp"
#include "metamorph/schema.hpp"
#include "metamorph/workflow.hpp"
#include "support.hpp"

namespace metamorph {
namespace {

namespace brute = testing::brute;
using testing::Gen;
using testing::make_trace;
using Clock = std::chrono::steady_clock;

constexpr int kOracleTrials = 1000;
constexpr std::size_t kOracleMaxLength = 12;
constexpr double kOracleBudgetSeconds = 5.0;
constexpr double kSessionBudgetSeconds = 60.0;
constexpr double kMinPassRate = 80.0;
constexpr int kGenerations = 500;
constexpr std::size_t kValidatorCases = 30;
constexpr int kAlgebraTrials = 1000;

struct Check {
    bool passed = true;
    std::string detail;

    void require(bool ok, const std::string &what) {
        if (!ok && passed) {
            passed = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Check relation_oracle_equivalence() {
    Check c;
    Gen gen(1001, "acceptance-oracle");
    const auto t0 = Clock::now();
    std::map<RelationKind, int> agree;
    for (RelationKind kind : kAllRelationKinds) {
        for (int trial = 0; trial < kOracleTrials; ++trial) {
            const auto n = static_cast<std::size_t>(gen.integer(2, kOracleMaxLength));
            const auto s = gen.coarse_values(n, -3, 3);
            const auto m = gen.coarse_values(n, -3, 3);
            const auto ts = make_trace("y", s);
            const auto tm = make_trace("y", m);
            const double eps = static_cast<double>(gen.integer(0, 1));
            bool same = false;
            switch (kind) {
            case RelationKind::EventuallyIncreases:
                same = eventually_increases(ts, tm, eps).passed == brute::eventually_increases(s, m, eps);
                break;
            case RelationKind::EventuallyDecreases:
                same = eventually_decreases(ts, tm, eps).passed == brute::eventually_decreases(s, m, eps);
                break;
            case RelationKind::EqualTo:
                same = equal_to(ts, tm, eps, 0.1).passed == brute::equal_to(s, m, eps, 0.1);
                break;
            case RelationKind::ProportionalTo: {
                const auto expected = brute::proportional_to(s, m, 0.3);
                try {
                    const bool got = proportional_to(ts, tm, 0.3).passed;
                    same = expected && *expected == got;
                } catch (const DegenerateSeed &) {
                    same = !expected;
                }
                break;
            }
            case RelationKind::SettlesWithin: {
                const double window = static_cast<double>(gen.integer(0, static_cast<long>(n - 1)));
                same = settles_within(ts, tm, 0.0, window, 1.5).passed ==
                       brute::settles_within(s, m, ts.grid, 0.0, window, 1.5);
                break;
            }
            }
            agree[kind] += same ? 1 : 0;
        }
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    for (RelationKind kind : kAllRelationKinds) {
        d << to_string(kind) << " " << agree[kind] << "/" << kOracleTrials << ", ";
        c.require(agree[kind] == kOracleTrials, to_string(kind) + " disagrees with the brute-force scan");
    }
    d << elapsed << " s";
    c.require(elapsed < kOracleBudgetSeconds, "over the time budget");
    if (c.passed) {
        c.detail = d.str();
    } else {
        c.detail += " (" + d.str() + ")";
    }
    return c;
}

Check mutation_score_arithmetic() {
    Check c;
    std::ostringstream d;
    for (auto [generated, killed, expected] :
         {std::tuple{104u, 65u, "0.63"}, std::tuple{176u, 83u, "0.47"}, std::tuple{94u, 63u, "0.67"}}) {
        const MutationReport r = testing::ledger_report(generated, killed);
        const std::string got = MutationReport::from_json(r.to_json()).score_display();
        d << (d.tellp() > 0 ? ", " : "") << "(" << r.generated << ", " << r.killed << ")->" << got;
        c.require(r.generated == generated && r.killed == killed && got == expected,
                  "ledger (" + std::to_string(generated) + ", " + std::to_string(killed) + ") gave " + got);
    }
    if (c.passed) {
        c.detail = d.str();
    }
    return c;
}

Check coverage_arithmetic() {
    Check c;
    const auto ex = testing::loc_extraction();
    c.require(ex.test_conditions.size() == 17, "fixture does not have 17 test conditions");
    std::ostringstream d;
    for (auto [covered, expected] : {std::pair{11u, "64.71"}, std::pair{14u, "82.35"}}) {
        const Coverage cov = requirement_coverage(ex, testing::covering_mrs(ex, covered));
        d << (d.tellp() > 0 ? ", " : "") << cov.covered << "/" << cov.total << "->" << cov.percent() << "%";
        c.require(cov.percent() == expected, std::to_string(covered) + "/17 gave " + cov.percent());
    }
    if (c.passed) {
        c.detail = d.str();
    }
    return c;
}

Check test_summary_arithmetic() {
    Check c;
    const TestSummary s = test_summary(41, testing::verdict_flags(41, 35));
    c.require(s.pass_rate() == "85.37" && s.fail_rate() == "14.63",
              "41/35 gave " + s.pass_rate() + "/" + s.fail_rate());
    if (c.passed) {
        c.detail = "41 executed, 35 passed -> " + s.pass_rate() + "/" + s.fail_rate();
    }
    return c;
}

struct SessionRun {
    int code = -1;
    double seconds = 0.0;
    std::string err;
};

SessionRun run_cli_session(const std::filesystem::path &out) {
    const std::vector<std::string> args{"metamorph",
                                        "run",
                                        "--sut",
                                        "builtin:loc",
                                        "--requirements",
                                        testing::fixture("loc_requirements.md").string(),
                                        "--provider",
                                        "rule-based",
                                        "--seed",
                                        "42",
                                        "--iterations",
                                        "1",
                                        "--mr-count",
                                        "5",
                                        "--tests-per-mr",
                                        "2",
                                        "--no-timings",
                                        "--out",
                                        out.string()};
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream sout, serr;
    const auto t0 = Clock::now();
    SessionRun r;
    r.code = cli_main(static_cast<int>(argv.size()), argv.data(), sout, serr);
    r.seconds = seconds_since(t0);
    r.err = serr.str();
    return r;
}

Check end_to_end_session(const std::filesystem::path &first, const std::filesystem::path &second) {
    Check c;
    const SessionRun a = run_cli_session(first);
    const SessionRun b = run_cli_session(second);
    c.require(a.code == kExitOk && b.code == kExitOk, "run exited nonzero: " + a.err + b.err);
    if (!c.passed) {
        return c;
    }
    const Json state = read_document(first / "state.json", "state");
    c.require(state.at("phase") == "Completed", "session did not complete");
    const SessionReport r = SessionReport::from_json(read_document(first / "session_report.json", "session_report"));
    c.require(r.mr_summary.generated >= 1 && r.mr_summary.generated <= 5, "MR count outside 1..5");
    c.require(r.tests.executed > 0, "no tests executed");
    c.require(r.coverage.value() > 0.0, "zero coverage");
    c.require(100.0 * static_cast<double>(r.tests.passed) >= kMinPassRate * static_cast<double>(r.tests.executed),
              "pass rate " + r.tests.pass_rate() + "% below 80%");
    const auto ta = testing::read_tree(first);
    const auto tb = testing::read_tree(second);
    c.require(ta == tb, "artifact trees differ between runs");
    c.require(a.seconds < kSessionBudgetSeconds && b.seconds < kSessionBudgetSeconds, "over the time budget");
    if (c.passed) {
        std::ostringstream d;
        d << r.mr_summary.generated << " MRs, " << r.tests.executed << " tests, coverage " << r.coverage.percent()
          << "%, pass " << r.tests.pass_rate() << "%, " << ta.size() << " identical files, " << a.seconds << " s";
        c.detail = d.str();
    }
    return c;
}

bool monotone(const std::vector<double> &v) {
    const bool up = std::is_sorted(v.begin(), v.end());
    const bool down = std::is_sorted(v.rbegin(), v.rend());
    return up || down;
}

bool constant(const std::vector<double> &v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

Check mutation_sensitivity(const std::filesystem::path &out) {
    Check c;
    const Json results = read_document(out / "iteration_1/execution/results.json", "results");
    std::map<std::string, TestResult> by_id;
    for (std::size_t i = 0; i < results.at("results").size(); ++i) {
        TestResult t = TestResult::from_json(results.at("results")[i], json_path(".results", i));
        by_id.emplace(t.test_id, std::move(t));
    }
    const Json doc = read_document(out / "iteration_1/mutation_analysis/mutation_report.json", "mutation_report");
    c.require(!doc.at("report").is_null(), "no mutation report");
    if (!c.passed) {
        return c;
    }
    const MutationReport report = MutationReport::from_json(doc.at("report"), ".report");
    int eligible = 0;
    int killed = 0;
    int mirrors = 0;
    for (const auto &m : report.mutants) {
        if (m.op != MutationOperator::Mirror) {
            continue;
        }
        ++mirrors;
        const TestResult &t = by_id.at(m.test_id);
        c.require(t.verdict.passed, m.id + " derives from a failed test");
        const auto &v = t.followup_outputs.at(m.targets[0]).values;
        if (!constant(v) && monotone(v)) {
            ++eligible;
            killed += m.killed ? 1 : 0;
            c.require(m.killed, m.id + " (Mirror on monotone " + m.targets[0] + ") survived");
        }
    }
    c.require(eligible > 0, "no Mirror mutant of a non-constant monotone output to check");
    c.require(report.score() > 0.0 && report.score() < 1.0, "score " + report.score_display() + " not in (0,1)");
    if (c.passed) {
        std::ostringstream d;
        d << "monotone Mirror mutants killed " << killed << "/" << eligible << " (all Mirror " << mirrors
          << "), score " << report.score_display() << " (" << report.killed << "/" << report.generated << ")";
        c.detail = d.str();
    }
    return c;
}

Check generator_invariants() {
    Check c;
    const auto ex = testing::loc_extraction();
    const auto setpoints = ex.setpoint_inputs();
    Gen gen(1007, "acceptance-generator");
    int generations = 0;
    std::size_t onsets = 0;
    std::size_t onsets_in = 0;
    std::size_t holds = 0;
    std::size_t holds_constant = 0;
    for (std::uint64_t seed = 0; generations < kGenerations; ++seed) {
        for (const auto &vr : ex.relationships) {
            const TimeGrid grid(0.0, static_cast<double>(gen.integer(100, 5000)), 1.0);
            MetamorphicRelation mr = mr_from_relationship(vr, ex, grid, {});
            mr.id = "MR001";
            const auto tests = sample_tests(mr, ex, grid, static_cast<int>(gen.integer(1, 4)), seed, {});
            ++generations;
            const double lo = grid.start() + 0.10 * grid.span();
            const double hi = grid.start() + 0.25 * grid.span();
            for (const auto &t : tests) {
                for (const auto &[name, p] : t.inputs) {
                    if (auto on = onset_time(p)) {
                        ++onsets;
                        onsets_in += (*on >= lo - 1e-9 && *on <= hi + 1e-9) ? 1 : 0;
                    }
                    const bool held = std::find(setpoints.begin(), setpoints.end(), name) != setpoints.end() ||
                                      std::find(mr.given.held_constant.begin(), mr.given.held_constant.end(),
                                                name) != mr.given.held_constant.end();
                    if (held) {
                        ++holds;
                        holds_constant += is_constant(p) ? 1 : 0;
                    }
                }
            }
        }
    }
    c.require(onsets > 0 && onsets_in == onsets,
              std::to_string(onsets - onsets_in) + " onsets outside [0.10, 0.25] of the window");
    c.require(holds > 0 && holds_constant == holds, std::to_string(holds - holds_constant) + " held inputs not CONSTANT");
    if (c.passed) {
        std::ostringstream d;
        d << generations << " generations, onsets " << onsets_in << "/" << onsets << " in window, held inputs "
          << holds_constant << "/" << holds << " CONSTANT";
        c.detail = d.str();
    }
    return c;
}

Check validator_conformance() {
    Check c;
    const auto ex = testing::loc_extraction();
    const auto cases = testing::validator_cases();
    c.require(cases.size() == kValidatorCases, "table has " + std::to_string(cases.size()) + " cases");
    int matched = 0;
    int kept = 0;
    int fixed = 0;
    int dropped = 0;
    for (const auto &vc : cases) {
        const TestCase t = validate_test(vc.raw, ex.variables, testing::loc_grid());
        const bool ok = t.validation && t.validation->fixed == vc.fixed && t.validation->dropped == vc.dropped;
        c.require(ok, "case '" + vc.name + "' classified differently");
        matched += ok ? 1 : 0;
        (vc.dropped ? dropped : vc.fixed ? fixed : kept) += 1;
    }
    if (c.passed) {
        std::ostringstream d;
        d << matched << "/" << cases.size() << " cases match (" << kept << " keep, " << fixed << " fix, " << dropped
          << " drop)";
        c.detail = d.str();
    }
    return c;
}

Check operator_algebra() {
    Check c;
    Gen gen(1009, "acceptance-algebra");
    int ok = 0;
    for (int trial = 0; trial < kAlgebraTrials; ++trial) {
        const auto n = static_cast<std::size_t>(gen.integer(2, 200));
        const auto a = make_trace("a", gen.values(n, -1e4, 1e4));
        const auto b = make_trace("b", gen.values(n, -1e4, 1e4));
        const auto site = static_cast<std::size_t>(gen.integer(1, static_cast<long>(n)));
        const auto once = crossover(a, b, site);
        const auto twice = crossover(once.first, once.second, site);
        const double lo = gen.real(-2e4, -1e4);
        const double hi = gen.real(1e4, 2e4);
        const Trace p = polynomial_mutate(a, lo, hi, gen.real(0.5, 100.0), gen.real(0.01, 1.0),
                                          static_cast<std::uint64_t>(trial));
        const bool in_bounds =
            std::all_of(p.values.begin(), p.values.end(), [&](double x) { return x >= lo && x <= hi; });
        const bool good = mirror(mirror(a)).values == a.values && twice.first.values == a.values &&
                          twice.second.values == b.values && in_bounds;
        c.require(good, "trial " + std::to_string(trial) + " violates the operator algebra");
        ok += good ? 1 : 0;
    }
    if (c.passed) {
        c.detail = std::to_string(ok) + "/" + std::to_string(kAlgebraTrials) + " traces";
    }
    return c;
}

Check guarded(const std::function<Check()> &f) {
    try {
        return f();
    } catch (const std::exception &e) {
        Check c;
        c.require(false, std::string("exception: ") + e.what());
        return c;
    }
}

} // namespace
} // namespace metamorph

int main() {
    using namespace metamorph;
    testing::TempDir dir("acceptance");
    const auto first = dir / "run_a";
    const auto second = dir / "run_b";
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"relation-oracle equivalence", relation_oracle_equivalence},
        {"mutation-score arithmetic", mutation_score_arithmetic},
        {"coverage arithmetic", coverage_arithmetic},
        {"test-summary arithmetic", test_summary_arithmetic},
        {"end-to-end deterministic session", [&] { return end_to_end_session(first, second); }},
        {"mutation sensitivity", [&] { return mutation_sensitivity(first); }},
        {"generator invariants", generator_invariants},
        {"validator conformance", validator_conformance},
        {"mutation-operator algebra", operator_algebra},
    };
    int failed = 0;
    for (const auto &[name, f] : criteria) {
        const Check c = guarded(f);
        std::cout << (c.passed ? "PASS " : "FAIL ") << name << ": " << c.detail << "\n";
        failed += c.passed ? 0 : 1;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}
