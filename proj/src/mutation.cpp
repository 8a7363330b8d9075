#include "metamorph/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "metamorph/metrics.hpp"
#include "metamorph/parallel.hpp"
#include "metamorph/rng.hpp"

namespace metamorph {

std::string to_string(MutationOperator op) {
    switch (op) {
    case MutationOperator::Mirror:
        return "Mirror";
    case MutationOperator::Crossover:
        return "Crossover";
    case MutationOperator::Polynomial:
        return "Polynomial";
    }
    return "Mirror";
}

std::optional<MutationOperator> parse_mutation_operator(std::string_view text) {
    for (auto op : {MutationOperator::Mirror, MutationOperator::Crossover, MutationOperator::Polynomial}) {
        if (to_string(op) == text) {
            return op;
        }
    }
    return std::nullopt;
}

Trace mirror(const Trace &trace) {
    std::vector<double> v(trace.values.rbegin(), trace.values.rend());
    return Trace(trace.var, trace.grid, std::move(v));
}

std::pair<Trace, Trace> crossover(const Trace &a, const Trace &b, std::size_t site) {
    require_same_grid(a, b);
    if (site == 0 || site > a.size()) {
        throw SiteOutOfRange("crossover site " + std::to_string(site) + " outside (0, " + std::to_string(a.size()) + "]");
    }
    std::vector<double> a2 = a.values;
    std::vector<double> b2 = b.values;
    std::swap_ranges(a2.begin() + static_cast<std::ptrdiff_t>(site), a2.end(),
                     b2.begin() + static_cast<std::ptrdiff_t>(site));
    return {Trace(a.var, a.grid, std::move(a2)), Trace(b.var, b.grid, std::move(b2))};
}

double polynomial_delta(double u, double eta) {
    const double e = 1.0 / (eta + 1.0);
    return u < 0.5 ? std::pow(2.0 * u, e) - 1.0 : 1.0 - std::pow(2.0 * (1.0 - u), e);
}

Trace polynomial_mutate(const Trace &trace, double lo, double hi, double eta, double p, std::uint64_t rng_seed) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw BoundsError("polynomial bounds must satisfy lo < hi");
    }
    if (!(eta > 0.0) || !(p > 0.0 && p <= 1.0)) {
        throw BoundsError("polynomial mutation needs eta > 0 and p in (0, 1]");
    }
    Rng rng(rng_seed, "polynomial:" + trace.var);
    std::vector<double> out = trace.values;
    for (double &x : out) {
        const double gate = rng.uniform();
        const double u = rng.uniform();
        if (gate < p) {
            x = std::clamp(x + polynomial_delta(u, eta) * (hi - lo), lo, hi);
        }
    }
    return Trace(trace.var, trace.grid, std::move(out));
}

std::pair<double, double> mutation_bounds(const Trace &trace, const VariableSpec *spec) {
    if (spec != nullptr && spec->min && spec->max && *spec->min < *spec->max) {
        return {*spec->min, *spec->max};
    }
    const auto [mn, mx] = std::minmax_element(trace.values.begin(), trace.values.end());
    const double range = *mx - *mn;
    const double pad = range > 0.0 ? 0.1 * range : 1.0;
    return {*mn - pad, *mx + pad};
}

// ---------------------------------------------------------------------------
// Records

Json MutantRecord::to_json() const {
    return Json{{"id", id},          {"test_id", test_id}, {"operator", to_string(op)},
                {"targets", targets}, {"killed", killed},   {"verdict", verdict.to_json()}};
}

MutantRecord MutantRecord::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    MutantRecord m;
    m.id = r.string("id");
    m.test_id = r.string("test_id");
    auto op = parse_mutation_operator(r.string("operator"));
    if (!op) {
        throw SchemaError(r.path_of("operator"), "UnknownOperator");
    }
    m.op = *op;
    const Json &t = r.required("targets");
    if (!t.is_array()) {
        throw SchemaError(r.path_of("targets"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        m.targets.push_back(expect_string(t[i], json_path(r.path_of("targets"), i)));
    }
    m.killed = r.boolean("killed");
    m.verdict = TestVerdict::from_json(r.required("verdict"), r.path_of("verdict"));
    r.finish();
    return m;
}

std::string MutationReport::score_display() const { return format_ratio(killed, generated); }

Json MutationReport::to_json() const {
    Json ops = Json::object();
    for (const auto &[name, c] : per_operator) {
        ops[name] = Json{{"generated", c.generated}, {"killed", c.killed}};
    }
    Json ms = Json::array();
    for (const auto &m : mutants) {
        ms.push_back(m.to_json());
    }
    return Json{{"generated", generated},
                {"killed", killed},
                {"discarded_null", discarded_null},
                {"score", score()},
                {"score_display", score_display()},
                {"per_operator", std::move(ops)},
                {"mutants", std::move(ms)}};
}

MutationReport MutationReport::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    MutationReport m;
    m.generated = static_cast<std::uint64_t>(r.integer("generated"));
    m.killed = static_cast<std::uint64_t>(r.integer("killed"));
    m.discarded_null = static_cast<std::uint64_t>(r.integer("discarded_null"));
    r.ignore("score");
    r.ignore("score_display");
    const Json &ops = r.required("per_operator");
    if (!ops.is_object()) {
        throw SchemaError(r.path_of("per_operator"), "ExpectedObject");
    }
    for (const auto &[name, c] : ops.items()) {
        ObjectReader cr(c, json_path(r.path_of("per_operator"), name));
        OperatorCount oc;
        oc.generated = static_cast<std::uint64_t>(cr.integer("generated"));
        oc.killed = static_cast<std::uint64_t>(cr.integer("killed"));
        cr.finish();
        m.per_operator[name] = oc;
    }
    const Json &ms = r.required("mutants");
    if (!ms.is_array()) {
        throw SchemaError(r.path_of("mutants"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < ms.size(); ++i) {
        m.mutants.push_back(MutantRecord::from_json(ms[i], json_path(r.path_of("mutants"), i)));
    }
    r.finish();
    return m;
}

// ---------------------------------------------------------------------------
// Analysis

namespace {

struct Candidate {
    const ExecutedTest *test;
    MutationOperator op;
    std::vector<std::string> targets;
};

struct Outcome {
    bool null_mutant = false;
    bool killed = false;
    TestVerdict verdict;
};

bool same_within_default(const Trace &a, const Trace &b, const ToleranceConfig &tol) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::fabs(b[i] - a[i]) > tol.equal_atol + tol.equal_rtol * std::fabs(a[i])) {
            return false;
        }
    }
    return true;
}

Outcome evaluate(const Candidate &c, const InterfaceSpec &iface, const ToleranceConfig &tol, std::uint64_t rng_seed,
                 const MutationOptions &options) {
    const ExecutedTest &t = *c.test;
    std::vector<Trace> mutated;
    switch (c.op) {
    case MutationOperator::Mirror:
        mutated.push_back(mirror(t.followup_outputs.at(c.targets[0])));
        break;
    case MutationOperator::Polynomial: {
        const Trace &src = t.followup_outputs.at(c.targets[0]);
        const auto [lo, hi] = mutation_bounds(src, iface.find(src.var));
        mutated.push_back(polynomial_mutate(src, lo, hi, options.eta, options.probability,
                                            rng_seed ^ fnv1a(t.test_id)));
        break;
    }
    case MutationOperator::Crossover: {
        const Trace &a = t.followup_outputs.at(c.targets[0]);
        const Trace &b = t.followup_outputs.at(c.targets[1]);
        auto [a2, b2] = crossover(a, b, a.size() / 2);
        mutated.push_back(std::move(a2));
        mutated.push_back(std::move(b2));
        break;
    }
    }
    Outcome out;
    out.null_mutant = std::all_of(mutated.begin(), mutated.end(), [&](const Trace &m) {
        return same_within_default(t.followup_outputs.at(m.var), m, tol);
    });
    if (out.null_mutant) {
        return out;
    }
    SignalBundle morph = t.followup_outputs;
    for (auto &m : mutated) {
        morph.put(std::move(m));
    }
    out.verdict = evaluate_relations(t.relations, t.seed_outputs, morph, tol);
    out.killed = !out.verdict.passed;
    return out;
}

} // namespace

MutationReport run_mutation_analysis(const std::vector<ExecutedTest> &tests, const InterfaceSpec &interface,
                                     const ToleranceConfig &tolerances, std::uint64_t rng_seed,
                                     const MutationOptions &options) {
    std::vector<Candidate> candidates;
    for (const auto &t : tests) {
        if (!t.passed) {
            continue;
        }
        std::set<std::string> vars;
        for (const auto &r : t.relations) {
            vars.insert(r.var);
        }
        const std::vector<std::string> targets(vars.begin(), vars.end());
        for (const auto &v : targets) {
            candidates.push_back({&t, MutationOperator::Mirror, {v}});
            candidates.push_back({&t, MutationOperator::Polynomial, {v}});
        }
        for (std::size_t i = 0; i < targets.size(); ++i) {
            for (std::size_t j = i + 1; j < targets.size(); ++j) {
                candidates.push_back({&t, MutationOperator::Crossover, {targets[i], targets[j]}});
            }
        }
    }
    if (std::none_of(tests.begin(), tests.end(), [](const ExecutedTest &t) { return t.passed; })) {
        throw NoPassedTests();
    }

    std::vector<Outcome> outcomes(candidates.size());
    parallel_for(candidates.size(), options.jobs, [&](std::size_t i) {
        outcomes[i] = evaluate(candidates[i], interface, tolerances, rng_seed, options);
    });

    MutationReport report;
    for (auto op : {MutationOperator::Mirror, MutationOperator::Crossover, MutationOperator::Polynomial}) {
        report.per_operator[to_string(op)] = {};
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (outcomes[i].null_mutant) {
            ++report.discarded_null;
            continue;
        }
        MutantRecord m;
        char id[32];
        std::snprintf(id, sizeof id, "M%04zu", report.mutants.size() + 1);
        m.id = id;
        m.test_id = candidates[i].test->test_id;
        m.op = candidates[i].op;
        m.targets = candidates[i].targets;
        m.killed = outcomes[i].killed;
        m.verdict = std::move(outcomes[i].verdict);
        auto &count = report.per_operator[to_string(m.op)];
        ++count.generated;
        ++report.generated;
        if (m.killed) {
            ++count.killed;
            ++report.killed;
        }
        report.mutants.push_back(std::move(m));
    }
    return report;
}

} // namespace metamorph
