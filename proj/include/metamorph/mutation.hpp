#pragma once

/**
 * @file mutation.hpp
 * @brief Output-level mutation analysis over recorded follow-up traces.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/extraction.hpp"
#include "metamorph/relations.hpp"
#include "metamorph/signals.hpp"

namespace metamorph {

class SiteOutOfRange : public Error {
  public:
    using Error::Error;
};

class BoundsError : public Error {
  public:
    using Error::Error;
};

class NoPassedTests : public Error {
  public:
    NoPassedTests() : Error("NoPassedTests: mutation analysis needs at least one passed test") {}
};

enum class MutationOperator { Mirror, Crossover, Polynomial };
std::string to_string(MutationOperator op);
std::optional<MutationOperator> parse_mutation_operator(std::string_view text);

/// Time reversal on the same grid: out[i] = in[N-i].
Trace mirror(const Trace &trace);

/// Swaps the tails from `site` on. Requires 0 < site <= size.
/// Throws GridMismatch, SiteOutOfRange.
std::pair<Trace, Trace> crossover(const Trace &a, const Trace &b, std::size_t site);

/// Polynomial-mutation perturbation for u in [0,1):
/// (2u)^(1/(eta+1)) - 1 below 0.5, 1 - (2(1-u))^(1/(eta+1)) otherwise.
double polynomial_delta(double u, double eta);

/// Perturbs each sample with probability p by delta*(hi-lo), clamped to
/// [lo, hi]. Deterministic in (rng_seed, trace.var). Throws BoundsError.
Trace polynomial_mutate(const Trace &trace, double lo, double hi, double eta, double p, std::uint64_t rng_seed);

struct MutationOptions {
    double eta = 20.0;
    double probability = 0.1;
    int jobs = 1;
};

/// One executed test with its recorded outputs.
struct ExecutedTest {
    std::string test_id;
    std::vector<RelationSpec> relations;
    SignalBundle seed_outputs;
    SignalBundle followup_outputs;
    bool passed = false;
};

struct MutantRecord {
    std::string id;
    std::string test_id;
    MutationOperator op = MutationOperator::Mirror;
    std::vector<std::string> targets;
    bool killed = false;
    TestVerdict verdict;

    Json to_json() const;
    static MutantRecord from_json(const Json &j, const std::string &path);
};

struct OperatorCount {
    std::uint64_t generated = 0;
    std::uint64_t killed = 0;
    friend bool operator==(const OperatorCount &, const OperatorCount &) = default;
};

struct MutationReport {
    std::uint64_t generated = 0;
    std::uint64_t killed = 0;
    std::uint64_t discarded_null = 0;
    std::map<std::string, OperatorCount> per_operator;
    std::vector<MutantRecord> mutants;

    double score() const noexcept {
        return generated == 0 ? 0.0 : static_cast<double>(killed) / static_cast<double>(generated);
    }
    /// Two-decimal half-up display ("0.63").
    std::string score_display() const;

    Json to_json() const;
    static MutationReport from_json(const Json &j, const std::string &path = ".");
};

/// Bounds used by the Polynomial operator: declared [min, max], else the
/// observed range widened by 10% (or by 1 for a flat trace).
std::pair<double, double> mutation_bounds(const Trace &trace, const VariableSpec *spec);

/**
 * Mirror and Polynomial per relation-bearing follow-up output, Crossover per
 * unordered pair at the midpoint. Mutants equal to the original within the
 * default equal_to tolerance are discarded. Throws NoPassedTests.
 */
MutationReport run_mutation_analysis(const std::vector<ExecutedTest> &tests, const InterfaceSpec &interface,
                                     const ToleranceConfig &tolerances, std::uint64_t rng_seed,
                                     const MutationOptions &options = {});

} // namespace metamorph
