#pragma once

/**
 * @file reporting.hpp
 * @brief Session metrics (requirement coverage, test summary, runtime
 *        statistics) and the JSON and markdown session reports.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metamorph/extraction.hpp"
#include "metamorph/mr.hpp"
#include "metamorph/mutation.hpp"

namespace metamorph {

struct Coverage {
    std::uint64_t covered = 0;
    std::uint64_t total = 0;
    /// Covered test-condition ids, sorted.
    std::vector<std::string> covered_ids;

    /// 100*covered/total, two decimals half-up ("64.71").
    std::string percent() const;
    double value() const noexcept {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(covered) / static_cast<double>(total);
    }
    friend bool operator==(const Coverage &, const Coverage &) = default;
};

/// Test conditions referenced by at least one non-dropped MR, directly or
/// through one of their relationships. Throws EmptyRequirements.
Coverage requirement_coverage(const ExtractionOutput &extraction, const std::vector<MetamorphicRelation> &mrs);

struct TestSummary {
    std::uint64_t generated = 0;
    std::uint64_t executed = 0;
    std::uint64_t passed = 0;
    std::uint64_t failed = 0;

    bool degenerate() const noexcept { return executed == 0; }
    std::string pass_rate() const;
    std::string fail_rate() const;
    friend bool operator==(const TestSummary &, const TestSummary &) = default;
};

/// `generated` counts every test; `passed` holds one flag per executed test.
TestSummary test_summary(std::uint64_t generated, const std::vector<bool> &passed);

struct MrSummary {
    std::uint64_t generated = 0;
    std::uint64_t dropped = 0;
    std::uint64_t refined_survivors = 0;
    friend bool operator==(const MrSummary &, const MrSummary &) = default;
};

/// Wall-clock seconds per phase group.
struct RuntimeStats {
    double extraction = 0.0;
    double mr_generation = 0.0;
    double test_generation = 0.0;
    double test_execution = 0.0;
    double mutation_analysis = 0.0;
    double total = 0.0;

    /// Zero when the count is zero.
    static double per_unit(double seconds, std::uint64_t count) noexcept {
        return count == 0 ? 0.0 : seconds / static_cast<double>(count);
    }

    Json to_json(std::uint64_t mrs, std::uint64_t tests, std::uint64_t executed) const;
    static RuntimeStats from_json(const Json &j, const std::string &path);
    friend bool operator==(const RuntimeStats &, const RuntimeStats &) = default;
};

/// One row of the per-iteration table.
struct IterationRow {
    int iteration = 0;
    MrSummary mrs;
    TestSummary tests;
    Coverage coverage;
    std::optional<MutationReport> mutation;

    Json to_json() const;
    static IterationRow from_json(const Json &j, const std::string &path);
};

struct SessionReport {
    std::string system_name;
    std::string sut;
    std::string provider;
    std::uint64_t rng_seed = 0;
    int iterations = 0;
    MrSummary mr_summary;
    Coverage coverage;
    TestSummary tests;
    RuntimeStats runtime;
    std::optional<MutationReport> mutation;
    std::vector<IterationRow> rows;

    Json to_json() const;
    static SessionReport from_json(const Json &j, const std::string &path = ".");
};

/// Deterministic markdown rendering with "Requirement Coverage", "Tests",
/// "Runtime" and "Mutation" sections.
std::string render_markdown(const SessionReport &report);

} // namespace metamorph
