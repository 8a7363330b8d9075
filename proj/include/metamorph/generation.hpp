#pragma once

/**
 * @file generation.hpp
 * @brief MR and test-case generation through pluggable providers, MR
 *        refinement, and keep/fix/drop test validation.
 */

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/extraction.hpp"
#include "metamorph/mr.hpp"
#include "metamorph/relations.hpp"
#include "metamorph/signals.hpp"

namespace metamorph {

/// kind() is Transport, Format or Budget.
class ProviderError : public Error {
  public:
    ProviderError(std::string kind, const std::string &detail)
        : Error("ProviderError(" + kind + "): " + detail), kind_(std::move(kind)) {}
    const std::string &kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

/// The provider produced no novel MR.
class ExhaustedError : public Error {
  public:
    using Error::Error;
};

/// Variable bounds leave no room for the requested transformation.
class InfeasibleTransform : public Error {
  public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Test cases

struct Validation {
    bool fixed = false;
    bool dropped = false;
    std::string summary;
    friend bool operator==(const Validation &, const Validation &) = default;
};

struct TestCase {
    std::string id; // MR###_T###
    std::string mr_id;
    std::map<std::string, SignalPattern> inputs;
    std::vector<RelationSpec> relations;
    std::optional<Validation> validation;

    bool dropped() const noexcept { return validation && validation->dropped; }

    Json to_json() const;
    /// Strict parse.
    static TestCase from_json(const Json &j, const std::string &path = ".");
    friend bool operator==(const TestCase &, const TestCase &) = default;
};

/// Closed onset window as fractions of the grid span.
inline constexpr double kOnsetMin = 0.10;
inline constexpr double kOnsetMax = 0.25;
/// Ramp duration as a fraction of the grid span.
inline constexpr double kRampFraction = 0.2;
/// Fraction of the headroom used by test k (cycled).
inline constexpr double kMagnitudeLadder[] = {0.6, 0.9, 0.5, 0.75};

/// Legal onset interval [start + 0.10 span, start + 0.25 span].
std::pair<double, double> onset_window(const TimeGrid &grid);

/**
 * Keep/fix/drop validation of one raw test document. Never throws.
 *
 * Fixes: clamp out-of-bounds values, project onsets into the onset window,
 * shorten ramps past the grid end, normalize pattern and relation-kind
 * spellings, reset non-positive tolerances, remove identical duplicate
 * relations, clamp settling windows to the span, add missing inputs as
 * CONSTANT at their start value.
 * Drops: unknown or non-input variables, unknown patterns or relation kinds,
 * missing or non-finite numbers, transformations collapsed by clamping,
 * relations on non-outputs, conflicting duplicate relations, no relations,
 * SettlesWithin without set_point, non-positive ramp durations.
 */
TestCase validate_test(const Json &raw, const InterfaceSpec &interface, const TimeGrid &grid,
                       const ToleranceConfig &defaults = {});
TestCase validate_test(const TestCase &test, const InterfaceSpec &interface, const TimeGrid &grid,
                       const ToleranceConfig &defaults = {});

// ---------------------------------------------------------------------------
// Providers

enum class RequestKind { MrGeneration, MrRefinement, TestGeneration, TestValidation };
std::string to_string(RequestKind kind);

using MrBatch = std::vector<MetamorphicRelation>;

struct ProviderRequest {
    RequestKind kind = RequestKind::MrGeneration;
    const ExtractionOutput *extraction = nullptr;
    /// Most recent last; at most kHistoryWindow batches.
    std::deque<MrBatch> history;
    /// mr_count or test_cases_per_mr.
    int budget = 1;
    std::vector<Category> priority_order{Category::Behavioral, Category::Performance};
    /// Candidates for refinement; the single MR for test generation.
    std::vector<MetamorphicRelation> mrs;
    /// Raw tests for validation.
    std::vector<Json> tests;
    std::optional<TimeGrid> grid;
    std::uint64_t rng_seed = 0;
    ToleranceConfig tolerances;
};

inline constexpr std::size_t kHistoryWindow = 3;

/**
 * Response shapes: {"mrs": [...]} for MR generation and refinement,
 * {"tests": [...]} for test generation and validation.
 */
class Provider {
  public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    virtual Json respond(const ProviderRequest &request) = 0;
};

/**
 * Deterministic provider. MR generation enumerates uncovered variable
 * relationships by category priority; test generation uses the seeded sampler;
 * refinement and validation echo their input (the engine applies the
 * deterministic checks).
 */
class RuleBasedProvider final : public Provider {
  public:
    std::string name() const override { return "rule-based"; }
    Json respond(const ProviderRequest &request) override;
};

/// The MR the rule-based provider derives from one relationship.
MetamorphicRelation mr_from_relationship(const VariableRelationship &vr, const ExtractionOutput &extraction,
                                         const TimeGrid &grid, const ToleranceConfig &tolerances);

/// The seeded sampler: n tests for `mr`. Throws InfeasibleTransform.
std::vector<TestCase> sample_tests(const MetamorphicRelation &mr, const ExtractionOutput &extraction,
                                   const TimeGrid &grid, int n, std::uint64_t rng_seed,
                                   const ToleranceConfig &tolerances);

/// Chat-completion transport: body in, assistant content out.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual std::string complete(const Json &body) = 0;
};

struct HttpConfig {
    std::string base_url;
    std::string api_key;
    std::string model = "gpt-4o-mini";
    int timeout_seconds = 120;
};

/// POSTs to {base_url}/chat/completions.
class HttpTransport final : public Transport {
  public:
    explicit HttpTransport(HttpConfig config);
    /// Reads LLM_API_KEY and LLM_BASE_URL; throws ProviderError(Transport)
    /// when either is missing.
    static std::unique_ptr<HttpTransport> from_environment(const std::string &model);
    std::string complete(const Json &body) override;

  private:
    HttpConfig config_;
};

/// SHA-256 hex of the canonical request body.
std::string replay_key(const Json &body);

/**
 * Answers from a replay file {"version": "1.0", "entries": [{"key", "response"}]}.
 * An entry with key "*" matches any request; such entries are consumed in
 * order. Unmatched requests raise ProviderError(Transport).
 */
class ReplayTransport final : public Transport {
  public:
    explicit ReplayTransport(const std::filesystem::path &file);
    std::string complete(const Json &body) override;

  private:
    std::map<std::string, std::string> keyed_;
    std::deque<std::string> sequence_;
};

/// Forwards to `inner` and appends every exchange to a replay file.
class RecordingTransport final : public Transport {
  public:
    RecordingTransport(std::unique_ptr<Transport> inner, std::filesystem::path file);
    std::string complete(const Json &body) override;

  private:
    std::unique_ptr<Transport> inner_;
    std::filesystem::path file_;
    Json entries_ = Json::array();
};

/// Replaces {name} placeholders present in `values`; other braces stay.
std::string render_prompt(std::string_view templ, const std::map<std::string, std::string> &values);

/// Provider backed by a chat model. Responses must be a JSON object with the
/// expected top-level array; one reprompt on format failure, then
/// ProviderError(Format). More than max_requests calls raise ProviderError(Budget).
class LlmProvider final : public Provider {
  public:
    LlmProvider(std::unique_ptr<Transport> transport, std::string model, int max_requests = 200);
    std::string name() const override { return "llm"; }
    Json respond(const ProviderRequest &request) override;
    /// Request body that respond() would send first for `request`.
    Json request_body(const ProviderRequest &request) const;

  private:
    std::unique_ptr<Transport> transport_;
    std::string model_;
    int max_requests_;
    int requests_ = 0;
};

// ---------------------------------------------------------------------------
// Engine operations

/// Dedups against the history window and within the batch, orders by
/// category priority, truncates to the budget and assigns fresh ids
/// continuing after `next_id`. Throws ProviderError, ExhaustedError.
std::vector<MetamorphicRelation> generate_mrs(Provider &provider, const ProviderRequest &request, int next_id = 1);

/// Provider pass, then deterministic static checks with up to
/// `repair_attempts` repair rounds. Every MR comes back with refinement set.
std::vector<MetamorphicRelation> refine_mrs(Provider &provider, const std::vector<MetamorphicRelation> &mrs,
                                            const ExtractionOutput &extraction, int repair_attempts,
                                            const ToleranceConfig &tolerances = {});

/// Raw test documents as returned by the provider (at most n).
std::vector<Json> generate_test_documents(Provider &provider, const MetamorphicRelation &mr,
                                          const ExtractionOutput &extraction, const TimeGrid &grid, int n,
                                          std::uint64_t rng_seed, const ToleranceConfig &tolerances = {});

/// Strictly parsed variant of generate_test_documents.
std::vector<TestCase> generate_tests(Provider &provider, const MetamorphicRelation &mr,
                                     const ExtractionOutput &extraction, const TimeGrid &grid, int n,
                                     std::uint64_t rng_seed, const ToleranceConfig &tolerances = {});

/// Provider pass over raw tests followed by validate_test on each result.
std::vector<TestCase> validate_tests(Provider &provider, const std::vector<Json> &tests,
                                     const ExtractionOutput &extraction, const TimeGrid &grid,
                                     const ToleranceConfig &tolerances = {});

} // namespace metamorph
