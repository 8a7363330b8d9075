#pragma once

/**
 * @file relations.hpp
 * @brief Metamorphic output relations and their verdict evaluators.
 *
 * Every evaluator compares a seed trace with a follow-up ("morph") trace on
 * the same grid and returns a RelationVerdict whose witness explains the
 * outcome: the satisfaction time for passes, the offending sample for fails.
 */

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/json_io.hpp"
#include "metamorph/signals.hpp"

namespace metamorph {

enum class RelationKind { EventuallyIncreases, EventuallyDecreases, ProportionalTo, EqualTo, SettlesWithin };

inline constexpr RelationKind kAllRelationKinds[] = {
    RelationKind::EventuallyIncreases, RelationKind::EventuallyDecreases, RelationKind::ProportionalTo,
    RelationKind::EqualTo, RelationKind::SettlesWithin};

/// "Eventually_Increases", "Eventually_Decreases", "Proportional_to", "Equal_to", "Settles_within".
std::string to_string(RelationKind kind);
/// Exact spelling only.
std::optional<RelationKind> parse_relation_kind(std::string_view text);
/// Case-, underscore- and "_than"-insensitive match ("eventually_increases_than",
/// "EventuallyIncreases"). Used by the test validator to repair spellings.
std::optional<RelationKind> parse_relation_kind_lenient(std::string_view text);

class DegenerateSeed : public Error {
  public:
    explicit DegenerateSeed(const std::string &var) : Error("DegenerateSeed: seed trace '" + var + "' is all zero") {}
};

class WindowError : public Error {
  public:
    explicit WindowError(const std::string &what) : Error("WindowError: " + what) {}
};

class MissingOutput : public Error {
  public:
    explicit MissingOutput(const std::string &var) : Error("MissingOutput: " + var), var_(var) {}
    const std::string &var() const noexcept { return var_; }

  private:
    std::string var_;
};

/// Default tolerances applied when a relation does not carry its own.
struct ToleranceConfig {
    double eventually_margin = 1e-9;
    double equal_atol = 1e-6;
    double equal_rtol = 1e-3;
    double proportional_max_deviation = 0.02;
    double settle_band = 1.0;
    /// Settling deadline as a fraction of the simulation horizon.
    double settle_window_fraction = 0.8;

    /// Throws ConfigError when a field violates its range.
    void validate() const;
    Json to_json() const;
    static ToleranceConfig from_json(const Json &j, const std::string &path = ".relation_defaults");
    friend bool operator==(const ToleranceConfig &, const ToleranceConfig &) = default;
};

/**
 * One output relation of a Then clause or a test case.
 *
 * `tolerance` is interpreted per kind: the margin for Eventually*, the
 * absolute tolerance for EqualTo (with `rtol`), the maximum relative
 * deviation for ProportionalTo, and the band half-width for SettlesWithin.
 */
struct RelationSpec {
    std::string var;
    RelationKind kind = RelationKind::EqualTo;
    std::optional<double> set_point;
    /// Input variable whose initial value defines set_point.
    std::optional<std::string> set_point_var;
    /// Settling deadline in seconds after grid start.
    std::optional<double> window;
    std::optional<double> tolerance;
    std::optional<double> rtol;

    Json to_json() const;
    static RelationSpec from_json(const Json &j, const std::string &path);
    friend bool operator==(const RelationSpec &, const RelationSpec &) = default;
};

struct Witness {
    std::string summary;
    std::optional<std::size_t> index;
    std::optional<double> time;
    /// Fitted proportionality constant.
    std::optional<double> constant;
    /// Which trace the witness refers to for SettlesWithin ("seed" or "morph").
    std::optional<std::string> trace;

    Json to_json() const;
    static Witness from_json(const Json &j, const std::string &path);
};

struct RelationVerdict {
    RelationKind kind;
    std::string var;
    bool passed = false;
    Witness witness;

    Json to_json() const;
    static RelationVerdict from_json(const Json &j, const std::string &path);
};

/// Passes iff some suffix of samples has morph - seed > margin throughout.
RelationVerdict eventually_increases(const Trace &seed, const Trace &morph, double margin);
/// Passes iff some suffix of samples has morph - seed < -margin throughout.
RelationVerdict eventually_decreases(const Trace &seed, const Trace &morph, double margin);
/// Origin-constrained least-squares fit c, then |morph - c*seed| <= rho*|c*seed|
/// on every sample where |seed| exceeds 1e-9*max|seed|. Throws DegenerateSeed.
RelationVerdict proportional_to(const Trace &seed, const Trace &morph, double max_deviation);
/// Passes iff |morph - seed| <= atol + rtol*|seed| everywhere.
RelationVerdict equal_to(const Trace &seed, const Trace &morph, double atol, double rtol);
/// Passes iff both traces stay within band of set_point for t >= start + window.
/// Throws WindowError when window is negative or beyond the grid span.
RelationVerdict settles_within(const Trace &seed, const Trace &morph, double set_point, double window,
                               double band);

/// Dispatches one relation, filling absent parameters from `defaults`.
/// A degenerate seed under ProportionalTo yields a failed verdict.
RelationVerdict evaluate_relation(const RelationSpec &relation, const Trace &seed, const Trace &morph,
                                  const ToleranceConfig &defaults);

struct TestVerdict {
    bool passed = false;
    std::vector<RelationVerdict> relations;

    Json to_json() const;
    static TestVerdict from_json(const Json &j, const std::string &path);
};

/// Conjunction over all relations. Throws MissingOutput when a relation
/// variable is absent from either bundle.
TestVerdict evaluate_relations(std::span<const RelationSpec> relations, const SignalBundle &seed_outputs,
                               const SignalBundle &morph_outputs, const ToleranceConfig &defaults);

} // namespace metamorph
