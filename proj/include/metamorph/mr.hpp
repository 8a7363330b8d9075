#pragma once

/**
 * @file mr.hpp
 * @brief Given-When-Then metamorphic relations: schema, static checks, repairs.
 */

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metamorph/extraction.hpp"
#include "metamorph/json_io.hpp"
#include "metamorph/relations.hpp"

namespace metamorph {

enum class TransformOp { Increase, Decrease, Scale, Hold };
enum class PatternHint { Step, Ramp, Constant };

std::string to_string(TransformOp op);
std::optional<TransformOp> parse_transform_op(std::string_view text);
std::string to_string(PatternHint hint);
std::optional<PatternHint> parse_pattern_hint(std::string_view text);

struct Transform {
    std::string var;
    TransformOp op = TransformOp::Increase;
    std::optional<PatternHint> pattern_hint;
    /// Absolute change for increase/decrease, factor for scale.
    std::optional<double> magnitude_hint;
    friend bool operator==(const Transform &, const Transform &) = default;
};

struct GivenClause {
    std::map<std::string, double> initial;
    std::vector<std::string> held_constant; // kept sorted, unique
    friend bool operator==(const GivenClause &, const GivenClause &) = default;
};

struct WhenClause {
    std::vector<Transform> transforms;
    friend bool operator==(const WhenClause &, const WhenClause &) = default;
};

struct ThenClause {
    std::vector<RelationSpec> relations;
    friend bool operator==(const ThenClause &, const ThenClause &) = default;
};

struct Refinement {
    std::string feedback;
    bool dropped = false;
    friend bool operator==(const Refinement &, const Refinement &) = default;
};

/// Priority rank of an MR category: behavioral=1, performance=2.
int category_priority(Category c);

struct MetamorphicRelation {
    std::string id; // MR###
    std::vector<std::string> req_ids;
    std::string scenario;
    Category category = Category::Behavioral;
    int priority = 1;
    GivenClause given;
    WhenClause when;
    ThenClause then;
    std::optional<Refinement> refinement;

    bool dropped() const noexcept { return refinement && refinement->dropped; }

    Json to_json() const;
    friend bool operator==(const MetamorphicRelation &, const MetamorphicRelation &) = default;
};

/// Strict parse: unknown fields, missing fields, duplicate relation or
/// transform variables and incomplete relation parameters raise SchemaError.
MetamorphicRelation parse_mr(const Json &j, const std::string &path = ".");

/// Identity used for de-duplication: sorted (var, op) transforms plus sorted
/// (var, kind) relations.
std::string mr_signature(const MetamorphicRelation &mr);

/// Human-readable Given/When/Then rendering for reports (one-way).
std::string render_gherkin(const MetamorphicRelation &mr);

enum class Severity { Repairable, Fatal };

/// Check rules. Names follow the refinement criteria they implement.
enum class CheckRule {
    UnknownRequirement,      // factual correctness
    UnknownVariable,         // factual correctness
    ContradictsRelationship, // factual correctness
    CategoryMismatch,        // category consistency
    PriorityMismatch,        // category consistency
    ClampToBounds,           // constraint compliance
    HeldConstantNotInput,    // constraint compliance
    ConflictingHold,         // constraint compliance
    SetPointMissing,         // constraint compliance
    WindowOutOfRange,        // constraint compliance
    NonPositiveTolerance,    // constraint compliance
    BadMagnitudeHint,        // constraint compliance
    NoCausalLink,            // causal validity
    NotAnInput,              // testability
    NotAnOutput,             // testability
};

std::string to_string(CheckRule rule);

struct Finding {
    CheckRule rule;
    Severity severity;
    std::string path;
    std::string message;
    /// Deterministic repair; set for repairable findings only.
    std::function<void(MetamorphicRelation &)> fix;
};

/**
 * Static validation of one MR against the extraction output. Returns only
 * problems; an empty list means the MR is clean. Never throws for content
 * problems.
 *
 * Causal validity requires a direct VariableRelationship with the transform
 * variable among its inputs and the relation variable among its outputs.
 */
std::vector<Finding> static_check(const MetamorphicRelation &mr, const ExtractionOutput &extraction,
                                  const ToleranceConfig &defaults = {});

bool has_fatal(const std::vector<Finding> &findings);

/// Applies every repairable finding's fix in order.
MetamorphicRelation apply_fixes(MetamorphicRelation mr, const std::vector<Finding> &findings);

} // namespace metamorph
