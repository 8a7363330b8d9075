#pragma once

/**
 * @file extraction.hpp
 * @brief Testable interface and requirements of a system under test.
 *
 * The interface comes from an FMI modelDescription.xml (2.0 ScalarVariable or
 * 3.0 typed-variable spelling, standalone or inside an .fmu archive). The
 * requirements come from a markdown document with tagged blocks:
 *
 *     [SUMMARY]
 *     free text
 *     [/SUMMARY]
 *
 *     [REQ category=behavioral inputs=a,b outputs=c direction=increases]
 *     requirement statement (kept verbatim as evidence)
 *     [/REQ]
 *
 *     [INIT]
 *     a = 0.5
 *     [/INIT]
 *
 * Everything outside the blocks is ignored. docs/requirements_format.md has
 * the full grammar.
 */

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/json_io.hpp"

namespace metamorph {

class XmlError : public Error {
  public:
    explicit XmlError(const std::string &what) : Error("XmlError: " + what) {}
};

class DuplicateVariable : public SchemaError {
  public:
    explicit DuplicateVariable(const std::string &name) : SchemaError(name, "DuplicateVariable") {}
};

/// Syntax or cross-check failure in a requirements document (1-based line).
class ParseError : public Error {
  public:
    ParseError(std::size_t line, std::string cause, const std::string &detail = {})
        : Error("ParseError(line " + std::to_string(line) + ", " + cause + ")" + (detail.empty() ? "" : ": " + detail)),
          line_(line), cause_(std::move(cause)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string &cause() const noexcept { return cause_; }

  private:
    std::size_t line_;
    std::string cause_;
};

class EmptyRequirements : public Error {
  public:
    EmptyRequirements() : Error("EmptyRequirements: no tagged requirements found") {}
};

class UnknownVariable : public Error {
  public:
    UnknownVariable(std::string name, std::string where)
        : Error("UnknownVariable(" + name + " in " + where + ")"), name_(std::move(name)), where_(std::move(where)) {}
    const std::string &name() const noexcept { return name_; }
    const std::string &where() const noexcept { return where_; }

  private:
    std::string name_;
    std::string where_;
};

/// Missing seed value or another extraction-level inconsistency.
class ExtractionError : public Error {
  public:
    explicit ExtractionError(const std::string &what) : Error("ExtractionError: " + what) {}
};

enum class Causality { Input, Output, Parameter, Local };
enum class DataType { Real, Integer, Boolean };

std::string to_string(Causality c);
std::string to_string(DataType d);

struct VariableSpec {
    std::string name;
    std::string description;
    Causality causality = Causality::Local;
    std::string variability;
    DataType data_type = DataType::Real;
    std::string unit;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> start;

    bool within_bounds(double x) const noexcept {
        return (!min || x >= *min) && (!max || x <= *max);
    }
    double clamp(double x) const noexcept;

    Json to_json() const;
    static VariableSpec from_json(const Json &j, const std::string &path);
    friend bool operator==(const VariableSpec &, const VariableSpec &) = default;
};

struct DefaultExperiment {
    std::optional<double> start;
    std::optional<double> stop;
    std::optional<double> step;
    friend bool operator==(const DefaultExperiment &, const DefaultExperiment &) = default;
};

struct InterfaceSpec {
    std::string model_name;
    std::vector<VariableSpec> variables;
    std::optional<DefaultExperiment> default_experiment;

    const VariableSpec *find(std::string_view name) const;
    /// Names in declaration order.
    std::vector<std::string> names_with(Causality c) const;
    std::vector<std::string> inputs() const { return names_with(Causality::Input); }
    std::vector<std::string> outputs() const { return names_with(Causality::Output); }

    /// Throws SchemaError on duplicate names, inverted bounds or out-of-range start.
    void validate() const;

    Json to_json() const;
    static InterfaceSpec from_json(const Json &j, const std::string &path = ".");
    friend bool operator==(const InterfaceSpec &, const InterfaceSpec &) = default;
};

enum class Category { Behavioral, Performance, Other };
std::string to_string(Category c);
std::optional<Category> parse_category(std::string_view text);

struct TestCondition {
    std::string id; // TC###
    std::string text;
    Category category = Category::Other;
    std::string evidence;

    Json to_json() const;
    static TestCondition from_json(const Json &j, const std::string &path);
    friend bool operator==(const TestCondition &, const TestCondition &) = default;
};

enum class Direction { Increases, Decreases, Proportional, RegulatesToSetpoint };
std::string to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

struct VariableRelationship {
    std::string id;             // VR###
    std::string test_condition; // TC### of the block it was declared in
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    Direction direction = Direction::Increases;
    std::string statement;
    /// The set-point input for RegulatesToSetpoint relationships.
    std::optional<std::string> setpoint;

    Json to_json() const;
    static VariableRelationship from_json(const Json &j, const std::string &path);
    friend bool operator==(const VariableRelationship &, const VariableRelationship &) = default;
};

/// Result of reading a requirements document, before cross-checking.
struct RequirementsDoc {
    std::string system_summary;
    std::vector<TestCondition> test_conditions;
    std::vector<VariableRelationship> relationships;
    std::map<std::string, double> initial_conditions;
    /// Source line of each relationship / initial condition, for diagnostics.
    std::map<std::string, std::size_t> lines;
};

struct ExtractionOutput {
    std::string system_summary;
    std::vector<TestCondition> test_conditions;
    std::vector<VariableRelationship> relationships;
    InterfaceSpec variables;
    std::map<std::string, double> initial_conditions;

    const TestCondition *find_condition(std::string_view id) const;
    const VariableRelationship *find_relationship(std::string_view id) const;
    /// Inputs that must stay constant: declared set-points of relationships
    /// and inputs whose name starts with "setpoint".
    std::vector<std::string> setpoint_inputs() const;

    Json to_json() const;
    static ExtractionOutput from_json(const Json &j, const std::string &path = ".");
};

/// Parses FMI 2.0/3.0 modelDescription XML. Throws XmlError, SchemaError,
/// DuplicateVariable.
InterfaceSpec parse_model_description(std::string_view xml);

/// Reads modelDescription.xml from a standalone file or an .fmu archive.
InterfaceSpec read_model_description(const std::filesystem::path &path);

/// Syntactic parse of a requirements document. Throws ParseError, EmptyRequirements.
RequirementsDoc load_requirements(std::string_view doc);

/// Parse plus cross-check of every variable name against `interface`;
/// violations raise ParseError with cause "UnknownVariable".
RequirementsDoc load_requirements(std::string_view doc, const InterfaceSpec &interface);

/// Cross-validates and fills initial conditions from interface start values.
/// Throws UnknownVariable, SchemaError (interface not testable), ExtractionError.
ExtractionOutput build_extraction_output(const InterfaceSpec &interface, const RequirementsDoc &requirements);

} // namespace metamorph
