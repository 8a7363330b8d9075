#pragma once

/**
 * @file schema.hpp
 * @brief Artifact schemas and the versioned document envelope.
 *
 * Schemas live in schemas/<id>.schema.json and are embedded in the binary.
 * The validator implements the JSON-Schema keywords those files use: type,
 * enum, properties, required, additionalProperties, items, minItems,
 * minLength, pattern, minimum, maximum, exclusiveMinimum, allOf, oneOf and
 * $ref ("#/$defs/x" within a file, "<id>#/$defs/x" across files).
 */

#include <string>
#include <string_view>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/json_io.hpp"

namespace metamorph {

inline constexpr const char *kSchemaVersion = "1.0";

/// Ids of every artifact schema (excludes the shared "common" definitions).
const std::vector<std::string> &schema_ids();

/// The schema document for `schema_id`. Throws UnknownSchema.
const Json &schema(std::string_view schema_id);

/// Violations of `payload` against `schema_id`, each "<path>: <message>"
/// (".mrs[0].req_ids: missing"). Empty iff valid. Throws UnknownSchema.
std::vector<std::string> validate(const Json &payload, std::string_view schema_id);

/// {"schema_id", "version", "payload"} after validating the payload;
/// throws SchemaError(first violation path, message) when invalid.
Json make_document(std::string_view schema_id, const Json &payload);

/// Checks the envelope (same schema id, same major version) and the
/// payload, then returns the payload. Throws SchemaError, UnknownSchema.
Json open_document(const Json &document, std::string_view schema_id);

/// Canonical write of make_document(schema_id, payload).
void write_document(const std::filesystem::path &file, std::string_view schema_id, const Json &payload);
/// open_document over read_json(file).
Json read_document(const std::filesystem::path &file, std::string_view schema_id);

} // namespace metamorph
