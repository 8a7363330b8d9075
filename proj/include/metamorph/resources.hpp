#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace metamorph {

/// Files compiled into the library, keyed by repo-relative path
/// (e.g. "schemas/mrs.schema.json", "prompts/mr_generation.txt").
std::optional<std::string_view> embedded_resource(std::string_view name);
std::vector<std::string_view> embedded_resource_names();

} // namespace metamorph
