#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace metamorph::detail {

/// Extracts one member of a zip archive (stored or deflated). Returns nullopt
/// when the member is absent; throws IoError("BadArchive") on corrupt input.
std::optional<std::string> read_zip_member(const std::filesystem::path &archive, const std::string &member);

} // namespace metamorph::detail
