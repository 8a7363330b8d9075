#pragma once

/**
 * @file json_io.hpp
 * @brief Canonical JSON serialization and strict object reading helpers.
 *
 * Canonical form: keys sorted (nlohmann::json uses std::map), two-space
 * indentation, doubles printed as the shortest decimal that round-trips,
 * trailing newline. Non-finite numbers are rejected instead of being
 * silently turned into `null`.
 */

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace metamorph {

using Json = nlohmann::json;

/// Throws IoError("NonFiniteValue") if any number in `doc` is NaN or infinite.
void require_finite(const Json &doc, const std::string &path = ".");

/// Canonical text of `doc`. Throws IoError("NonFiniteValue").
std::string to_canonical(const Json &doc);

/// Writes canonical text atomically (temp file + rename). Creates parents.
void write_canonical(const std::filesystem::path &file, const Json &doc);

void write_text(const std::filesystem::path &file, std::string_view text);
std::string read_text(const std::filesystem::path &file);
Json read_json(const std::filesystem::path &file);

/// Appends `.key` or `[i]` to a JSON path.
std::string json_path(const std::string &base, std::string_view key);
std::string json_path(const std::string &base, std::size_t index);

/**
 * Strict reader over one JSON object: every access records the key, and
 * finish() rejects keys that were never read. All failures raise
 * SchemaError(path, cause).
 */
class ObjectReader {
  public:
    ObjectReader(const Json &obj, std::string path);

    bool has(std::string_view key) const;
    const Json &required(std::string_view key);
    const Json *optional(std::string_view key);

    std::string string(std::string_view key);
    std::optional<std::string> optional_string(std::string_view key);
    double number(std::string_view key);
    std::optional<double> optional_number(std::string_view key);
    bool boolean(std::string_view key);
    long long integer(std::string_view key);

    /// Marks `key` as consumed without reading it.
    void ignore(std::string_view key);
    /// Rejects unread keys with SchemaError(path.key, "UnknownField").
    void finish() const;

    std::string path_of(std::string_view key) const { return json_path(path_, key); }
    const std::string &path() const noexcept { return path_; }

  private:
    const Json &obj_;
    std::string path_;
    std::vector<std::string> seen_;
};

double expect_number(const Json &value, const std::string &path);
std::string expect_string(const Json &value, const std::string &path);

} // namespace metamorph
