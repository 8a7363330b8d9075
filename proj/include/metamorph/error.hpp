#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace metamorph {

/// Root of every exception thrown by the engine.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string &what) : Error("ConfigError: " + what) {}
};

/// Filesystem or serialization failure. `cause` is e.g. "NonFiniteValue".
class IoError : public Error {
  public:
    IoError(std::string cause, const std::string &detail)
        : Error("IoError(" + cause + "): " + detail), cause_(std::move(cause)) {}
    const std::string &cause() const noexcept { return cause_; }

  private:
    std::string cause_;
};

/// Structural violation at a JSON path, or a schema-level defect in an input
/// document (modelDescription, MR, test).
class SchemaError : public Error {
  public:
    SchemaError(std::string path, std::string cause)
        : Error("SchemaError(" + path + ", " + cause + ")"), path_(std::move(path)),
          cause_(std::move(cause)) {}
    const std::string &path() const noexcept { return path_; }
    const std::string &cause() const noexcept { return cause_; }

  private:
    std::string path_;
    std::string cause_;
};

class UnknownSchema : public Error {
  public:
    explicit UnknownSchema(const std::string &id) : Error("UnknownSchema: " + id) {}
};

} // namespace metamorph
