#include "metamorph/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "metamorph/error.hpp"

namespace metamorph {

namespace fs = std::filesystem;

void require_finite(const Json &doc, const std::string &path) {
    switch (doc.type()) {
    case Json::value_t::number_float:
        if (!std::isfinite(doc.get<double>())) {
            throw IoError("NonFiniteValue", "non-finite number at " + path);
        }
        break;
    case Json::value_t::object:
        for (const auto &[key, value] : doc.items()) {
            require_finite(value, json_path(path, key));
        }
        break;
    case Json::value_t::array:
        for (std::size_t i = 0; i < doc.size(); ++i) {
            require_finite(doc[i], json_path(path, i));
        }
        break;
    default:
        break;
    }
}

std::string to_canonical(const Json &doc) {
    require_finite(doc);
    return doc.dump(2) + "\n";
}

void write_text(const fs::path &file, std::string_view text) {
    std::error_code ec;
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path(), ec);
        if (ec) {
            throw IoError("CreateDirectory", file.parent_path().string() + ": " + ec.message());
        }
    }
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("Open", tmp.string());
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) {
            throw IoError("Write", tmp.string());
        }
    }
    fs::rename(tmp, file, ec);
    if (ec) {
        throw IoError("Rename", file.string() + ": " + ec.message());
    }
}

void write_canonical(const fs::path &file, const Json &doc) { write_text(file, to_canonical(doc)); }

std::string read_text(const fs::path &file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw IoError("Open", file.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Json read_json(const fs::path &file) {
    const std::string text = read_text(file);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw IoError("Parse", file.string() + ": " + e.what());
    }
}

std::string json_path(const std::string &base, std::string_view key) {
    if (base == ".") {
        return "." + std::string(key);
    }
    return base + "." + std::string(key);
}

std::string json_path(const std::string &base, std::size_t index) {
    const std::string prefix = base == "." ? std::string() : base;
    return prefix + "[" + std::to_string(index) + "]";
}

// ---------------------------------------------------------------------------

ObjectReader::ObjectReader(const Json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
        throw SchemaError(path_, "ExpectedObject");
    }
}

bool ObjectReader::has(std::string_view key) const { return obj_.contains(key); }

const Json &ObjectReader::required(std::string_view key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
        throw SchemaError(path_of(key), "Missing");
    }
    seen_.emplace_back(key);
    return *it;
}

const Json *ObjectReader::optional(std::string_view key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
        return nullptr;
    }
    seen_.emplace_back(key);
    if (it->is_null()) {
        return nullptr;
    }
    return &*it;
}

std::string ObjectReader::string(std::string_view key) { return expect_string(required(key), path_of(key)); }

std::optional<std::string> ObjectReader::optional_string(std::string_view key) {
    const Json *v = optional(key);
    if (v == nullptr) {
        return std::nullopt;
    }
    return expect_string(*v, path_of(key));
}

double ObjectReader::number(std::string_view key) { return expect_number(required(key), path_of(key)); }

std::optional<double> ObjectReader::optional_number(std::string_view key) {
    const Json *v = optional(key);
    if (v == nullptr) {
        return std::nullopt;
    }
    return expect_number(*v, path_of(key));
}

bool ObjectReader::boolean(std::string_view key) {
    const Json &v = required(key);
    if (!v.is_boolean()) {
        throw SchemaError(path_of(key), "ExpectedBoolean");
    }
    return v.get<bool>();
}

long long ObjectReader::integer(std::string_view key) {
    const Json &v = required(key);
    if (!v.is_number_integer()) {
        throw SchemaError(path_of(key), "ExpectedInteger");
    }
    return v.get<long long>();
}

void ObjectReader::ignore(std::string_view key) { seen_.emplace_back(key); }

void ObjectReader::finish() const {
    for (const auto &[key, value] : obj_.items()) {
        if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
            throw SchemaError(json_path(path_, key), "UnknownField");
        }
    }
}

double expect_number(const Json &value, const std::string &path) {
    if (!value.is_number()) {
        throw SchemaError(path, "ExpectedNumber");
    }
    const double x = value.get<double>();
    if (!std::isfinite(x)) {
        throw SchemaError(path, "NonFinite");
    }
    return x;
}

std::string expect_string(const Json &value, const std::string &path) {
    if (!value.is_string()) {
        throw SchemaError(path, "ExpectedString");
    }
    return value.get<std::string>();
}

} // namespace metamorph
