#include "metamorph/schema.hpp"

#include <cmath>
#include <map>
#include <regex>

#include "metamorph/resources.hpp"

namespace metamorph {

namespace {

constexpr std::string_view kPrefix = "schemas/";
constexpr std::string_view kSuffix = ".schema.json";

struct Registry {
    std::map<std::string, Json, std::less<>> schemas;
    std::vector<std::string> ids;
};

const Registry &registry() {
    static const Registry reg = [] {
        Registry r;
        for (auto name : embedded_resource_names()) {
            if (!name.starts_with(kPrefix) || !name.ends_with(kSuffix)) {
                continue;
            }
            const std::string id(name.substr(kPrefix.size(), name.size() - kPrefix.size() - kSuffix.size()));
            r.schemas.emplace(id, Json::parse(*embedded_resource(name)));
            if (id != "common") {
                r.ids.push_back(id);
            }
        }
        return r;
    }();
    return reg;
}

const Json &lookup(std::string_view id) {
    const auto &s = registry().schemas;
    auto it = s.find(id);
    if (it == s.end()) {
        throw UnknownSchema(std::string(id));
    }
    return it->second;
}

const std::regex &compiled(const std::string &pattern) {
    thread_local std::map<std::string, std::regex> cache;
    auto it = cache.find(pattern);
    if (it == cache.end()) {
        it = cache.emplace(pattern, std::regex(pattern, std::regex::ECMAScript)).first;
    }
    return it->second;
}

std::string number_text(const Json &n) { return n.dump(); }

bool type_matches(const Json &value, const std::string &type) {
    if (type == "object") {
        return value.is_object();
    }
    if (type == "array") {
        return value.is_array();
    }
    if (type == "string") {
        return value.is_string();
    }
    if (type == "boolean") {
        return value.is_boolean();
    }
    if (type == "null") {
        return value.is_null();
    }
    if (type == "number") {
        return value.is_number();
    }
    if (type == "integer") {
        if (value.is_number_integer()) {
            return true;
        }
        if (value.is_number_float()) {
            const double d = value.get<double>();
            return std::isfinite(d) && std::floor(d) == d;
        }
        return false;
    }
    return false;
}

class Validator {
  public:
    explicit Validator(const Json &root) : root_(&root) {}

    void check(const Json &value, const Json &schema, const std::string &path) {
        if (schema.contains("$ref")) {
            follow(value, schema.at("$ref").get<std::string>(), path);
        }
        if (auto it = schema.find("type"); it != schema.end()) {
            bool ok = false;
            std::string names;
            if (it->is_array()) {
                for (const auto &t : *it) {
                    ok = ok || type_matches(value, t.get<std::string>());
                    names += (names.empty() ? "" : "|") + t.get<std::string>();
                }
            } else {
                ok = type_matches(value, it->get<std::string>());
                names = it->get<std::string>();
            }
            if (!ok) {
                add(path, "expected " + names);
                return;
            }
        }
        if (auto it = schema.find("enum"); it != schema.end()) {
            bool found = false;
            for (const auto &e : *it) {
                found = found || e == value;
            }
            if (!found) {
                add(path, "not one of " + it->dump());
            }
        }
        if (value.is_number()) {
            numeric(value.get<double>(), schema, path);
        }
        if (value.is_string()) {
            const auto &s = value.get_ref<const std::string &>();
            if (auto it = schema.find("minLength"); it != schema.end() && s.size() < it->get<std::size_t>()) {
                add(path, "shorter than " + number_text(*it));
            }
            if (auto it = schema.find("pattern"); it != schema.end() &&
                                                 !std::regex_search(s, compiled(it->get<std::string>()))) {
                add(path, "does not match " + it->get<std::string>());
            }
        }
        if (value.is_array()) {
            if (auto it = schema.find("minItems"); it != schema.end() && value.size() < it->get<std::size_t>()) {
                add(path, "fewer than " + number_text(*it) + " items");
            }
            if (auto it = schema.find("items"); it != schema.end()) {
                for (std::size_t i = 0; i < value.size(); ++i) {
                    check(value[i], *it, json_path(path, i));
                }
            }
        }
        if (value.is_object()) {
            object(value, schema, path);
        }
        if (auto it = schema.find("allOf"); it != schema.end()) {
            for (const auto &sub : *it) {
                check(value, sub, path);
            }
        }
        if (auto it = schema.find("oneOf"); it != schema.end()) {
            one_of(value, *it, path);
        }
    }

    std::vector<std::string> take() { return std::move(violations_); }

  private:
    void add(const std::string &path, const std::string &message) { violations_.push_back(path + ": " + message); }

    void numeric(double x, const Json &schema, const std::string &path) {
        if (auto it = schema.find("minimum"); it != schema.end() && x < it->get<double>()) {
            add(path, "below minimum " + number_text(*it));
        }
        if (auto it = schema.find("exclusiveMinimum"); it != schema.end() && x <= it->get<double>()) {
            add(path, "must exceed " + number_text(*it));
        }
        if (auto it = schema.find("maximum"); it != schema.end() && x > it->get<double>()) {
            add(path, "above maximum " + number_text(*it));
        }
    }

    void object(const Json &value, const Json &schema, const std::string &path) {
        if (auto it = schema.find("required"); it != schema.end()) {
            for (const auto &key : *it) {
                if (!value.contains(key.get<std::string>())) {
                    add(json_path(path, key.get<std::string>()), "missing");
                }
            }
        }
        const Json *props = schema.contains("properties") ? &schema.at("properties") : nullptr;
        const Json *extra = schema.contains("additionalProperties") ? &schema.at("additionalProperties") : nullptr;
        for (const auto &[key, v] : value.items()) {
            const std::string p = json_path(path, key);
            if (props != nullptr && props->contains(key)) {
                check(v, props->at(key), p);
            } else if (extra != nullptr) {
                if (extra->is_boolean()) {
                    if (!extra->get<bool>()) {
                        add(p, "unexpected field");
                    }
                } else {
                    check(v, *extra, p);
                }
            }
        }
    }

    void one_of(const Json &value, const Json &alternatives, const std::string &path) {
        std::size_t matches = 0;
        for (const auto &alt : alternatives) {
            Validator sub(*root_);
            sub.check(value, alt, path);
            if (sub.violations_.empty()) {
                ++matches;
            }
        }
        if (matches == 0) {
            add(path, "matches none of the alternatives");
        } else if (matches > 1) {
            add(path, "matches more than one alternative");
        }
    }

    void follow(const Json &value, const std::string &ref, const std::string &path) {
        const auto hash = ref.find('#');
        const Json *doc = root_;
        if (hash != 0) {
            doc = &lookup(ref.substr(0, hash));
        }
        const std::string pointer = hash == std::string::npos ? "" : ref.substr(hash + 1);
        const Json &target = doc->at(Json::json_pointer(pointer));
        const Json *saved = root_;
        root_ = doc;
        check(value, target, path);
        root_ = saved;
    }

    const Json *root_;
    std::vector<std::string> violations_;
};

int major_of(const std::string &version) {
    const auto dot = version.find('.');
    try {
        return std::stoi(version.substr(0, dot));
    } catch (const std::exception &) {
        return -1;
    }
}

} // namespace

const std::vector<std::string> &schema_ids() { return registry().ids; }

const Json &schema(std::string_view schema_id) { return lookup(schema_id); }

std::vector<std::string> validate(const Json &payload, std::string_view schema_id) {
    const Json &s = lookup(schema_id);
    Validator v(s);
    v.check(payload, s, ".");
    return v.take();
}

Json make_document(std::string_view schema_id, const Json &payload) {
    const auto violations = validate(payload, schema_id);
    if (!violations.empty()) {
        const auto &first = violations.front();
        const auto colon = first.find(": ");
        throw SchemaError(first.substr(0, colon), first.substr(colon + 2));
    }
    return Json{{"schema_id", std::string(schema_id)}, {"version", kSchemaVersion}, {"payload", payload}};
}

Json open_document(const Json &document, std::string_view schema_id) {
    ObjectReader r(document, ".");
    const std::string id = r.string("schema_id");
    if (id != schema_id) {
        throw SchemaError(".schema_id", "expected " + std::string(schema_id) + ", found " + id);
    }
    const std::string version = r.string("version");
    if (major_of(version) != major_of(kSchemaVersion)) {
        throw SchemaError(".version", "unsupported version " + version);
    }
    Json payload = r.required("payload");
    r.finish();
    const auto violations = validate(payload, schema_id);
    if (!violations.empty()) {
        const auto &first = violations.front();
        const auto colon = first.find(": ");
        throw SchemaError(".payload" + (first.substr(0, colon) == "." ? "" : first.substr(0, colon)),
                          first.substr(colon + 2));
    }
    return payload;
}

void write_document(const std::filesystem::path &file, std::string_view schema_id, const Json &payload) {
    write_canonical(file, make_document(schema_id, payload));
}

Json read_document(const std::filesystem::path &file, std::string_view schema_id) {
    return open_document(read_json(file), schema_id);
}

} // namespace metamorph
