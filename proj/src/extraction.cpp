#include "metamorph/extraction.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "zip_reader.hpp"

namespace metamorph {

namespace pt = boost::property_tree;

// ---------------------------------------------------------------------------
// Enum spellings

std::string to_string(Causality c) {
    switch (c) {
    case Causality::Input:
        return "input";
    case Causality::Output:
        return "output";
    case Causality::Parameter:
        return "parameter";
    case Causality::Local:
        return "local";
    }
    return "local";
}

std::string to_string(DataType d) {
    switch (d) {
    case DataType::Real:
        return "real";
    case DataType::Integer:
        return "integer";
    case DataType::Boolean:
        return "boolean";
    }
    return "real";
}

std::string to_string(Category c) {
    switch (c) {
    case Category::Behavioral:
        return "behavioral";
    case Category::Performance:
        return "performance";
    case Category::Other:
        return "other";
    }
    return "other";
}

std::optional<Category> parse_category(std::string_view text) {
    for (Category c : {Category::Behavioral, Category::Performance, Category::Other}) {
        if (to_string(c) == text) {
            return c;
        }
    }
    return std::nullopt;
}

std::string to_string(Direction d) {
    switch (d) {
    case Direction::Increases:
        return "increases";
    case Direction::Decreases:
        return "decreases";
    case Direction::Proportional:
        return "proportional";
    case Direction::RegulatesToSetpoint:
        return "regulates_to_setpoint";
    }
    return "increases";
}

std::optional<Direction> parse_direction(std::string_view text) {
    for (Direction d : {Direction::Increases, Direction::Decreases, Direction::Proportional,
                        Direction::RegulatesToSetpoint}) {
        if (to_string(d) == text) {
            return d;
        }
    }
    return std::nullopt;
}

namespace {

std::optional<Causality> parse_causality(std::string_view text) {
    for (Causality c : {Causality::Input, Causality::Output, Causality::Parameter, Causality::Local}) {
        if (to_string(c) == text) {
            return c;
        }
    }
    return std::nullopt;
}

std::optional<DataType> parse_data_type(std::string_view text) {
    for (DataType d : {DataType::Real, DataType::Integer, DataType::Boolean}) {
        if (to_string(d) == text) {
            return d;
        }
    }
    return std::nullopt;
}

Json string_list(const std::vector<std::string> &v) { return Json(v); }

std::vector<std::string> read_string_list(const Json &j, const std::string &path) {
    if (!j.is_array()) {
        throw SchemaError(path, "ExpectedArray");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(expect_string(j[i], json_path(path, i)));
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// VariableSpec / InterfaceSpec

double VariableSpec::clamp(double x) const noexcept {
    if (min && x < *min) {
        x = *min;
    }
    if (max && x > *max) {
        x = *max;
    }
    return x;
}

Json VariableSpec::to_json() const {
    Json j{{"name", name},
           {"description", description},
           {"causality", to_string(causality)},
           {"variability", variability},
           {"data_type", to_string(data_type)},
           {"unit", unit}};
    if (min) {
        j["min"] = *min;
    }
    if (max) {
        j["max"] = *max;
    }
    if (start) {
        j["start"] = *start;
    }
    return j;
}

VariableSpec VariableSpec::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    VariableSpec v;
    v.name = r.string("name");
    v.description = r.optional_string("description").value_or("");
    auto c = parse_causality(r.string("causality"));
    if (!c) {
        throw SchemaError(r.path_of("causality"), "BadCausality");
    }
    v.causality = *c;
    v.variability = r.optional_string("variability").value_or("");
    auto d = parse_data_type(r.string("data_type"));
    if (!d) {
        throw SchemaError(r.path_of("data_type"), "BadDataType");
    }
    v.data_type = *d;
    v.unit = r.optional_string("unit").value_or("");
    v.min = r.optional_number("min");
    v.max = r.optional_number("max");
    v.start = r.optional_number("start");
    r.finish();
    return v;
}

const VariableSpec *InterfaceSpec::find(std::string_view name) const {
    auto it = std::find_if(variables.begin(), variables.end(), [&](const VariableSpec &v) { return v.name == name; });
    return it == variables.end() ? nullptr : &*it;
}

std::vector<std::string> InterfaceSpec::names_with(Causality c) const {
    std::vector<std::string> out;
    for (const auto &v : variables) {
        if (v.causality == c) {
            out.push_back(v.name);
        }
    }
    return out;
}

void InterfaceSpec::validate() const {
    std::set<std::string> seen;
    for (const auto &v : variables) {
        if (!seen.insert(v.name).second) {
            throw DuplicateVariable(v.name);
        }
        if (v.min && v.max && *v.min > *v.max) {
            throw SchemaError(v.name, "InvertedBounds");
        }
        if (v.start && !v.within_bounds(*v.start)) {
            throw SchemaError(v.name, "StartOutOfBounds");
        }
    }
}

Json InterfaceSpec::to_json() const {
    Json vars = Json::array();
    for (const auto &v : variables) {
        vars.push_back(v.to_json());
    }
    Json j{{"model_name", model_name}, {"variables", std::move(vars)}};
    if (default_experiment) {
        Json de = Json::object();
        if (default_experiment->start) {
            de["start"] = *default_experiment->start;
        }
        if (default_experiment->stop) {
            de["stop"] = *default_experiment->stop;
        }
        if (default_experiment->step) {
            de["step"] = *default_experiment->step;
        }
        j["default_experiment"] = std::move(de);
    }
    return j;
}

InterfaceSpec InterfaceSpec::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    InterfaceSpec s;
    s.model_name = r.string("model_name");
    const Json &vars = r.required("variables");
    if (!vars.is_array()) {
        throw SchemaError(r.path_of("variables"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < vars.size(); ++i) {
        s.variables.push_back(VariableSpec::from_json(vars[i], json_path(r.path_of("variables"), i)));
    }
    if (const Json *de = r.optional("default_experiment")) {
        ObjectReader dr(*de, r.path_of("default_experiment"));
        DefaultExperiment d;
        d.start = dr.optional_number("start");
        d.stop = dr.optional_number("stop");
        d.step = dr.optional_number("step");
        dr.finish();
        s.default_experiment = d;
    }
    r.finish();
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// TestCondition / VariableRelationship / ExtractionOutput

Json TestCondition::to_json() const {
    return Json{{"id", id}, {"text", text}, {"category", to_string(category)}, {"evidence", evidence}};
}

TestCondition TestCondition::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    TestCondition t;
    t.id = r.string("id");
    t.text = r.string("text");
    auto c = parse_category(r.string("category"));
    if (!c) {
        throw SchemaError(r.path_of("category"), "BadCategory");
    }
    t.category = *c;
    t.evidence = r.string("evidence");
    if (t.evidence.empty()) {
        throw SchemaError(r.path_of("evidence"), "Empty");
    }
    r.finish();
    return t;
}

Json VariableRelationship::to_json() const {
    Json j{{"id", id},
           {"test_condition", test_condition},
           {"inputs", string_list(inputs)},
           {"outputs", string_list(outputs)},
           {"direction", to_string(direction)},
           {"statement", statement}};
    if (setpoint) {
        j["setpoint"] = *setpoint;
    }
    return j;
}

VariableRelationship VariableRelationship::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    VariableRelationship v;
    v.id = r.string("id");
    v.test_condition = r.string("test_condition");
    v.inputs = read_string_list(r.required("inputs"), r.path_of("inputs"));
    v.outputs = read_string_list(r.required("outputs"), r.path_of("outputs"));
    auto d = parse_direction(r.string("direction"));
    if (!d) {
        throw SchemaError(r.path_of("direction"), "BadDirection");
    }
    v.direction = *d;
    v.statement = r.string("statement");
    v.setpoint = r.optional_string("setpoint");
    r.finish();
    return v;
}

const TestCondition *ExtractionOutput::find_condition(std::string_view id) const {
    auto it = std::find_if(test_conditions.begin(), test_conditions.end(),
                           [&](const TestCondition &t) { return t.id == id; });
    return it == test_conditions.end() ? nullptr : &*it;
}

const VariableRelationship *ExtractionOutput::find_relationship(std::string_view id) const {
    auto it = std::find_if(relationships.begin(), relationships.end(),
                           [&](const VariableRelationship &v) { return v.id == id; });
    return it == relationships.end() ? nullptr : &*it;
}

std::vector<std::string> ExtractionOutput::setpoint_inputs() const {
    std::set<std::string> names;
    for (const auto &vr : relationships) {
        if (vr.setpoint) {
            names.insert(*vr.setpoint);
        }
    }
    for (const auto &name : variables.inputs()) {
        if (name.starts_with("setpoint")) {
            names.insert(name);
        }
    }
    return {names.begin(), names.end()};
}

Json ExtractionOutput::to_json() const {
    Json tcs = Json::array();
    for (const auto &t : test_conditions) {
        tcs.push_back(t.to_json());
    }
    Json vrs = Json::array();
    for (const auto &v : relationships) {
        vrs.push_back(v.to_json());
    }
    return Json{{"system_summary", system_summary},
                {"test_conditions", std::move(tcs)},
                {"relationships", std::move(vrs)},
                {"variables", variables.to_json()},
                {"initial_conditions", initial_conditions}};
}

ExtractionOutput ExtractionOutput::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    ExtractionOutput e;
    e.system_summary = r.string("system_summary");
    const Json &tcs = r.required("test_conditions");
    if (!tcs.is_array()) {
        throw SchemaError(r.path_of("test_conditions"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < tcs.size(); ++i) {
        e.test_conditions.push_back(TestCondition::from_json(tcs[i], json_path(r.path_of("test_conditions"), i)));
    }
    const Json &vrs = r.required("relationships");
    if (!vrs.is_array()) {
        throw SchemaError(r.path_of("relationships"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < vrs.size(); ++i) {
        e.relationships.push_back(
            VariableRelationship::from_json(vrs[i], json_path(r.path_of("relationships"), i)));
    }
    e.variables = InterfaceSpec::from_json(r.required("variables"), r.path_of("variables"));
    const Json &ic = r.required("initial_conditions");
    if (!ic.is_object()) {
        throw SchemaError(r.path_of("initial_conditions"), "ExpectedObject");
    }
    for (const auto &[name, value] : ic.items()) {
        e.initial_conditions[name] = expect_number(value, json_path(r.path_of("initial_conditions"), name));
    }
    r.finish();
    return e;
}

// ---------------------------------------------------------------------------
// modelDescription.xml

namespace {

std::optional<double> xml_number(const pt::ptree &attrs, const char *key, const std::string &where) {
    auto v = attrs.get_optional<std::string>(key);
    if (!v) {
        return std::nullopt;
    }
    const std::string &s = *v;
    if (s == "true") {
        return 1.0;
    }
    if (s == "false") {
        return 0.0;
    }
    double x = 0.0;
    const char *first = s.data();
    const char *last = s.data() + s.size();
    while (first != last && *first == ' ') {
        ++first;
    }
    if (first != last && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last || !std::isfinite(x)) {
        throw SchemaError(where + "@" + key, "BadNumber");
    }
    return x;
}

std::optional<Causality> map_causality(const std::string &fmi) {
    if (fmi == "input") {
        return Causality::Input;
    }
    if (fmi == "output") {
        return Causality::Output;
    }
    if (fmi == "parameter" || fmi == "calculatedParameter" || fmi == "structuralParameter") {
        return Causality::Parameter;
    }
    if (fmi == "local" || fmi == "independent") {
        return Causality::Local;
    }
    return std::nullopt;
}

/// FMI type element name to data type; nullopt for types the engine skips.
std::optional<DataType> map_type(const std::string &element) {
    static const std::set<std::string> reals{"Real", "Float32", "Float64"};
    static const std::set<std::string> ints{"Integer", "Enumeration", "Int8",  "UInt8",  "Int16",
                                            "UInt16",  "Int32",       "UInt32", "Int64", "UInt64"};
    if (reals.count(element) != 0) {
        return DataType::Real;
    }
    if (ints.count(element) != 0) {
        return DataType::Integer;
    }
    if (element == "Boolean") {
        return DataType::Boolean;
    }
    return std::nullopt;
}

void fill_common(VariableSpec &v, const pt::ptree &attrs, const std::string &where) {
    v.name = attrs.get<std::string>("name", "");
    if (v.name.empty()) {
        throw SchemaError(where, "MissingName");
    }
    v.description = attrs.get<std::string>("description", "");
    const std::string causality = attrs.get<std::string>("causality", "local");
    auto c = map_causality(causality);
    if (!c) {
        throw SchemaError(where + "@causality", "BadCausality");
    }
    v.causality = *c;
    v.variability = attrs.get<std::string>("variability", "");
}

void fill_type(VariableSpec &v, const pt::ptree &attrs, const std::string &where) {
    if (auto unit = attrs.get_optional<std::string>("unit")) {
        v.unit = *unit;
    }
    v.min = xml_number(attrs, "min", where);
    v.max = xml_number(attrs, "max", where);
    v.start = xml_number(attrs, "start", where);
}

const pt::ptree &attributes_of(const pt::ptree &node) {
    static const pt::ptree empty;
    auto it = node.find("<xmlattr>");
    return it == node.not_found() ? empty : it->second;
}

} // namespace

InterfaceSpec parse_model_description(std::string_view xml) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error &e) {
        throw XmlError(e.what());
    }
    auto root_it = tree.find("fmiModelDescription");
    if (root_it == tree.not_found()) {
        throw SchemaError("fmiModelDescription", "Missing");
    }
    const pt::ptree &root = root_it->second;
    const pt::ptree &root_attrs = attributes_of(root);

    InterfaceSpec spec;
    spec.model_name = root_attrs.get<std::string>("modelName", "");

    if (auto de = root.find("DefaultExperiment"); de != root.not_found()) {
        const pt::ptree &a = attributes_of(de->second);
        DefaultExperiment d;
        d.start = xml_number(a, "startTime", "DefaultExperiment");
        d.stop = xml_number(a, "stopTime", "DefaultExperiment");
        d.step = xml_number(a, "stepSize", "DefaultExperiment");
        spec.default_experiment = d;
    }

    auto mv = root.find("ModelVariables");
    if (mv == root.not_found()) {
        throw SchemaError("ModelVariables", "Missing");
    }
    std::size_t index = 0;
    for (const auto &[tag, node] : mv->second) {
        if (tag == "<xmlattr>" || tag == "<xmlcomment>") {
            continue;
        }
        const std::string where = "ModelVariables/" + tag + "[" + std::to_string(index++) + "]";
        VariableSpec v;
        if (tag == "ScalarVariable") {
            fill_common(v, attributes_of(node), where);
            std::optional<DataType> type;
            for (const auto &[child_tag, child] : node) {
                if (auto t = map_type(child_tag)) {
                    type = t;
                    fill_type(v, attributes_of(child), where + "/" + child_tag);
                    break;
                }
            }
            if (!type) {
                continue; // String and other unsupported types
            }
            v.data_type = *type;
        } else if (auto t = map_type(tag)) {
            fill_common(v, attributes_of(node), where);
            fill_type(v, attributes_of(node), where);
            v.data_type = *t;
        } else {
            continue;
        }
        spec.variables.push_back(std::move(v));
    }
    if (spec.variables.empty()) {
        throw SchemaError("ModelVariables", "NoVariables");
    }
    spec.validate();
    return spec;
}

InterfaceSpec read_model_description(const std::filesystem::path &path) {
    if (path.extension() == ".fmu") {
        auto xml = detail::read_zip_member(path, "modelDescription.xml");
        if (!xml) {
            throw IoError("BadFmu", path.string() + " has no modelDescription.xml");
        }
        return parse_model_description(*xml);
    }
    return parse_model_description(read_text(path));
}

// ---------------------------------------------------------------------------
// Requirements documents

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = !out.empty();
        } else {
            if (space) {
                out.push_back(' ');
                space = false;
            }
            out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

std::string ordinal_id(const char *prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03zu", prefix, n);
    return buf;
}

struct Line {
    std::size_t number;      // 1-based
    std::size_t offset;      // byte offset of the first character
    std::string_view text;   // without the newline
};

std::vector<Line> split_lines(std::string_view doc) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    std::size_t n = 1;
    while (pos <= doc.size()) {
        const auto nl = doc.find('\n', pos);
        const auto end = nl == std::string_view::npos ? doc.size() : nl;
        std::string_view text = doc.substr(pos, end - pos);
        if (!text.empty() && text.back() == '\r') {
            text.remove_suffix(1);
        }
        lines.push_back({n++, pos, text});
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return lines;
}

struct ReqTag {
    Category category = Category::Other;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::optional<Direction> direction;
    std::optional<std::string> setpoint;
};

ReqTag parse_req_tag(std::string_view inner, std::size_t line) {
    ReqTag tag;
    std::istringstream in{std::string(inner)};
    std::string token;
    std::set<std::string> seen;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == token.size()) {
            throw ParseError(line, "BadAttribute", token);
        }
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (!seen.insert(key).second) {
            throw ParseError(line, "DuplicateAttribute", key);
        }
        if (key == "category") {
            auto c = parse_category(value);
            if (!c) {
                throw ParseError(line, "BadCategory", value);
            }
            tag.category = *c;
        } else if (key == "inputs") {
            tag.inputs = split_list(value);
        } else if (key == "outputs") {
            tag.outputs = split_list(value);
        } else if (key == "direction") {
            auto d = parse_direction(value);
            if (!d) {
                throw ParseError(line, "BadDirection", value);
            }
            tag.direction = d;
        } else if (key == "setpoint") {
            tag.setpoint = value;
        } else {
            throw ParseError(line, "UnknownAttribute", key);
        }
    }
    const bool has_vars = !tag.inputs.empty() || !tag.outputs.empty();
    if (tag.direction.has_value() != has_vars || (has_vars && (tag.inputs.empty() || tag.outputs.empty()))) {
        throw ParseError(line, "IncompleteRelationship", "direction, inputs and outputs go together");
    }
    for (const auto &in_name : tag.inputs) {
        if (std::find(tag.outputs.begin(), tag.outputs.end(), in_name) != tag.outputs.end()) {
            throw ParseError(line, "InputOutputOverlap", in_name);
        }
    }
    if (tag.setpoint && tag.direction != Direction::RegulatesToSetpoint) {
        throw ParseError(line, "UnexpectedSetpoint");
    }
    if (tag.direction == Direction::RegulatesToSetpoint) {
        if (!tag.setpoint) {
            auto it = std::find_if(tag.inputs.begin(), tag.inputs.end(),
                                   [](const std::string &s) { return s.starts_with("setpoint"); });
            if (it == tag.inputs.end()) {
                throw ParseError(line, "MissingSetpoint");
            }
            tag.setpoint = *it;
        }
        if (std::find(tag.inputs.begin(), tag.inputs.end(), *tag.setpoint) == tag.inputs.end()) {
            throw ParseError(line, "SetpointNotAnInput", *tag.setpoint);
        }
    }
    return tag;
}

enum class Block { None, Summary, Req, Init };

} // namespace

RequirementsDoc load_requirements(std::string_view doc) {
    RequirementsDoc out;
    const auto lines = split_lines(doc);
    Block block = Block::None;
    std::size_t block_line = 0;
    std::size_t body_begin = 0;
    ReqTag tag;
    bool have_summary = false;
    std::string first_paragraph;
    bool paragraph_done = false;

    for (const auto &ln : lines) {
        const std::string t = trim(ln.text);
        if (block == Block::None) {
            if (t == "[SUMMARY]") {
                if (have_summary) {
                    throw ParseError(ln.number, "DuplicateSummary");
                }
                block = Block::Summary;
            } else if (t == "[INIT]") {
                block = Block::Init;
            } else if (t.starts_with("[REQ") && t.back() == ']' && (t.size() == 5 || t[4] == ' ')) {
                tag = parse_req_tag(std::string_view(t).substr(4, t.size() - 5), ln.number);
                block = Block::Req;
            } else if (t.starts_with("[/")) {
                throw ParseError(ln.number, "UnmatchedClose", t);
            } else {
                if (!paragraph_done) {
                    if (t.empty()) {
                        paragraph_done = !first_paragraph.empty();
                    } else if (!t.starts_with("#")) {
                        first_paragraph += (first_paragraph.empty() ? "" : " ") + t;
                    }
                }
                continue;
            }
            block_line = ln.number;
            body_begin = ln.offset + ln.text.size() + 1;
            continue;
        }

        const char *close = block == Block::Summary ? "[/SUMMARY]" : block == Block::Req ? "[/REQ]" : "[/INIT]";
        if (t == close) {
            const std::size_t body_end = ln.offset;
            const std::string_view body =
                body_begin <= body_end ? doc.substr(body_begin, body_end - body_begin) : std::string_view{};
            if (block == Block::Summary) {
                out.system_summary = collapse_whitespace(body);
                have_summary = true;
            } else if (block == Block::Req) {
                const std::string evidence = trim(body);
                if (evidence.empty()) {
                    throw ParseError(block_line, "EmptyRequirement");
                }
                TestCondition tc;
                tc.id = ordinal_id("TC", out.test_conditions.size() + 1);
                tc.text = collapse_whitespace(evidence);
                tc.category = tag.category;
                tc.evidence = evidence;
                if (tag.direction) {
                    VariableRelationship vr;
                    vr.id = ordinal_id("VR", out.relationships.size() + 1);
                    vr.test_condition = tc.id;
                    vr.inputs = tag.inputs;
                    vr.outputs = tag.outputs;
                    vr.direction = *tag.direction;
                    vr.statement = tc.text;
                    vr.setpoint = tag.setpoint;
                    out.lines[vr.id] = block_line;
                    out.relationships.push_back(std::move(vr));
                }
                out.lines[tc.id] = block_line;
                out.test_conditions.push_back(std::move(tc));
            }
            block = Block::None;
            continue;
        }
        if (t.starts_with("[REQ") || t == "[SUMMARY]" || t == "[INIT]" || t.starts_with("[/")) {
            throw ParseError(ln.number, "NestedBlock", t);
        }
        if (block == Block::Init && !t.empty() && !t.starts_with("#")) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ParseError(ln.number, "BadInitialCondition", t);
            }
            const std::string name = trim(std::string_view(t).substr(0, eq));
            const std::string value = trim(std::string_view(t).substr(eq + 1));
            double x = 0.0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
            if (name.empty() || ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(x)) {
                throw ParseError(ln.number, "BadInitialCondition", t);
            }
            if (!out.initial_conditions.emplace(name, x).second) {
                throw ParseError(ln.number, "DuplicateInitialCondition", name);
            }
            out.lines["init:" + name] = ln.number;
        }
    }
    if (block != Block::None) {
        throw ParseError(block_line, "UnterminatedBlock");
    }
    if (out.test_conditions.empty()) {
        throw EmptyRequirements();
    }
    if (!have_summary) {
        out.system_summary = first_paragraph;
    }
    return out;
}

namespace {

/// Returns the name of the first relationship variable that is absent or has
/// the wrong causality, with the field it appeared in.
std::optional<std::pair<std::string, std::string>> first_bad_variable(const VariableRelationship &vr,
                                                                      const InterfaceSpec &iface) {
    for (const auto &name : vr.inputs) {
        const VariableSpec *v = iface.find(name);
        if (v == nullptr || v->causality != Causality::Input) {
            return std::pair{name, vr.id + ".inputs"};
        }
    }
    for (const auto &name : vr.outputs) {
        const VariableSpec *v = iface.find(name);
        if (v == nullptr || v->causality != Causality::Output) {
            return std::pair{name, vr.id + ".outputs"};
        }
    }
    return std::nullopt;
}

bool seedable(const VariableSpec *v) {
    return v != nullptr && (v->causality == Causality::Input || v->causality == Causality::Parameter);
}

} // namespace

RequirementsDoc load_requirements(std::string_view doc, const InterfaceSpec &interface) {
    RequirementsDoc out = load_requirements(doc);
    for (const auto &vr : out.relationships) {
        if (auto bad = first_bad_variable(vr, interface)) {
            throw ParseError(out.lines.at(vr.id), "UnknownVariable", bad->first + " (" + bad->second + ")");
        }
    }
    for (const auto &[name, value] : out.initial_conditions) {
        const VariableSpec *v = interface.find(name);
        const std::size_t line = out.lines.at("init:" + name);
        if (!seedable(v)) {
            throw ParseError(line, "UnknownVariable", name);
        }
        if (!v->within_bounds(value)) {
            throw ParseError(line, "InitialConditionOutOfBounds", name);
        }
    }
    return out;
}

ExtractionOutput build_extraction_output(const InterfaceSpec &interface, const RequirementsDoc &req) {
    interface.validate();
    if (interface.inputs().empty() || interface.outputs().empty()) {
        throw SchemaError(".variables", "NotTestable");
    }
    for (const auto &vr : req.relationships) {
        if (auto bad = first_bad_variable(vr, interface)) {
            throw UnknownVariable(bad->first, bad->second);
        }
    }
    ExtractionOutput e;
    e.system_summary = req.system_summary;
    e.test_conditions = req.test_conditions;
    e.relationships = req.relationships;
    e.variables = interface;
    for (const auto &[name, value] : req.initial_conditions) {
        const VariableSpec *v = interface.find(name);
        if (!seedable(v)) {
            throw UnknownVariable(name, "initial_conditions");
        }
        if (!v->within_bounds(value)) {
            throw ExtractionError("initial condition for '" + name + "' outside its bounds");
        }
        e.initial_conditions[name] = value;
    }
    for (const auto &v : interface.variables) {
        if ((v.causality == Causality::Input || v.causality == Causality::Parameter) && v.start &&
            e.initial_conditions.count(v.name) == 0) {
            e.initial_conditions[v.name] = *v.start;
        }
    }
    for (const auto &name : interface.inputs()) {
        if (e.initial_conditions.count(name) == 0) {
            throw ExtractionError("input '" + name + "' has neither an initial condition nor a start value");
        }
    }
    return e;
}

} // namespace metamorph
