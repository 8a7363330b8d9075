#include "metamorph/mr.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace metamorph {

std::string to_string(TransformOp op) {
    switch (op) {
    case TransformOp::Increase:
        return "increase";
    case TransformOp::Decrease:
        return "decrease";
    case TransformOp::Scale:
        return "scale";
    case TransformOp::Hold:
        return "hold";
    }
    return "hold";
}

std::optional<TransformOp> parse_transform_op(std::string_view text) {
    for (TransformOp op : {TransformOp::Increase, TransformOp::Decrease, TransformOp::Scale, TransformOp::Hold}) {
        if (to_string(op) == text) {
            return op;
        }
    }
    return std::nullopt;
}

std::string to_string(PatternHint hint) {
    switch (hint) {
    case PatternHint::Step:
        return "STEP";
    case PatternHint::Ramp:
        return "RAMP";
    case PatternHint::Constant:
        return "CONSTANT";
    }
    return "CONSTANT";
}

std::optional<PatternHint> parse_pattern_hint(std::string_view text) {
    for (PatternHint h : {PatternHint::Step, PatternHint::Ramp, PatternHint::Constant}) {
        if (to_string(h) == text) {
            return h;
        }
    }
    return std::nullopt;
}

int category_priority(Category c) { return c == Category::Performance ? 2 : 1; }

std::string to_string(CheckRule rule) {
    switch (rule) {
    case CheckRule::UnknownRequirement:
        return "UnknownRequirement";
    case CheckRule::UnknownVariable:
        return "UnknownVariable";
    case CheckRule::ContradictsRelationship:
        return "ContradictsRelationship";
    case CheckRule::CategoryMismatch:
        return "CategoryMismatch";
    case CheckRule::PriorityMismatch:
        return "PriorityMismatch";
    case CheckRule::ClampToBounds:
        return "ClampToBounds";
    case CheckRule::HeldConstantNotInput:
        return "HeldConstantNotInput";
    case CheckRule::ConflictingHold:
        return "ConflictingHold";
    case CheckRule::SetPointMissing:
        return "SetPointMissing";
    case CheckRule::WindowOutOfRange:
        return "WindowOutOfRange";
    case CheckRule::NonPositiveTolerance:
        return "NonPositiveTolerance";
    case CheckRule::BadMagnitudeHint:
        return "BadMagnitudeHint";
    case CheckRule::NoCausalLink:
        return "NoCausalLink";
    case CheckRule::NotAnInput:
        return "NotAnInput";
    case CheckRule::NotAnOutput:
        return "NotAnOutput";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// JSON

Json MetamorphicRelation::to_json() const {
    Json transforms = Json::array();
    for (const auto &t : when.transforms) {
        Json jt{{"var", t.var}, {"op", to_string(t.op)}};
        if (t.pattern_hint) {
            jt["pattern_hint"] = to_string(*t.pattern_hint);
        }
        if (t.magnitude_hint) {
            jt["magnitude_hint"] = *t.magnitude_hint;
        }
        transforms.push_back(std::move(jt));
    }
    Json relations = Json::array();
    for (const auto &r : then.relations) {
        relations.push_back(r.to_json());
    }
    Json j{{"id", id},
           {"req_ids", req_ids},
           {"scenario", scenario},
           {"category", to_string(category)},
           {"priority", priority},
           {"given", Json{{"initial", given.initial}, {"held_constant", given.held_constant}}},
           {"when", Json{{"transforms", std::move(transforms)}}},
           {"then", Json{{"relations", std::move(relations)}}}};
    if (refinement) {
        j["refinement"] = Json{{"feedback", refinement->feedback}, {"dropped", refinement->dropped}};
    }
    return j;
}

namespace {

const Json &required_array(ObjectReader &r, std::string_view key) {
    const Json &a = r.required(key);
    if (!a.is_array()) {
        throw SchemaError(r.path_of(key), "ExpectedArray");
    }
    return a;
}

GivenClause parse_given(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    GivenClause g;
    if (const Json *init = r.optional("initial")) {
        if (!init->is_object()) {
            throw SchemaError(r.path_of("initial"), "ExpectedObject");
        }
        for (const auto &[name, value] : init->items()) {
            g.initial[name] = expect_number(value, json_path(r.path_of("initial"), name));
        }
    }
    if (const Json *held = r.optional("held_constant")) {
        if (!held->is_array()) {
            throw SchemaError(r.path_of("held_constant"), "ExpectedArray");
        }
        std::set<std::string> names;
        for (std::size_t i = 0; i < held->size(); ++i) {
            names.insert(expect_string((*held)[i], json_path(r.path_of("held_constant"), i)));
        }
        g.held_constant.assign(names.begin(), names.end());
    }
    r.finish();
    return g;
}

WhenClause parse_when(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    WhenClause w;
    const Json &arr = required_array(r, "transforms");
    if (arr.empty()) {
        throw SchemaError(r.path_of("transforms"), "Empty");
    }
    std::set<std::string> vars;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = json_path(r.path_of("transforms"), i);
        ObjectReader tr(arr[i], p);
        Transform t;
        t.var = tr.string("var");
        auto op = parse_transform_op(tr.string("op"));
        if (!op) {
            throw SchemaError(tr.path_of("op"), "UnknownOp");
        }
        t.op = *op;
        if (auto hint = tr.optional_string("pattern_hint")) {
            t.pattern_hint = parse_pattern_hint(*hint);
            if (!t.pattern_hint) {
                throw SchemaError(tr.path_of("pattern_hint"), "UnknownPattern");
            }
        }
        t.magnitude_hint = tr.optional_number("magnitude_hint");
        tr.finish();
        if (t.op == TransformOp::Hold && t.pattern_hint && *t.pattern_hint != PatternHint::Constant) {
            throw SchemaError(tr.path_of("pattern_hint"), "HoldRequiresConstant");
        }
        if (!vars.insert(t.var).second) {
            throw SchemaError(p, "DuplicateTransformVar");
        }
        w.transforms.push_back(std::move(t));
    }
    r.finish();
    return w;
}

ThenClause parse_then(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    ThenClause t;
    const Json &arr = required_array(r, "relations");
    if (arr.empty()) {
        throw SchemaError(r.path_of("relations"), "Empty");
    }
    std::set<std::string> vars;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = json_path(r.path_of("relations"), i);
        RelationSpec rel = RelationSpec::from_json(arr[i], p);
        if (!vars.insert(rel.var).second) {
            throw SchemaError(p, "DuplicateRelationVar");
        }
        if (rel.kind == RelationKind::SettlesWithin) {
            if (!rel.window) {
                throw SchemaError(json_path(p, "window"), "MissingParam");
            }
            if (!rel.set_point && !rel.set_point_var) {
                throw SchemaError(json_path(p, "set_point"), "MissingParam");
            }
        }
        t.relations.push_back(std::move(rel));
    }
    r.finish();
    return t;
}

} // namespace

MetamorphicRelation parse_mr(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    MetamorphicRelation mr;
    mr.id = r.string("id");
    static const std::regex id_re("MR[0-9]{3,}");
    if (!std::regex_match(mr.id, id_re)) {
        throw SchemaError(r.path_of("id"), "BadId");
    }
    const Json &req = required_array(r, "req_ids");
    if (req.empty()) {
        throw SchemaError(r.path_of("req_ids"), "Empty");
    }
    for (std::size_t i = 0; i < req.size(); ++i) {
        mr.req_ids.push_back(expect_string(req[i], json_path(r.path_of("req_ids"), i)));
    }
    mr.scenario = r.string("scenario");
    const std::string category = r.string("category");
    auto cat = parse_category(category);
    if (!cat || *cat == Category::Other) {
        throw SchemaError(r.path_of("category"), "BadCategory");
    }
    mr.category = *cat;
    if (r.has("priority")) {
        mr.priority = static_cast<int>(r.integer("priority"));
    } else {
        mr.priority = category_priority(mr.category);
    }
    mr.given = parse_given(r.required("given"), r.path_of("given"));
    mr.when = parse_when(r.required("when"), r.path_of("when"));
    mr.then = parse_then(r.required("then"), r.path_of("then"));
    if (const Json *ref = r.optional("refinement")) {
        ObjectReader rr(*ref, r.path_of("refinement"));
        Refinement f;
        f.feedback = rr.string("feedback");
        f.dropped = rr.boolean("dropped");
        rr.finish();
        mr.refinement = f;
    }
    r.finish();
    return mr;
}

std::string mr_signature(const MetamorphicRelation &mr) {
    std::vector<std::string> lhs;
    for (const auto &t : mr.when.transforms) {
        lhs.push_back(t.var + ":" + to_string(t.op));
    }
    std::vector<std::string> rhs;
    for (const auto &r : mr.then.relations) {
        rhs.push_back(r.var + ":" + to_string(r.kind));
    }
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    std::string out;
    for (const auto &s : lhs) {
        out += s + ";";
    }
    out += "=>";
    for (const auto &s : rhs) {
        out += s + ";";
    }
    return out;
}

std::string render_gherkin(const MetamorphicRelation &mr) {
    std::ostringstream out;
    auto num = [](double x) { return Json(x).dump(); };
    out << "Scenario: " << mr.id << " " << mr.scenario << "\n";
    bool first = true;
    for (const auto &[name, value] : mr.given.initial) {
        out << (first ? "  Given " : "    And ") << name << " = " << num(value) << "\n";
        first = false;
    }
    for (const auto &name : mr.given.held_constant) {
        out << (first ? "  Given " : "    And ") << name << " is held constant\n";
        first = false;
    }
    first = true;
    for (const auto &t : mr.when.transforms) {
        out << (first ? "  When " : "    And ") << t.var << " " << to_string(t.op);
        if (t.pattern_hint) {
            out << " as " << to_string(*t.pattern_hint);
        }
        if (t.magnitude_hint) {
            out << " by " << num(*t.magnitude_hint);
        }
        out << "\n";
        first = false;
    }
    first = true;
    for (const auto &r : mr.then.relations) {
        out << (first ? "  Then " : "    And ") << r.var << " " << to_string(r.kind);
        if (r.kind == RelationKind::SettlesWithin) {
            if (r.set_point) {
                out << " set_point " << num(*r.set_point);
            } else if (r.set_point_var) {
                out << " set_point " << *r.set_point_var;
            }
            if (r.window) {
                out << " within " << num(*r.window) << " s";
            }
        } else {
            out << " seed";
        }
        out << "\n";
        first = false;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Static checks

namespace {

bool contains(const std::vector<std::string> &v, const std::string &s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

/// +1 if (op, kind) claims the output moves with the input, -1 against, 0 neither.
int claimed_sign(TransformOp op, RelationKind kind) {
    int s = 0;
    if (kind == RelationKind::EventuallyIncreases) {
        s = 1;
    } else if (kind == RelationKind::EventuallyDecreases) {
        s = -1;
    }
    if (op == TransformOp::Decrease) {
        s = -s;
    } else if (op != TransformOp::Increase) {
        s = 0;
    }
    return s;
}

int direction_sign(Direction d) {
    if (d == Direction::Increases) {
        return 1;
    }
    if (d == Direction::Decreases) {
        return -1;
    }
    return 0;
}

Finding fatal(CheckRule rule, std::string path, std::string message) {
    return Finding{rule, Severity::Fatal, std::move(path), std::move(message), {}};
}

Finding repairable(CheckRule rule, std::string path, std::string message,
                   std::function<void(MetamorphicRelation &)> fix) {
    return Finding{rule, Severity::Repairable, std::move(path), std::move(message), std::move(fix)};
}

} // namespace

std::vector<Finding> static_check(const MetamorphicRelation &mr, const ExtractionOutput &ex,
                                  const ToleranceConfig &defaults) {
    std::vector<Finding> out;
    const InterfaceSpec &iface = ex.variables;

    // Factual correctness: requirement links.
    for (std::size_t i = 0; i < mr.req_ids.size(); ++i) {
        const std::string &id = mr.req_ids[i];
        if (ex.find_condition(id) == nullptr && ex.find_relationship(id) == nullptr) {
            out.push_back(fatal(CheckRule::UnknownRequirement, json_path(".req_ids", i), "unknown requirement " + id));
        }
    }

    // Category consistency.
    std::set<Category> linked;
    for (const auto &id : mr.req_ids) {
        const TestCondition *tc = ex.find_condition(id);
        if (const VariableRelationship *vr = ex.find_relationship(id); vr != nullptr && tc == nullptr) {
            tc = ex.find_condition(vr->test_condition);
        }
        if (tc != nullptr && tc->category != Category::Other) {
            linked.insert(tc->category);
        }
    }
    Category expected_category = mr.category;
    if (linked.size() == 1 && *linked.begin() != mr.category) {
        expected_category = *linked.begin();
        out.push_back(repairable(CheckRule::CategoryMismatch, ".category",
                                 "linked requirements are " + to_string(expected_category),
                                 [c = expected_category](MetamorphicRelation &m) { m.category = c; }));
    }
    if (mr.priority != category_priority(expected_category)) {
        out.push_back(repairable(CheckRule::PriorityMismatch, ".priority",
                                 "priority must be " + std::to_string(category_priority(expected_category)),
                                 [p = category_priority(expected_category)](MetamorphicRelation &m) { m.priority = p; }));
    }

    // Given clause.
    for (const auto &[name, value] : mr.given.initial) {
        const VariableSpec *v = iface.find(name);
        const std::string path = json_path(".given.initial", name);
        if (v == nullptr) {
            out.push_back(fatal(CheckRule::UnknownVariable, path, "unknown variable " + name));
        } else if (v->causality != Causality::Input && v->causality != Causality::Parameter) {
            out.push_back(fatal(CheckRule::NotAnInput, path, name + " is not an input"));
        } else if (!v->within_bounds(value)) {
            const double clamped = v->clamp(value);
            out.push_back(repairable(CheckRule::ClampToBounds, path,
                                     "clamped " + name + " from " + Json(value).dump() + " to " + Json(clamped).dump(),
                                     [name, clamped](MetamorphicRelation &m) { m.given.initial[name] = clamped; }));
        }
    }
    for (const auto &name : mr.given.held_constant) {
        const VariableSpec *v = iface.find(name);
        if (v == nullptr || v->causality != Causality::Input) {
            out.push_back(repairable(CheckRule::HeldConstantNotInput, ".given.held_constant",
                                     "removed " + name + " from held_constant (not an input)",
                                     [name](MetamorphicRelation &m) {
                                         std::erase(m.given.held_constant, name);
                                     }));
        }
    }

    // When clause: testability and hold conflicts.
    std::vector<std::string> transform_vars;
    for (std::size_t i = 0; i < mr.when.transforms.size(); ++i) {
        const Transform &t = mr.when.transforms[i];
        const std::string path = json_path(json_path(".when.transforms", i), "var");
        const VariableSpec *v = iface.find(t.var);
        if (v == nullptr) {
            out.push_back(fatal(CheckRule::UnknownVariable, path, "unknown variable " + t.var));
            continue;
        }
        if (v->causality != Causality::Input) {
            out.push_back(fatal(CheckRule::NotAnInput, path, t.var + " is not an input"));
            continue;
        }
        transform_vars.push_back(t.var);
        if (t.op != TransformOp::Hold && contains(mr.given.held_constant, t.var)) {
            out.push_back(fatal(CheckRule::ConflictingHold, path, t.var + " is both held constant and transformed"));
        }
        if (t.magnitude_hint && !(*t.magnitude_hint > 0.0)) {
            out.push_back(repairable(CheckRule::BadMagnitudeHint, json_path(json_path(".when.transforms", i), "magnitude_hint"),
                                     "dropped non-positive magnitude hint for " + t.var,
                                     [i](MetamorphicRelation &m) { m.when.transforms[i].magnitude_hint.reset(); }));
        }
    }

    // Then clause.
    const std::optional<double> horizon =
        iface.default_experiment && iface.default_experiment->start && iface.default_experiment->stop
            ? std::optional<double>(*iface.default_experiment->stop - *iface.default_experiment->start)
            : std::nullopt;
    std::vector<std::string> relation_vars;
    for (std::size_t i = 0; i < mr.then.relations.size(); ++i) {
        const RelationSpec &r = mr.then.relations[i];
        const std::string base = json_path(".then.relations", i);
        const VariableSpec *v = iface.find(r.var);
        if (v == nullptr) {
            out.push_back(fatal(CheckRule::UnknownVariable, json_path(base, "var"), "unknown variable " + r.var));
        } else if (v->causality != Causality::Output) {
            out.push_back(fatal(CheckRule::NotAnOutput, json_path(base, "var"), r.var + " is not an output"));
        } else {
            relation_vars.push_back(r.var);
        }
        if (r.tolerance && !(*r.tolerance > 0.0)) {
            double fallback = defaults.eventually_margin;
            switch (r.kind) {
            case RelationKind::EqualTo:
                fallback = defaults.equal_atol;
                break;
            case RelationKind::ProportionalTo:
                fallback = defaults.proportional_max_deviation;
                break;
            case RelationKind::SettlesWithin:
                fallback = defaults.settle_band;
                break;
            default:
                break;
            }
            if (!(fallback > 0.0)) {
                out.push_back(repairable(CheckRule::NonPositiveTolerance, json_path(base, "tolerance"),
                                         "removed non-positive tolerance; default applies",
                                         [i](MetamorphicRelation &m) { m.then.relations[i].tolerance.reset(); }));
            } else {
                out.push_back(repairable(CheckRule::NonPositiveTolerance, json_path(base, "tolerance"),
                                         "reset non-positive tolerance to " + Json(fallback).dump(),
                                         [i, fallback](MetamorphicRelation &m) { m.then.relations[i].tolerance = fallback; }));
            }
        }
        if (r.rtol && *r.rtol < 0.0) {
            out.push_back(repairable(CheckRule::NonPositiveTolerance, json_path(base, "rtol"),
                                     "reset negative rtol to " + Json(defaults.equal_rtol).dump(),
                                     [i, d = defaults.equal_rtol](MetamorphicRelation &m) { m.then.relations[i].rtol = d; }));
        }
        if (r.kind != RelationKind::SettlesWithin) {
            continue;
        }
        if (!r.set_point) {
            const VariableSpec *sp = r.set_point_var ? iface.find(*r.set_point_var) : nullptr;
            auto init = r.set_point_var ? ex.initial_conditions.find(*r.set_point_var) : ex.initial_conditions.end();
            if (sp == nullptr || sp->causality != Causality::Input || init == ex.initial_conditions.end()) {
                out.push_back(fatal(CheckRule::SetPointMissing, json_path(base, "set_point"),
                                    "set_point cannot be resolved"));
            } else {
                const double value = mr.given.initial.count(*r.set_point_var) != 0
                                         ? mr.given.initial.at(*r.set_point_var)
                                         : init->second;
                out.push_back(repairable(CheckRule::SetPointMissing, json_path(base, "set_point"),
                                         "set_point taken from " + *r.set_point_var + " = " + Json(value).dump(),
                                         [i, value](MetamorphicRelation &m) { m.then.relations[i].set_point = value; }));
            }
        } else if (r.set_point_var) {
            const VariableSpec *sp = iface.find(*r.set_point_var);
            if (sp == nullptr || sp->causality != Causality::Input) {
                out.push_back(fatal(CheckRule::SetPointMissing, json_path(base, "set_point_var"),
                                    *r.set_point_var + " is not an input"));
            }
        }
        if (r.window) {
            if (!(*r.window > 0.0)) {
                out.push_back(fatal(CheckRule::WindowOutOfRange, json_path(base, "window"), "window must be positive"));
            } else if (horizon && *r.window > *horizon) {
                out.push_back(repairable(CheckRule::WindowOutOfRange, json_path(base, "window"),
                                         "window clipped to horizon " + Json(*horizon).dump(),
                                         [i, h = *horizon](MetamorphicRelation &m) { m.then.relations[i].window = h; }));
            }
        }
    }

    // Causal validity and factual direction: every (transform, relation) pair
    // needs a direct relationship, and the claimed direction must not contradict it.
    for (std::size_t ti = 0; ti < mr.when.transforms.size(); ++ti) {
        const Transform &t = mr.when.transforms[ti];
        if (!contains(transform_vars, t.var)) {
            continue;
        }
        for (const auto &r : mr.then.relations) {
            if (!contains(relation_vars, r.var)) {
                continue;
            }
            bool linked_pair = false;
            bool agrees = false;
            for (const auto &vr : ex.relationships) {
                if (contains(vr.inputs, t.var) && contains(vr.outputs, r.var)) {
                    linked_pair = true;
                    const int claim = claimed_sign(t.op, r.kind);
                    const int truth = direction_sign(vr.direction);
                    agrees = agrees || claim == 0 || truth == 0 || claim == truth;
                }
            }
            if (!linked_pair) {
                out.push_back(fatal(CheckRule::NoCausalLink, ".then",
                                    "no direct relationship links " + t.var + " to " + r.var));
            } else if (!agrees) {
                out.push_back(fatal(CheckRule::ContradictsRelationship, ".then",
                                    t.var + " -> " + r.var + " contradicts the declared direction"));
            }
        }
    }
    return out;
}

bool has_fatal(const std::vector<Finding> &findings) {
    return std::any_of(findings.begin(), findings.end(), [](const Finding &f) { return f.severity == Severity::Fatal; });
}

MetamorphicRelation apply_fixes(MetamorphicRelation mr, const std::vector<Finding> &findings) {
    for (const auto &f : findings) {
        if (f.severity == Severity::Repairable && f.fix) {
            f.fix(mr);
        }
    }
    return mr;
}

} // namespace metamorph
