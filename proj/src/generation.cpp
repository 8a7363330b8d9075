#include "metamorph/generation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "metamorph/rng.hpp"

namespace metamorph {

namespace {

std::string join(const std::vector<std::string> &parts, const std::string &sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out += (i == 0 ? "" : sep) + parts[i];
    }
    return out;
}

std::string fmt(double x) { return Json(x).dump(); }

std::string numbered(const std::string &prefix, int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03d", prefix.c_str(), n);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// TestCase JSON

Json TestCase::to_json() const {
    Json in = Json::object();
    for (const auto &[var, p] : inputs) {
        in[var] = pattern_to_json(p);
    }
    Json rel = Json::array();
    for (const auto &r : relations) {
        rel.push_back(r.to_json());
    }
    Json j{{"id", id}, {"mr_id", mr_id}, {"inputs", std::move(in)}, {"relations", std::move(rel)}};
    if (validation) {
        j["validation"] = Json{{"fixed", validation->fixed}, {"dropped", validation->dropped}, {"summary", validation->summary}};
    }
    return j;
}

TestCase TestCase::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    TestCase t;
    t.id = r.string("id");
    t.mr_id = r.string("mr_id");
    const Json &in = r.required("inputs");
    if (!in.is_object()) {
        throw SchemaError(r.path_of("inputs"), "ExpectedObject");
    }
    for (const auto &[var, p] : in.items()) {
        t.inputs.emplace(var, pattern_from_json(p, json_path(r.path_of("inputs"), var)));
    }
    const Json &rel = r.required("relations");
    if (!rel.is_array()) {
        throw SchemaError(r.path_of("relations"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < rel.size(); ++i) {
        t.relations.push_back(RelationSpec::from_json(rel[i], json_path(r.path_of("relations"), i)));
    }
    if (const Json *v = r.optional("validation")) {
        ObjectReader vr(*v, r.path_of("validation"));
        Validation val;
        val.fixed = vr.boolean("fixed");
        val.dropped = vr.boolean("dropped");
        val.summary = vr.string("summary");
        vr.finish();
        t.validation = val;
    }
    r.finish();
    return t;
}

std::pair<double, double> onset_window(const TimeGrid &grid) {
    return {grid.start() + kOnsetMin * grid.span(), grid.start() + kOnsetMax * grid.span()};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

/// Thrown inside the validator to abandon a test.
struct Drop {
    std::string reason;
};

class TestValidator {
  public:
    TestValidator(const InterfaceSpec &iface, const TimeGrid &grid, const ToleranceConfig &defaults)
        : iface_(iface), grid_(grid), defaults_(defaults) {}

    TestCase run(const Json &raw) {
        TestCase out;
        if (raw.is_object()) {
            if (auto it = raw.find("id"); it != raw.end() && it->is_string()) {
                out.id = it->get<std::string>();
            }
            if (auto it = raw.find("mr_id"); it != raw.end() && it->is_string()) {
                out.mr_id = it->get<std::string>();
            }
        }
        std::optional<Validation> prior;
        try {
            prior = prior_validation(raw);
            if (prior && prior->dropped) {
                out.validation = prior;
                try {
                    TestCase parsed = TestCase::from_json(raw);
                    parsed.validation = prior;
                    return parsed;
                } catch (const Error &) {
                    return out;
                }
            }
            check(raw, out);
        } catch (const Drop &d) {
            out.validation = Validation{false, true, d.reason};
            return out;
        }
        if (!notes_.empty()) {
            out.validation = Validation{true, false, join(notes_, "; ")};
        } else if (prior) {
            out.validation = prior;
        } else {
            out.validation = Validation{false, false, "valid"};
        }
        return out;
    }

  private:
    static std::optional<Validation> prior_validation(const Json &raw) {
        if (!raw.is_object() || !raw.contains("validation")) {
            return std::nullopt;
        }
        const Json &v = raw.at("validation");
        if (!v.is_object() || !v.value("fixed", Json()).is_boolean() || !v.value("dropped", Json()).is_boolean()) {
            return std::nullopt;
        }
        Validation out;
        out.fixed = v.at("fixed").get<bool>();
        out.dropped = v.at("dropped").get<bool>();
        out.summary = v.value("summary", Json()).is_string() ? v.at("summary").get<std::string>() : "";
        if (out.fixed && out.dropped) {
            out.fixed = false;
        }
        return out;
    }

    void fix(std::string note) { notes_.push_back(std::move(note)); }

    double number_field(const Json &obj, const std::string &key, const std::string &where) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            throw Drop{where + ": missing field '" + key + "'"};
        }
        if (!it->is_number()) {
            throw Drop{where + ": field '" + key + "' is not a number"};
        }
        const double x = it->get<double>();
        if (!std::isfinite(x)) {
            throw Drop{where + ": field '" + key + "' is not finite"};
        }
        return x;
    }

    double clamp_value(const VariableSpec &v, double x, const std::string &field) {
        const double c = v.clamp(x);
        if (c != x) {
            fix("clamped " + v.name + "." + field + " from " + fmt(x) + " to " + fmt(c));
        }
        return c;
    }

    double clip_onset(const std::string &var, const std::string &field, double t) {
        const auto [lo, hi] = onset_window(grid_);
        const double c = std::clamp(t, lo, hi);
        if (c != t) {
            fix("moved " + var + "." + field + " from " + fmt(t) + " to " + fmt(c) + " (onset window)");
        }
        return c;
    }

    void drop_unknown_fields(const Json &obj, const std::set<std::string> &allowed, const std::string &where) {
        for (const auto &[key, value] : obj.items()) {
            if (allowed.count(key) == 0) {
                fix("removed unknown field " + where + "." + key);
            }
        }
    }

    SignalPattern check_pattern(const VariableSpec &v, const Json &pj) {
        const std::string where = "input " + v.name;
        if (!pj.is_object()) {
            throw Drop{where + ": pattern is not an object"};
        }
        auto it = pj.find("pattern");
        if (it == pj.end() || !it->is_string()) {
            throw Drop{where + ": missing pattern"};
        }
        const std::string given = it->get<std::string>();
        std::string kind;
        for (char c : given) {
            if (!std::isspace(static_cast<unsigned char>(c))) {
                kind.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            }
        }
        if (kind != "CONSTANT" && kind != "STEP" && kind != "RAMP") {
            throw Drop{where + ": unknown pattern '" + given + "'"};
        }
        if (kind != given) {
            fix("normalized pattern of " + v.name + " to " + kind);
        }
        if (kind == "CONSTANT") {
            drop_unknown_fields(pj, {"pattern", "value"}, v.name);
            return ConstantPattern{clamp_value(v, number_field(pj, "value", where), "value")};
        }
        const double from_raw = number_field(pj, "from", where);
        const double to_raw = number_field(pj, "to", where);
        if (kind == "STEP") {
            drop_unknown_fields(pj, {"pattern", "from", "to", "at"}, v.name);
            const double at = number_field(pj, "at", where);
            const double from = clamp_value(v, from_raw, "from");
            const double to = clamp_value(v, to_raw, "to");
            if (from == to) {
                if (from_raw != to_raw) {
                    throw Drop{where + ": transformation collapsed by clamping"};
                }
                fix("replaced degenerate STEP of " + v.name + " by CONSTANT");
                return ConstantPattern{from};
            }
            return StepPattern{from, to, clip_onset(v.name, "at", at)};
        }
        drop_unknown_fields(pj, {"pattern", "from", "to", "begin", "duration"}, v.name);
        const double begin_raw = number_field(pj, "begin", where);
        double duration = number_field(pj, "duration", where);
        if (!(duration > 0.0)) {
            throw Drop{where + ": ramp duration must be positive"};
        }
        const double from = clamp_value(v, from_raw, "from");
        const double to = clamp_value(v, to_raw, "to");
        if (from == to) {
            if (from_raw != to_raw) {
                throw Drop{where + ": transformation collapsed by clamping"};
            }
            fix("replaced degenerate RAMP of " + v.name + " by CONSTANT");
            return ConstantPattern{from};
        }
        const double begin = clip_onset(v.name, "begin", begin_raw);
        if (begin + duration > grid_.stop()) {
            const double shortened = grid_.stop() - begin;
            fix("shortened " + v.name + " ramp from " + fmt(duration) + " to " + fmt(shortened) + " s");
            duration = shortened;
        }
        return RampPattern{from, to, begin, duration};
    }

    double default_tolerance(RelationKind k) const {
        switch (k) {
        case RelationKind::EqualTo:
            return defaults_.equal_atol;
        case RelationKind::ProportionalTo:
            return defaults_.proportional_max_deviation;
        case RelationKind::SettlesWithin:
            return defaults_.settle_band;
        default:
            return defaults_.eventually_margin;
        }
    }

    RelationSpec check_relation(const Json &rj, std::size_t index) {
        const std::string where = "relation " + std::to_string(index);
        if (!rj.is_object()) {
            throw Drop{where + ": not an object"};
        }
        auto var_it = rj.find("var");
        if (var_it == rj.end() || !var_it->is_string()) {
            throw Drop{where + ": missing var"};
        }
        RelationSpec r;
        r.var = var_it->get<std::string>();
        const VariableSpec *v = iface_.find(r.var);
        if (v == nullptr) {
            throw Drop{where + ": unknown variable " + r.var};
        }
        if (v->causality != Causality::Output) {
            throw Drop{where + ": " + r.var + " is not an output"};
        }
        auto kind_it = rj.find("kind");
        if (kind_it == rj.end() || !kind_it->is_string()) {
            throw Drop{where + ": missing kind"};
        }
        const std::string kind = kind_it->get<std::string>();
        if (auto k = parse_relation_kind(kind)) {
            r.kind = *k;
        } else if (auto lk = parse_relation_kind_lenient(kind)) {
            r.kind = *lk;
            fix("normalized relation kind '" + kind + "' to " + to_string(*lk));
        } else {
            throw Drop{where + ": unknown relation kind '" + kind + "'"};
        }
        drop_unknown_fields(rj, {"var", "kind", "set_point", "set_point_var", "window", "tolerance", "rtol"}, r.var);
        auto opt_number = [&](const char *key) -> std::optional<double> {
            if (!rj.contains(key)) {
                return std::nullopt;
            }
            return number_field(rj, key, where);
        };
        r.set_point = opt_number("set_point");
        r.window = opt_number("window");
        r.tolerance = opt_number("tolerance");
        r.rtol = opt_number("rtol");
        if (auto it = rj.find("set_point_var"); it != rj.end()) {
            if (!it->is_string()) {
                throw Drop{where + ": set_point_var is not a string"};
            }
            r.set_point_var = it->get<std::string>();
        }
        if (r.tolerance && !(*r.tolerance > 0.0)) {
            fix("reset non-positive tolerance of " + r.var + " to " + fmt(default_tolerance(r.kind)));
            r.tolerance = default_tolerance(r.kind);
        }
        if (r.rtol && *r.rtol < 0.0) {
            fix("reset negative rtol of " + r.var + " to " + fmt(defaults_.equal_rtol));
            r.rtol = defaults_.equal_rtol;
        }
        if (r.kind == RelationKind::SettlesWithin) {
            if (!r.set_point) {
                throw Drop{where + ": Settles_within without set_point"};
            }
            const double fallback = defaults_.settle_window_fraction * grid_.span();
            if (!r.window) {
                fix("set settling window of " + r.var + " to " + fmt(fallback) + " s");
                r.window = fallback;
            } else if (!(*r.window > 0.0)) {
                fix("reset non-positive settling window of " + r.var + " to " + fmt(fallback) + " s");
                r.window = fallback;
            } else if (*r.window > grid_.span()) {
                fix("clipped settling window of " + r.var + " to the span " + fmt(grid_.span()) + " s");
                r.window = grid_.span();
            }
        }
        return r;
    }

    void check(const Json &raw, TestCase &out) {
        if (!raw.is_object()) {
            throw Drop{"test is not an object"};
        }
        if (out.id.empty()) {
            throw Drop{"missing id"};
        }
        if (out.mr_id.empty()) {
            throw Drop{"missing mr_id"};
        }
        auto in_it = raw.find("inputs");
        if (in_it == raw.end() || !in_it->is_object()) {
            throw Drop{"missing inputs"};
        }
        for (const auto &[var, pj] : in_it->items()) {
            const VariableSpec *v = iface_.find(var);
            if (v == nullptr) {
                throw Drop{"unknown variable " + var};
            }
            if (v->causality != Causality::Input) {
                throw Drop{var + " is not an input"};
            }
            out.inputs.emplace(var, check_pattern(*v, pj));
        }
        for (const auto &name : iface_.inputs()) {
            if (out.inputs.count(name) != 0) {
                continue;
            }
            const VariableSpec *v = iface_.find(name);
            if (!v->start) {
                throw Drop{"input " + name + " is missing and has no start value"};
            }
            fix("added missing input " + name + " as CONSTANT " + fmt(*v->start));
            out.inputs.emplace(name, ConstantPattern{*v->start});
        }
        auto rel_it = raw.find("relations");
        if (rel_it == raw.end() || !rel_it->is_array()) {
            throw Drop{"missing relations"};
        }
        if (rel_it->empty()) {
            throw Drop{"no relations"};
        }
        for (std::size_t i = 0; i < rel_it->size(); ++i) {
            RelationSpec r = check_relation((*rel_it)[i], i);
            auto dup = std::find_if(out.relations.begin(), out.relations.end(),
                                    [&](const RelationSpec &x) { return x.var == r.var; });
            if (dup == out.relations.end()) {
                out.relations.push_back(std::move(r));
            } else if (*dup == r) {
                fix("removed duplicate relation on " + r.var);
            } else {
                throw Drop{"conflicting relations on " + r.var};
            }
        }
        for (const auto &[key, value] : raw.items()) {
            if (key != "id" && key != "mr_id" && key != "inputs" && key != "relations" && key != "validation") {
                fix("removed unknown field " + key);
            }
        }
    }

    const InterfaceSpec &iface_;
    const TimeGrid &grid_;
    const ToleranceConfig &defaults_;
    std::vector<std::string> notes_;
};

} // namespace

TestCase validate_test(const Json &raw, const InterfaceSpec &interface, const TimeGrid &grid,
                       const ToleranceConfig &defaults) {
    return TestValidator(interface, grid, defaults).run(raw);
}

TestCase validate_test(const TestCase &test, const InterfaceSpec &interface, const TimeGrid &grid,
                       const ToleranceConfig &defaults) {
    return validate_test(test.to_json(), interface, grid, defaults);
}

// ---------------------------------------------------------------------------
// Rule-based provider

std::string to_string(RequestKind kind) {
    switch (kind) {
    case RequestKind::MrGeneration:
        return "mr_generation";
    case RequestKind::MrRefinement:
        return "mr_refinement";
    case RequestKind::TestGeneration:
        return "test_generation";
    case RequestKind::TestValidation:
        return "test_validation";
    }
    return "mr_generation";
}

namespace {

double initial_value(const std::string &var, const MetamorphicRelation *mr, const ExtractionOutput &ex) {
    if (mr != nullptr) {
        if (auto it = mr->given.initial.find(var); it != mr->given.initial.end()) {
            return it->second;
        }
    }
    if (auto it = ex.initial_conditions.find(var); it != ex.initial_conditions.end()) {
        return it->second;
    }
    const VariableSpec *v = ex.variables.find(var);
    if (v != nullptr && v->start) {
        return *v->start;
    }
    throw InfeasibleTransform("no seed value for " + var);
}

Category condition_category(const VariableRelationship &vr, const ExtractionOutput &ex) {
    const TestCondition *tc = ex.find_condition(vr.test_condition);
    return tc == nullptr ? Category::Other : tc->category;
}

std::size_t priority_rank(Category c, const std::vector<Category> &order) {
    auto it = std::find(order.begin(), order.end(), c);
    return it == order.end() ? order.size() : static_cast<std::size_t>(it - order.begin());
}

RelationSpec concrete_relation(RelationSpec r, const MetamorphicRelation &mr, const ExtractionOutput &ex,
                               const TimeGrid &grid, const ToleranceConfig &tol) {
    switch (r.kind) {
    case RelationKind::EventuallyIncreases:
    case RelationKind::EventuallyDecreases:
        r.tolerance = r.tolerance.value_or(tol.eventually_margin);
        break;
    case RelationKind::EqualTo:
        r.tolerance = r.tolerance.value_or(tol.equal_atol);
        r.rtol = r.rtol.value_or(tol.equal_rtol);
        break;
    case RelationKind::ProportionalTo:
        r.tolerance = r.tolerance.value_or(tol.proportional_max_deviation);
        break;
    case RelationKind::SettlesWithin:
        if (!r.set_point && r.set_point_var) {
            r.set_point = initial_value(*r.set_point_var, &mr, ex);
        }
        r.window = r.window.value_or(tol.settle_window_fraction * grid.span());
        r.tolerance = r.tolerance.value_or(tol.settle_band);
        break;
    }
    return r;
}

double snap_onset(const TimeGrid &grid, double t) {
    const auto [lo, hi] = onset_window(grid);
    const double k = std::round((t - grid.start()) / grid.step());
    double snapped = grid.start() + k * grid.step();
    if (snapped < lo) {
        snapped += grid.step();
    }
    if (snapped > hi) {
        snapped -= grid.step();
    }
    return snapped >= lo && snapped <= hi ? snapped : t;
}

double tidy(double x) { return std::round(x * 1e9) / 1e9; }

} // namespace

MetamorphicRelation mr_from_relationship(const VariableRelationship &vr, const ExtractionOutput &ex,
                                         const TimeGrid &grid, const ToleranceConfig &tol) {
    MetamorphicRelation mr;
    mr.id = "MR001";
    mr.req_ids = {vr.test_condition, vr.id};
    mr.scenario = vr.statement.empty() ? vr.id : vr.statement;
    const Category c = condition_category(vr, ex);
    mr.category = c == Category::Other ? Category::Behavioral : c;
    mr.priority = category_priority(mr.category);

    const std::vector<std::string> setpoints = ex.setpoint_inputs();
    auto is_setpoint = [&](const std::string &v) {
        return std::find(setpoints.begin(), setpoints.end(), v) != setpoints.end() || (vr.setpoint && *vr.setpoint == v);
    };
    std::set<std::string> held;
    for (const auto &s : setpoints) {
        held.insert(s);
    }
    if (vr.setpoint) {
        held.insert(*vr.setpoint);
    }
    mr.given.held_constant.assign(held.begin(), held.end());
    for (const auto &in : vr.inputs) {
        mr.given.initial[in] = initial_value(in, nullptr, ex);
    }
    for (const auto &h : held) {
        mr.given.initial[h] = initial_value(h, nullptr, ex);
    }

    TransformOp op = TransformOp::Increase;
    RelationKind kind = RelationKind::EventuallyIncreases;
    switch (vr.direction) {
    case Direction::Increases:
        break;
    case Direction::Decreases:
        kind = RelationKind::EventuallyDecreases;
        break;
    case Direction::Proportional:
        op = TransformOp::Scale;
        kind = RelationKind::ProportionalTo;
        break;
    case Direction::RegulatesToSetpoint:
        kind = RelationKind::SettlesWithin;
        break;
    }
    for (const auto &in : vr.inputs) {
        if (!is_setpoint(in)) {
            mr.when.transforms.push_back(Transform{in, op, std::nullopt, std::nullopt});
        }
    }
    if (mr.when.transforms.empty()) {
        const std::string var = vr.setpoint ? *vr.setpoint : vr.inputs.front();
        mr.when.transforms.push_back(Transform{var, TransformOp::Hold, PatternHint::Constant, std::nullopt});
    }
    for (const auto &out : vr.outputs) {
        RelationSpec r;
        r.var = out;
        r.kind = kind;
        if (kind == RelationKind::SettlesWithin) {
            const std::string sp = vr.setpoint ? *vr.setpoint : (setpoints.empty() ? std::string{} : setpoints.front());
            if (!sp.empty()) {
                r.set_point_var = sp;
                r.set_point = initial_value(sp, nullptr, ex);
            }
            r.window = tol.settle_window_fraction * grid.span();
        }
        mr.then.relations.push_back(std::move(r));
    }
    return mr;
}

std::vector<TestCase> sample_tests(const MetamorphicRelation &mr, const ExtractionOutput &ex, const TimeGrid &grid,
                                   int n, std::uint64_t rng_seed, const ToleranceConfig &tol) {
    std::set<std::string> frozen(mr.given.held_constant.begin(), mr.given.held_constant.end());
    for (const auto &s : ex.setpoint_inputs()) {
        frozen.insert(s);
    }
    for (const auto &r : mr.then.relations) {
        if (r.kind == RelationKind::SettlesWithin && r.set_point_var) {
            frozen.insert(*r.set_point_var);
        }
    }
    std::vector<const Transform *> active;
    for (const auto &t : mr.when.transforms) {
        if (t.op != TransformOp::Hold && frozen.count(t.var) == 0) {
            active.push_back(&t);
        }
    }

    std::vector<RelationSpec> relations;
    for (const auto &r : mr.then.relations) {
        relations.push_back(concrete_relation(r, mr, ex, grid, tol));
    }
    std::map<std::string, SignalPattern> constants;
    for (const auto &name : ex.variables.inputs()) {
        constants.emplace(name, ConstantPattern{initial_value(name, &mr, ex)});
    }

    if (active.empty()) {
        return {TestCase{mr.id + "_T001", mr.id, constants, relations, std::nullopt}};
    }

    Rng rng(rng_seed, mr.id);
    const double onset = snap_onset(grid, grid.start() + (kOnsetMin + rng.uniform() * (kOnsetMax - kOnsetMin)) * grid.span());
    const double ramp = std::min(kRampFraction * grid.span(), grid.stop() - onset);

    std::vector<TestCase> out;
    for (int k = 1; k <= n; ++k) {
        TestCase tc{numbered(mr.id + "_T", k), mr.id, constants, relations, std::nullopt};
        const double f = kMagnitudeLadder[static_cast<std::size_t>(k - 1) % std::size(kMagnitudeLadder)];
        for (const Transform *t : active) {
            const VariableSpec *v = ex.variables.find(t->var);
            const double s = initial_value(t->var, &mr, ex);
            const double hi = v != nullptr && v->max ? *v->max : s + std::max(1.0, std::fabs(s));
            const double lo = v != nullptr && v->min ? *v->min : s - std::max(1.0, std::fabs(s));
            const double eps = 1e-12 * std::max(1.0, std::fabs(s));
            double target = s;
            switch (t->op) {
            case TransformOp::Increase:
                if (hi - s <= eps) {
                    throw InfeasibleTransform(t->var + " is already at its maximum " + fmt(hi));
                }
                target = t->magnitude_hint ? std::min(hi, s + *t->magnitude_hint) : s + f * (hi - s);
                break;
            case TransformOp::Decrease:
                if (s - lo <= eps) {
                    throw InfeasibleTransform(t->var + " is already at its minimum " + fmt(lo));
                }
                target = t->magnitude_hint ? std::max(lo, s - *t->magnitude_hint) : s - f * (s - lo);
                break;
            case TransformOp::Scale:
                target = std::clamp(s * (t->magnitude_hint ? *t->magnitude_hint : 1.0 + f), lo, hi);
                if (std::fabs(target - s) <= eps) {
                    throw InfeasibleTransform("scaling " + t->var + " leaves it unchanged");
                }
                break;
            case TransformOp::Hold:
                break;
            }
            target = tidy(target);
            bool step = k % 2 == 1;
            if (t->pattern_hint == PatternHint::Step) {
                step = true;
            } else if (t->pattern_hint == PatternHint::Ramp) {
                step = false;
            }
            if (step) {
                tc.inputs[t->var] = StepPattern{s, target, onset};
            } else {
                tc.inputs[t->var] = RampPattern{s, target, onset, ramp};
            }
        }
        out.push_back(std::move(tc));
    }
    return out;
}

Json RuleBasedProvider::respond(const ProviderRequest &request) {
    if (request.extraction == nullptr) {
        throw ProviderError("Format", "request without extraction");
    }
    const ExtractionOutput &ex = *request.extraction;
    switch (request.kind) {
    case RequestKind::MrGeneration: {
        if (!request.grid) {
            throw ProviderError("Format", "mr_generation request without grid");
        }
        std::set<std::string> covered;
        std::set<std::string> signatures;
        for (const auto &batch : request.history) {
            for (const auto &mr : batch) {
                covered.insert(mr.req_ids.begin(), mr.req_ids.end());
                signatures.insert(mr_signature(mr));
            }
        }
        std::vector<const VariableRelationship *> order;
        for (const auto &vr : ex.relationships) {
            order.push_back(&vr);
        }
        std::stable_sort(order.begin(), order.end(), [&](const auto *a, const auto *b) {
            return priority_rank(condition_category(*a, ex), request.priority_order) <
                   priority_rank(condition_category(*b, ex), request.priority_order);
        });
        Json mrs = Json::array();
        for (const auto *vr : order) {
            if (static_cast<int>(mrs.size()) >= request.budget) {
                break;
            }
            if (covered.count(vr->id) != 0) {
                continue;
            }
            MetamorphicRelation mr = mr_from_relationship(*vr, ex, *request.grid, request.tolerances);
            if (!signatures.insert(mr_signature(mr)).second) {
                continue;
            }
            mr.id = numbered("MR", static_cast<int>(mrs.size()) + 1);
            mrs.push_back(mr.to_json());
        }
        if (mrs.empty()) {
            throw ExhaustedError("every variable relationship is already covered");
        }
        return Json{{"mrs", std::move(mrs)}};
    }
    case RequestKind::MrRefinement: {
        Json mrs = Json::array();
        for (const auto &mr : request.mrs) {
            mrs.push_back(mr.to_json());
        }
        return Json{{"mrs", std::move(mrs)}};
    }
    case RequestKind::TestGeneration: {
        if (request.mrs.size() != 1 || !request.grid) {
            throw ProviderError("Format", "test_generation request needs one MR and a grid");
        }
        Json tests = Json::array();
        for (const auto &t : sample_tests(request.mrs.front(), ex, *request.grid, request.budget, request.rng_seed,
                                          request.tolerances)) {
            tests.push_back(t.to_json());
        }
        return Json{{"tests", std::move(tests)}};
    }
    case RequestKind::TestValidation:
        return Json{{"tests", request.tests}};
    }
    throw ProviderError("Format", "unknown request kind");
}

// ---------------------------------------------------------------------------
// Engine operations

namespace {

const Json &response_array(const Json &response, const char *key) {
    if (!response.is_object() || !response.contains(key) || !response.at(key).is_array()) {
        throw ProviderError("Format", std::string("response lacks a \"") + key + "\" array");
    }
    return response.at(key);
}

} // namespace

std::vector<MetamorphicRelation> generate_mrs(Provider &provider, const ProviderRequest &request, int next_id) {
    ProviderRequest req = request;
    req.kind = RequestKind::MrGeneration;
    while (req.history.size() > kHistoryWindow) {
        req.history.pop_front();
    }
    const Json response = provider.respond(req);
    const Json &arr = response_array(response, "mrs");

    std::set<std::string> seen;
    for (const auto &batch : req.history) {
        for (const auto &mr : batch) {
            seen.insert(mr_signature(mr));
        }
    }
    std::vector<MetamorphicRelation> out;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        MetamorphicRelation mr;
        try {
            mr = parse_mr(arr[i], json_path(".mrs", i));
        } catch (const SchemaError &) {
            ++invalid;
            continue;
        }
        if (seen.insert(mr_signature(mr)).second) {
            out.push_back(std::move(mr));
        }
    }
    if (!arr.empty() && invalid == arr.size()) {
        throw ProviderError("Format", "no MR in the response matches the schema");
    }
    std::stable_sort(out.begin(), out.end(), [&](const auto &a, const auto &b) {
        return priority_rank(a.category, req.priority_order) < priority_rank(b.category, req.priority_order);
    });
    if (static_cast<int>(out.size()) > req.budget) {
        out.resize(static_cast<std::size_t>(std::max(0, req.budget)));
    }
    if (out.empty()) {
        throw ExhaustedError("provider returned no novel MR");
    }
    for (auto &mr : out) {
        mr.id = numbered("MR", next_id++);
        mr.refinement.reset();
    }
    return out;
}

std::vector<MetamorphicRelation> refine_mrs(Provider &provider, const std::vector<MetamorphicRelation> &mrs,
                                            const ExtractionOutput &extraction, int repair_attempts,
                                            const ToleranceConfig &tolerances) {
    ProviderRequest req;
    req.kind = RequestKind::MrRefinement;
    req.extraction = &extraction;
    req.mrs = mrs;
    req.tolerances = tolerances;
    const Json response = provider.respond(req);
    const Json &arr = response_array(response, "mrs");
    std::map<std::string, MetamorphicRelation> revised;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        try {
            MetamorphicRelation mr = parse_mr(arr[i], json_path(".mrs", i));
            revised.emplace(mr.id, std::move(mr));
        } catch (const SchemaError &) {
        }
    }

    std::vector<MetamorphicRelation> out;
    for (const auto &original : mrs) {
        MetamorphicRelation mr = original;
        if (auto it = revised.find(original.id); it != revised.end()) {
            mr = it->second;
        }
        if (mr.dropped()) {
            out.push_back(std::move(mr));
            continue;
        }
        std::vector<std::string> notes;
        if (mr.refinement && !mr.refinement->feedback.empty()) {
            notes.push_back(mr.refinement->feedback);
        }
        bool dropped = false;
        for (int attempt = 0;; ++attempt) {
            const auto findings = static_check(mr, extraction, tolerances);
            if (findings.empty()) {
                break;
            }
            if (has_fatal(findings)) {
                for (const auto &f : findings) {
                    if (f.severity == Severity::Fatal) {
                        notes.push_back(to_string(f.rule) + ": " + f.message);
                    }
                }
                dropped = true;
                break;
            }
            if (attempt >= repair_attempts) {
                notes.push_back("repair attempts exhausted with " + std::to_string(findings.size()) +
                                " open finding(s)");
                dropped = true;
                break;
            }
            for (const auto &f : findings) {
                notes.push_back(to_string(f.rule) + ": " + f.message);
            }
            mr = apply_fixes(std::move(mr), findings);
        }
        mr.refinement = Refinement{notes.empty() ? "ok" : join(notes, "; "), dropped};
        out.push_back(std::move(mr));
    }
    return out;
}

std::vector<Json> generate_test_documents(Provider &provider, const MetamorphicRelation &mr,
                                          const ExtractionOutput &extraction, const TimeGrid &grid, int n,
                                          std::uint64_t rng_seed, const ToleranceConfig &tolerances) {
    if (mr.dropped()) {
        throw Error("cannot generate tests for dropped MR " + mr.id);
    }
    if (n < 1) {
        throw ConfigError("tests per MR must be >= 1");
    }
    ProviderRequest req;
    req.kind = RequestKind::TestGeneration;
    req.extraction = &extraction;
    req.mrs = {mr};
    req.budget = n;
    req.grid = grid;
    req.rng_seed = rng_seed;
    req.tolerances = tolerances;
    const Json response = provider.respond(req);
    const Json &arr = response_array(response, "tests");
    std::vector<Json> out;
    for (const auto &t : arr) {
        if (static_cast<int>(out.size()) == n) {
            break;
        }
        out.push_back(t);
    }
    return out;
}

std::vector<TestCase> generate_tests(Provider &provider, const MetamorphicRelation &mr,
                                     const ExtractionOutput &extraction, const TimeGrid &grid, int n,
                                     std::uint64_t rng_seed, const ToleranceConfig &tolerances) {
    std::vector<TestCase> out;
    const auto docs = generate_test_documents(provider, mr, extraction, grid, n, rng_seed, tolerances);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        try {
            out.push_back(TestCase::from_json(docs[i], json_path(".tests", i)));
        } catch (const SchemaError &e) {
            throw ProviderError("Format", e.what());
        }
    }
    return out;
}

std::vector<TestCase> validate_tests(Provider &provider, const std::vector<Json> &tests,
                                     const ExtractionOutput &extraction, const TimeGrid &grid,
                                     const ToleranceConfig &tolerances) {
    ProviderRequest req;
    req.kind = RequestKind::TestValidation;
    req.extraction = &extraction;
    req.tests = tests;
    req.grid = grid;
    req.tolerances = tolerances;
    const Json response = provider.respond(req);
    const Json &arr = response_array(response, "tests");
    const std::vector<Json> &reviewed = arr.size() == tests.size() ? arr.get_ref<const Json::array_t &>() : tests;
    std::vector<TestCase> out;
    for (const auto &t : reviewed) {
        out.push_back(validate_test(t, extraction.variables, grid, tolerances));
    }
    return out;
}

} // namespace metamorph
