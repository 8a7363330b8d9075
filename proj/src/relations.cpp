#include "metamorph/relations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace metamorph {

std::string to_string(RelationKind kind) {
    switch (kind) {
    case RelationKind::EventuallyIncreases:
        return "Eventually_Increases";
    case RelationKind::EventuallyDecreases:
        return "Eventually_Decreases";
    case RelationKind::ProportionalTo:
        return "Proportional_to";
    case RelationKind::EqualTo:
        return "Equal_to";
    case RelationKind::SettlesWithin:
        return "Settles_within";
    }
    return "?";
}

std::optional<RelationKind> parse_relation_kind(std::string_view text) {
    for (RelationKind k : kAllRelationKinds) {
        if (to_string(k) == text) {
            return k;
        }
    }
    return std::nullopt;
}

namespace {
std::string squash(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (out.size() > 4 && out.ends_with("than")) {
        out.resize(out.size() - 4);
    }
    return out;
}
} // namespace

std::optional<RelationKind> parse_relation_kind_lenient(std::string_view text) {
    const std::string key = squash(text);
    for (RelationKind k : kAllRelationKinds) {
        if (squash(to_string(k)) == key) {
            return k;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

void ToleranceConfig::validate() const {
    auto check = [](bool ok, const char *what) {
        if (!ok) {
            throw ConfigError(std::string("relation_defaults.") + what);
        }
    };
    check(std::isfinite(eventually_margin) && eventually_margin >= 0.0, "eventually_margin must be >= 0");
    check(std::isfinite(equal_atol) && equal_atol >= 0.0, "equal_atol must be >= 0");
    check(std::isfinite(equal_rtol) && equal_rtol >= 0.0, "equal_rtol must be >= 0");
    check(proportional_max_deviation > 0.0 && proportional_max_deviation < 1.0,
          "proportional_max_deviation must lie in (0,1)");
    check(std::isfinite(settle_band) && settle_band > 0.0, "settle_band must be > 0");
    check(settle_window_fraction > 0.0 && settle_window_fraction <= 1.0, "settle_window_fraction must lie in (0,1]");
}

Json ToleranceConfig::to_json() const {
    return Json{{"eventually_margin", eventually_margin},
                {"equal_atol", equal_atol},
                {"equal_rtol", equal_rtol},
                {"proportional_max_deviation", proportional_max_deviation},
                {"settle_band", settle_band},
                {"settle_window_fraction", settle_window_fraction}};
}

ToleranceConfig ToleranceConfig::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    ToleranceConfig t;
    t.eventually_margin = r.optional_number("eventually_margin").value_or(t.eventually_margin);
    t.equal_atol = r.optional_number("equal_atol").value_or(t.equal_atol);
    t.equal_rtol = r.optional_number("equal_rtol").value_or(t.equal_rtol);
    t.proportional_max_deviation =
        r.optional_number("proportional_max_deviation").value_or(t.proportional_max_deviation);
    t.settle_band = r.optional_number("settle_band").value_or(t.settle_band);
    t.settle_window_fraction = r.optional_number("settle_window_fraction").value_or(t.settle_window_fraction);
    r.finish();
    return t;
}

Json RelationSpec::to_json() const {
    Json j{{"var", var}, {"kind", to_string(kind)}};
    if (set_point) {
        j["set_point"] = *set_point;
    }
    if (set_point_var) {
        j["set_point_var"] = *set_point_var;
    }
    if (window) {
        j["window"] = *window;
    }
    if (tolerance) {
        j["tolerance"] = *tolerance;
    }
    if (rtol) {
        j["rtol"] = *rtol;
    }
    return j;
}

RelationSpec RelationSpec::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    RelationSpec s;
    s.var = r.string("var");
    const std::string kind = r.string("kind");
    auto k = parse_relation_kind(kind);
    if (!k) {
        throw SchemaError(r.path_of("kind"), "UnknownRelationKind");
    }
    s.kind = *k;
    s.set_point = r.optional_number("set_point");
    s.set_point_var = r.optional_string("set_point_var");
    s.window = r.optional_number("window");
    s.tolerance = r.optional_number("tolerance");
    s.rtol = r.optional_number("rtol");
    r.finish();
    return s;
}

Json Witness::to_json() const {
    Json j{{"summary", summary}};
    if (index) {
        j["index"] = *index;
    }
    if (time) {
        j["time"] = *time;
    }
    if (constant) {
        j["constant"] = *constant;
    }
    if (trace) {
        j["trace"] = *trace;
    }
    return j;
}

Witness Witness::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    Witness w;
    w.summary = r.string("summary");
    if (const Json *v = r.optional("index")) {
        if (!v->is_number_unsigned()) {
            throw SchemaError(r.path_of("index"), "ExpectedInteger");
        }
        w.index = v->get<std::size_t>();
    }
    w.time = r.optional_number("time");
    w.constant = r.optional_number("constant");
    w.trace = r.optional_string("trace");
    r.finish();
    return w;
}

Json RelationVerdict::to_json() const {
    return Json{{"kind", to_string(kind)}, {"var", var}, {"passed", passed}, {"witness", witness.to_json()}};
}

RelationVerdict RelationVerdict::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    RelationVerdict v;
    auto k = parse_relation_kind(r.string("kind"));
    if (!k) {
        throw SchemaError(r.path_of("kind"), "UnknownRelationKind");
    }
    v.kind = *k;
    v.var = r.string("var");
    v.passed = r.boolean("passed");
    v.witness = Witness::from_json(r.required("witness"), r.path_of("witness"));
    r.finish();
    return v;
}

Json TestVerdict::to_json() const {
    Json rel = Json::array();
    for (const auto &v : relations) {
        rel.push_back(v.to_json());
    }
    return Json{{"passed", passed}, {"relations", std::move(rel)}};
}

TestVerdict TestVerdict::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    TestVerdict t;
    t.passed = r.boolean("passed");
    const Json &rel = r.required("relations");
    if (!rel.is_array()) {
        throw SchemaError(r.path_of("relations"), "ExpectedArray");
    }
    for (std::size_t i = 0; i < rel.size(); ++i) {
        t.relations.push_back(RelationVerdict::from_json(rel[i], json_path(r.path_of("relations"), i)));
    }
    r.finish();
    return t;
}

// ---------------------------------------------------------------------------
// Evaluators

namespace {

std::string fmt_time(double t) { return Json(t).dump(); }

template <class Holds>
RelationVerdict eventually(RelationKind kind, const Trace &seed, const Trace &morph, Holds holds,
                           const char *direction) {
    require_same_grid(seed, morph);
    RelationVerdict v{kind, morph.var, false, {}};
    // Index of the last violating sample; the satisfying suffix starts right after it.
    std::optional<std::size_t> last_bad;
    for (std::size_t i = 0; i < seed.size(); ++i) {
        if (!holds(morph[i] - seed[i])) {
            last_bad = i;
        }
    }
    const std::size_t n = seed.size();
    const std::size_t k = last_bad ? *last_bad + 1 : 0;
    if (k < n) {
        v.passed = true;
        v.witness.index = k;
        v.witness.time = seed.grid.time(k);
        v.witness.summary = std::string("follow-up stays ") + direction + " seed from t=" + fmt_time(seed.grid.time(k));
    } else {
        v.witness.index = *last_bad;
        v.witness.time = seed.grid.time(*last_bad);
        v.witness.summary =
            std::string("follow-up not ") + direction + " seed at t=" + fmt_time(seed.grid.time(*last_bad));
    }
    return v;
}

} // namespace

RelationVerdict eventually_increases(const Trace &seed, const Trace &morph, double margin) {
    return eventually(
        RelationKind::EventuallyIncreases, seed, morph, [margin](double d) { return d > margin; }, "above");
}

RelationVerdict eventually_decreases(const Trace &seed, const Trace &morph, double margin) {
    return eventually(
        RelationKind::EventuallyDecreases, seed, morph, [margin](double d) { return d < -margin; }, "below");
}

RelationVerdict proportional_to(const Trace &seed, const Trace &morph, double max_deviation) {
    require_same_grid(seed, morph);
    double peak = 0.0;
    for (double s : seed.values) {
        peak = std::max(peak, std::abs(s));
    }
    const double floor = 1e-9 * peak;
    if (peak == 0.0) {
        throw DegenerateSeed(seed.var);
    }
    double sm = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < seed.size(); ++i) {
        sm += seed[i] * morph[i];
        ss += seed[i] * seed[i];
    }
    const double c = sm / ss;
    RelationVerdict v{RelationKind::ProportionalTo, morph.var, true, {}};
    v.witness.constant = c;
    for (std::size_t i = 0; i < seed.size(); ++i) {
        if (std::abs(seed[i]) <= floor) {
            continue;
        }
        const double fit = c * seed[i];
        if (!(std::abs(morph[i] - fit) <= max_deviation * std::abs(fit))) {
            v.passed = false;
            v.witness.index = i;
            v.witness.time = seed.grid.time(i);
            v.witness.summary = "deviation from c*seed exceeds bound at t=" + fmt_time(seed.grid.time(i));
            return v;
        }
    }
    v.witness.summary = "follow-up proportional to seed with c=" + Json(c).dump();
    return v;
}

RelationVerdict equal_to(const Trace &seed, const Trace &morph, double atol, double rtol) {
    require_same_grid(seed, morph);
    RelationVerdict v{RelationKind::EqualTo, morph.var, true, {}};
    for (std::size_t i = 0; i < seed.size(); ++i) {
        if (!(std::abs(morph[i] - seed[i]) <= atol + rtol * std::abs(seed[i]))) {
            v.passed = false;
            v.witness.index = i;
            v.witness.time = seed.grid.time(i);
            v.witness.summary = "follow-up differs from seed at t=" + fmt_time(seed.grid.time(i));
            return v;
        }
    }
    v.witness.summary = "follow-up equals seed within tolerance";
    return v;
}

namespace {

bool at_or_after(const TimeGrid &grid, std::size_t i, double deadline) {
    return grid.time(i) >= deadline - 1e-9 * grid.step();
}

struct SettleScan {
    std::optional<std::size_t> first_violation; // after the deadline
    std::size_t entry = 0;                       // start of the final in-band run
};

SettleScan scan_settling(const Trace &t, double set_point, double band, double deadline) {
    SettleScan s;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const bool inside = std::abs(t[i] - set_point) <= band;
        if (!inside) {
            s.entry = i + 1;
            if (!s.first_violation && at_or_after(t.grid, i, deadline)) {
                s.first_violation = i;
            }
        }
    }
    return s;
}

} // namespace

RelationVerdict settles_within(const Trace &seed, const Trace &morph, double set_point, double window,
                               double band) {
    require_same_grid(seed, morph);
    if (!(window >= 0.0) || window > seed.grid.span()) {
        throw WindowError("settling window " + fmt_time(window) + " s outside [0, " +
                          fmt_time(seed.grid.span()) + "]");
    }
    const double deadline = seed.grid.start() + window;
    RelationVerdict v{RelationKind::SettlesWithin, morph.var, false, {}};
    const SettleScan s = scan_settling(seed, set_point, band, deadline);
    const SettleScan m = scan_settling(morph, set_point, band, deadline);
    for (const auto &[scan, name] : {std::pair{&s, "seed"}, std::pair{&m, "morph"}}) {
        if (scan->first_violation) {
            const std::size_t i = *scan->first_violation;
            v.witness.trace = name;
            v.witness.index = i;
            v.witness.time = seed.grid.time(i);
            v.witness.summary = std::string(name) + " outside band after deadline at t=" + fmt_time(seed.grid.time(i));
            return v;
        }
    }
    v.passed = true;
    const std::size_t entry = std::max(s.entry, m.entry);
    v.witness.index = entry;
    v.witness.time = seed.grid.time(entry);
    v.witness.summary = "both traces inside band from t=" + fmt_time(seed.grid.time(entry));
    return v;
}

RelationVerdict evaluate_relation(const RelationSpec &rel, const Trace &seed, const Trace &morph,
                                  const ToleranceConfig &defaults) {
    switch (rel.kind) {
    case RelationKind::EventuallyIncreases:
        return eventually_increases(seed, morph, rel.tolerance.value_or(defaults.eventually_margin));
    case RelationKind::EventuallyDecreases:
        return eventually_decreases(seed, morph, rel.tolerance.value_or(defaults.eventually_margin));
    case RelationKind::ProportionalTo:
        try {
            return proportional_to(seed, morph, rel.tolerance.value_or(defaults.proportional_max_deviation));
        } catch (const DegenerateSeed &) {
            RelationVerdict v{rel.kind, rel.var, false, {}};
            v.witness.summary = "degenerate seed: all samples are zero";
            return v;
        }
    case RelationKind::EqualTo:
        return equal_to(seed, morph, rel.tolerance.value_or(defaults.equal_atol), rel.rtol.value_or(defaults.equal_rtol));
    case RelationKind::SettlesWithin: {
        if (!rel.set_point) {
            throw WindowError("relation on '" + rel.var + "' has no set_point");
        }
        const double window = rel.window.value_or(defaults.settle_window_fraction * seed.grid.span());
        return settles_within(seed, morph, *rel.set_point, window, rel.tolerance.value_or(defaults.settle_band));
    }
    }
    throw Error("unreachable relation kind");
}

TestVerdict evaluate_relations(std::span<const RelationSpec> relations, const SignalBundle &seed_outputs,
                               const SignalBundle &morph_outputs, const ToleranceConfig &defaults) {
    TestVerdict out;
    out.passed = true;
    for (const auto &rel : relations) {
        if (!seed_outputs.contains(rel.var) || !morph_outputs.contains(rel.var)) {
            throw MissingOutput(rel.var);
        }
        RelationVerdict v = evaluate_relation(rel, seed_outputs.at(rel.var), morph_outputs.at(rel.var), defaults);
        out.passed = out.passed && v.passed;
        out.relations.push_back(std::move(v));
    }
    return out;
}

} // namespace metamorph
