#include "metamorph/signals.hpp"

#include <cmath>
#include <sstream>

namespace metamorph {

TimeGrid::TimeGrid(double start, double stop, double step) : start_(start), stop_(stop), step_(step) {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
        throw GridError("non-finite grid parameter");
    }
    if (!(stop > start)) {
        throw GridError("stop must exceed start");
    }
    if (!(step > 0.0)) {
        throw GridError("step must be positive");
    }
    const double n = std::round((stop - start) / step);
    if (std::abs(n * step - (stop - start)) >= step * 1e-9) {
        throw GridError("span is not a multiple of step");
    }
    intervals_ = static_cast<std::size_t>(n);
}

Json TimeGrid::to_json() const { return Json{{"start", start_}, {"stop", stop_}, {"step", step_}}; }

TimeGrid TimeGrid::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    const double start = r.number("start");
    const double stop = r.number("stop");
    const double step = r.number("step");
    r.finish();
    return TimeGrid(start, stop, step);
}

Trace::Trace(std::string var_, TimeGrid grid_, std::vector<double> values_)
    : var(std::move(var_)), grid(grid_), values(std::move(values_)) {
    if (values.size() != grid.size()) {
        throw GridError("trace '" + var + "' has " + std::to_string(values.size()) + " samples, grid has " +
                        std::to_string(grid.size()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw GridError("trace '" + var + "' contains a non-finite sample");
        }
    }
}

void require_same_grid(const Trace &a, const Trace &b) {
    if (!(a.grid == b.grid) || a.size() != b.size()) {
        throw GridMismatch("traces '" + a.var + "' and '" + b.var + "' are on different grids");
    }
}

void SignalBundle::put(Trace trace) {
    if (!(trace.grid == grid_)) {
        throw GridMismatch("trace '" + trace.var + "' does not share the bundle grid");
    }
    std::string key = trace.var;
    traces_.insert_or_assign(std::move(key), std::move(trace));
}

std::vector<std::string> SignalBundle::names() const {
    std::vector<std::string> out;
    out.reserve(traces_.size());
    for (const auto &[name, _] : traces_) {
        out.push_back(name);
    }
    return out;
}

Json SignalBundle::to_json() const {
    Json traces = Json::object();
    for (const auto &[name, trace] : traces_) {
        traces[name] = trace.values;
    }
    return Json{{"grid", grid_.to_json()}, {"traces", std::move(traces)}};
}

SignalBundle SignalBundle::from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    SignalBundle bundle(TimeGrid::from_json(r.required("grid"), r.path_of("grid")));
    const Json &traces = r.required("traces");
    if (!traces.is_object()) {
        throw SchemaError(r.path_of("traces"), "ExpectedObject");
    }
    for (const auto &[name, values] : traces.items()) {
        const std::string p = json_path(r.path_of("traces"), name);
        if (!values.is_array()) {
            throw SchemaError(p, "ExpectedArray");
        }
        std::vector<double> v;
        v.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            v.push_back(expect_number(values[i], json_path(p, i)));
        }
        bundle.put(Trace(name, bundle.grid(), std::move(v)));
    }
    r.finish();
    return bundle;
}

std::string SignalBundle::to_csv() const {
    std::ostringstream out;
    out << "time";
    for (const auto &[name, _] : traces_) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        out << Json(grid_.time(i)).dump();
        for (const auto &[_, trace] : traces_) {
            out << ',' << Json(trace.values[i]).dump();
        }
        out << '\n';
    }
    return out.str();
}

bool operator==(const SignalBundle &a, const SignalBundle &b) {
    if (!(a.grid_ == b.grid_) || a.traces_.size() != b.traces_.size()) {
        return false;
    }
    for (const auto &[name, trace] : a.traces_) {
        auto it = b.traces_.find(name);
        if (it == b.traces_.end() || it->second.values != trace.values) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {
template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;
} // namespace

double eval_pattern(const SignalPattern &pattern, double t) {
    return std::visit(overloaded{
                          [](const ConstantPattern &p) { return p.value; },
                          [t](const StepPattern &p) { return t < p.at ? p.from : p.to; },
                          [t](const RampPattern &p) {
                              if (t < p.begin) {
                                  return p.from;
                              }
                              if (t >= p.begin + p.duration) {
                                  return p.to;
                              }
                              return p.from + (p.to - p.from) * (t - p.begin) / p.duration;
                          },
                      },
                      pattern);
}

double seed_value(const SignalPattern &pattern) {
    return std::visit(overloaded{
                          [](const ConstantPattern &p) { return p.value; },
                          [](const StepPattern &p) { return p.from; },
                          [](const RampPattern &p) { return p.from; },
                      },
                      pattern);
}

bool is_constant(const SignalPattern &pattern) { return std::holds_alternative<ConstantPattern>(pattern); }

std::optional<double> onset_time(const SignalPattern &pattern) {
    return std::visit(overloaded{
                          [](const ConstantPattern &) -> std::optional<double> { return std::nullopt; },
                          [](const StepPattern &p) -> std::optional<double> { return p.at; },
                          [](const RampPattern &p) -> std::optional<double> { return p.begin; },
                      },
                      pattern);
}

std::string pattern_name(const SignalPattern &pattern) {
    return std::visit(overloaded{
                          [](const ConstantPattern &) { return std::string("CONSTANT"); },
                          [](const StepPattern &) { return std::string("STEP"); },
                          [](const RampPattern &) { return std::string("RAMP"); },
                      },
                      pattern);
}

Json pattern_to_json(const SignalPattern &pattern) {
    return std::visit(overloaded{
                          [](const ConstantPattern &p) { return Json{{"pattern", "CONSTANT"}, {"value", p.value}}; },
                          [](const StepPattern &p) {
                              return Json{{"pattern", "STEP"}, {"from", p.from}, {"to", p.to}, {"at", p.at}};
                          },
                          [](const RampPattern &p) {
                              return Json{{"pattern", "RAMP"},
                                          {"from", p.from},
                                          {"to", p.to},
                                          {"begin", p.begin},
                                          {"duration", p.duration}};
                          },
                      },
                      pattern);
}

SignalPattern pattern_from_json(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    const std::string kind = r.string("pattern");
    SignalPattern out = ConstantPattern{0.0};
    if (kind == "CONSTANT") {
        out = ConstantPattern{r.number("value")};
    } else if (kind == "STEP") {
        out = StepPattern{r.number("from"), r.number("to"), r.number("at")};
    } else if (kind == "RAMP") {
        const RampPattern p{r.number("from"), r.number("to"), r.number("begin"), r.number("duration")};
        if (!(p.duration > 0.0)) {
            throw SchemaError(r.path_of("duration"), "NonPositiveDuration");
        }
        out = p;
    } else {
        throw SchemaError(r.path_of("pattern"), "UnknownPattern");
    }
    r.finish();
    return out;
}

std::vector<double> sample_pattern(const SignalPattern &pattern, const TimeGrid &grid) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = eval_pattern(pattern, grid.time(i));
    }
    return out;
}

InstantiatedInputs instantiate(const std::map<std::string, SignalPattern> &inputs, const TimeGrid &grid) {
    InstantiatedInputs out{SignalBundle(grid), SignalBundle(grid)};
    for (const auto &[var, pattern] : inputs) {
        if (auto onset = onset_time(pattern); onset && !grid.contains(*onset)) {
            throw GridError("onset of '" + var + "' lies outside the grid");
        }
        out.seed.put(Trace(var, grid, std::vector<double>(grid.size(), seed_value(pattern))));
        out.followup.put(Trace(var, grid, sample_pattern(pattern, grid)));
    }
    return out;
}

} // namespace metamorph
