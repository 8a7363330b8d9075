#pragma once

/**
 * @file signals.hpp
 * @brief Uniform time grids, traces, signal bundles, and input stimulus patterns.
 */

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/json_io.hpp"

namespace metamorph {

class GridError : public Error {
  public:
    explicit GridError(const std::string &what) : Error("GridError: " + what) {}
};

class GridMismatch : public Error {
  public:
    explicit GridMismatch(const std::string &what) : Error("GridMismatch: " + what) {}
};

/// Uniform sampling grid [start, stop] with N+1 samples.
class TimeGrid {
  public:
    /// Throws GridError unless stop > start, step > 0 and the span is an
    /// integer multiple of step (relative tolerance 1e-9).
    TimeGrid(double start, double stop, double step);

    double start() const noexcept { return start_; }
    double stop() const noexcept { return stop_; }
    double step() const noexcept { return step_; }
    double span() const noexcept { return stop_ - start_; }
    /// Number of intervals N; there are N+1 samples.
    std::size_t intervals() const noexcept { return intervals_; }
    std::size_t size() const noexcept { return intervals_ + 1; }
    double time(std::size_t i) const noexcept { return start_ + static_cast<double>(i) * step_; }
    bool contains(double t) const noexcept { return t >= start_ && t <= stop_; }

    friend bool operator==(const TimeGrid &, const TimeGrid &) = default;

    Json to_json() const;
    static TimeGrid from_json(const Json &j, const std::string &path = ".grid");

  private:
    double start_;
    double stop_;
    double step_;
    std::size_t intervals_;
};

/// One variable sampled on a grid.
struct Trace {
    std::string var;
    TimeGrid grid;
    std::vector<double> values;

    /// Throws GridError on length mismatch or non-finite samples.
    Trace(std::string var, TimeGrid grid, std::vector<double> values);

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
};

void require_same_grid(const Trace &a, const Trace &b);

/// Named traces sharing one grid.
class SignalBundle {
  public:
    explicit SignalBundle(TimeGrid grid) : grid_(grid) {}

    const TimeGrid &grid() const noexcept { return grid_; }
    /// Throws GridMismatch if the trace grid differs.
    void put(Trace trace);
    bool contains(const std::string &var) const { return traces_.count(var) != 0; }
    /// Throws std::out_of_range when absent.
    const Trace &at(const std::string &var) const { return traces_.at(var); }
    const std::map<std::string, Trace> &traces() const noexcept { return traces_; }
    std::vector<std::string> names() const;

    /// {"grid": {...}, "traces": {var: [values]}}
    Json to_json() const;
    static SignalBundle from_json(const Json &j, const std::string &path = ".");
    /// "time,var1,var2,..." header then one row per sample.
    std::string to_csv() const;

    friend bool operator==(const SignalBundle &a, const SignalBundle &b);

  private:
    TimeGrid grid_;
    std::map<std::string, Trace> traces_;
};

// ---------------------------------------------------------------------------
// Stimulus patterns

struct ConstantPattern {
    double value;
    friend bool operator==(const ConstantPattern &, const ConstantPattern &) = default;
};

/// Right-continuous step: `from` for t < at, `to` for t >= at.
struct StepPattern {
    double from;
    double to;
    double at;
    friend bool operator==(const StepPattern &, const StepPattern &) = default;
};

/// `from` before begin, linear over [begin, begin+duration], `to` afterwards.
struct RampPattern {
    double from;
    double to;
    double begin;
    double duration;
    friend bool operator==(const RampPattern &, const RampPattern &) = default;
};

using SignalPattern = std::variant<ConstantPattern, StepPattern, RampPattern>;

double eval_pattern(const SignalPattern &pattern, double t);
/// Pre-transformation level of a pattern (CONSTANT value, STEP/RAMP `from`).
double seed_value(const SignalPattern &pattern);
bool is_constant(const SignalPattern &pattern);
/// Onset time of a STEP/RAMP; nullopt for CONSTANT.
std::optional<double> onset_time(const SignalPattern &pattern);
std::string pattern_name(const SignalPattern &pattern);

Json pattern_to_json(const SignalPattern &pattern);
/// Strict parse; SchemaError on unknown pattern, missing or non-finite fields.
SignalPattern pattern_from_json(const Json &j, const std::string &path);

/// Samples `pattern` on every grid point.
std::vector<double> sample_pattern(const SignalPattern &pattern, const TimeGrid &grid);

/// Seed and follow-up input bundles for one test.
struct InstantiatedInputs {
    SignalBundle seed;
    SignalBundle followup;
};

/// Seed holds every input at its seed_value(); follow-up samples each pattern.
/// Throws GridError when a STEP/RAMP onset lies outside the grid.
InstantiatedInputs instantiate(const std::map<std::string, SignalPattern> &inputs,
                               const TimeGrid &grid);

} // namespace metamorph
