#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "metamorph/extraction.hpp"
#include "metamorph/generation.hpp"
#include "metamorph/json_io.hpp"
#include "metamorph/mr.hpp"
#include "metamorph/mutation.hpp"
#include "metamorph/relations.hpp"
#include "metamorph/rng.hpp"
#include "metamorph/signals.hpp"
#include "metamorph/sut.hpp"
#include "metamorph/workflow.hpp"

namespace metamorph::testing {

inline std::filesystem::path source_path(const std::string &rel) {
    return std::filesystem::path(METAMORPH_SOURCE_DIR) / rel;
}

inline std::filesystem::path fixture(const std::string &name) { return source_path("fixtures/" + name); }

inline ExtractionOutput loc_extraction() {
    const RequirementsDoc doc = load_requirements(read_text(fixture("loc_requirements.md")), loc_interface());
    return build_extraction_output(loc_interface(), doc);
}

inline TimeGrid loc_grid() { return TimeGrid(0.0, 3000.0, 1.0); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("metamorph_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string &rel) const { return path_ / rel; }

  private:
    std::filesystem::path path_;
};

/// Seeded value generator for property tests.
class Gen {
  public:
    Gen(std::uint64_t seed, const std::string &key) : rng_(seed, key) {}

    double uniform() { return rng_.uniform(); }
    double real(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
    /// Uniform integer in [lo, hi].
    long integer(long lo, long hi) {
        return lo + static_cast<long>(std::floor(rng_.uniform() * static_cast<double>(hi - lo + 1)));
    }
    bool coin(double p = 0.5) { return rng_.uniform() < p; }

    std::vector<double> values(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto &x : v) {
            x = real(lo, hi);
        }
        return v;
    }

    /// Small integers mixed with exact ties and zeros to hit boundaries.
    std::vector<double> coarse_values(std::size_t n, long lo, long hi) {
        std::vector<double> v(n);
        for (auto &x : v) {
            x = static_cast<double>(integer(lo, hi));
        }
        return v;
    }

  private:
    Rng rng_;
};

inline Trace make_trace(const std::string &var, const std::vector<double> &values, double step = 1.0) {
    const TimeGrid grid(0.0, step * static_cast<double>(values.size() - 1), step);
    return Trace(var, grid, values);
}

// ---------------------------------------------------------------------------
// Brute-force oracles: literal scans of each quantified definition.

namespace brute {

/// exists k. forall i >= k. morph[i] - seed[i] > margin
inline bool eventually_increases(const std::vector<double> &s, const std::vector<double> &m, double margin) {
    for (std::size_t k = 0; k < s.size(); ++k) {
        bool all = true;
        for (std::size_t i = k; i < s.size(); ++i) {
            all = all && (m[i] - s[i] > margin);
        }
        if (all) {
            return true;
        }
    }
    return false;
}

/// exists k. forall i >= k. morph[i] - seed[i] < -margin
inline bool eventually_decreases(const std::vector<double> &s, const std::vector<double> &m, double margin) {
    for (std::size_t k = 0; k < s.size(); ++k) {
        bool all = true;
        for (std::size_t i = k; i < s.size(); ++i) {
            all = all && (m[i] - s[i] < -margin);
        }
        if (all) {
            return true;
        }
    }
    return false;
}

/// forall i. |morph[i] - seed[i]| <= atol + rtol |seed[i]|
inline bool equal_to(const std::vector<double> &s, const std::vector<double> &m, double atol, double rtol) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::abs(m[i] - s[i]) > atol + rtol * std::abs(s[i])) {
            return false;
        }
    }
    return true;
}

/// c = argmin sum (m - c s)^2; forall i with |s_i| > 1e-9 max|s|: |m_i - c s_i| <= rho |c s_i|.
/// nullopt for an all-zero seed.
inline std::optional<bool> proportional_to(const std::vector<double> &s, const std::vector<double> &m, double rho) {
    double peak = 0.0;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        peak = std::max(peak, std::abs(s[i]));
        num += s[i] * m[i];
        den += s[i] * s[i];
    }
    if (peak == 0.0) {
        return std::nullopt;
    }
    const double c = num / den;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::abs(s[i]) > 1e-9 * peak && std::abs(m[i] - c * s[i]) > rho * std::abs(c * s[i])) {
            return false;
        }
    }
    return true;
}

/// forall i with t_i >= start + window: |seed_i - sp| <= band and |morph_i - sp| <= band
inline bool settles_within(const std::vector<double> &s, const std::vector<double> &m, const TimeGrid &grid,
                           double sp, double window, double band) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (grid.time(i) >= grid.start() + window) {
            if (std::abs(s[i] - sp) > band || std::abs(m[i] - sp) > band) {
                return false;
            }
        }
    }
    return true;
}

} // namespace brute

// ---------------------------------------------------------------------------
// Validator conformance table over the LOC interface on [0, 3000] s.

struct ValidatorCase {
    std::string name;
    Json raw;
    bool fixed;
    bool dropped;
};

inline Json valid_loc_test() {
    return Json::parse(R"({
      "id": "MR001_T001", "mr_id": "MR001",
      "inputs": {
        "engine_load": {"pattern": "STEP", "from": 0.5, "to": 0.8, "at": 400},
        "setpoint_temperature_oil": {"pattern": "CONSTANT", "value": 75},
        "temperature_cooling_liquid_in": {"pattern": "CONSTANT", "value": 30},
        "mass_flow_cooling_liquid_in": {"pattern": "CONSTANT", "value": 20}
      },
      "relations": [{"var": "position_valve", "kind": "Eventually_Increases", "tolerance": 1e-9}]
    })");
}

inline std::vector<ValidatorCase> validator_cases() {
    const Json base = valid_loc_test();
    auto with = [&](auto edit) {
        Json j = base;
        edit(j);
        return j;
    };
    const Json settle = {{"var", "temperature_oil"}, {"kind", "Settles_within"}, {"set_point", 75.0},
                         {"window", 2400.0},         {"tolerance", 1.0}};
    std::vector<ValidatorCase> cases;
    auto keep = [&](std::string name, Json j) { cases.push_back({std::move(name), std::move(j), false, false}); };
    auto fix = [&](std::string name, Json j) { cases.push_back({std::move(name), std::move(j), true, false}); };
    auto drop = [&](std::string name, Json j) { cases.push_back({std::move(name), std::move(j), false, true}); };

    keep("valid step", base);
    keep("valid ramp", with([](Json &j) {
             j["inputs"]["engine_load"] = {{"pattern", "RAMP"}, {"from", 0.5}, {"to", 0.8}, {"begin", 500}, {"duration", 600}};
         }));
    keep("valid settling relation", with([&](Json &j) { j["relations"] = Json::array({settle}); }));
    keep("onset on the window edge", with([](Json &j) { j["inputs"]["engine_load"]["at"] = 300; }));

    fix("step level above max", with([](Json &j) { j["inputs"]["engine_load"]["to"] = 1.4; }));
    fix("constant above max", with([](Json &j) { j["inputs"]["setpoint_temperature_oil"]["value"] = 200; }));
    fix("onset too early", with([](Json &j) { j["inputs"]["engine_load"]["at"] = 10; }));
    fix("onset too late", with([](Json &j) { j["inputs"]["engine_load"]["at"] = 2000; }));
    fix("ramp past the grid end", with([](Json &j) {
            j["inputs"]["engine_load"] = {{"pattern", "RAMP"}, {"from", 0.5}, {"to", 0.8}, {"begin", 700}, {"duration", 5000}};
        }));
    fix("lower-case pattern", with([](Json &j) { j["inputs"]["engine_load"]["pattern"] = "step"; }));
    fix("relation kind spelling", with([](Json &j) { j["relations"][0]["kind"] = "eventually_increases_than"; }));
    fix("zero tolerance", with([](Json &j) { j["relations"][0]["tolerance"] = 0; }));
    fix("negative rtol", with([](Json &j) {
            j["relations"][0] = {{"var", "mass_flow_cooling_liquid_out"}, {"kind", "Equal_to"}, {"rtol", -0.1}};
        }));
    fix("identical duplicate relation", with([](Json &j) { j["relations"].push_back(j["relations"][0]); }));
    fix("settling window beyond span", with([&](Json &j) {
            Json r = settle;
            r["window"] = 5000;
            j["relations"] = Json::array({r});
        }));
    fix("settling window missing", with([&](Json &j) {
            Json r = settle;
            r.erase("window");
            j["relations"] = Json::array({r});
        }));
    fix("missing input", with([](Json &j) { j["inputs"].erase("mass_flow_cooling_liquid_in"); }));
    fix("unknown top-level field", with([](Json &j) { j["comment"] = "load step"; }));
    fix("degenerate step", with([](Json &j) { j["inputs"]["engine_load"]["to"] = 0.5; }));

    drop("unknown input variable", with([](Json &j) { j["inputs"]["engine_speed"] = {{"pattern", "CONSTANT"}, {"value", 1}}; }));
    drop("output driven as input", with([](Json &j) { j["inputs"]["temperature_oil"] = {{"pattern", "CONSTANT"}, {"value", 70}}; }));
    drop("unknown pattern", with([](Json &j) { j["inputs"]["engine_load"]["pattern"] = "SINE"; }));
    drop("missing step level", with([](Json &j) { j["inputs"]["engine_load"].erase("to"); }));
    drop("non-numeric onset", with([](Json &j) { j["inputs"]["engine_load"]["at"] = "early"; }));
    drop("transformation collapsed by clamping", with([](Json &j) {
             j["inputs"]["engine_load"]["from"] = 1.2;
             j["inputs"]["engine_load"]["to"] = 1.5;
         }));
    drop("relation on an input", with([](Json &j) { j["relations"][0]["var"] = "engine_load"; }));
    drop("conflicting relations", with([](Json &j) {
             j["relations"].push_back({{"var", "position_valve"}, {"kind", "Eventually_Decreases"}});
         }));
    drop("no relations", with([](Json &j) { j["relations"] = Json::array(); }));
    drop("settling without set point", with([&](Json &j) {
             Json r = settle;
             r.erase("set_point");
             j["relations"] = Json::array({r});
         }));
    drop("zero ramp duration", with([](Json &j) {
             j["inputs"]["engine_load"] = {{"pattern", "RAMP"}, {"from", 0.5}, {"to", 0.8}, {"begin", 500}, {"duration", 0}};
         }));
    return cases;
}

/// Passed tests that each yield exactly one non-null Mirror mutant; `killed`
/// of them carry an EqualTo relation that the reversal breaks, the rest an
/// EventuallyIncreases relation that survives it.
inline std::vector<ExecutedTest> mirror_ledger(std::size_t generated, std::size_t killed) {
    const TimeGrid g(0.0, 1.0, 1.0);
    std::vector<ExecutedTest> tests;
    for (std::size_t i = 0; i < generated; ++i) {
        ExecutedTest t{"T" + std::to_string(i + 1), {}, SignalBundle(g), SignalBundle(g), true};
        RelationSpec r;
        r.var = "y";
        r.kind = i < killed ? RelationKind::EqualTo : RelationKind::EventuallyIncreases;
        t.relations = {r};
        if (i < killed) {
            t.seed_outputs.put(Trace("y", g, {1.0, 2.0}));
        } else {
            t.seed_outputs.put(Trace("y", g, {0.0, 0.0}));
        }
        t.followup_outputs.put(Trace("y", g, {1.0, 2.0}));
        tests.push_back(std::move(t));
    }
    return tests;
}

/// Mirror mutants only: polynomial perturbation is made vanishingly rare.
inline MutationReport ledger_report(std::size_t generated, std::size_t killed) {
    MutationOptions o;
    o.probability = 1e-12;
    return run_mutation_analysis(mirror_ledger(generated, killed), InterfaceSpec{}, ToleranceConfig{}, 42, o);
}

/// Non-dropped MRs covering the first `covered` test conditions.
inline std::vector<MetamorphicRelation> covering_mrs(const ExtractionOutput &ex, std::size_t covered) {
    std::vector<MetamorphicRelation> mrs;
    for (std::size_t i = 0; i < covered; ++i) {
        MetamorphicRelation mr;
        mr.id = "MR" + std::string(i + 1 < 10 ? "00" : "0") + std::to_string(i + 1);
        mr.req_ids = {ex.test_conditions[i].id};
        mrs.push_back(std::move(mr));
    }
    return mrs;
}

inline std::vector<bool> verdict_flags(std::size_t executed, std::size_t passed) {
    std::vector<bool> flags(executed, false);
    std::fill(flags.begin(), flags.begin() + static_cast<std::ptrdiff_t>(passed), true);
    return flags;
}

/// Deterministic golden session: builtin LOC, rule-based provider, seed 42.
inline SessionConfig golden_config(const std::filesystem::path &out) {
    SessionConfig c;
    c.requirements = fixture("loc_requirements.md");
    c.output_dir = out;
    c.max_iterations = 1;
    c.mr_count = 5;
    c.test_cases_per_mr = 2;
    c.rng_seed = 42;
    c.record_timings = false;
    return c;
}

/// Relative path to contents of every regular file under `dir`.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path &dir) {
    std::map<std::string, std::string> files;
    for (const auto &e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files[std::filesystem::relative(e.path(), dir).generic_string()] = read_text(e.path());
        }
    }
    return files;
}

} // namespace metamorph::testing
