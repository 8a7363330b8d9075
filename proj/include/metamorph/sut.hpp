#pragma once

/**
 * @file sut.hpp
 * @brief Systems under test: the built-in LOC reference simulator and the
 *        out-of-process FMU bridge client.
 */

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "metamorph/error.hpp"
#include "metamorph/extraction.hpp"
#include "metamorph/signals.hpp"

namespace metamorph {

class InterfaceMismatch : public Error {
  public:
    using Error::Error;
};

class NumericError : public Error {
  public:
    using Error::Error;
};

/// Backend failure. kind() is one of BridgeDown, HandshakeFailed, BadFmu,
/// Protocol, SimFault.
class BackendError : public Error {
  public:
    BackendError(std::string kind, const std::string &detail)
        : Error("BackendError(" + kind + "): " + detail), kind_(std::move(kind)) {}
    const std::string &kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

enum class Backend { BuiltinLoc, Bridge };

struct SutDescriptor {
    std::string id;
    InterfaceSpec interface;
    Backend backend = Backend::BuiltinLoc;
    /// FMU archive for the bridge backend.
    std::filesystem::path fmu;
};

struct SutOptions {
    /// argv of the bridge process; the FMU path is not appended.
    std::vector<std::string> bridge_command{"python3", "-m", "fmu_bridge"};
};

class Sut {
  public:
    virtual ~Sut() = default;
    virtual const SutDescriptor &descriptor() const = 0;
    const InterfaceSpec &interface() const { return descriptor().interface; }

    /// Throws InterfaceMismatch when `inputs` lacks an interface input or uses
    /// another grid; BackendError on backend failure.
    virtual SignalBundle simulate(const SignalBundle &inputs, const TimeGrid &grid) = 0;
};

// ---------------------------------------------------------------------------
// LOC reference model (synthetic)

struct LocParameters {
    double q_max = 2.0e6;        // W at engine_load = 1
    double ua = 7.5e4;           // W/K at valve fully open
    double c_oil = 5.0e6;        // J/K
    double kp = 0.0163;          // 1/K
    double ki = 1.48e-4;         // 1/(K s)
    double cp_water = 4186.0;    // J/(kg K)
    double min_mass_flow = 0.1;  // kg/s
    double max_substep = 1.0;    // s

    static const LocParameters &defaults();
};

struct LocState {
    double oil_temperature = 75.0;
    double valve_integrator = 0.0;
    double time = 0.0;
};

struct LocInputs {
    double engine_load = 0.5;
    double setpoint_temperature_oil = 75.0;
    double temperature_cooling_liquid_in = 30.0;
    double mass_flow_cooling_liquid_in = 20.0;
};

struct LocOutputs {
    double temperature_oil = 0.0;
    double position_valve = 0.0;
    double temperature_cooling_liquid_out = 0.0;
    double mass_flow_cooling_liquid_out = 0.0;
};

struct LocStepResult {
    LocState state;
    /// Outputs at the state before the update.
    LocOutputs outputs;
};

LocOutputs loc_outputs(const LocState &state, const LocInputs &u, const LocParameters &p = LocParameters::defaults());

/// One explicit-Euler step of length dt. Throws NumericError on a non-finite state.
LocStepResult loc_step(const LocState &state, const LocInputs &u, double dt,
                       const LocParameters &p = LocParameters::defaults());

/// Closed-loop equilibrium for constant inputs: oil at the set-point and the
/// integrator holding the valve that balances the load (clamped to [0,1]).
LocState loc_equilibrium(const LocInputs &u, const LocParameters &p = LocParameters::defaults());

/// Interface of the built-in LOC (embedded modelDescription equivalent).
const InterfaceSpec &loc_interface();

/// Zero-order-hold simulation on `grid` starting at the equilibrium of the
/// first input sample.
SignalBundle simulate_loc(const SignalBundle &inputs, const TimeGrid &grid,
                          const LocParameters &p = LocParameters::defaults());

// ---------------------------------------------------------------------------
// Handles

inline constexpr const char *kBuiltinLocId = "builtin:loc";
inline constexpr const char *kBridgeProtocolVersion = "1.0";

/// Resolves a locator: "builtin:loc" or a path to an .fmu archive.
SutDescriptor resolve_sut(const std::string &locator);

/// Builtin: ready immediately. Bridge: checks the FMU exists (BadFmu),
/// spawns the bridge and performs the handshake (BridgeDown, HandshakeFailed).
std::unique_ptr<Sut> open_sut(const SutDescriptor &descriptor, const SutOptions &options = {});

} // namespace metamorph
