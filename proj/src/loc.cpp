#include <algorithm>
#include <cmath>

#include "metamorph/resources.hpp"
#include "metamorph/sut.hpp"

namespace metamorph {

const LocParameters &LocParameters::defaults() {
    static const LocParameters p{};
    return p;
}

namespace {

double valve_command(const LocState &s, const LocInputs &u, const LocParameters &p) {
    return p.kp * (s.oil_temperature - u.setpoint_temperature_oil) + p.ki * s.valve_integrator;
}

double cooling_power(const LocState &s, const LocInputs &u, double valve, const LocParameters &p) {
    return std::max(0.0, p.ua * valve * (s.oil_temperature - u.temperature_cooling_liquid_in));
}

} // namespace

LocOutputs loc_outputs(const LocState &state, const LocInputs &u, const LocParameters &p) {
    const double v = std::clamp(valve_command(state, u, p), 0.0, 1.0);
    const double q_cool = cooling_power(state, u, v, p);
    LocOutputs y;
    y.temperature_oil = state.oil_temperature;
    y.position_valve = v;
    y.temperature_cooling_liquid_out =
        u.temperature_cooling_liquid_in + q_cool / (std::max(u.mass_flow_cooling_liquid_in, p.min_mass_flow) * p.cp_water);
    y.mass_flow_cooling_liquid_out = u.mass_flow_cooling_liquid_in;
    return y;
}

LocStepResult loc_step(const LocState &state, const LocInputs &u, double dt, const LocParameters &p) {
    if (!(dt > 0.0)) {
        throw NumericError("loc_step: dt must be positive");
    }
    const double command = valve_command(state, u, p);
    const double v = std::clamp(command, 0.0, 1.0);
    const double q_gen = p.q_max * u.engine_load;
    const double q_cool = cooling_power(state, u, v, p);
    const double error = state.oil_temperature - u.setpoint_temperature_oil;

    LocStepResult r{state, loc_outputs(state, u, p)};
    r.state.oil_temperature += dt * (q_gen - q_cool) / p.c_oil;
    if (command == v) {
        r.state.valve_integrator += dt * error;
    }
    r.state.time += dt;
    if (!std::isfinite(r.state.oil_temperature) || !std::isfinite(r.state.valve_integrator) ||
        !std::isfinite(r.state.time)) {
        throw NumericError("loc_step: non-finite state at t=" + std::to_string(state.time));
    }
    return r;
}

LocState loc_equilibrium(const LocInputs &u, const LocParameters &p) {
    const double q_gen = p.q_max * u.engine_load;
    const double lift = u.setpoint_temperature_oil - u.temperature_cooling_liquid_in;
    double v = 0.0;
    if (lift > 0.0) {
        v = q_gen / (p.ua * lift);
    } else if (q_gen > 0.0) {
        v = 1.0;
    }
    v = std::clamp(v, 0.0, 1.0);
    LocState s;
    s.oil_temperature = u.setpoint_temperature_oil;
    s.valve_integrator = v / p.ki;
    s.time = 0.0;
    return s;
}

const InterfaceSpec &loc_interface() {
    static const InterfaceSpec spec = [] {
        auto text = embedded_resource("resources/loc_interface.json");
        return InterfaceSpec::from_json(Json::parse(*text));
    }();
    return spec;
}

SignalBundle simulate_loc(const SignalBundle &inputs, const TimeGrid &grid, const LocParameters &p) {
    if (!(inputs.grid() == grid)) {
        throw InterfaceMismatch("input grid differs from the simulation grid");
    }
    static const char *const names[] = {"engine_load", "setpoint_temperature_oil", "temperature_cooling_liquid_in",
                                        "mass_flow_cooling_liquid_in"};
    for (const char *name : names) {
        if (!inputs.contains(name)) {
            throw InterfaceMismatch(std::string("missing input ") + name);
        }
    }
    const auto &load = inputs.at("engine_load").values;
    const auto &sp = inputs.at("setpoint_temperature_oil").values;
    const auto &tin = inputs.at("temperature_cooling_liquid_in").values;
    const auto &mdot = inputs.at("mass_flow_cooling_liquid_in").values;
    auto sample = [&](std::size_t i) { return LocInputs{load[i], sp[i], tin[i], mdot[i]}; };

    const std::size_t n = grid.size();
    std::vector<double> t_oil(n), valve(n), t_out(n), m_out(n);
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(grid.step() / p.max_substep - 1e-9)));
    const double dt = grid.step() / static_cast<double>(substeps);

    LocState state = loc_equilibrium(sample(0), p);
    state.time = grid.start();
    for (std::size_t i = 0; i < n; ++i) {
        const LocInputs u = sample(i);
        const LocOutputs y = loc_outputs(state, u, p);
        t_oil[i] = y.temperature_oil;
        valve[i] = y.position_valve;
        t_out[i] = y.temperature_cooling_liquid_out;
        m_out[i] = y.mass_flow_cooling_liquid_out;
        if (i + 1 < n) {
            for (std::size_t k = 0; k < substeps; ++k) {
                state = loc_step(state, u, dt, p).state;
            }
        }
    }
    SignalBundle out(grid);
    out.put(Trace("temperature_oil", grid, std::move(t_oil)));
    out.put(Trace("position_valve", grid, std::move(valve)));
    out.put(Trace("temperature_cooling_liquid_out", grid, std::move(t_out)));
    out.put(Trace("mass_flow_cooling_liquid_out", grid, std::move(m_out)));
    return out;
}

} // namespace metamorph
