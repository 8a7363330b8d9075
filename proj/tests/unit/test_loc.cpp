#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "metamorph/sut.hpp"
#include "support.hpp"

namespace metamorph {
namespace {

using testing::Gen;
using testing::loc_grid;

SignalBundle loc_inputs(const TimeGrid &g, const SignalPattern &load, double sp = 75.0, double tin = 30.0,
                        double mdot = 20.0) {
    return instantiate({{"engine_load", load},
                        {"setpoint_temperature_oil", ConstantPattern{sp}},
                        {"temperature_cooling_liquid_in", ConstantPattern{tin}},
                        {"mass_flow_cooling_liquid_in", ConstantPattern{mdot}}},
                       g)
        .followup;
}

double hand_valve(double load, double sp = 75.0, double tin = 30.0) { return load * 2.0e6 / (7.5e4 * (sp - tin)); }

TEST(LocModel, EquilibriumValveMatchesHeatBalance) {
    for (double load : {0.2, 0.5, 0.8, 1.0}) {
        LocInputs u;
        u.engine_load = load;
        const LocState s = loc_equilibrium(u);
        EXPECT_DOUBLE_EQ(s.oil_temperature, 75.0);
        EXPECT_NEAR(loc_outputs(s, u).position_valve, hand_valve(load), 1e-12) << load;
    }
    LocInputs u;
    EXPECT_NEAR(loc_outputs(loc_equilibrium(u), u).position_valve, 0.2963, 5e-5);
    u.engine_load = 0.8;
    EXPECT_NEAR(loc_outputs(loc_equilibrium(u), u).position_valve, 0.4741, 5e-5);
    u.engine_load = 1.0;
    EXPECT_NEAR(loc_outputs(loc_equilibrium(u), u).position_valve, 0.5926, 5e-5);
    u.engine_load = 0.2;
    EXPECT_NEAR(loc_outputs(loc_equilibrium(u), u).position_valve, 0.1185, 5e-5);
}

TEST(LocModel, ClosedValveHeatsOil) {
    LocInputs u;
    const LocState s{75.0, 0.0, 0.0};
    const auto r = loc_step(s, u, 1.0);
    EXPECT_EQ(r.outputs.position_valve, 0.0);
    EXPECT_DOUBLE_EQ(r.outputs.temperature_cooling_liquid_out, 30.0);
    EXPECT_NEAR(r.state.oil_temperature, 75.0 + 2.0e6 * 0.5 / 5.0e6, 1e-12);
    EXPECT_DOUBLE_EQ(r.state.time, 1.0);
}

TEST(LocModel, NoLoadAtCoolantTemperatureIsStationary) {
    LocInputs u;
    u.engine_load = 0.0;
    const LocState s{30.0, 3000.0, 0.0};
    EXPECT_DOUBLE_EQ(loc_step(s, u, 1.0).state.oil_temperature, 30.0);
}

TEST(LocModel, RejectsNonPositiveStep) { EXPECT_THROW(loc_step(LocState{}, LocInputs{}, 0.0), NumericError); }

TEST(LocModel, ConstantNominalInputsRegulate) {
    const TimeGrid g = loc_grid();
    const auto out = simulate_loc(loc_inputs(g, ConstantPattern{0.5}), g);
    EXPECT_NEAR(out.at("temperature_oil").values.back(), 75.0, 1.0);
    EXPECT_NEAR(out.at("position_valve").values.back(), hand_valve(0.5), 1e-6);
}

TEST(LocModel, ColdStartSettles) {
    LocInputs u;
    LocState s{60.0, 0.0, 0.0};
    for (int k = 0; k < 3000; ++k) {
        s = loc_step(s, u, 1.0).state;
    }
    EXPECT_NEAR(s.oil_temperature, 75.0, 1.0);
}

TEST(LocModel, LoadStepRaisesOilThenValve) {
    const TimeGrid g = loc_grid();
    const auto base = simulate_loc(loc_inputs(g, ConstantPattern{0.5}), g);
    const auto step = simulate_loc(loc_inputs(g, StepPattern{0.5, 0.8, 345.0}), g);
    const auto &oil = step.at("temperature_oil").values;
    const auto peak = std::max_element(oil.begin(), oil.end());
    EXPECT_GT(*peak, 76.0);
    EXPECT_NEAR(*peak, 79.917, 1e-3);
    EXPECT_EQ(peak - oil.begin(), 446);
    EXPECT_NEAR(oil.back(), 75.0, 1.0);
    EXPECT_GT(step.at("position_valve").values.back(), base.at("position_valve").values.back());
    EXPECT_NEAR(step.at("position_valve").values.back(), hand_valve(0.8), 1e-6);
}

TEST(LocModel, MissingInputIsInterfaceMismatch) {
    const TimeGrid g(0.0, 10.0, 1.0);
    SignalBundle in = loc_inputs(g, ConstantPattern{0.5});
    SignalBundle partial(g);
    partial.put(in.at("engine_load"));
    EXPECT_THROW(simulate_loc(partial, g), InterfaceMismatch);
    EXPECT_THROW(simulate_loc(in, TimeGrid(0.0, 20.0, 1.0)), InterfaceMismatch);
}

TEST(LocHandle, BuiltinDescriptor) {
    const SutDescriptor d = resolve_sut(kBuiltinLocId);
    EXPECT_EQ(d.backend, Backend::BuiltinLoc);
    auto sut = open_sut(d);
    EXPECT_EQ(sut->interface(), loc_interface());
    const TimeGrid g(0.0, 100.0, 1.0);
    const auto in = loc_inputs(g, ConstantPattern{0.5});
    EXPECT_TRUE(sut->simulate(in, g) == simulate_loc(in, g));
}

TEST(LocProperty, PhysicalInvariants) {
    Gen gen(31, "loc");
    for (int trial = 0; trial < 40; ++trial) {
        const double step = gen.coin() ? 1.0 : 2.5;
        const TimeGrid g(0.0, 1500.0, step);
        const double a = gen.real(0.0, 1.0);
        const double b = gen.real(0.0, 1.0);
        const double sp = gen.real(65.0, 85.0);
        const double tin = gen.real(15.0, 40.0);
        const double mdot = gen.real(5.0, 60.0);
        const SignalPattern load = gen.coin() ? SignalPattern{StepPattern{a, b, 300.0}}
                                              : SignalPattern{RampPattern{a, b, 300.0, gen.real(10.0, 400.0)}};
        const auto in = loc_inputs(g, load, sp, tin, mdot);
        const auto out = simulate_loc(in, g);
        ASSERT_TRUE(out == simulate_loc(in, g));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = out.at("position_valve").values[i];
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
            ASSERT_GE(out.at("temperature_cooling_liquid_out").values[i], tin);
            ASSERT_EQ(out.at("mass_flow_cooling_liquid_out").values[i], mdot);
        }
    }
}

TEST(LocProperty, RegulatesAcrossOperatingRange) {
    Gen gen(32, "regulation");
    const TimeGrid g = loc_grid();
    for (int trial = 0; trial < 25; ++trial) {
        const double a = gen.real(0.2, 1.0);
        const double b = gen.real(0.2, 1.0);
        const auto out = simulate_loc(loc_inputs(g, StepPattern{a, b, 345.0}), g);
        const auto &oil = out.at("temperature_oil").values;
        for (std::size_t i = static_cast<std::size_t>(0.8 * static_cast<double>(g.intervals())); i < oil.size(); ++i) {
            ASSERT_NEAR(oil[i], 75.0, 1.0) << a << " -> " << b << " at " << i;
        }
    }
}

TEST(LocProperty, SteadyValveMonotoneInLoad) {
    Gen gen(33, "monotone");
    for (int trial = 0; trial < 500; ++trial) {
        LocInputs lo;
        lo.temperature_cooling_liquid_in = gen.real(10.0, 60.0);
        lo.setpoint_temperature_oil = gen.real(50.0, 90.0);
        lo.engine_load = gen.real(0.0, 1.0);
        LocInputs hi = lo;
        hi.engine_load = gen.real(lo.engine_load, 1.0);
        ASSERT_LE(loc_outputs(loc_equilibrium(lo), lo).position_valve,
                  loc_outputs(loc_equilibrium(hi), hi).position_valve);
    }
}

} // namespace
} // namespace metamorph
