#include <gtest/gtest.h>

#include "metamorph/signals.hpp"
#include "support.hpp"

namespace metamorph {
namespace {

using testing::Gen;

TEST(TimeGrid, CountsSamples) {
    const TimeGrid g(0.0, 3000.0, 500.0);
    EXPECT_EQ(g.intervals(), 6u);
    EXPECT_EQ(g.size(), 7u);
    EXPECT_DOUBLE_EQ(g.time(3), 1500.0);
}

TEST(TimeGrid, RejectsBadSpans) {
    EXPECT_THROW(TimeGrid(0.0, 0.0, 1.0), GridError);
    EXPECT_THROW(TimeGrid(0.0, 10.0, 0.0), GridError);
    EXPECT_THROW(TimeGrid(0.0, 10.0, 3.0), GridError);
    EXPECT_NO_THROW(TimeGrid(0.0, 1.0, 0.1));
}

TEST(TimeGrid, JsonRoundTrip) {
    const TimeGrid g(10.0, 20.0, 0.5);
    EXPECT_EQ(TimeGrid::from_json(g.to_json()), g);
}

TEST(Trace, RejectsLengthMismatchAndNonFinite) {
    const TimeGrid g(0.0, 2.0, 1.0);
    EXPECT_THROW(Trace("x", g, {1.0, 2.0}), GridError);
    EXPECT_THROW(Trace("x", g, {1.0, std::nan(""), 2.0}), GridError);
}

TEST(SignalBundle, RejectsForeignGrid) {
    SignalBundle b(TimeGrid(0.0, 2.0, 1.0));
    EXPECT_THROW(b.put(Trace("x", TimeGrid(0.0, 4.0, 2.0), {1, 2, 3})), GridMismatch);
}

TEST(SignalBundle, CsvHasTimeColumn) {
    SignalBundle b(TimeGrid(0.0, 1.0, 1.0));
    b.put(Trace("b", b.grid(), {1.0, 2.0}));
    b.put(Trace("a", b.grid(), {3.0, 4.0}));
    EXPECT_EQ(b.to_csv(), "time,a,b\n0.0,3.0,1.0\n1.0,4.0,2.0\n");
}

TEST(Pattern, StepIsRightContinuous) {
    const SignalPattern p = StepPattern{0.5, 0.8, 1500.0};
    EXPECT_DOUBLE_EQ(eval_pattern(p, 1499.0), 0.5);
    EXPECT_DOUBLE_EQ(eval_pattern(p, 1500.0), 0.8);
}

TEST(Pattern, RampMidpoint) {
    const SignalPattern p = RampPattern{0.5, 0.95, 450.0, 600.0};
    EXPECT_NEAR(eval_pattern(p, 750.0), 0.725, 1e-12);
    EXPECT_DOUBLE_EQ(eval_pattern(p, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(eval_pattern(p, 2000.0), 0.95);
}

TEST(Pattern, Constant) {
    EXPECT_DOUBLE_EQ(eval_pattern(ConstantPattern{75.0}, 123.0), 75.0);
    EXPECT_TRUE(is_constant(ConstantPattern{75.0}));
    EXPECT_FALSE(onset_time(ConstantPattern{75.0}));
}

TEST(Pattern, JsonRoundTripAndStrictParse) {
    for (const SignalPattern &p : {SignalPattern{ConstantPattern{1.0}}, SignalPattern{StepPattern{0, 1, 2}},
                                   SignalPattern{RampPattern{0, 1, 2, 3}}}) {
        EXPECT_EQ(pattern_from_json(pattern_to_json(p), ".p"), p);
    }
    EXPECT_THROW(pattern_from_json(Json{{"pattern", "SINE"}}, ".p"), SchemaError);
    EXPECT_THROW(pattern_from_json(Json{{"pattern", "STEP"}, {"from", 0}, {"to", 1}}, ".p"), SchemaError);
}

TEST(Instantiate, StepOnCoarseGrid) {
    const TimeGrid g(0.0, 3000.0, 500.0);
    const auto in = instantiate({{"engine_load", StepPattern{0.5, 0.8, 1500.0}}}, g);
    EXPECT_EQ(in.followup.at("engine_load").values, (std::vector<double>{0.5, 0.5, 0.5, 0.8, 0.8, 0.8, 0.8}));
    EXPECT_EQ(in.seed.at("engine_load").values, std::vector<double>(7, 0.5));
}

TEST(Instantiate, RampOnCoarseGrid) {
    const TimeGrid g(0.0, 3000.0, 500.0);
    const auto in = instantiate({{"engine_load", RampPattern{0.5, 0.95, 450.0, 600.0}}}, g);
    const auto &v = in.followup.at("engine_load").values;
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    EXPECT_NEAR(v[1], 0.5375, 1e-12);
    EXPECT_NEAR(v[2], 0.9125, 1e-12);
    EXPECT_DOUBLE_EQ(v[3], 0.95);
}

TEST(Instantiate, OnsetOutsideGrid) {
    const TimeGrid g(0.0, 100.0, 1.0);
    EXPECT_THROW(instantiate({{"u", StepPattern{0, 1, 200}}}, g), GridError);
}

SignalPattern random_pattern(Gen &gen, const TimeGrid &g) {
    const double from = gen.real(-10, 10);
    const double to = from + gen.real(0.1, 10);
    switch (gen.integer(0, 2)) {
    case 0:
        return ConstantPattern{from};
    case 1:
        return StepPattern{from, to, gen.real(g.start(), g.stop())};
    default: {
        const double begin = gen.real(g.start(), g.stop());
        return RampPattern{from, to, begin, gen.real(0.5, 50.0)};
    }
    }
}

TEST(InstantiateProperty, SeedAndFollowupDifferOnlyOnTransformedInputs) {
    Gen gen(7, "instantiate");
    const TimeGrid g(0.0, 100.0, 0.5);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, SignalPattern> inputs;
        for (int k = 0; k < 3; ++k) {
            inputs.emplace("u" + std::to_string(k), random_pattern(gen, g));
        }
        const auto a = instantiate(inputs, g);
        const auto b = instantiate(inputs, g);
        ASSERT_TRUE(a.seed == b.seed);
        ASSERT_TRUE(a.followup == b.followup);
        for (const auto &[name, p] : inputs) {
            const auto &seed = a.seed.at(name).values;
            const auto &follow = a.followup.at(name).values;
            ASSERT_EQ(seed, std::vector<double>(g.size(), seed_value(p)));
            if (is_constant(p)) {
                ASSERT_EQ(seed, follow);
            }
            for (std::size_t i = 1; i < follow.size(); ++i) {
                ASSERT_LE(follow[i - 1], follow[i]) << name << " at " << i;
            }
        }
    }
}

} // namespace
} // namespace metamorph
