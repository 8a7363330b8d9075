#include <gtest/gtest.h>

#include "metamorph/relations.hpp"
#include "support.hpp"

namespace metamorph {
namespace {

using testing::Gen;
using testing::make_trace;
namespace brute = testing::brute;

std::vector<double> filled(std::size_t n, double x) { return std::vector<double>(n, x); }

TEST(EventuallyIncreases, RisesAndStays) {
    const TimeGrid g(0.0, 3000.0, 100.0);
    std::vector<double> m = filled(g.size(), 75.0);
    for (std::size_t i = 9; i < m.size(); ++i) {
        m[i] = 78.0;
    }
    const auto v = eventually_increases(Trace("y", g, filled(g.size(), 75.0)), Trace("y", g, m), 1e-9);
    EXPECT_TRUE(v.passed);
    EXPECT_DOUBLE_EQ(*v.witness.time, 900.0);
}

TEST(EventuallyIncreases, IdenticalFails) {
    const auto s = make_trace("y", {1, 2, 3});
    EXPECT_FALSE(eventually_increases(s, s, 0.0).passed);
}

TEST(EventuallyIncreases, LastSampleBelowFails) {
    const auto v = eventually_increases(make_trace("y", {0, 0, 0, 0}), make_trace("y", {1, 1, 1, 0}), 0.0);
    EXPECT_FALSE(v.passed);
    EXPECT_EQ(*v.witness.index, 3u);
}

TEST(EventuallyDecreases, ConstantOffset) {
    const auto v = eventually_decreases(make_trace("y", {5, 6, 7}), make_trace("y", {4, 5, 6}), 0.5);
    EXPECT_TRUE(v.passed);
    EXPECT_DOUBLE_EQ(*v.witness.time, 0.0);
}

TEST(EventuallyDecreases, OscillatingFails) {
    EXPECT_FALSE(eventually_decreases(make_trace("y", {0, 0, 0, 0}), make_trace("y", {-1, 1, -1, 1}), 0.0).passed);
}

TEST(ProportionalTo, ExactDouble) {
    const auto v = proportional_to(make_trace("y", {1, 2, 3}), make_trace("y", {2, 4, 6}), 0.02);
    EXPECT_TRUE(v.passed);
    EXPECT_DOUBLE_EQ(*v.witness.constant, 2.0);
}

TEST(ProportionalTo, OffsetFails) {
    EXPECT_FALSE(proportional_to(make_trace("y", {1, 2, 3}), make_trace("y", {7, 9, 11}), 0.02).passed);
}

TEST(ProportionalTo, DegenerateSeed) {
    EXPECT_THROW(proportional_to(make_trace("y", {0, 0, 0}), make_trace("y", {1, 2, 3}), 0.02), DegenerateSeed);
    RelationSpec r{"y", RelationKind::ProportionalTo};
    EXPECT_FALSE(evaluate_relation(r, make_trace("y", {0, 0}), make_trace("y", {1, 1}), {}).passed);
}

TEST(EqualTo, Examples) {
    const auto s = make_trace("y", {10, 20, 30});
    EXPECT_TRUE(equal_to(s, s, 1e-6, 1e-3).passed);
    EXPECT_TRUE(equal_to(s, make_trace("y", {10.0000005, 20.0000005, 30.0000005}), 1e-6, 0.0).passed);
    const auto v = equal_to(s, make_trace("y", {10, 20 + 10 * (1e-6 + 1e-3 * 20), 30}), 1e-6, 1e-3);
    EXPECT_FALSE(v.passed);
    EXPECT_DOUBLE_EQ(*v.witness.time, 1.0);
}

TEST(SettlesWithin, Examples) {
    const auto flat = make_trace("y", filled(11, 75.0));
    EXPECT_TRUE(settles_within(flat, flat, 75.0, 5.0, 1.0).passed);

    std::vector<double> reexit = filled(11, 75.0);
    reexit[8] = 80.0;
    const auto v1 = settles_within(flat, make_trace("y", reexit), 75.0, 5.0, 1.0);
    EXPECT_FALSE(v1.passed);
    EXPECT_EQ(*v1.witness.trace, "morph");

    const auto v2 = settles_within(flat, make_trace("y", filled(11, 77.0)), 75.0, 5.0, 1.0);
    EXPECT_FALSE(v2.passed);
    EXPECT_EQ(*v2.witness.trace, "morph");
}

TEST(SettlesWithin, WindowBeyondSpan) {
    const auto flat = make_trace("y", filled(11, 75.0));
    EXPECT_THROW(settles_within(flat, flat, 75.0, 11.0, 1.0), WindowError);
}

TEST(Relations, GridMismatch) {
    EXPECT_THROW(equal_to(make_trace("y", {1, 2}), make_trace("y", {1, 2, 3}), 0, 0), GridMismatch);
}

TEST(EvaluateRelations, Conjunction) {
    const TimeGrid g(0.0, 2.0, 1.0);
    SignalBundle s(g), m(g);
    s.put(Trace("a", g, {1, 1, 1}));
    s.put(Trace("b", g, {1, 1, 1}));
    m.put(Trace("a", g, {2, 2, 2}));
    m.put(Trace("b", g, {1, 1, 1}));
    const std::vector<RelationSpec> both{{"a", RelationKind::EventuallyIncreases}, {"b", RelationKind::EqualTo}};
    EXPECT_TRUE(evaluate_relations(both, s, m, {}).passed);
    const std::vector<RelationSpec> one{{"a", RelationKind::EventuallyIncreases},
                                        {"b", RelationKind::EventuallyDecreases}};
    const auto v = evaluate_relations(one, s, m, {});
    EXPECT_FALSE(v.passed);
    EXPECT_FALSE(v.relations[1].passed);
    const std::vector<RelationSpec> missing{{"c", RelationKind::EqualTo}};
    EXPECT_THROW(evaluate_relations(missing, s, m, {}), MissingOutput);
}

TEST(RelationKinds, Spellings) {
    EXPECT_EQ(parse_relation_kind("Eventually_Increases"), RelationKind::EventuallyIncreases);
    EXPECT_FALSE(parse_relation_kind("eventually_increases"));
    EXPECT_EQ(parse_relation_kind_lenient("eventually_increases_than"), RelationKind::EventuallyIncreases);
    EXPECT_EQ(parse_relation_kind_lenient("SettlesWithin"), RelationKind::SettlesWithin);
    EXPECT_FALSE(parse_relation_kind_lenient("Oscillates"));
}

TEST(RelationProperty, BruteForceEquivalence) {
    Gen gen(11, "relations");
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen.integer(2, 12));
        const auto s = gen.coarse_values(n, -3, 3);
        const auto m = gen.coarse_values(n, -3, 3);
        const double eps = static_cast<double>(gen.integer(0, 1));
        const auto ts = make_trace("y", s);
        const auto tm = make_trace("y", m);
        ASSERT_EQ(eventually_increases(ts, tm, eps).passed, brute::eventually_increases(s, m, eps));
        ASSERT_EQ(eventually_decreases(ts, tm, eps).passed, brute::eventually_decreases(s, m, eps));
        ASSERT_EQ(equal_to(ts, tm, eps, 0.1).passed, brute::equal_to(s, m, eps, 0.1));
        const auto prop = brute::proportional_to(s, m, 0.3);
        if (prop) {
            ASSERT_EQ(proportional_to(ts, tm, 0.3).passed, *prop);
        } else {
            ASSERT_THROW(proportional_to(ts, tm, 0.3), DegenerateSeed);
        }
        const double window = static_cast<double>(gen.integer(0, static_cast<long>(n - 1)));
        ASSERT_EQ(settles_within(ts, tm, 0.0, window, 1.5).passed,
                  brute::settles_within(s, m, ts.grid, 0.0, window, 1.5));
    }
}

TEST(RelationProperty, TimeShiftInvariance) {
    Gen gen(12, "shift");
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen.integer(2, 12));
        const auto s = gen.values(n, -5, 5);
        const auto m = gen.values(n, -5, 5);
        const double shift = gen.real(-100, 100);
        const TimeGrid g0(0.0, static_cast<double>(n - 1), 1.0);
        const TimeGrid g1(shift, shift + static_cast<double>(n - 1), 1.0);
        for (RelationKind k : kAllRelationKinds) {
            RelationSpec r{"y", k};
            r.set_point = 0.0;
            r.window = 1.0;
            r.tolerance = 2.0;
            ASSERT_EQ(evaluate_relation(r, Trace("y", g0, s), Trace("y", g0, m), {}).passed,
                      evaluate_relation(r, Trace("y", g1, s), Trace("y", g1, m), {}).passed);
        }
    }
}

TEST(RelationProperty, EqualToReflexiveAndEventuallyExclusive) {
    Gen gen(13, "reflexive");
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen.integer(2, 12));
        const auto s = make_trace("y", gen.values(n, -1e6, 1e6));
        const auto m = make_trace("y", gen.values(n, -1e6, 1e6));
        ASSERT_TRUE(equal_to(s, s, 0.0, 0.0).passed);
        const double eps = gen.real(0.0, 1.0);
        ASSERT_FALSE(eventually_increases(s, m, eps).passed && eventually_decreases(s, m, eps).passed);
        ASSERT_EQ(eventually_decreases(s, m, eps).passed, eventually_increases(m, s, eps).passed);
    }
}

TEST(RelationProperty, ProportionalScaleConsistent) {
    Gen gen(14, "scale");
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen.integer(2, 12));
        const auto s = gen.values(n, 1.0, 10.0);
        const double c = gen.real(0.5, 3.0);
        std::vector<double> m(n);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = c * s[i] * (1.0 + gen.real(-0.005, 0.005));
        }
        const auto base = proportional_to(make_trace("y", s), make_trace("y", m), 0.02);
        ASSERT_TRUE(base.passed);
        const double k = gen.real(0.1, 10.0);
        std::vector<double> km(m);
        for (auto &x : km) {
            x *= k;
        }
        const auto scaled = proportional_to(make_trace("y", s), make_trace("y", km), 0.02);
        ASSERT_TRUE(scaled.passed);
        ASSERT_NEAR(*scaled.witness.constant, k * *base.witness.constant, 1e-9 * k * *base.witness.constant);
    }
}

} // namespace
} // namespace metamorph
