#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

namespace pp = perceptplan;

TEST(ValidatePomdp, WellFormed) {
    EXPECT_TRUE(pp::validate_pomdp(fixtures::two_room()).empty());
}

TEST(ValidatePomdp, RowSumDefect) {
    auto m = fixtures::two_room();
    m.trans[1](0, 0) = 0.9;
    const auto v = pp::validate_pomdp(m);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].location, "trans(s0, look)");
    EXPECT_NE(v[0].defect.find("0.9"), std::string::npos);
}

TEST(ValidatePomdp, NegativeEmission) {
    auto m = fixtures::two_room();
    m.emit[1](1, 0) = -0.2;
    m.emit[1](1, 1) = 1.2;
    const auto v = pp::validate_pomdp(m);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].location, "emit(s1, look)");
    EXPECT_NE(v[0].defect.find("negative"), std::string::npos);
}

TEST(ValidatePomdp, UnknownProposition) {
    auto m = fixtures::two_room();
    m.label[0] = {"ghost"};
    ASSERT_EQ(pp::validate_pomdp(m).size(), 1u);
}

TEST(BuildProduct, SizeIdentity) {
    std::mt19937_64 rng(1);
    const auto m = fixtures::random_pomdp(rng, 6, 2, 3);
    const auto dfa = fixtures::random_dfa(rng, 5);
    EXPECT_EQ(pp::build_product(m, dfa).size(), 30u);
}

TEST(BuildProduct, TrivialAutomatonPreservesDynamics) {
    std::mt19937_64 rng(2);
    const auto m = fixtures::random_pomdp(rng, 4, 3, 2);
    const auto alphabet = pp::powerset_alphabet(m.aps);
    const pp::Dfa one({"q"}, alphabet, std::vector<std::size_t>(alphabet.size(), 0), 0, {true}, {false});
    const auto p = pp::build_product(m, one);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ((p.trans[a] - m.trans[a]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildProduct, TwoRoomInitial) {
    const auto p = pp::build_product(fixtures::two_room(), fixtures::reach_p());
    // v = s * 2 + q
    EXPECT_EQ(p.init(p.index(0, 0)), 0.5);
    EXPECT_EQ(p.init(p.index(1, 1)), 0.5);
    EXPECT_EQ(p.init.sum(), 1.0);
}

TEST(BuildProduct, MissingLabelSymbol) {
    auto m = fixtures::two_room();
    m.aps.push_back("r");
    m.label[1] = {"p", "r"};
    try {
        pp::build_product(m, fixtures::reach_p());
        FAIL();
    } catch (const pp::ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("s1"), std::string::npos);
        EXPECT_NE(msg.find("{p,r}"), std::string::npos);
    }
}

TEST(BuildProduct, RandomModelsRowStochasticAndMarginalize) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t ns = 1 + rng() % 6, na = 1 + rng() % 3, nq = 1 + rng() % 4;
        const auto m = fixtures::random_pomdp(rng, ns, na, 2);
        const auto dfa = fixtures::random_dfa(rng, nq);
        const auto p = pp::build_product(m, dfa);
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t s = 0; s < ns; ++s)
                for (std::size_t q = 0; q < nq; ++q) {
                    const auto v = static_cast<Eigen::Index>(p.index(s, q));
                    ASSERT_NEAR(p.trans[a].row(v).sum(), 1.0, 1e-9);
                    for (std::size_t s2 = 0; s2 < ns; ++s2) {
                        double marg = 0.0;
                        for (std::size_t q2 = 0; q2 < nq; ++q2)
                            marg += p.trans[a](v, static_cast<Eigen::Index>(p.index(s2, q2)));
                        ASSERT_EQ(marg, m.trans[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s2)));
                    }
                    // emission ignores q
                    ASSERT_EQ((p.emit[a].row(v) - m.emit[a].row(static_cast<Eigen::Index>(s))).cwiseAbs().maxCoeff(), 0.0);
                }
        // init only on (s0, delta(iota, L(s0)))
        for (std::size_t s = 0; s < ns; ++s) {
            const std::size_t q0 = dfa.step(dfa.initial(), dfa.symbol_index(m.label[s]));
            ASSERT_EQ(p.init(static_cast<Eigen::Index>(p.index(s, q0))), m.init(static_cast<Eigen::Index>(s)));
        }
    }
}

TEST(BuildProduct, PathProbabilityMatchesBase) {
    // For every base path s_0..s_3 under fixed actions, the induced product
    // path has the same probability.
    std::mt19937_64 rng(9);
    const auto m = fixtures::random_pomdp(rng, 3, 2, 2);
    const auto dfa = fixtures::random_dfa(rng, 3);
    const auto p = pp::build_product(m, dfa);
    const std::vector<std::size_t> acts{0, 1, 1};
    for (std::size_t code = 0; code < 81; ++code) {
        std::vector<std::size_t> s{code % 3, code / 3 % 3, code / 9 % 3, code / 27 % 3};
        double base = m.init(static_cast<Eigen::Index>(s[0]));
        std::size_t q = dfa.step(dfa.initial(), dfa.symbol_index(m.label[s[0]]));
        double prod = p.init(static_cast<Eigen::Index>(p.index(s[0], q)));
        for (std::size_t t = 0; t < 3; ++t) {
            base *= m.trans[acts[t]](static_cast<Eigen::Index>(s[t]), static_cast<Eigen::Index>(s[t + 1]));
            const std::size_t q2 = dfa.step(q, dfa.symbol_index(m.label[s[t + 1]]));
            prod *= p.trans[acts[t]](static_cast<Eigen::Index>(p.index(s[t], q)),
                                     static_cast<Eigen::Index>(p.index(s[t + 1], q2)));
            q = q2;
        }
        EXPECT_NEAR(prod, base, 1e-15);
    }
}

TEST(EventIndicators, Sets) {
    const auto p = pp::build_product(fixtures::two_room(), fixtures::reach_p());
    const auto ev = pp::event_indicators(p);
    EXPECT_EQ(ev.w_set, ev.z_set);  // F_sec = F
    EXPECT_TRUE(ev.in_z(p.index(0, 1)));
    EXPECT_TRUE(ev.in_z(p.index(1, 1)));
    EXPECT_FALSE(ev.in_z(p.index(0, 0)));
    EXPECT_FALSE(ev.in_z(p.index(1, 0)));

    const pp::Dfa no_secret({"q0", "q1"}, {pp::Symbol{}, pp::Symbol{"p"}}, {0, 1, 1, 1}, 0, {false, true},
                            {false, false});
    const auto ev2 = pp::event_indicators(pp::build_product(fixtures::two_room(), no_secret));
    EXPECT_EQ(std::count(ev2.z_set.begin(), ev2.z_set.end(), true), 0);
}
