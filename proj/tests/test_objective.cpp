#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

namespace pp = perceptplan;
using fixtures::TwoRoom;

namespace {

double h2(double p) {
    double h = 0.0;
    if (p > 0) h -= p * std::log(p);
    if (p < 1) h -= (1 - p) * std::log(1 - p);
    return h;
}

}  // namespace

TEST(Posteriors, TwoRoomSingleLook) {
    const TwoRoom f;
    const pp::ObservationRecord blip{{TwoRoom::blip}, {TwoRoom::look}};
    EXPECT_NEAR(pp::secret_posterior(f.oo, blip), 8.0 / 9.0, 1e-15);
    EXPECT_NEAR(pp::success_posterior(f.oo, blip), 8.0 / 9.0, 1e-15);
    const pp::ObservationRecord null{{TwoRoom::null}, {TwoRoom::look}};
    EXPECT_NEAR(pp::secret_posterior(f.oo, null), 0.2 / 1.1, 1e-15);
    const pp::ObservationRecord stay{{TwoRoom::null}, {TwoRoom::stay}};
    EXPECT_NEAR(pp::secret_posterior(f.oo, stay), 0.5, 1e-15);
}

TEST(Posteriors, MatchBruteForceAndSmoothing) {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = pp::build_product(fixtures::random_pomdp(rng, 3, 2, 2), fixtures::random_dfa(rng, 3));
        const pp::ObservableOperators oo(p);
        pp::ObservationRecord y{std::vector<std::size_t>(4), std::vector<std::size_t>(4)};
        for (auto& o : y.obs) o = rng() % 2;
        for (auto& a : y.acts) a = rng() % 2;
        if (fixtures::brute_seq_prob(p, y.obs, y.acts) == 0.0) {
            EXPECT_THROW(pp::secret_posterior(oo, y), pp::EvidenceImpossible);
            continue;
        }
        const auto post = pp::event_posteriors(oo, y);
        EXPECT_NEAR(post.secret, fixtures::brute_posterior(p, p.secret, y.obs, y.acts), 1e-10);
        EXPECT_NEAR(post.success, fixtures::brute_posterior(p, p.final, y.obs, y.acts), 1e-10);
        const auto s = pp::smooth(oo, y.obs, y.acts, 3);
        double via_smooth = 0.0;
        for (std::size_t v = 0; v < p.size(); ++v)
            if (p.secret[v]) via_smooth += s(static_cast<Eigen::Index>(v));
        EXPECT_NEAR(post.secret, via_smooth, 1e-10);
    }
}

TEST(Entropy, BinaryValues) {
    EXPECT_EQ(pp::entropy_given_y(0.0), 0.0);
    EXPECT_EQ(pp::entropy_given_y(1.0), 0.0);
    EXPECT_NEAR(pp::entropy_given_y(0.5), std::log(2.0), 1e-15);
    EXPECT_NEAR(pp::entropy_given_y(0.5, pp::LogBase::Two), 1.0, 1e-15);
    EXPECT_NEAR(pp::entropy_given_y(8.0 / 9.0), 0.348832, 1e-6);
    EXPECT_NEAR(pp::entropy_given_y(0.3), pp::entropy_given_y(0.7), 1e-15);
}

TEST(TrajProb, Normalizes) {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = pp::build_product(fixtures::random_pomdp(rng, 3, 2, 2), fixtures::random_dfa(rng, 2));
        const pp::ObservableOperators oo(p);
        const auto pol = fixtures::random_policy(rng, 1, p);
        double total = 0.0;
        fixtures::for_each_record(2, 2, 3, [&](const auto& obs, const auto& acts) {
            total += pp::traj_prob(pol, oo, {obs, acts});
        });
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(ExactObjective, TwoRoomHorizonZero) {
    const TwoRoom f;
    const pp::FscPolicy pol(0, f.product.observations, f.product.actions);
    const double expect = 0.5 * h2(0.5) + 0.225 * h2(8.0 / 9.0) + 0.275 * h2(2.0 / 11.0);
    EXPECT_NEAR(pp::exact_conditional_entropy(pol, f.oo, 0), expect, 1e-14);
    EXPECT_NEAR(pp::exact_success_prob(pol, f.oo, 0), 0.5, 1e-14);
    const auto rep = pp::exact_objective(pol, f.oo, 0, 2.0);
    EXPECT_NEAR(rep.objective, expect - 1.0, 1e-14);
}

TEST(ExactObjective, MatchesBruteForce) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = pp::build_product(fixtures::random_pomdp(rng, 3, 2, 2), fixtures::random_dfa(rng, 2));
        const pp::ObservableOperators oo(p);
        const auto pol = fixtures::random_policy(rng, 2, p);
        const auto brute = fixtures::brute_objective(pol, p, 2);
        const auto rep = pp::exact_objective(pol, oo, 2, 1.0);
        EXPECT_NEAR(rep.entropy, brute.entropy, 1e-10);
        EXPECT_NEAR(rep.success_prob, brute.success, 1e-10);
    }
}

TEST(ExactObjective, ConditioningReducesEntropy) {
    // H(Z_T | Y) <= H(Z_T) with P(Z_T = 1) = E_y P(Z_T = 1 | y).
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = pp::build_product(fixtures::random_pomdp(rng, 4, 2, 2), fixtures::random_dfa(rng, 3));
        const pp::ObservableOperators oo(p);
        const auto pol = fixtures::random_policy(rng, 1, p);
        double h = 0.0, pz = 0.0;
        pp::enumerate_records(pol, oo, 2, [&](const pp::RecordVisit& r) {
            h += r.prob * pp::entropy_given_y(r.post.secret);
            pz += r.prob * r.post.secret;
        });
        EXPECT_LE(h, pp::entropy_given_y(pz) + 1e-12);
        EXPECT_GE(h, 0.0);
    }
}

TEST(ExactObjective, InformativeActionLowersEntropy) {
    const TwoRoom f;
    pp::FscPolicy always_stay(0, f.product.observations, f.product.actions);
    always_stay.theta()(0, TwoRoom::stay) = 50.0;
    pp::FscPolicy always_look = always_stay;
    always_look.theta()(0, TwoRoom::stay) = -50.0;
    EXPECT_NEAR(pp::exact_conditional_entropy(always_stay, f.oo, 2), std::log(2.0), 1e-12);
    EXPECT_LT(pp::exact_conditional_entropy(always_look, f.oo, 2), 0.4);
}

TEST(ExactObjective, EnumerationCap) {
    const TwoRoom f;
    const pp::FscPolicy pol(1, f.product.observations, f.product.actions);
    EXPECT_EQ(pp::enumeration_size(f.oo, 3), 256.0);
    EXPECT_THROW(pp::exact_conditional_entropy(pol, f.oo, 3, pp::LogBase::E, 100.0), pp::EnumerationInfeasible);
    EXPECT_NO_THROW(pp::exact_conditional_entropy(pol, f.oo, 3, pp::LogBase::E, 256.0));
}
