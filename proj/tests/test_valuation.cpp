#include "gao/valuation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gao;

namespace {

const MarketParams base_market{0.07, 0.08, 0.12};
const Preference base_pref{1.4};

PolicySpec table_policy() {
    PolicySpec p;
    p.chi = 35.0;
    p.t0 = 0.0;
    p.T = 30.0;
    p.fund = 350000.0;
    p.h = 1.0 / 9.0;
    return p;
}

}  // namespace

TEST(Funds, AccumulatesPublishedPremium) {
    // The quoted premium is rounded, so the fund lands just short of 350,000.
    EXPECT_NEAR(accumulated_funds(6594.0, 0.035, 30.0), 349981.47, 0.01);
    EXPECT_NEAR(accumulated_funds(6594.0, 0.035, 30.0), 350000.0, 20.0);
    EXPECT_DOUBLE_EQ(accumulated_funds(1000.0, 0.0, 30.0), 30000.0);
}

TEST(Funds, PremiumInverse) {
    EXPECT_NEAR(premium_for_fund(350000.0, 0.085, 30.0), 2519.7, 0.05);
    EXPECT_NEAR(premium_for_fund(350000.0, 0.035, 30.0), 6594.35, 0.01);
    EXPECT_NEAR(premium_for_fund(350000.0, 0.05, 30.0), 5026.30, 0.01);
    EXPECT_DOUBLE_EQ(premium_for_fund(30000.0, 0.0, 30.0), 1000.0);
    for (double r : {-0.02, 0.01, 0.1})
        EXPECT_NEAR(accumulated_funds(premium_for_fund(1e5, r, 20.0), r, 20.0), 1e5, 1e-8);
}

TEST(Merton, BaseConstants) {
    const auto c = merton_constants(base_market, base_pref);
    EXPECT_NEAR(c.delta, 0.0724801587, 1e-10);
    EXPECT_NEAR(c.b, 0.0707086168, 1e-10);
}

TEST(Merton, NoRiskPremium) {
    const auto c = merton_constants({0.05, 0.05, 0.2}, {3.0});
    EXPECT_DOUBLE_EQ(c.delta, 0.05);
    EXPECT_NEAR(c.b, 0.05, 1e-16);
}

TEST(Merton, LargeRiskAversionLimit) {
    const auto c = merton_constants(base_market, {1e6});
    EXPECT_NEAR(c.delta, 0.07, 1e-6);
    EXPECT_NEAR(c.b, 0.07, 1e-6);
}

TEST(Merton, WellPosednessGate) {
    // gamma < 1: (1-gamma) delta can exceed r.
    EXPECT_THROW(merton_constants({0.01, 0.2, 0.1}, {0.5}), IllPosedError);
    // gamma > 1 with r > 0 is always well posed.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> r(1e-4, 0.2), mu(0.0, 0.3), sigma(0.05, 0.5), g(1.01, 10.0);
    for (int k = 0; k < 1000; ++k) EXPECT_NO_THROW(merton_constants({r(rng), mu(rng), sigma(rng)}, {g(rng)}));
}

TEST(Merton, InvalidInputs) {
    EXPECT_THROW(merton_constants({0.05, 0.08, 0.0}, base_pref), ValidationError);
    EXPECT_THROW(merton_constants(base_market, {1.0}), ValidationError);
    EXPECT_THROW(merton_constants(base_market, {-2.0}), ValidationError);
}

TEST(Phi, ConstantHazardClosedForm) {
    const MortalityModel model(ConstantHazard{0.02});
    EXPECT_NEAR(phi(model, 65.0, 0.05, 1.4, PhiKernel::survival), 1.0 / 0.07, 1e-9);
    EXPECT_NEAR(phi(model, 65.0, 0.05, 1.4, PhiKernel::survival_root), 1.0 / (0.05 + 0.02 / 1.4), 1e-9);
}

TEST(Phi, BoundedByPerpetuity) {
    const auto c = merton_constants(base_market, base_pref);
    for (auto kernel : {PhiKernel::survival, PhiKernel::survival_root}) {
        const double v = phi(bundled::female_1970(), 65.0, c.b, 1.4, kernel);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0 / c.b);
    }
}

TEST(Phi, DecreasingInAge) {
    const auto c = merton_constants(base_market, base_pref);
    EXPECT_GT(phi(bundled::female_1970(), 35.0, c.b, 1.4), phi(bundled::female_1970(), 65.0, c.b, 1.4));
}

TEST(Phi, AgeDerivativeMatchesFiniteDifference) {
    const auto model = bundled::female_2004();
    const double b = 0.0707, g = 1.4, age = 70.0, e = 1e-4;
    const double fd = (phi(model, age + e, b, g) - phi(model, age - e, b, g)) / (2 * e);
    EXPECT_NEAR(phi_age_derivative(model, age, b, g), fd, 1e-6);
}

TEST(ValueU, DirectEvaluation) {
    EXPECT_NEAR(value_U(0.0, 350000.0, 10.0, 1.4), std::pow(350000.0, -0.4) / -0.4 * std::pow(10.0, 1.4), 1e-15);
    EXPECT_THROW(value_U(-350000.0, 350000.0, 10.0, 1.4), DomainError);
}

TEST(ValueV, DirectEvaluationAndRegime) {
    const double H = 350000.0 / 9.0;
    EXPECT_NEAR(value_V(1000.0, H, 0.07, 10.0, 1.4),
                std::pow(1000.0 + H / 0.07, -0.4) / -0.4 * std::pow(10.0, 1.4), 1e-15);
    EXPECT_THROW(value_V(1000.0, H, 0.0, 10.0, 1.4), UnsupportedRegimeError);
    EXPECT_THROW(value_V(-1e7, H, 0.07, 10.0, 1.4), DomainError);
}

TEST(Exercise, Rule) {
    EXPECT_TRUE(exercise_decision(0.07, 1.0 / 9.0));
    EXPECT_TRUE(exercise_decision(0.085, 1.0 / 9.0));
    EXPECT_FALSE(exercise_decision(0.12, 1.0 / 9.0));
    EXPECT_TRUE(exercise_decision(0.1, 0.1));
}

TEST(Exercise, MatchesValueComparison) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> r(0.005, 0.2), h(0.02, 0.2), x(-1e5, 1e6), A(1e3, 1e6), g(0.2, 8.0),
        ph(0.5, 30.0);
    int disagreements = 0;
    for (int k = 0; k < 2000; ++k) {
        double gamma = g(rng);
        if (std::abs(gamma - 1.0) < 1e-3) gamma = 2.0;
        const double rr = r(rng), hh = h(rng), fund = A(rng), f = ph(rng);
        const double xx = std::max(x(rng), -0.5 * std::min(fund, fund * hh / rr));
        const bool better = value_U(xx, fund, f, gamma) <= value_V(xx, fund * hh, rr, f, gamma);
        disagreements += better != exercise_decision(rr, hh);
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(XiHat, AtMaturity) {
    EXPECT_DOUBLE_EQ(xi_hat_U(30.0, 5000.0, 0.05, 30.0, 350000.0), -350000.0);
    EXPECT_DOUBLE_EQ(xi_hat_V(30.0, 5000.0, 0.05, 30.0, 38000.0), -38000.0 / 0.05);
    EXPECT_THROW(xi_hat_U(31.0, 5000.0, 0.05, 30.0, 350000.0), DomainError);
}

TEST(XiHat, ZeroRateLimitIsContinuous) {
    EXPECT_NEAR(xi_hat_U(10.0, 5000.0, 1e-12, 30.0, 1e5), xi_hat_U(10.0, 5000.0, 0.0, 30.0, 1e5), 1e-3);
}

TEST(IndifferencePrice, PublishedValues) {
    EXPECT_NEAR(indifference_price(350000.0, 1.0 / 9.0, 0.07, 30.0, 0.0), 25171.0, 1.0);
    EXPECT_NEAR(indifference_price(350000.0, 1.0 / 9.0, 0.035, 30.0, 0.0), 266342.0, 2.0);
    EXPECT_NEAR(indifference_price(350000.0, 1.0 / 9.0, 0.05, 30.0, 0.0), 95450.0, 2.0);
    EXPECT_NEAR(indifference_price(350000.0, 1.0 / 9.0, 0.085, 30.0, 0.0), 8395.0, 2.0);
}

TEST(IndifferencePrice, BoundaryAndWorthless) {
    EXPECT_EQ(indifference_price(350000.0, 0.07, 0.07, 30.0, 0.0), 0.0);
    EXPECT_EQ(indifference_price(350000.0, 0.05, 0.07, 30.0, 0.0), 0.0);
    EXPECT_LT(indifference_price_unclamped(350000.0, 0.05, 0.07, 30.0, 0.0), 0.0);
    EXPECT_THROW(indifference_price(350000.0, 0.05, 0.0, 30.0, 0.0), UnsupportedRegimeError);
}

TEST(IndifferencePrice, MonotoneSurface) {
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double r = 0.01 + 0.01 * i, h = 0.05 + 0.01 * j;
            const double here = indifference_price(1e5, h, r, 30.0, 0.0);
            EXPECT_LE(indifference_price(1e5, h, r + 0.01, 30.0, 0.0), here + 1e-9);
            EXPECT_GE(indifference_price(1e5, h + 0.01, r, 30.0, 0.0), here - 1e-9);
        }
    }
}

TEST(IndifferencePrice, LaterValuationDateIsDearer) {
    EXPECT_GT(indifference_price(350000.0, 1.0 / 9.0, 0.07, 30.0, 10.0),
              indifference_price(350000.0, 1.0 / 9.0, 0.07, 30.0, 0.0));
}

TEST(t0Values, FixedPoint) {
    const auto policy = resolve_policy(table_policy(), base_market);
    const double L = indifference_price(policy.fund, policy.h, 0.07, 30.0, 0.0);
    const double phi_t0 = 13.36;
    const double u = value_calU(1e5, 0.0, policy, base_market, base_pref, phi_t0);
    EXPECT_NEAR(value_calV(1e5, L, 0.0, policy, base_market, base_pref, phi_t0) / u, 1.0, 1e-12);
    EXPECT_GT(value_calV(1e5, 0.0, 0.0, policy, base_market, base_pref, phi_t0), u);
}

TEST(t0Values, WorthlessOptionCollapsesToU) {
    const MarketParams market{0.15, 0.17, 0.12};
    const auto policy = resolve_policy(table_policy(), market);
    EXPECT_DOUBLE_EQ(value_calV(1e5, 0.0, 0.0, policy, market, base_pref, 12.0),
                     value_calU(1e5, 0.0, policy, market, base_pref, 12.0));
}

TEST(t0Values, SingularAtOffset) {
    const auto policy = resolve_policy(table_policy(), base_market);
    const double xi = xi_hat_U(0.0, policy.premium, 0.07, 30.0, policy.fund);
    EXPECT_LT(value_calU(xi + 1e-6, 0.0, policy, base_market, base_pref, 13.0), -1e3);
    EXPECT_THROW(value_calU(xi, 0.0, policy, base_market, base_pref, 13.0), DomainError);
}

TEST(t0Values, ModelOverloadsAgree) {
    const auto spec = table_policy();
    const auto model = bundled::female_1970();
    const auto c = merton_constants(base_market, base_pref);
    const double phi_t0 = phi(model, 35.0, c.b, 1.4);
    EXPECT_DOUBLE_EQ(value_calU(1e5, 0.0, spec, base_market, base_pref, model),
                     value_calU(1e5, 0.0, resolve_policy(spec, base_market), base_market, base_pref, phi_t0));
}

TEST(Policy, Validation) {
    auto p = table_policy();
    p.premium = 1000.0;
    EXPECT_THROW(resolve_policy(p, base_market), ValidationError);
    p = table_policy();
    p.T = 0.0;
    EXPECT_THROW(resolve_policy(p, base_market), ValidationError);
    p = table_policy();
    p.h = 0.0;
    EXPECT_THROW(resolve_policy(p, base_market), ValidationError);
}

TEST(Evaluate, BaseReport) {
    ValuationInputs in{table_policy(), base_market, base_pref, bundled::female_1970(), bundled::female_1970(),
                       100000.0};
    const auto rep = evaluate(in);
    EXPECT_NEAR(rep.lump_sum, 25171.6, 0.1);
    EXPECT_TRUE(rep.exercise);
    EXPECT_FALSE(rep.worthless);
    ASSERT_TRUE(rep.r_h.has_value());
    EXPECT_NEAR(*rep.r_h, 0.076598, 1e-5);
    EXPECT_NEAR(rep.calV_at_price / rep.calU, 1.0, 1e-12);
    EXPECT_NEAR(rep.income, 350000.0 / 9.0, 1e-9);
}

TEST(Evaluate, SubjectiveModelDoesNotMovePrice) {
    ValuationInputs in{table_policy(), base_market, base_pref, bundled::female_1970(), bundled::female_1970(),
                       100000.0};
    const auto a = evaluate(in);
    in.subjective = bundled::female_2004();
    const auto b = evaluate(in);
    EXPECT_EQ(a.lump_sum, b.lump_sum);
    EXPECT_EQ(a.exercise, b.exercise);
    EXPECT_GT(std::abs(a.phi_t0 - b.phi_t0), 1e-3);
}

TEST(Evaluate, GammaIndependence) {
    for (double g : {0.5, 1.4, 3.0}) {
        ValuationInputs in{table_policy(), base_market, {g}, bundled::female_1970(), bundled::female_1970(),
                           100000.0};
        const auto rep = evaluate(in);
        EXPECT_NEAR(rep.lump_sum, 25171.6, 0.1) << g;
        EXPECT_TRUE(rep.exercise);
    }
}
