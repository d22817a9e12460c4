#include "gao/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gao;
using namespace gao::numerics;

TEST(Integrate, UnitExponential) {
    EXPECT_NEAR(integrate_semi_infinite([](double t) { return std::exp(-t); }), 1.0, 1e-10);
}

TEST(Integrate, ExponentialAtMertonRate) {
    // b for r=0.07, mu=0.08, sigma=0.12, gamma=1.4.
    const double delta = 0.07 + 0.01 * 0.01 / (2.0 * 1.4 * 0.12 * 0.12);
    const double b = -((1.0 - 1.4) * delta - 0.07) / 1.4;
    QuadratureSpec spec;
    spec.truncation_horizon = 1000.0;
    EXPECT_NEAR(integrate_semi_infinite([b](double t) { return std::exp(-b * t); }, spec), 1.0 / b, 1e-8);
    EXPECT_NEAR(1.0 / b, 14.1425479, 1e-6);
}

TEST(Integrate, ZeroIntegrand) {
    EXPECT_EQ(integrate_semi_infinite([](double) { return 0.0; }), 0.0);
}

TEST(Integrate, Linearity) {
    auto f = [](double t) { return std::exp(-0.3 * t) * (1.0 + std::sin(t)); };
    auto g = [](double t) { return t * t * std::exp(-t); };
    const double alpha = 2.5, beta = -0.7;
    QuadratureSpec spec;
    const double lhs = integrate_semi_infinite([&](double t) { return alpha * f(t) + beta * g(t); }, spec);
    const double rhs = alpha * integrate_semi_infinite(f, spec) + beta * integrate_semi_infinite(g, spec);
    EXPECT_NEAR(lhs, rhs, 10.0 * spec.relative_tolerance * std::abs(rhs));
}

TEST(Integrate, SlowDecayNeedsLongerHorizon) {
    QuadratureSpec spec;
    spec.truncation_horizon = 4000.0;
    EXPECT_NEAR(integrate_semi_infinite([](double t) { return std::exp(-0.01 * t); }, spec), 100.0, 1e-6);
}

TEST(Integrate, NonFiniteIntegrandFails) {
    EXPECT_THROW(integrate_semi_infinite([](double t) { return 1.0 / (t - t); }), NumericalFailure);
}

TEST(Integrate, RejectsBadSpec) {
    QuadratureSpec spec;
    spec.truncation_horizon = 0.0;
    EXPECT_THROW(integrate_semi_infinite([](double) { return 1.0; }, spec), DomainError);
}

TEST(Root, SquareRootOfTwo) {
    RootSpec spec{0.0, 2.0};
    EXPECT_NEAR(find_root_bracketed([](double x) { return x * x - 2.0; }, spec), std::sqrt(2.0), 1e-11);
}

TEST(Root, Identity) {
    RootSpec spec{-1.0, 1.0};
    EXPECT_NEAR(find_root_bracketed([](double x) { return x; }, spec), 0.0, 1e-12);
}

TEST(Root, ExpMinusOne) {
    RootSpec spec{-1.0, 1.0};
    EXPECT_NEAR(find_root_bracketed([](double x) { return std::expm1(x); }, spec), 0.0, 1e-12);
}

TEST(Root, NoSignChange) {
    RootSpec spec{-1.0, 1.0};
    EXPECT_THROW(find_root_bracketed([](double x) { return x * x + 1.0; }, spec), BracketError);
}

TEST(Root, IterationLimit) {
    RootSpec spec{0.0, 2.0, 1e-300, 3};
    try {
        find_root_bracketed([](double x) { return std::cos(x); }, spec);
        FAIL() << "expected NumericalFailure";
    } catch (const NumericalFailure& e) {
        EXPECT_NEAR(e.last_estimate(), M_PI / 2.0, 0.5);
    }
}

TEST(Minimize, QuadraticBowl) {
    const auto [a, b] = minimize_loss_2d([](double a, double b) { return (a - 3) * (a - 3) + (b + 1) * (b + 1); },
                                         {0.0, 0.0});
    EXPECT_NEAR(a, 3.0, 1e-5);
    EXPECT_NEAR(b, -1.0, 1e-5);
}

TEST(Minimize, Origin) {
    const auto [a, b] = minimize_loss_2d([](double a, double b) { return a * a + b * b; }, {1.0, 1.0});
    EXPECT_NEAR(a, 0.0, 1e-5);
    EXPECT_NEAR(b, 0.0, 1e-5);
}

TEST(Minimize, Rosenbrock) {
    const auto [a, b] = minimize_loss_2d(
        [](double a, double b) { return (1 - a) * (1 - a) + 100 * (b - a * a) * (b - a * a); }, {-1.2, 1.0});
    EXPECT_NEAR(a, 1.0, 1e-4);
    EXPECT_NEAR(b, 1.0, 1e-4);
}

TEST(Minimize, NonFiniteStartFails) {
    EXPECT_THROW(minimize_loss_2d([](double, double) { return std::nan(""); }, {0.0, 0.0}), NumericalFailure);
}

TEST(Minimize, UnboundedLossFails) {
    EXPECT_THROW(minimize_loss_2d([](double a, double) { return -std::exp(a); }, {0.0, 0.0}), NumericalFailure);
}
