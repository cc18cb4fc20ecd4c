#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "certdp/nelder_mead.hpp"

using namespace certdp;

TEST(NelderMead, Rosenbrock) {
    auto f = [](std::span<const double> x) { return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2); };
    NelderMeadOptions o;
    o.xtol = 1e-8;
    o.max_evals = 10000;
    const auto r = nelder_mead_minimize(f, {-1.2, 1.0}, o);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
    EXPECT_LT(r.f, 1e-10);
    EXPECT_FALSE(r.at_boundary);
}

TEST(NelderMead, QuadraticInteriorOptimum) {
    auto f = [](std::span<const double> x) { return std::pow(x[0] - 0.3, 2) + 4.0 * std::pow(x[1] + 2.0, 2); };
    const auto r = nelder_mead_minimize(f, {0.0, 0.0});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 0.3, 1e-4);
    EXPECT_NEAR(r.x[1], -2.0, 1e-4);
    EXPECT_GT(r.evals, 0);
}

TEST(NelderMead, BoxFlagsBoundary) {
    auto f = [](std::span<const double> x) { return x[0] + std::pow(x[1] - 1.0, 2); };
    NelderMeadOptions o;
    o.lower = {-2.0, -5.0};
    o.upper = {2.0, 5.0};
    const auto r = nelder_mead_minimize(f, {0.0, 0.0}, o);
    EXPECT_NEAR(r.x[0], -2.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-3);
    EXPECT_TRUE(r.at_boundary);
    EXPECT_GE(r.x[0], -2.0);
}

TEST(NelderMead, NonFiniteValuesAreAvoided) {
    auto f = [](std::span<const double> x) {
        if (x[0] < 0.0) return std::numeric_limits<double>::quiet_NaN();
        return std::pow(x[0] - 1.0, 2) + x[1] * x[1];
    };
    const auto r = nelder_mead_minimize(f, {2.0, 1.0});
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 0.0, 1e-4);
}

TEST(NelderMead, EvaluationBudget) {
    auto f = [](std::span<const double> x) { return std::pow(x[0], 2) + std::pow(x[1], 2); };
    NelderMeadOptions o;
    o.max_evals = 10;
    o.xtol = 1e-14;
    const auto r = nelder_mead_minimize(f, {5.0, 5.0}, o);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evals, 12);
}
