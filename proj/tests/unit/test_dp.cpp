#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "certdp/dp.hpp"
#include "certdp/errors.hpp"
#include "certdp/parallel.hpp"
#include "certdp/rng.hpp"

using namespace certdp;

namespace {

ValueTable random_table(const std::vector<double>& knots, std::uint64_t seed, double scale) {
    ValueTable t(knots, 2);
    for (std::size_t i = 0; i < t.values().size(); ++i) t.values()[i] = scale * (2.0 * rng::uniform(seed, {i}) - 1.0);
    return t;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(LogSumExp, StableAndExact) {
    const std::vector<double> a{1.0, 2.0};
    EXPECT_NEAR(log_sum_exp(a), std::log(std::exp(1.0) + std::exp(2.0)), 1e-15);
    const std::vector<double> big{1000.0, 1000.0};
    EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
    const std::vector<double> neg{-1000.0, -1e300};
    EXPECT_DOUBLE_EQ(log_sum_exp(neg), -1000.0);
}

TEST(Emax, MatchesMonteCarloOfTheMaximum) {
    const auto model = make_model({});
    const Theta th{-0.6, -4.0};
    ValueTable v({0.0, 20.0}, 2, {1.0, -2.0, 0.5, 0.5});
    const double s = 6.0;
    const double exact = emax(*model, s, v, th);
    double sum = 0.0, sum2 = 0.0;
    constexpr int kN = 400000;
    for (std::uint64_t i = 0; i < kN; ++i) {
        double best = -1e300;
        for (int d = 0; d < 2; ++d) {
            const double eps = -std::log(-std::log(rng::uniform(5, {i, static_cast<std::uint64_t>(d)})));
            best = std::max(best, model->utility(s, d, th) + 0.8 * v.evaluate(s, d) + eps);
        }
        sum += best;
        sum2 += best * best;
    }
    const double mean = sum / kN;
    const double se = std::sqrt((sum2 / kN - mean * mean) / kN);
    EXPECT_NEAR(exact, mean, 4.0 * se);
}

TEST(Bellman, MatchesBruteForce) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto knots = linspace(0.0, 20.0, 9);
    const DrawSet draws = DrawSet::per_point(3, knots.size(), 2, 25);
    const ValueTable v = random_table(knots, 4, 3.0);
    const ValueTable tv = bellman_apply(v, *model, spec.theta, draws);
    for (std::size_t k = 0; k < knots.size(); ++k) {
        for (int d = 0; d < 2; ++d) {
            double acc = 0.0;
            for (double u : draws.draws(k, d)) {
                const double next = bus_transition_sample(knots[k], d, spec.gamma, u, 0.0, 20.0);
                const double a0 = spec.theta[0] * next + spec.beta * v.evaluate(next, 0);
                const double a1 = spec.theta[1] + spec.beta * v.evaluate(next, 1);
                acc += std::log(std::exp(a0) + std::exp(a1)) + kEulerGamma;
            }
            EXPECT_NEAR(tv.at(k, d), acc / 25.0, 1e-12);
        }
    }
}

TEST(Bellman, IsABetaContraction) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto knots = linspace(0.0, 20.0, 31);
    for (auto layout : {DrawLayout::PerPoint, DrawLayout::Common}) {
        const DrawSet draws = layout == DrawLayout::Common ? DrawSet::common(8, 50) : DrawSet::per_point(8, 31, 2, 50);
        for (std::uint64_t trial = 0; trial < 20; ++trial) {
            const ValueTable a = random_table(knots, 100 + trial, 10.0);
            const ValueTable b = random_table(knots, 200 + trial, 10.0);
            const ValueTable ta = bellman_apply(a, *model, spec.theta, draws);
            const ValueTable tb = bellman_apply(b, *model, spec.theta, draws);
            EXPECT_LE(sup_norm_distance(ta, tb), spec.beta * sup_norm_distance(a, b) + 1e-12);
        }
    }
}

TEST(Bellman, ConstantShiftPassesThroughScaledByBeta) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto knots = linspace(0.0, 20.0, 11);
    const DrawSet draws = DrawSet::common(1, 40);
    ValueTable a = random_table(knots, 3, 2.0);
    const ValueTable ta = bellman_apply(a, *model, spec.theta, draws);
    a += 1.5;
    const ValueTable tb = bellman_apply(a, *model, spec.theta, draws);
    for (std::size_t i = 0; i < ta.values().size(); ++i) EXPECT_NEAR(tb.values()[i] - ta.values()[i], 0.8 * 1.5, 1e-12);
}

TEST(Bellman, DifferenceFormMatchesDirectDifference) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto knots = linspace(0.0, 20.0, 21);
    const DrawSet draws = DrawSet::per_point(2, knots.size(), 2, 30);
    const BellmanPlan plan(*model, knots, draws, knots);
    const auto u = plan.utilities(*model, spec.theta);
    const ValueTable v = random_table(knots, 5, 5.0);
    for (double scale : {1e-1, 1e-4, 1e-8}) {
        const ValueTable step = random_table(knots, 6, scale);
        ValueTable prev = v;
        for (std::size_t i = 0; i < prev.values().size(); ++i) prev.values()[i] -= step.values()[i];
        std::vector<double> hi(v.values().size()), lo(v.values().size()), diff(v.values().size());
        plan.apply(v, u, hi);
        plan.apply(prev, u, lo);
        plan.apply_difference(v, step, u, diff);
        for (std::size_t i = 0; i < diff.size(); ++i) EXPECT_NEAR(diff[i], hi[i] - lo[i], 1e-13) << scale;
    }
}

TEST(Solve, BetaZeroConvergesImmediately) {
    ModelSpec spec;
    spec.beta = 0.0;
    const auto model = make_model(spec);
    const auto r = solve_value_function(*model, spec.theta, linspace(0, 20, 51), 20, 1e-9, 100, 1);
    EXPECT_LE(r.report.iterations, 2);
}

TEST(Solve, TooFewIterationsThrow) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    try {
        solve_value_function(*model, spec.theta, linspace(0, 20, 51), 20, 1e-9, 3, 1);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.max_iter(), 3);
        EXPECT_GT(e.last_delta(), 1e-9);
    }
}

TEST(Solve, RejectsBadOptions) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    EXPECT_THROW(solve_value_function(*model, spec.theta, linspace(0, 20, 5), 5, 0.0, 10, 1), ContractViolation);
    EXPECT_THROW(solve_value_function(*model, spec.theta, linspace(0, 20, 5), 5, 1e-9, 0, 1), ContractViolation);
}

TEST(Solve, DeltasContractAtRateBeta) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto r = solve_value_function(*model, spec.theta, linspace(0, 20, 101), 50, 1e-9, 1000, 2);
    const auto& d = r.report.deltas;
    ASSERT_EQ(static_cast<int>(d.size()), r.report.iterations);
    EXPECT_LT(r.report.final_delta, 1e-9);
    for (std::size_t k = 2; k < d.size(); ++k) EXPECT_LE(d[k] / d[k - 1], 0.8 + 1e-6) << k;
}

TEST(Solve, FixedPointResidualIsSmall) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto knots = linspace(0, 20, 41);
    const DrawSet draws = DrawSet::common(4, 60);
    const BellmanPlan plan(*model, knots, draws, knots);
    SolveOptions opts;
    opts.tol = 1e-11;
    const auto r = solve_value_function(*model, spec.theta, plan, opts);
    std::vector<double> tv(r.table.values().size());
    plan.apply(r.table, plan.utilities(*model, spec.theta), tv);
    // ||TV - V|| <= beta / (1 - beta) * last step
    EXPECT_LE(sup_diff(tv, r.table.values()), 1e-11 * 0.8 / 0.2 + 1e-12);
}

TEST(Solve, SurrogateMatchesIndependentIteration) {
    ModelSpec spec;
    spec.kind = ModelKind::FiniteSurrogate;
    spec.surrogate_states = 21;
    const auto model = make_model(spec);
    const auto* f = dynamic_cast<const FiniteSurrogateModel*>(model.get());
    const std::vector<double> st(model->finite_states().begin(), model->finite_states().end());
    const std::size_t n = st.size();

    // Plain long-double value iteration on the transition matrix.
    std::vector<long double> v(2 * n, 0.0L), next(2 * n);
    for (int it = 0; it < 400; ++it) {
        std::vector<long double> w(n);
        for (std::size_t j = 0; j < n; ++j) {
            const long double a0 = spec.theta[0] * st[j] + 0.8L * v[j];
            const long double a1 = spec.theta[1] + 0.8L * v[n + j];
            w[j] = std::log(std::exp(a0) + std::exp(a1)) + kEulerGamma;
        }
        for (int d = 0; d < 2; ++d) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto p = f->probabilities(i, d);
                long double acc = 0.0L;
                for (std::size_t j = 0; j < n; ++j) acc += p[j] * w[j];
                next[d * n + i] = acc;
            }
        }
        v = next;
    }

    const DrawSet unused = DrawSet::common(0, 1);
    const BellmanPlan plan(*model, st, unused, st);
    SolveOptions opts;
    opts.tol = 1e-13;
    const auto r = solve_value_function(*model, spec.theta, plan, opts);
    for (std::size_t i = 0; i < 2 * n; ++i) EXPECT_NEAR(r.table.values()[i], static_cast<double>(v[i]), 1e-11);
}

TEST(Solve, ThreadCountDoesNotChangeBits) {
    const ModelSpec spec;
    const auto model = make_model(spec);
    const auto knots = linspace(0, 20, 301);
    set_max_threads(1);
    const auto a = solve_value_function(*model, spec.theta, knots, 40, 1e-9, 1000, 9);
    set_max_threads(4);
    const auto b = solve_value_function(*model, spec.theta, knots, 40, 1e-9, 1000, 9);
    set_max_threads(1);
    ASSERT_EQ(a.table.values().size(), b.table.values().size());
    for (std::size_t i = 0; i < a.table.values().size(); ++i) EXPECT_EQ(a.table.values()[i], b.table.values()[i]);
    EXPECT_EQ(a.report.deltas, b.report.deltas);
}

TEST(Plan, NeedsCoveringDraws) {
    const auto model = make_model({});
    const auto knots = linspace(0, 20, 10);
    EXPECT_THROW(BellmanPlan(*model, knots, DrawSet::per_point(1, 5, 2, 10), knots), ContractViolation);
    EXPECT_NO_THROW(BellmanPlan(*model, knots, DrawSet::common(1, 10), knots));
}

TEST(Draws, CommonLayoutIsStratified) {
    const DrawSet d = DrawSet::common(5, 100);
    const auto u = d.draws(0, 0);
    ASSERT_EQ(u.size(), 100u);
    for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_GE(u[i], i / 100.0);
        EXPECT_LT(u[i], (i + 1) / 100.0);
    }
    EXPECT_EQ(d.draws(7, 1).data(), u.data());
}

TEST(Draws, LayoutNames) {
    for (auto l : {DrawLayout::PerPoint, DrawLayout::Common}) EXPECT_EQ(draw_layout_from_string(to_string(l)), l);
    EXPECT_THROW(draw_layout_from_string("shared"), ContractViolation);
}
