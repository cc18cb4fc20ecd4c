#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "certdp/errors.hpp"
#include "certdp/inference.hpp"
#include "certdp/parallel.hpp"
#include "certdp/rng.hpp"
#include "certdp/sim.hpp"

using namespace certdp;

namespace {

ModelSpec surrogate_spec() {
    ModelSpec s;
    s.kind = ModelKind::FiniteSurrogate;
    s.surrogate_states = 41;
    return s;
}

ValueTable exact_surrogate_table(const Model& model, const Theta& theta) {
    const std::vector<double> st(model.finite_states().begin(), model.finite_states().end());
    SolveOptions o;
    o.tol = 1e-13;
    o.max_iter = 5000;
    return solve_value_function(model, theta, BellmanPlan(model, st, DrawSet::common(0, 1), st), o).table;
}

Panel random_panel(const Model& model, std::size_t T, std::uint64_t seed) {
    Panel p;
    const auto finite = model.finite_states();
    for (std::size_t t = 0; t < T; ++t) {
        const double u = rng::uniform(seed, {t, 0});
        const double s = finite.empty() ? 20.0 * u : finite[static_cast<std::size_t>(u * finite.size())];
        p.obs.push_back({s, rng::uniform(seed, {t, 1}) < 0.4 ? 1 : 0});
    }
    return p;
}

}  // namespace

TEST(ChoiceProb, SumsToOneAndMatchesLogit) {
    for (std::uint64_t i = 0; i < 100; ++i) {
        const std::vector<double> w{10.0 * rng::uniform(1, {i, 0}) - 5.0, 10.0 * rng::uniform(1, {i, 1}) - 5.0,
                                    10.0 * rng::uniform(1, {i, 2}) - 5.0};
        double total = 0.0;
        for (int d = 0; d < 3; ++d) {
            const double p = choice_prob(w, d);
            EXPECT_NEAR(p, std::exp(w[d]) / (std::exp(w[0]) + std::exp(w[1]) + std::exp(w[2])), 1e-14);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-14);
    }
}

TEST(ChoiceProb, LogIsStableAndFloored) {
    const std::vector<double> w{0.0, 40.0};
    EXPECT_NEAR(log_choice_prob(w, 0), -40.0 - std::log1p(std::exp(-40.0)), 1e-13);
    EXPECT_NEAR(log_choice_prob(w, 1), -std::log1p(std::exp(-40.0)), 1e-16);
    const std::vector<double> far{0.0, 2000.0};
    EXPECT_DOUBLE_EQ(log_choice_prob(far, 0), std::log(kProbabilityFloor));
    EXPECT_NEAR(choice_prob(far, 0), kProbabilityFloor, 1e-12 * kProbabilityFloor);
    EXPECT_THROW(log_choice_prob(w, 2), ContractViolation);
}

TEST(ChoiceProb, ModelLevels) {
    const auto m = make_model({});
    const Theta th{-0.6, -4.0};
    const std::vector<double> adj{1.0, 3.0};
    const double w0 = -0.6 * 5.0 + 0.8 * 1.0, w1 = -4.0 + 0.8 * 3.0;
    EXPECT_NEAR(choice_prob(*m, 5.0, 1, adj, th), 1.0 / (1.0 + std::exp(w0 - w1)), 1e-15);
}

TEST(Loglik, EqualsSumOfLogProbabilities) {
    const ModelSpec spec;
    const auto m = make_model(spec);
    ValueTable v(linspace(0, 20, 5), 2);
    for (std::size_t i = 0; i < v.values().size(); ++i) v.values()[i] = std::cos(static_cast<double>(i));
    const Panel p = random_panel(*m, 300, 4);
    double oracle = 0.0;
    for (const auto& o : p.obs) {
        const double w0 = spec.theta[0] * o.state + 0.8 * v.evaluate(o.state, 0);
        const double w1 = spec.theta[1] + 0.8 * v.evaluate(o.state, 1);
        const double wd = o.choice == 0 ? w0 : w1;
        oracle += wd - std::log(std::exp(w0) + std::exp(w1));
    }
    EXPECT_NEAR(loglik(p, spec.theta, *m, v), oracle, 1e-10);
}

TEST(Envelope, OrderedAndCollapsesAtZeroBound) {
    const ModelSpec spec;
    const auto m = make_model(spec);
    const auto knots = linspace(0, 20, 10);
    const DrawSet draws = DrawSet::common(3, 50);
    const ValueTable v = solve_value_function(*m, spec.theta, BellmanPlan(*m, knots, draws, knots)).table;
    const Panel p = random_panel(*m, 400, 5);
    BoundCertificate cert;
    const auto zero = loglik_envelope(p, spec.theta, *m, v, cert);
    EXPECT_DOUBLE_EQ(zero.ll_lower, zero.ll_point);
    EXPECT_DOUBLE_EQ(zero.ll_upper, zero.ll_point);
    EXPECT_NEAR(zero.ll_point, loglik(p, spec.theta, *m, v), 1e-9);

    double prev_lo = zero.ll_lower, prev_up = zero.ll_upper;
    for (double b : {0.01, 0.1, 1.0}) {
        cert.B_upper = b;
        cert.B_lower = 0.0;
        for (auto mode : {FactorMode::ModelWide, FactorMode::PerState}) {
            const auto e = loglik_envelope(p, spec.theta, *m, v, cert, mode);
            EXPECT_LE(e.ll_lower, e.ll_point);
            EXPECT_LE(e.ll_point, e.ll_upper);
            if (mode == FactorMode::ModelWide) {
                EXPECT_LT(e.ll_lower, prev_lo);
                EXPECT_GT(e.ll_upper, prev_up);
                prev_lo = e.ll_lower;
                prev_up = e.ll_upper;
            }
        }
        // The per-state factor never exceeds the model-wide one.
        const auto wide = loglik_envelope(p, spec.theta, *m, v, cert, FactorMode::ModelWide);
        const auto tight = loglik_envelope(p, spec.theta, *m, v, cert, FactorMode::PerState);
        EXPECT_GE(tight.ll_lower, wide.ll_lower - 1e-9);
        EXPECT_LE(tight.ll_upper, wide.ll_upper + 1e-9);
    }
}

TEST(Envelope, ContainsExactLikelihoodOnSurrogate) {
    const ModelSpec spec = surrogate_spec();
    const auto m = make_model(spec);
    const std::vector<double> st(m->finite_states().begin(), m->finite_states().end());
    const BellmanPlan plan(*m, st, DrawSet::common(0, 1), st);
    for (std::uint64_t k = 0; k < 10; ++k) {
        const Theta th{-0.3 - 0.6 * rng::uniform(6, {k, 0}), -2.0 - 4.0 * rng::uniform(6, {k, 1})};
        const ValueTable exact = exact_surrogate_table(*m, th);
        ValueTable approx = exact;
        const double scale = std::pow(10.0, -3.0 + 0.3 * k);
        for (std::size_t i = 0; i < approx.values().size(); ++i) approx.values()[i] += scale * (2.0 * rng::uniform(7, {k, i}) - 1.0);
        const auto cert = dense_grid_certificate(plan, approx, *m, th, plan.utilities(*m, th));
        const Panel p = random_panel(*m, 500, 8 + k);
        const double truth = loglik(p, th, *m, exact);
        for (auto mode : {FactorMode::ModelWide, FactorMode::PerState}) {
            const auto e = loglik_envelope(p, th, *m, approx, cert, mode);
            EXPECT_LE(e.ll_lower, truth + 1e-8) << k;
            EXPECT_GE(e.ll_upper, truth - 1e-8) << k;
        }
    }
}

TEST(Envelope, ThreadCountDoesNotChangeBits) {
    const ModelSpec spec;
    const auto m = make_model(spec);
    ValueTable v(linspace(0, 20, 6), 2);
    for (std::size_t i = 0; i < v.values().size(); ++i) v.values()[i] = 0.1 * i;
    const Panel p = random_panel(*m, 5000, 9);
    BoundCertificate cert;
    cert.B_upper = 0.2;
    set_max_threads(1);
    const auto a = loglik_envelope(p, spec.theta, *m, v, cert, FactorMode::PerState);
    set_max_threads(4);
    const auto b = loglik_envelope(p, spec.theta, *m, v, cert, FactorMode::PerState);
    set_max_threads(1);
    EXPECT_EQ(a.ll_lower, b.ll_lower);
    EXPECT_EQ(a.ll_point, b.ll_point);
    EXPECT_EQ(a.ll_upper, b.ll_upper);
}

TEST(Membership, Thresholds) {
    const double c = critical_value(0.05);
    Suprema sup{-100.0, -99.0, -98.0};
    LikelihoodEnvelope at{-104.0, -101.0, -100.0};
    EXPECT_TRUE(set_estimate_member(sup.ll_lower, at));
    at.ll_upper = -100.5;
    EXPECT_FALSE(set_estimate_member(sup.ll_lower, at));
    EXPECT_TRUE(robust_ci_member(sup, at, c));
    at.ll_upper = -100.0 - 0.5 * c - 1e-9;
    EXPECT_FALSE(robust_ci_member(sup, at, c));
    // UpperSup compares against the lower envelope at theta.
    EXPECT_FALSE(robust_ci_member(sup, at, c, RobustVariant::UpperSup));
    at.ll_lower = -98.0 - 0.5 * c + 1e-9;
    EXPECT_TRUE(robust_ci_member(sup, at, c, RobustVariant::UpperSup));
    at.ll_point = -99.0 - 0.5 * c + 1e-9;
    EXPECT_TRUE(standard_ci_member(sup.ll_plugin, at, c));
    at.ll_point -= 2e-9;
    EXPECT_FALSE(standard_ci_member(sup.ll_plugin, at, c));
    const auto m = classify(sup, at, c);
    EXPECT_FALSE(m.in_set_estimate);
    EXPECT_FALSE(m.in_standard_ci);
    EXPECT_THROW(critical_value(0.0), ContractViolation);
}

TEST(Membership, SetEstimateInsideRobustRegion) {
    const double c = critical_value(0.05);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double sup_lo = -100.0 + rng::uniform(10, {i, 0});
        const double up = -102.0 + 4.0 * rng::uniform(10, {i, 1});
        const LikelihoodEnvelope at{up - 3.0, up - 1.0, up};
        if (set_estimate_member(sup_lo, at)) {
            EXPECT_TRUE(robust_ci_member({sup_lo, 0.0, 0.0}, at, c));
        }
    }
}

TEST(Names, RoundTrip) {
    for (auto f : {FactorMode::ModelWide, FactorMode::PerState}) EXPECT_EQ(factor_mode_from_string(to_string(f)), f);
    for (auto r : {RobustVariant::LowerSup, RobustVariant::UpperSup}) EXPECT_EQ(robust_variant_from_string(to_string(r)), r);
    EXPECT_THROW(factor_mode_from_string("x"), ContractViolation);
    EXPECT_THROW(robust_variant_from_string("x"), ContractViolation);
}

TEST(Panel, Validation) {
    const auto m = make_model({});
    Panel p;
    EXPECT_THROW(p.validate(*m), ContractViolation);
    p.obs = {{21.0, 0}};
    EXPECT_THROW(p.validate(*m), ContractViolation);
    p.obs = {{2.0, 2}};
    EXPECT_THROW(p.validate(*m), ContractViolation);
    p.obs = {{2.0, 1}};
    EXPECT_NO_THROW(p.validate(*m));
}

TEST(Problem, RefinementNeedsCommonDraws) {
    const auto m = make_model({});
    EstimationSettings s;
    s.certificate.method = BoundMethod::Refinement;
    s.certificate.layout = DrawLayout::PerPoint;
    EXPECT_THROW(LikelihoodProblem(*m, random_panel(*m, 10, 1), s), ContractViolation);
    s.certificate.layout = DrawLayout::Common;
    EXPECT_NO_THROW(LikelihoodProblem(*m, random_panel(*m, 10, 1), s));
}

TEST(Problem, RefinementCertificateCoversDenseOne) {
    const auto m = make_model({});
    EstimationSettings s;
    s.layout = DrawLayout::Common;
    s.draw_seed = 3;
    s.certificate.layout = DrawLayout::Common;
    s.certificate.seed = 3;
    s.certificate.dense_points = 201;
    const LikelihoodProblem dense(*m, random_panel(*m, 50, 2), s);
    s.certificate.method = BoundMethod::Refinement;
    const LikelihoodProblem refined(*m, random_panel(*m, 50, 2), s);
    const Theta th{-0.6, -4.0};
    const auto a = dense.evaluate(th);
    const auto b = refined.evaluate(th);
    EXPECT_EQ(a.vtab.values()[0], b.vtab.values()[0]);
    EXPECT_GE(b.cert.B_upper, a.cert.B_upper - 1e-12);
    EXPECT_LE(b.envelope.ll_lower, a.envelope.ll_lower + 1e-9);
}

TEST(Problem, MleRecoversSurrogateTruth) {
    const ModelSpec spec = surrogate_spec();
    const auto m = make_model(spec);
    const ValueTable truth = exact_surrogate_table(*m, spec.theta);
    const Panel p = simulate_with_table(*m, spec.theta, truth, 20000, 100, m->finite_states()[20], 11);
    EstimationSettings s;
    s.solve.tol = 1e-11;
    s.optimizer.xtol = 1e-7;
    const LikelihoodProblem problem(*m, p, s);
    const auto r = mle(problem);
    EXPECT_FALSE(r.boundary);
    EXPECT_GT(r.converged_starts, 0);
    EXPECT_NEAR(r.theta[0], spec.theta[0], 0.1);
    EXPECT_NEAR(r.theta[1], spec.theta[1], 0.5);
    // Local optimality against a small stencil.
    for (double d0 : {-1e-3, 0.0, 1e-3}) {
        for (double d1 : {-1e-2, 0.0, 1e-2}) {
            const Theta th{r.theta[0] + d0, r.theta[1] + d1};
            EXPECT_LE(problem.plugin_loglik(th), r.value + 1e-6);
        }
    }
    EXPECT_NEAR(problem.plugin_loglik(r.theta), r.value, 1e-9);
}

TEST(Problem, SeparatedPanelHitsTheBox) {
    const auto m = make_model({});
    Panel p;
    for (int t = 0; t < 200; ++t) {
        const double s = 0.1 * t;
        p.obs.push_back({s, s > 10.0 ? 1 : 0});
    }
    EstimationSettings s;
    s.layout = DrawLayout::Common;
    s.certificate.layout = DrawLayout::Common;
    const auto r = mle(LikelihoodProblem(*m, p, s));
    EXPECT_TRUE(r.boundary);
}
