#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certdp/bounds.hpp"
#include "certdp/dp.hpp"
#include "certdp/draws.hpp"
#include "certdp/model.hpp"
#include "certdp/value_table.hpp"

namespace certdp {

struct Observation {
    double state;
    int choice;
};

// One observed time series {(S_t, D_t)}, t = 1..T.
struct Panel {
    std::vector<Observation> obs;

    std::size_t size() const { return obs.size(); }
    // Throws ContractViolation when empty or when a state/choice is out of range.
    void validate(const Model& model) const;
};

// Lower floor applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

// exp(w[d]) / sum exp(w), max-shifted.
double choice_prob(std::span<const double> w, int d);

// ln choice_prob(w, d), floored at ln(kProbabilityFloor).
double log_choice_prob(std::span<const double> w, int d);

// Logit probability with levels w[e] = u(s, e; theta) + beta * adj[e].
double choice_prob(const Model& model, double s, int d, std::span<const double> adj, std::span<const double> theta);

struct LikelihoodEnvelope {
    double ll_lower = 0.0;
    double ll_point = 0.0;
    double ll_upper = 0.0;
};

enum class FactorMode {
    ModelWide,  // one factor sup_s b(s,d,d') for every observation
    PerState,   // b(S_t, D_t, d') per observation
};

std::string to_string(FactorMode mode);
FactorMode factor_mode_from_string(const std::string& name);

// sum_t ln P(D_t | S_t) with value differences taken from vtab.
double loglik(const Panel& panel, std::span<const double> theta, const Model& model, const ValueTable& vtab);

// Plug-in likelihood together with the envelope obtained by shifting every
// rival's value difference by -Q (upper) and +Q (lower).
LikelihoodEnvelope loglik_envelope(const Panel& panel, std::span<const double> theta, const Model& model,
                                   const ValueTable& vtab, const BoundCertificate& cert,
                                   FactorMode mode = FactorMode::ModelWide);

struct CertificateSettings {
    BoundMethod method = BoundMethod::DenseGrid;
    std::size_t dense_points = 1001;  // evaluation grid for DenseGrid, candidate grid for Refinement
    DrawLayout layout = DrawLayout::PerPoint;
    int n_draws = 100;
    std::uint64_t seed = 0;
    double tau_fraction = 0.05;  // Refinement: tau = tau_fraction * b_bar
    RefineOptions refine{};
    FactorMode factor = FactorMode::ModelWide;
};

struct OptimizerSettings {
    std::vector<Theta> starts{{-0.5, -3.5}, {-1.0, -5.0}, {-0.2, -2.0}};
    double initial_step = 0.5;
    double xtol = 1e-5;
    int max_evals = 2000;
    Theta lower{-10.0, -50.0};
    Theta upper{10.0, 50.0};
};

struct EstimationSettings {
    std::size_t knots = 10;
    // Common draws make the approximate value function smooth in the state,
    // so its Bellman residual shrinks as the grid gets denser. Refinement needs them.
    DrawLayout layout = DrawLayout::PerPoint;
    int n_draws = 100;
    std::uint64_t draw_seed = 0;
    SolveOptions solve{};
    CertificateSettings certificate{};
    OptimizerSettings optimizer{};
};

// Nested-fixed-point likelihood for one panel. The solve plan and the
// certificate plan are built once; every theta reuses them.
class LikelihoodProblem {
public:
    LikelihoodProblem(const Model& model, Panel panel, EstimationSettings settings);

    struct Point {
        ValueTable vtab;
        BoundCertificate cert;
        LikelihoodEnvelope envelope;
    };

    ValueTable solve(std::span<const double> theta) const;
    BoundCertificate certificate(const ValueTable& vtab, std::span<const double> theta) const;
    double plugin_loglik(std::span<const double> theta) const;
    Point evaluate(std::span<const double> theta) const;

    const Model& model() const { return *model_; }
    const Panel& panel() const { return panel_; }
    const EstimationSettings& settings() const { return settings_; }
    std::span<const double> knots() const { return knots_; }

private:
    const Model* model_;
    Panel panel_;
    EstimationSettings settings_;
    std::vector<double> knots_;
    BellmanPlan solve_plan_;
    std::vector<double> cert_grid_;
    DrawSet cert_draws_;
    std::optional<BellmanPlan> cert_plan_;
};

struct OptimumResult {
    Theta theta;
    double value = 0.0;
    bool boundary = false;
    int evals = 0;
    int converged_starts = 0;
};

// Plug-in maximum likelihood. Throws OptimizerFailed when no start converges.
OptimumResult mle(const LikelihoodProblem& problem);

// sup over theta of the lower envelope, certificate recomputed per candidate.
OptimumResult sup_lower_loglik(const LikelihoodProblem& problem);

// sup over theta of the upper envelope.
OptimumResult sup_upper_loglik(const LikelihoodProblem& problem);

// Maximizes an arbitrary objective with the problem's multistart settings.
OptimumResult maximize(const std::function<double(std::span<const double>)>& objective,
                       const OptimizerSettings& settings);

enum class RobustVariant {
    LowerSup,  // sup L^L - L^U(theta) <= c/2
    UpperSup,  // sup L^U - L^L(theta) <= c/2
};

std::string to_string(RobustVariant variant);
RobustVariant robust_variant_from_string(const std::string& name);

struct Suprema {
    double ll_lower = 0.0;   // sup L^L
    double ll_plugin = 0.0;  // sup L
    double ll_upper = 0.0;   // sup L^U, read only by RobustVariant::UpperSup
};

struct Membership {
    bool in_set_estimate = false;
    bool in_robust_ci = false;
    bool in_standard_ci = false;
};

// chi-squared(2) quantile at 1 - alpha.
double critical_value(double alpha);

bool set_estimate_member(double sup_ll_lower, const LikelihoodEnvelope& at_theta);
bool robust_ci_member(const Suprema& sup, const LikelihoodEnvelope& at_theta, double critical,
                      RobustVariant variant = RobustVariant::LowerSup);
bool standard_ci_member(double sup_ll_plugin, const LikelihoodEnvelope& at_theta, double critical);

Membership classify(const Suprema& sup, const LikelihoodEnvelope& at_theta, double critical,
                    RobustVariant variant = RobustVariant::LowerSup);

}  // namespace certdp
