#include "certdp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "certdp/chi_squared.hpp"
#include "certdp/errors.hpp"
#include "certdp/nelder_mead.hpp"
#include "certdp/parallel.hpp"

namespace certdp {

namespace {

const double kLogFloor = std::log(kProbabilityFloor);

double raw_log_prob(std::span<const double> w, int d) {
    double m = 0.0;
    for (std::size_t e = 0; e < w.size(); ++e) {
        if (static_cast<int>(e) != d) m = std::max(m, w[e] - w[d]);
    }
    double s = 0.0;
    for (std::size_t e = 0; e < w.size(); ++e) {
        if (static_cast<int>(e) != d) s += std::exp(w[e] - w[d] - m);
    }
    return m == 0.0 ? -std::log1p(s) : -(m + std::log(std::exp(-m) + s));
}

// Per-observation levels u(S,e) + beta*(V(S,e) - V(S,D) + shift_e) into w.
struct ObservationLevels {
    std::vector<double> u;
    std::vector<double> vdiff;
};

ObservationLevels levels(const Observation& o, std::span<const double> theta, const Model& model,
                         const ValueTable& vtab) {
    const int nc = model.n_choices();
    const Bracket b = vtab.locate(o.state);
    ObservationLevels lv{std::vector<double>(nc), std::vector<double>(nc)};
    const double own = vtab.interpolate(b, o.choice);
    for (int e = 0; e < nc; ++e) {
        lv.u[e] = model.utility(o.state, e, theta);
        lv.vdiff[e] = e == o.choice ? 0.0 : vtab.interpolate(b, e) - own;
    }
    return lv;
}

constexpr std::size_t kObsChunk = 512;

}  // namespace

void Panel::validate(const Model& model) const {
    require(!obs.empty(), "panel must contain at least one observation");
    for (std::size_t t = 0; t < obs.size(); ++t) {
        const auto& o = obs[t];
        if (!(o.state >= model.state_lo() && o.state <= model.state_hi())) {
            throw ContractViolation("panel row " + std::to_string(t + 1) + ": state outside the state space");
        }
        if (o.choice < 0 || o.choice >= model.n_choices()) {
            throw ContractViolation("panel row " + std::to_string(t + 1) + ": choice out of range");
        }
    }
}

double log_choice_prob(std::span<const double> w, int d) {
    require(d >= 0 && static_cast<std::size_t>(d) < w.size(), "choice index out of range");
    return std::max(raw_log_prob(w, d), kLogFloor);
}

double choice_prob(std::span<const double> w, int d) {
    return std::clamp(std::exp(log_choice_prob(w, d)), kProbabilityFloor, 1.0);
}

double choice_prob(const Model& model, double s, int d, std::span<const double> adj, std::span<const double> theta) {
    require(adj.size() == static_cast<std::size_t>(model.n_choices()), "one adjustment per choice required");
    std::vector<double> w(adj.size());
    for (int e = 0; e < model.n_choices(); ++e) w[e] = model.utility(s, e, theta) + model.beta() * adj[e];
    return choice_prob(w, d);
}

std::string to_string(FactorMode mode) { return mode == FactorMode::ModelWide ? "model_wide" : "per_state"; }

FactorMode factor_mode_from_string(const std::string& name) {
    if (name == "model_wide") return FactorMode::ModelWide;
    if (name == "per_state") return FactorMode::PerState;
    throw ContractViolation("unknown factor mode '" + name + "' (expected model_wide or per_state)");
}

double loglik(const Panel& panel, std::span<const double> theta, const Model& model, const ValueTable& vtab) {
    require(!panel.obs.empty(), "panel must contain at least one observation");
    std::vector<double> terms(panel.size());
    parallel_for(panel.size(), [&](std::size_t t) {
        const auto lv = levels(panel.obs[t], theta, model, vtab);
        std::vector<double> w(lv.u.size());
        for (std::size_t e = 0; e < w.size(); ++e) w[e] = lv.u[e] + model.beta() * lv.vdiff[e];
        terms[t] = log_choice_prob(w, panel.obs[t].choice);
    }, kObsChunk);
    double sum = 0.0;
    for (double x : terms) sum += x;
    return sum;
}

LikelihoodEnvelope loglik_envelope(const Panel& panel, std::span<const double> theta, const Model& model,
                                   const ValueTable& vtab, const BoundCertificate& cert, FactorMode mode) {
    require(!panel.obs.empty(), "panel must contain at least one observation");
    const double uniform_q = uniform_b_factor(model, cert.delta_sup) * cert.B_upper;
    std::vector<double> lo(panel.size()), pt(panel.size()), up(panel.size());
    parallel_for(panel.size(), [&](std::size_t t) {
        const Observation& o = panel.obs[t];
        const auto lv = levels(o, theta, model, vtab);
        const std::size_t nc = lv.u.size();
        std::vector<double> wl(nc), wp(nc), wu(nc);
        for (std::size_t e = 0; e < nc; ++e) {
            const int ei = static_cast<int>(e);
            const double q = ei == o.choice ? 0.0
                             : mode == FactorMode::ModelWide ? uniform_q
                                                             : q_bound(o.state, o.choice, ei, cert, model, theta);
            wp[e] = lv.u[e] + model.beta() * lv.vdiff[e];
            wl[e] = lv.u[e] + model.beta() * (lv.vdiff[e] + q);
            wu[e] = lv.u[e] + model.beta() * (lv.vdiff[e] - q);
        }
        pt[t] = log_choice_prob(wp, o.choice);
        lo[t] = std::min(log_choice_prob(wl, o.choice), pt[t]);
        up[t] = std::max(log_choice_prob(wu, o.choice), pt[t]);
    }, kObsChunk);
    LikelihoodEnvelope env;
    for (std::size_t t = 0; t < panel.size(); ++t) {
        env.ll_lower += lo[t];
        env.ll_point += pt[t];
        env.ll_upper += up[t];
    }
    return env;
}

// ---------------------------------------------------------------------------

LikelihoodProblem::LikelihoodProblem(const Model& model, Panel panel, EstimationSettings settings)
    : model_(&model),
      panel_(std::move(panel)),
      settings_(std::move(settings)),
      knots_([&] {
          const auto finite = model.finite_states();
          if (!finite.empty()) return std::vector<double>(finite.begin(), finite.end());
          require(settings_.knots >= 2, "estimation grid needs at least two knots");
          return linspace(model.state_lo(), model.state_hi(), settings_.knots);
      }()),
      solve_plan_(model, knots_,
                  settings_.layout == DrawLayout::Common
                      ? DrawSet::common(settings_.draw_seed, settings_.n_draws)
                      : DrawSet::per_point(settings_.draw_seed, knots_.size(), model.n_choices(), settings_.n_draws),
                  knots_) {
    panel_.validate(model);
    const auto& c = settings_.certificate;
    cert_grid_ = bound_grid(model, c.dense_points);
    if (c.method == BoundMethod::Refinement) {
        require(c.layout == DrawLayout::Common, "refinement certificates need common draws");
        require(c.tau_fraction > 0.0, "tau_fraction must be positive");
    }
    cert_draws_ = c.layout == DrawLayout::Common
                      ? DrawSet::common(c.seed, c.n_draws)
                      : DrawSet::per_point(c.seed, cert_grid_.size(), model.n_choices(), c.n_draws);
    if (c.method == BoundMethod::DenseGrid) cert_plan_.emplace(model, cert_grid_, cert_draws_, knots_);
}

ValueTable LikelihoodProblem::solve(std::span<const double> theta) const {
    return solve_value_function(*model_, theta, solve_plan_, settings_.solve).table;
}

BoundCertificate LikelihoodProblem::certificate(const ValueTable& vtab, std::span<const double> theta) const {
    if (cert_plan_) {
        return dense_grid_certificate(*cert_plan_, vtab, *model_, theta, cert_plan_->utilities(*model_, theta));
    }
    const auto& c = settings_.certificate;
    RefineOptions opts = c.refine;
    opts.candidate_points = c.dense_points;
    const double tau = std::max(c.tau_fraction * b_bar(vtab, *model_, theta), 1e-12);
    return refine_bound(vtab, *model_, theta, tau, cert_draws_, opts).certificate;
}

double LikelihoodProblem::plugin_loglik(std::span<const double> theta) const {
    return loglik(panel_, theta, *model_, solve(theta));
}

LikelihoodProblem::Point LikelihoodProblem::evaluate(std::span<const double> theta) const {
    Point p{solve(theta), {}, {}};
    p.cert = certificate(p.vtab, theta);
    p.envelope = loglik_envelope(panel_, theta, *model_, p.vtab, p.cert, settings_.certificate.factor);
    return p;
}

OptimumResult maximize(const std::function<double(std::span<const double>)>& objective,
                       const OptimizerSettings& settings) {
    require(!settings.starts.empty(), "optimizer needs at least one start");
    NelderMeadOptions nm;
    nm.initial_step = settings.initial_step;
    nm.xtol = settings.xtol;
    nm.max_evals = settings.max_evals;
    nm.lower = settings.lower;
    nm.upper = settings.upper;
    auto negated = [&](std::span<const double> x) {
        try {
            return -objective(x);
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    OptimumResult best;
    double best_f = std::numeric_limits<double>::infinity();
    for (const Theta& start : settings.starts) {
        const NelderMeadResult r = nelder_mead_minimize(negated, start, nm);
        best.evals += r.evals;
        if (r.converged) ++best.converged_starts;
        if (best.theta.empty() || r.f < best_f) {
            best_f = r.f;
            best.theta = r.x;
            best.boundary = r.at_boundary;
        }
    }
    if (best.converged_starts == 0) {
        throw OptimizerFailed("no optimizer start converged within " + std::to_string(settings.max_evals) +
                              " evaluations");
    }
    if (!std::isfinite(best_f)) throw OptimizerFailed("objective was not finite at any evaluated point");
    best.value = -best_f;
    return best;
}

OptimumResult mle(const LikelihoodProblem& problem) {
    return maximize([&](std::span<const double> th) { return problem.plugin_loglik(th); },
                    problem.settings().optimizer);
}

OptimumResult sup_lower_loglik(const LikelihoodProblem& problem) {
    return maximize([&](std::span<const double> th) { return problem.evaluate(th).envelope.ll_lower; },
                    problem.settings().optimizer);
}

OptimumResult sup_upper_loglik(const LikelihoodProblem& problem) {
    return maximize([&](std::span<const double> th) { return problem.evaluate(th).envelope.ll_upper; },
                    problem.settings().optimizer);
}

// ---------------------------------------------------------------------------

std::string to_string(RobustVariant variant) {
    return variant == RobustVariant::LowerSup ? "lower_sup" : "upper_sup";
}

RobustVariant robust_variant_from_string(const std::string& name) {
    if (name == "lower_sup") return RobustVariant::LowerSup;
    if (name == "upper_sup") return RobustVariant::UpperSup;
    throw ContractViolation("unknown robust variant '" + name + "' (expected lower_sup or upper_sup)");
}

double critical_value(double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    return chi_squared_quantile(1.0 - alpha, 2.0);
}

bool set_estimate_member(double sup_ll_lower, const LikelihoodEnvelope& at_theta) {
    return sup_ll_lower - at_theta.ll_upper <= 0.0;
}

bool robust_ci_member(const Suprema& sup, const LikelihoodEnvelope& at_theta, double critical,
                      RobustVariant variant) {
    const double stat = variant == RobustVariant::LowerSup ? sup.ll_lower - at_theta.ll_upper
                                                           : sup.ll_upper - at_theta.ll_lower;
    return stat <= 0.5 * critical;
}

bool standard_ci_member(double sup_ll_plugin, const LikelihoodEnvelope& at_theta, double critical) {
    return sup_ll_plugin - at_theta.ll_point <= 0.5 * critical;
}

Membership classify(const Suprema& sup, const LikelihoodEnvelope& at_theta, double critical,
                    RobustVariant variant) {
    return {set_estimate_member(sup.ll_lower, at_theta), robust_ci_member(sup, at_theta, critical, variant),
            standard_ci_member(sup.ll_plugin, at_theta, critical)};
}

}  // namespace certdp
