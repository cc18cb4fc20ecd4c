#include "certdp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "certdp/errors.hpp"
#include "certdp/parallel.hpp"

namespace certdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Range {
    double lo = kInf;
    double hi = -kInf;
    void add(double x) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    double width() const { return hi - lo; }
};

}  // namespace

std::string to_string(BoundMethod method) {
    return method == BoundMethod::DenseGrid ? "dense_grid" : "refinement";
}

BoundMethod bound_method_from_string(const std::string& name) {
    if (name == "dense_grid") return BoundMethod::DenseGrid;
    if (name == "refinement") return BoundMethod::Refinement;
    throw ContractViolation("unknown bound method '" + name + "' (expected dense_grid or refinement)");
}

void BoundCertificate::validate() const {
    require(delta_sup >= 0.0 && delta_sup <= 1.0, "certificate delta_sup must lie in [0, 1]");
    require(b_bar >= 0.0, "certificate b_bar must be nonnegative");
    require(B_lower >= 0.0, "certificate B_lower must be nonnegative");
    require(B_lower <= B_upper, "certificate requires B_lower <= B_upper");
}

double b_factor(double s, int d, int d2, const Model& model, double delta_sup) {
    const double beta = model.beta();
    const double denom = 1.0 - beta * delta_sup;
    if (!(denom > 0.0)) throw DegenerateBound("beta * delta_sup must be below 1");
    return (denom + beta * model.transition_tv(s, d, s, d2)) / denom;
}

double uniform_b_factor(const Model& model, double delta_sup) {
    const double beta = model.beta();
    const double denom = 1.0 - beta * delta_sup;
    if (!(denom > 0.0)) throw DegenerateBound("beta * delta_sup must be below 1");
    return (denom + beta * model.same_state_tv_sup()) / denom;
}

double b_bar(const ValueTable& vtab, const Model& model, std::span<const double> theta) {
    std::vector<double> points;
    const auto finite = model.finite_states();
    if (!finite.empty()) {
        points.assign(finite.begin(), finite.end());
    } else {
        points = {model.state_lo(), model.state_hi()};
        for (double k : vtab.knots()) {
            if (k > model.state_lo() && k < model.state_hi()) points.push_back(k);
        }
    }
    double out = 0.0;
    for (int d = 0; d < model.n_choices(); ++d) {
        Range r;
        for (double s : points) r.add(model.utility(s, d, theta) + model.beta() * vtab.evaluate(s, d));
        out = std::max(out, r.width());
    }
    return out;
}

double theorem1_sup(const BellmanPlan& plan, const ValueTable& vtab, const NodeUtilities& utilities) {
    const std::size_t np = plan.n_points();
    std::vector<double> t(np * plan.n_choices());
    plan.apply(vtab, utilities, t);
    Range g;
    for (int d = 0; d < plan.n_choices(); ++d) {
        for (std::size_t p = 0; p < np; ++p) g.add(t[d * np + p] - vtab.evaluate(plan.eval_states()[p], d));
    }
    return g.width();
}

double theorem1_sup(const ValueTable& vtab, const Model& model, std::span<const double> theta,
                    std::span<const double> eval_grid, const DrawSet& draws) {
    require(!eval_grid.empty(), "evaluation grid must be nonempty");
    const BellmanPlan plan(model, eval_grid, draws, vtab.knots());
    return theorem1_sup(plan, vtab, plan.utilities(model, theta));
}

Envelope theorem2_envelope(const ValueTable& vtab, const Model& model, std::span<const double> theta,
                           std::span<const StateChoice> anchors, std::span<const double> candidate_grid,
                           const DrawSet& draws, const EnvelopeOptions& options) {
    if (anchors.empty()) throw EmptyAnchorSet();
    require(!candidate_grid.empty(), "candidate grid must be nonempty");
    const int nc = model.n_choices();

    // Bellman operator at the distinct anchor states only.
    std::vector<double> anchor_states;
    std::vector<std::size_t> anchor_slot(anchors.size());
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        require(anchors[a].choice >= 0 && anchors[a].choice < nc, "anchor choice out of range");
        auto it = std::find(anchor_states.begin(), anchor_states.end(), anchors[a].state);
        if (it == anchor_states.end()) {
            anchor_slot[a] = anchor_states.size();
            anchor_states.push_back(anchors[a].state);
        } else {
            anchor_slot[a] = static_cast<std::size_t>(it - anchor_states.begin());
        }
    }
    const BellmanPlan plan(model, anchor_states, draws, vtab.knots());
    std::vector<double> t_states(anchor_states.size() * nc);
    plan.apply(vtab, plan.utilities(model, theta), t_states);

    std::vector<double> t_anchor(anchors.size());
    Range g_anchor;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        t_anchor[a] = t_states[anchors[a].choice * anchor_states.size() + anchor_slot[a]];
        g_anchor.add(t_anchor[a] - vtab.evaluate(anchors[a].state, anchors[a].choice));
    }

    const double bbar = b_bar(vtab, model, theta);
    const std::size_t nc_points = candidate_grid.size();
    std::vector<double> upper(nc_points * nc), lower(nc_points * nc);
    parallel_for(nc_points * nc, [&](std::size_t idx) {
        const double s = candidate_grid[idx / nc];
        const int d = static_cast<int>(idx % nc);
        double lo_env = kInf;
        double hi_env = -kInf;
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            const double spread = model.transition_tv(s, d, anchors[a].state, anchors[a].choice) * bbar;
            lo_env = std::min(lo_env, t_anchor[a] + spread);
            hi_env = std::max(hi_env, t_anchor[a] - spread);
        }
        const double v = vtab.evaluate(s, d);
        upper[idx] = lo_env - v;
        lower[idx] = hi_env - v;
    }, 16);

    double B_upper = *std::max_element(upper.begin(), upper.end()) - *std::min_element(lower.begin(), lower.end());

    if (options.continuum_margin && nc_points > 1) {
        std::vector<double> grid(candidate_grid.begin(), candidate_grid.end());
        std::sort(grid.begin(), grid.end());
        double margin = 0.0;
        for (int d = 0; d < nc; ++d) {
            for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
                Range v;
                v.add(vtab.evaluate(grid[i], d));
                v.add(vtab.evaluate(grid[i + 1], d));
                for (double k : vtab.knots()) {
                    if (k > grid[i] && k < grid[i + 1]) v.add(vtab.evaluate(k, d));
                }
                margin = std::max(margin, model.transition_tv(grid[i], d, grid[i + 1], d) * bbar + v.width());
            }
        }
        B_upper += 2.0 * margin;
    }

    return {B_upper, g_anchor.width()};
}

std::vector<double> bound_grid(const Model& model, std::size_t points) {
    const auto finite = model.finite_states();
    if (!finite.empty()) return {finite.begin(), finite.end()};
    require(points >= 2, "bound grid needs at least two points");
    return linspace(model.state_lo(), model.state_hi(), points);
}

RefinementResult refine_bound(const ValueTable& vtab, const Model& model, std::span<const double> theta, double tau,
                              const DrawSet& draws, const RefineOptions& options) {
    require(tau > 0.0, "tau must be positive");
    require(options.max_rounds >= 1, "max_rounds must be at least 1");
    require(options.initial_anchor_intervals >= 1, "need at least one anchor interval");

    const std::vector<double> candidates = bound_grid(model, options.candidate_points);
    RefinementResult result;
    result.certificate.delta_sup = model.delta_sup();
    result.certificate.b_bar = b_bar(vtab, model, theta);
    result.certificate.method = BoundMethod::Refinement;

    const auto finite = model.finite_states();
    std::size_t intervals = options.initial_anchor_intervals;
    for (int round = 0; round < options.max_rounds; ++round, intervals *= 2) {
        const std::vector<double> states = finite.empty()
                                               ? linspace(model.state_lo(), model.state_hi(), intervals + 1)
                                               : std::vector<double>(finite.begin(), finite.end());
        std::vector<StateChoice> anchors;
        anchors.reserve(states.size() * model.n_choices());
        for (double s : states) {
            for (int d = 0; d < model.n_choices(); ++d) anchors.push_back({s, d});
        }
        const Envelope env = theorem2_envelope(vtab, model, theta, anchors, candidates, draws, options.envelope);
        result.rounds.push_back({states.size(), env.B_upper, env.B_lower});
        result.certificate.B_upper = env.B_upper;
        result.certificate.B_lower = std::min(env.B_lower, env.B_upper);
        if (env.B_upper - env.B_lower <= tau) return result;
    }
    const auto& last = result.rounds.back();
    throw RefinementStalled(options.max_rounds, last.B_upper - last.B_lower, tau);
}

BoundCertificate dense_grid_certificate(const BellmanPlan& plan, const ValueTable& vtab, const Model& model,
                                        std::span<const double> theta, const NodeUtilities& utilities) {
    BoundCertificate cert;
    cert.delta_sup = model.delta_sup();
    cert.b_bar = b_bar(vtab, model, theta);
    cert.B_upper = theorem1_sup(plan, vtab, utilities);
    cert.B_lower = cert.B_upper;
    cert.method = BoundMethod::DenseGrid;
    return cert;
}

double q_bound(double s, int d, int d2, const BoundCertificate& cert, const Model& model,
               std::span<const double> /*theta*/) {
    return b_factor(s, d, d2, model, cert.delta_sup) * cert.B_upper;
}

}  // namespace certdp
