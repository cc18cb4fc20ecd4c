#include "certdp/sim.hpp"

#include <cmath>
#include <vector>

#include "certdp/errors.hpp"
#include "certdp/rng.hpp"

namespace certdp {

void SimConfig::validate() const {
    model.validate();
    require(horizon >= 1, "horizon must be at least 1");
    require(truth_knots >= 2, "truth_knots must be at least 2");
    require(truth_draws >= 1, "truth_draws must be at least 1");
    require(initial_state >= model.state_lo && initial_state <= model.state_hi,
            "initial_state must lie in the state space");
}

std::uint64_t truth_draw_seed(std::uint64_t seed) { return rng::derive(seed, rng::Stream::TruthDraws); }

Panel simulate_with_table(const Model& model, std::span<const double> theta, const ValueTable& vtab,
                          std::size_t horizon, std::size_t burn_in, double initial_state, std::uint64_t seed) {
    require(horizon >= 1, "horizon must be at least 1");
    const std::uint64_t shock_seed = rng::derive(seed, rng::Stream::Shocks);
    const std::uint64_t move_seed = rng::derive(seed, rng::Stream::Transitions);
    const int nc = model.n_choices();

    Panel panel;
    panel.obs.reserve(horizon);
    double s = initial_state;
    std::vector<double> w(nc);
    for (std::size_t t = 0; t < burn_in + horizon; ++t) {
        const Bracket b = vtab.locate(s);
        int best = 0;
        for (int d = 0; d < nc; ++d) {
            const double u = rng::uniform(shock_seed, {t, static_cast<std::uint64_t>(d)});
            const double eps = -std::log(-std::log(u));
            w[d] = model.utility(s, d, theta) + eps + model.beta() * vtab.interpolate(b, d);
            if (w[d] > w[best]) best = d;
        }
        if (t >= burn_in) panel.obs.push_back({s, best});
        s = model.transition_sample(s, best, rng::uniform(move_seed, {t}));
    }
    return panel;
}

SimResult simulate_panel(const SimConfig& cfg) {
    cfg.validate();
    const auto model = make_model(cfg.model);
    SimResult out;
    out.truth_draw_seed = truth_draw_seed(cfg.seed);
    const auto finite = model->finite_states();
    std::vector<double> knots = finite.empty() ? linspace(cfg.model.state_lo, cfg.model.state_hi, cfg.truth_knots)
                                               : std::vector<double>(finite.begin(), finite.end());
    const DrawSet draws = DrawSet::per_point(out.truth_draw_seed, knots.size(), model->n_choices(), cfg.truth_draws);
    const BellmanPlan plan(*model, knots, draws, knots);
    SolveResult solved = solve_value_function(*model, cfg.model.theta, plan, cfg.solve);
    out.truth = std::move(solved.table);
    out.truth_report = std::move(solved.report);
    out.panel = simulate_with_table(*model, cfg.model.theta, out.truth, cfg.horizon, cfg.burn_in,
                                    cfg.initial_state, cfg.seed);
    return out;
}

}  // namespace certdp
