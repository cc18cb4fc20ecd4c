#include "certdp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "certdp/errors.hpp"
#include "certdp/parallel.hpp"
#include "kernels.hpp"

namespace certdp {

namespace {

constexpr std::size_t kPointsPerTask = 64;

inline double lerp(const double* v, std::uint32_t j, double f) { return (1.0 - f) * v[j] + f * v[j + 1]; }

inline double lerp_safe(const double* v, std::size_t n, std::uint32_t j, double f) {
    return n == 1 ? v[0] : lerp(v, j, f);
}

// Per-thread scratch for the two-choice kernels.
struct Scratch {
    std::vector<double> a0, a1, s0, s1, out;
    void resize(std::size_t n) {
        for (auto* b : {&a0, &a1, &s0, &s1, &out}) {
            if (b->size() < n) b->resize(n);
        }
    }
};

void gather_levels(const double* util, const double* v0, const double* v1, std::size_t nk, const std::uint32_t* idx,
                   const double* frac, double beta, std::size_t n, Scratch& scratch) {
    if (nk == 1) {
        for (std::size_t k = 0; k < n; ++k) {
            scratch.a0[k] = util[2 * k] + beta * v0[0];
            scratch.a1[k] = util[2 * k + 1] + beta * v1[0];
        }
        return;
    }
    detail::node_levels(util, v0, v1, idx, frac, beta, scratch.a0.data(), scratch.a1.data(), n);
}

}  // namespace

double log_sum_exp(std::span<const double> w) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > m) {
            m = w[i];
            arg = i;
        }
    }
    double rest = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i != arg) rest += std::exp(w[i] - m);
    }
    return m + std::log1p(rest);
}

double emax(const Model& model, double s_next, const ValueTable& vtab, std::span<const double> theta) {
    const Bracket b = vtab.locate(s_next);
    std::vector<double> w(model.n_choices());
    for (int d = 0; d < model.n_choices(); ++d) {
        w[d] = model.utility(s_next, d, theta) + model.beta() * vtab.interpolate(b, d);
    }
    return log_sum_exp(w) + kEulerGamma;
}

// ---------------------------------------------------------------------------

BellmanPlan::BellmanPlan(const Model& model, std::span<const double> eval_states, const DrawSet& draws,
                         std::span<const double> knots)
    : beta_(model.beta()),
      n_choices_(model.n_choices()),
      eval_states_(eval_states.begin(), eval_states.end()),
      knots_(knots.begin(), knots.end()) {
    require(!knots_.empty(), "Bellman plan needs at least one knot");
    require(model.exact_expectation() || draws.covers(eval_states_.size(), n_choices_),
            "draw set does not cover every (point, choice) of the plan");

    const ValueTable locator(knots_, 1);
    offsets_.reserve(eval_states_.size() * n_choices_ + 1);
    std::vector<Node> nodes;
    for (std::size_t p = 0; p < eval_states_.size(); ++p) {
        for (int d = 0; d < n_choices_; ++d) {
            offsets_.push_back(node_state_.size());
            model.transition_nodes(eval_states_[p], d,
                                   model.exact_expectation() ? std::span<const double>{} : draws.draws(p, d), nodes);
            for (const Node& n : nodes) {
                const Bracket b = locator.locate(n.state);
                node_state_.push_back(n.state);
                node_weight_.push_back(n.weight);
                node_index_.push_back(static_cast<std::uint32_t>(b.index));
                node_frac_.push_back(b.frac);
            }
        }
    }
    offsets_.push_back(node_state_.size());
}

NodeUtilities BellmanPlan::utilities(const Model& model, std::span<const double> theta) const {
    NodeUtilities u;
    u.values.resize(node_state_.size() * n_choices_);
    for (std::size_t i = 0; i < node_state_.size(); ++i) {
        for (int d = 0; d < n_choices_; ++d) u.values[i * n_choices_ + d] = model.utility(node_state_[i], d, theta);
    }
    return u;
}

void BellmanPlan::apply(const ValueTable& v, const NodeUtilities& u, std::span<double> out) const {
    require(v.n_knots() == knots_.size() && v.n_choices() == n_choices_, "value table does not match plan");
    require(out.size() == eval_states_.size() * n_choices_, "output span has wrong size");
    const std::size_t nk = knots_.size();
    const std::size_t np = eval_states_.size();
    const double beta = beta_;
    const int nc = n_choices_;
    const double* util = u.values.data();

    const std::size_t tasks = (np + kPointsPerTask - 1) / kPointsPerTask;
    parallel_for(tasks, [&](std::size_t task) {
        const std::size_t p_end = std::min(np, (task + 1) * kPointsPerTask);
        std::vector<double> w(nc);
        Scratch scratch;
        for (std::size_t p = task * kPointsPerTask; p < p_end; ++p) {
            for (int d = 0; d < nc; ++d) {
                const std::size_t row = p * nc + d;
                double acc = 0.0;
                if (nc == 2) {
                    const std::size_t first = offsets_[row];
                    const std::size_t n = offsets_[row + 1] - first;
                    scratch.resize(n);
                    const double* v0 = v.values(0).data();
                    const double* v1 = v.values(1).data();
                    gather_levels(util + 2 * first, v0, v1, nk, node_index_.data() + first, node_frac_.data() + first, beta, n,
                                  scratch);
                    detail::lse2(scratch.a0.data(), scratch.a1.data(), scratch.out.data(), n);
                    for (std::size_t k = 0; k < n; ++k) acc += node_weight_[first + k] * scratch.out[k];
                } else {
                    for (std::size_t i = offsets_[row]; i < offsets_[row + 1]; ++i) {
                        for (int e = 0; e < nc; ++e) {
                            w[e] = util[i * nc + e] + beta * lerp_safe(v.values(e).data(), nk, node_index_[i], node_frac_[i]);
                        }
                        acc += node_weight_[i] * log_sum_exp(w);
                    }
                }
                out[d * np + p] = acc + kEulerGamma;
            }
        }
    });
}

void BellmanPlan::apply_difference(const ValueTable& v, const ValueTable& step, const NodeUtilities& u,
                                   std::span<double> out) const {
    require(v.n_knots() == knots_.size() && v.n_choices() == n_choices_, "value table does not match plan");
    require(step.n_knots() == knots_.size() && step.n_choices() == n_choices_, "step table does not match plan");
    require(out.size() == eval_states_.size() * n_choices_, "output span has wrong size");
    const std::size_t nk = knots_.size();
    const std::size_t np = eval_states_.size();
    const double beta = beta_;
    const int nc = n_choices_;
    const double* util = u.values.data();

    // lse(a) - lse(a - delta) = -log1p(sum_e p_e * expm1(-delta_e)), p = softmax(a)
    const std::size_t tasks = (np + kPointsPerTask - 1) / kPointsPerTask;
    parallel_for(tasks, [&](std::size_t task) {
        const std::size_t p_end = std::min(np, (task + 1) * kPointsPerTask);
        std::vector<double> a(nc), prob(nc);
        Scratch scratch;
        for (std::size_t p = task * kPointsPerTask; p < p_end; ++p) {
            for (int d = 0; d < nc; ++d) {
                const std::size_t row = p * nc + d;
                double acc = 0.0;
                if (nc == 2) {
                    const std::size_t first = offsets_[row];
                    const std::size_t n = offsets_[row + 1] - first;
                    scratch.resize(n);
                    const double* v0 = v.values(0).data();
                    const double* v1 = v.values(1).data();
                    const double* d0 = step.values(0).data();
                    const double* d1 = step.values(1).data();
                    gather_levels(util + 2 * first, v0, v1, nk, node_index_.data() + first, node_frac_.data() + first, beta, n,
                                  scratch);
                    if (nk == 1) {
                        std::fill_n(scratch.s0.begin(), n, beta * d0[0]);
                        std::fill_n(scratch.s1.begin(), n, beta * d1[0]);
                    } else {
                        detail::node_steps(d0, d1, node_index_.data() + first, node_frac_.data() + first, beta,
                                           scratch.s0.data(), scratch.s1.data(), n);
                    }
                    detail::lse2_step(scratch.a0.data(), scratch.a1.data(), scratch.s0.data(), scratch.s1.data(),
                                      scratch.out.data(), n);
                    for (std::size_t k = 0; k < n; ++k) acc += node_weight_[first + k] * scratch.out[k];
                    out[d * np + p] = acc;
                    continue;
                }
                for (std::size_t i = offsets_[row]; i < offsets_[row + 1]; ++i) {
                    const std::uint32_t j = node_index_[i];
                    const double f = node_frac_[i];
                    double m = -std::numeric_limits<double>::infinity();
                    for (int e = 0; e < nc; ++e) {
                        a[e] = util[i * nc + e] + beta * lerp_safe(v.values(e).data(), nk, j, f);
                        m = std::max(m, a[e]);
                    }
                    double z = 0.0;
                    for (int e = 0; e < nc; ++e) {
                        prob[e] = std::exp(a[e] - m);
                        z += prob[e];
                    }
                    double s = 0.0;
                    for (int e = 0; e < nc; ++e) {
                        const double delta = beta * lerp_safe(step.values(e).data(), nk, j, f);
                        s += (prob[e] / z) * std::expm1(-delta);
                    }
                    acc -= node_weight_[i] * std::log1p(s);
                }
                out[d * np + p] = acc;
            }
        }
    });
}

ValueTable bellman_apply(const ValueTable& vtab, const Model& model, std::span<const double> theta,
                         const DrawSet& draws) {
    require(vtab.n_choices() == model.n_choices(), "value table choice count does not match model");
    const BellmanPlan plan(model, vtab.knots(), draws, vtab.knots());
    ValueTable out(std::vector<double>(vtab.knots().begin(), vtab.knots().end()), model.n_choices());
    plan.apply(vtab, plan.utilities(model, theta), out.values());
    return out;
}

SolveResult solve_value_function(const Model& model, std::span<const double> theta, const BellmanPlan& plan,
                                 const SolveOptions& options) {
    require(options.tol > 0.0, "tolerance must be positive");
    require(options.max_iter >= 1, "max_iter must be at least 1");
    require(plan.n_points() == plan.knots().size(), "solve needs a plan evaluated on its own knots");
    for (std::size_t k = 0; k < plan.n_points(); ++k) {
        require(plan.eval_states()[k] == plan.knots()[k], "solve needs a plan evaluated on its own knots");
    }

    const std::vector<double> knots(plan.knots().begin(), plan.knots().end());
    const int nc = model.n_choices();
    const NodeUtilities u = plan.utilities(model, theta);

    SolveResult result{ValueTable(knots, nc), {}};
    ValueTable& v = result.table;
    ValueTable step(knots, nc);
    ValueTable next(knots, nc);
    double delta = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= options.max_iter; ++it) {
        if (it > 1 && delta < options.difference_form_below) {
            plan.apply_difference(v, step, u, next.values());
            std::swap(step, next);
            for (std::size_t i = 0; i < v.values().size(); ++i) v.values()[i] += step.values()[i];
        } else {
            plan.apply(v, u, next.values());
            for (std::size_t i = 0; i < v.values().size(); ++i) step.values()[i] = next.values()[i] - v.values()[i];
            std::swap(v, next);
        }
        delta = 0.0;
        for (double x : step.values()) delta = std::max(delta, std::abs(x));
        if (!std::isfinite(delta)) throw NonConvergence(it, delta);
        result.report.deltas.push_back(delta);
        if (delta < options.tol) {
            result.report.iterations = it;
            result.report.final_delta = delta;
            return result;
        }
    }
    throw NonConvergence(options.max_iter, delta);
}

SolveResult solve_value_function(const Model& model, std::span<const double> theta, std::vector<double> knots,
                                 int n_draws, double tol, int max_iter, std::uint64_t seed) {
    const DrawSet draws = DrawSet::per_point(seed, knots.size(), model.n_choices(), n_draws);
    const BellmanPlan plan(model, knots, draws, knots);
    return solve_value_function(model, theta, plan, SolveOptions{tol, max_iter});
}

}  // namespace certdp
