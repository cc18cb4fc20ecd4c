#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "certdp/draws.hpp"
#include "certdp/model.hpp"
#include "certdp/value_table.hpp"

namespace certdp {

// ln(sum_d exp(u(s_next,d) + beta*V(s_next,d))) + Euler-Mascheroni constant.
double emax(const Model& model, double s_next, const ValueTable& vtab, std::span<const double> theta);

// Max-shifted log-sum-exp.
double log_sum_exp(std::span<const double> w);

// Utilities u(s', d; theta) at every node of a plan, node-major.
struct NodeUtilities {
    std::vector<double> values;
};

// The next-state nodes of the empirical Bellman operator for a fixed list of
// evaluation states, pre-bracketed against a knot grid. None of this depends
// on theta, so one plan serves every candidate parameter of an estimation.
class BellmanPlan {
public:
    BellmanPlan(const Model& model, std::span<const double> eval_states, const DrawSet& draws,
                std::span<const double> knots);

    std::size_t n_points() const { return eval_states_.size(); }
    int n_choices() const { return n_choices_; }
    std::span<const double> eval_states() const { return eval_states_; }
    std::span<const double> knots() const { return knots_; }
    std::size_t n_nodes() const { return node_state_.size(); }
    double beta() const { return beta_; }

    NodeUtilities utilities(const Model& model, std::span<const double> theta) const;

    // out[d * n_points + p] = T[V](eval_states[p], d)
    void apply(const ValueTable& v, const NodeUtilities& u, std::span<double> out) const;

    // out[d * n_points + p] = T[V](p, d) - T[V - step](p, d), evaluated without
    // cancellation so the result keeps full relative precision when `step` is tiny.
    void apply_difference(const ValueTable& v, const ValueTable& step, const NodeUtilities& u,
                          std::span<double> out) const;

private:
    double beta_;
    int n_choices_;
    std::vector<double> eval_states_;
    std::vector<double> knots_;
    std::vector<std::size_t> offsets_;  // [(p * n_choices + d)] -> first node
    std::vector<double> node_state_;
    std::vector<double> node_weight_;
    std::vector<std::uint32_t> node_index_;
    std::vector<double> node_frac_;
};

// One application of the Bellman operator on the table's own knots.
ValueTable bellman_apply(const ValueTable& vtab, const Model& model, std::span<const double> theta,
                         const DrawSet& draws);

struct SolveOptions {
    double tol = 1e-9;
    int max_iter = 1000;
    // Once the sup-norm step drops below this, steps are computed in
    // difference form so the logged deltas stay accurate down to tol.
    double difference_form_below = 1e-6;
};

struct SolveReport {
    int iterations = 0;
    double final_delta = 0.0;
    std::vector<double> deltas;  // deltas[k-1] = ||V_k - V_{k-1}||_inf
};

struct SolveResult {
    ValueTable table;
    SolveReport report;
};

// Bellman iteration from V0 = 0 until the sup-norm change is below tol.
// Throws NonConvergence when max_iter is reached first.
SolveResult solve_value_function(const Model& model, std::span<const double> theta, const BellmanPlan& plan,
                                 const SolveOptions& options = {});

// Convenience overload: per-point draws keyed by `seed` on the given knots.
SolveResult solve_value_function(const Model& model, std::span<const double> theta, std::vector<double> knots,
                                 int n_draws, double tol, int max_iter, std::uint64_t seed);

}  // namespace certdp
