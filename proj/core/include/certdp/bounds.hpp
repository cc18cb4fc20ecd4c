#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "certdp/dp.hpp"
#include "certdp/draws.hpp"
#include "certdp/model.hpp"
#include "certdp/value_table.hpp"

namespace certdp {

enum class BoundMethod {
    DenseGrid,   // B_upper = B_lower = pairwise supremum over a dense evaluation grid
    Refinement,  // anchor-set envelope, refined until B_upper - B_lower <= tau
};

std::string to_string(BoundMethod method);
BoundMethod bound_method_from_string(const std::string& name);

// Everything needed to widen value differences inside the likelihood.
struct BoundCertificate {
    double delta_sup = 1.0;
    double b_bar = 0.0;
    double B_upper = 0.0;
    double B_lower = 0.0;
    BoundMethod method = BoundMethod::DenseGrid;

    void validate() const;
};

// (1 - beta*delta_sup + beta*tv(F_{s,d}, F_{s,d2})) / (1 - beta*delta_sup).
// Throws DegenerateBound when beta*delta_sup >= 1.
double b_factor(double s, int d, int d2, const Model& model, double delta_sup);

// The model-wide factor obtained by replacing tv(F_{s,d}, F_{s,d2}) with its
// supremum over states. For the bus model this is
// (1 - beta + beta*min{|gamma1 - gamma2| / (2 gamma3), 1}) / (1 - beta).
double uniform_b_factor(const Model& model, double delta_sup);

// sup over s, s' and d of |u(s,d) + beta*V(s,d) - u(s',d) - beta*V(s',d)|.
// Exact for piecewise-linear tables and utilities linear in the state: the
// extremes sit on knots or on the state-space endpoints.
double b_bar(const ValueTable& vtab, const Model& model, std::span<const double> theta);

// max over grid states and choices of g minus its min, where
// g(s,d) = T[V](s,d) - V(s,d). Equals the pairwise supremum
// |[T V(s',d') - T V(s,d)] - [V(s',d') - V(s,d)]| over the grid.
double theorem1_sup(const ValueTable& vtab, const Model& model, std::span<const double> theta,
                    std::span<const double> eval_grid, const DrawSet& draws);

// Same, reusing a plan whose knots match vtab.
double theorem1_sup(const BellmanPlan& plan, const ValueTable& vtab, const NodeUtilities& utilities);

struct StateChoice {
    double state;
    int choice;
};

struct Envelope {
    double B_upper;
    double B_lower;
};

struct EnvelopeOptions {
    // Adds twice the largest per-gap slack between consecutive candidates so
    // B_upper covers the whole state interval, not only the candidate grid.
    bool continuum_margin = false;
};

// Upper and lower brackets on the pairwise Bellman-residual supremum that only
// apply the Bellman operator at the anchors. `draws` is indexed by the
// position of each distinct anchor state in order of first appearance; a
// Common draw set is the natural choice.
Envelope theorem2_envelope(const ValueTable& vtab, const Model& model, std::span<const double> theta,
                           std::span<const StateChoice> anchors, std::span<const double> candidate_grid,
                           const DrawSet& draws, const EnvelopeOptions& options = {});

struct RefineOptions {
    std::size_t initial_anchor_intervals = 50;  // anchors at round r: intervals * 2^r + 1 states
    int max_rounds = 8;
    std::size_t candidate_points = 1001;
    EnvelopeOptions envelope{};
};

struct RefinementRound {
    std::size_t anchor_states = 0;
    double B_upper = 0.0;
    double B_lower = 0.0;
};

struct RefinementResult {
    BoundCertificate certificate;
    std::vector<RefinementRound> rounds;
};

// Doubles anchor density until B_upper - B_lower <= tau. Throws
// RefinementStalled after max_rounds unsuccessful rounds.
RefinementResult refine_bound(const ValueTable& vtab, const Model& model, std::span<const double> theta, double tau,
                              const DrawSet& draws, const RefineOptions& options = {});

// Certificate whose B_upper = B_lower = theorem1_sup over the plan's grid.
BoundCertificate dense_grid_certificate(const BellmanPlan& plan, const ValueTable& vtab, const Model& model,
                                        std::span<const double> theta, const NodeUtilities& utilities);

// Q(s,d,d') = b_factor(s,d,d') * B_upper.
double q_bound(double s, int d, int d2, const BoundCertificate& cert, const Model& model,
               std::span<const double> theta);

// Evaluation grid for bound computations: the finite states of a finite model,
// otherwise `points` evenly spaced states.
std::vector<double> bound_grid(const Model& model, std::size_t points);

}  // namespace certdp
