#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "certdp/dp.hpp"
#include "certdp/inference.hpp"
#include "certdp/model.hpp"
#include "certdp/value_table.hpp"

namespace certdp {

struct SimConfig {
    ModelSpec model{};
    std::size_t horizon = 5000;
    std::size_t truth_knots = 1001;
    int truth_draws = 100;
    std::uint64_t seed = 1;
    double initial_state = 10.0;
    std::size_t burn_in = 100;
    SolveOptions solve{};

    void validate() const;
};

struct SimResult {
    Panel panel;
    ValueTable truth;           // dense-grid value function used for the decisions
    SolveReport truth_report;
    std::uint64_t truth_draw_seed = 0;
};

// Seed of the per-point draws behind the truth solve for a given simulation seed.
std::uint64_t truth_draw_seed(std::uint64_t seed);

// Solves the dense-grid value function at cfg.model.theta and simulates
// burn_in + horizon periods, keeping the last horizon.
SimResult simulate_panel(const SimConfig& cfg);

// Simulation from an already solved table. Shocks are T1EV by inverse CDF
// keyed by (seed, period, choice); ties go to the lowest choice index.
Panel simulate_with_table(const Model& model, std::span<const double> theta, const ValueTable& vtab,
                          std::size_t horizon, std::size_t burn_in, double initial_state, std::uint64_t seed);

}  // namespace certdp
