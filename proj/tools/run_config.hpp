#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "certdp/bounds.hpp"
#include "certdp/experiments.hpp"
#include "certdp/inference.hpp"
#include "certdp/model.hpp"
#include "certdp/sim.hpp"

namespace certdp::cli {

struct SimBlock {
    std::size_t horizon = 5000;
    std::size_t truth_knots = 1001;
    int truth_draws = 100;
    double initial_state = 10.0;
    std::size_t burn_in = 100;
};

// Settings of `solve`.
struct DpBlock {
    std::size_t knots = 1001;
    int n_draws = 100;
    DrawLayout layout = DrawLayout::PerPoint;
    double tol = 1e-9;
    int max_iter = 1000;
    double difference_form_below = 1e-6;
};

// Settings of `bound`.
struct BoundsBlock {
    BoundMethod method = BoundMethod::Refinement;
    std::optional<double> tau;  // absolute; when unset tau = tau_fraction * b_bar
    double tau_fraction = 0.05;
    std::size_t dense_points = 1001;
    int n_draws = 100;
    std::size_t initial_anchor_intervals = 50;
    int max_rounds = 8;
    std::size_t candidate_points = 1001;
    bool continuum_margin = false;
};

// Settings shared by `estimate`, `setgrid` and `coverage`.
struct InferenceBlock {
    std::size_t knots = 10;
    int n_draws = 100;
    DrawLayout layout = DrawLayout::PerPoint;
    double tol = 1e-9;
    int max_iter = 1000;
    BoundMethod certificate = BoundMethod::DenseGrid;
    std::size_t certificate_points = 1001;
    FactorMode factor = FactorMode::ModelWide;
    double alpha = 0.05;
    RobustVariant robust_variant = RobustVariant::LowerSup;
    OptimizerSettings optimizer{};
    std::optional<ThetaGrid> grid;  // default: ThetaGrid::around(model.theta)
};

struct ExperimentsBlock {
    std::size_t replications = 100;
    std::vector<std::size_t> knot_counts{10, 100};
    std::size_t horizon = 1000;
    bool check_nesting = false;
};

struct RunConfig {
    ModelSpec model{};
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    SimBlock sim{};
    DpBlock dp{};
    BoundsBlock bounds{};
    InferenceBlock inference{};
    ExperimentsBlock experiments{};

    // Throws ConfigError naming the offending key.
    void validate() const;

    SimConfig sim_config() const;
    // Estimation settings for a panel; draws keyed by `seed`.
    EstimationSettings estimation(std::size_t knots) const;
    CoverageConfig coverage_config() const;
};

// Missing keys keep their defaults; unknown keys and wrong types throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
// Every field, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace certdp::cli
