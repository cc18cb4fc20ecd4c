#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "certdp/inference.hpp"
#include "certdp/sim.hpp"

namespace certdp {

struct CoverageConfig {
    SimConfig sim{};
    std::vector<std::size_t> knot_counts{10, 100};
    std::size_t replications = 100;
    double alpha = 0.05;
    std::uint64_t master_seed = 1;
    // Template for every estimation; knots and seeds are filled in per replication.
    EstimationSettings estimation{};
    RobustVariant robust_variant = RobustVariant::LowerSup;
    // Also compute the dense-grid ("infeasible") MLE and test it against each set estimate.
    bool check_nesting = false;

    void validate() const;
};

struct KnotOutcome {
    std::size_t knots = 0;
    bool ok = false;
    std::string error;
    Theta theta_hat;
    bool boundary = false;
    Suprema sup{};
    LikelihoodEnvelope at_truth{};
    BoundCertificate cert_at_truth{};
    Membership truth{};
    bool nesting_checked = false;
    LikelihoodEnvelope at_infeasible{};
    bool infeasible_in_set = false;
};

struct ReplicationOutcome {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::string error;  // nonempty when the simulation itself failed
    std::vector<KnotOutcome> knots;
    bool infeasible_ok = false;
    Theta infeasible_theta;
    double infeasible_ll = 0.0;
};

struct CoverageRow {
    std::size_t knots = 0;
    std::size_t n_rep = 0;     // replications that produced all estimates
    std::size_t failures = 0;  // replications excluded after a numerical failure
    double mse = 0.0;          // mean over replications of the per-component average squared error
    double set_cov = 0.0;
    double robust_cov = 0.0;
    double std_cov = 0.0;
    std::size_t nesting_checked = 0;
    std::size_t nesting_held = 0;
};

struct CoverageReport {
    std::size_t replications = 0;
    double alpha = 0.05;
    std::vector<CoverageRow> rows;

    void validate() const;
};

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t rep);

// The estimation settings used for one replication and knot count.
EstimationSettings replication_estimation(const CoverageConfig& cfg, std::uint64_t rep_seed, std::size_t knots);

ReplicationOutcome run_replication(const CoverageConfig& cfg, std::size_t rep);

// Merges outcomes in replication order.
CoverageReport aggregate(const CoverageConfig& cfg, std::span<const ReplicationOutcome> outcomes);

struct CoverageRunOptions {
    // When set, every finished replication is written to rep_NNNNNN.json
    // together with manifest.json; a rerun skips replications already on disk.
    std::filesystem::path checkpoint_dir;
    // Stored in the manifest; a resume with a different fingerprint is refused.
    std::string fingerprint;
    std::function<void(const ReplicationOutcome&)> on_replication;
};

struct CoverageRun {
    CoverageReport report;
    std::vector<ReplicationOutcome> outcomes;
    std::size_t resumed = 0;
};

CoverageRun run_coverage(const CoverageConfig& cfg, const CoverageRunOptions& options = {});

nlohmann::json to_json(const KnotOutcome& k);
nlohmann::json to_json(const ReplicationOutcome& r);
ReplicationOutcome replication_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CoverageReport& report);

// Header `knots,n_rep,mse,set_cov,robust_cov,std_cov`.
std::string coverage_csv(const CoverageReport& report);

// Rectangular theta grid, theta1 varying slowest.
struct ThetaGrid {
    double t1_lo = 0.0;
    double t1_hi = 0.0;
    std::size_t n1 = 0;
    double t2_lo = 0.0;
    double t2_hi = 0.0;
    std::size_t n2 = 0;

    void validate() const;
    std::size_t size() const { return n1 * n2; }
    std::vector<Theta> points() const;

    // "t1_lo:t1_hi:n1,t2_lo:t2_hi:n2"
    static ThetaGrid parse(const std::string& text);
    // 41 x 41 points over [center1 - 1, center1 + 1] x [center2 - 3, center2 + 3].
    static ThetaGrid around(const Theta& center);
};

struct SetGridRow {
    Theta theta;
    LikelihoodEnvelope envelope{};
    Membership membership{};
};

struct SetGridResult {
    OptimumResult theta_hat;  // plug-in MLE
    OptimumResult lower_arg;  // argmax of the lower envelope
    Suprema sup{};
    double critical = 0.0;
    double alpha = 0.05;
    RobustVariant variant = RobustVariant::LowerSup;
    std::vector<SetGridRow> rows;
};

SetGridResult compute_set_grid(const LikelihoodProblem& problem, const ThetaGrid& grid, double alpha,
                               RobustVariant variant = RobustVariant::LowerSup);

// Header `theta1,theta2,in_set_estimate,in_robust_ci,in_standard_ci,ll_upper,ll_lower,ll_point`.
std::string membership_csv(const SetGridResult& result);
nlohmann::json set_grid_sidecar(const SetGridResult& result);

// Writes the membership CSV at `csv_path` and its sidecar next to it
// (same stem, extension .meta.json).
SetGridResult export_set_grid(const LikelihoodProblem& problem, const ThetaGrid& grid, double alpha,
                              const std::filesystem::path& csv_path,
                              RobustVariant variant = RobustVariant::LowerSup);

}  // namespace certdp
