#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "certdp/bounds.hpp"
#include "certdp/dp.hpp"
#include "certdp/errors.hpp"
#include "certdp/experiments.hpp"
#include "certdp/inference.hpp"
#include "certdp/io.hpp"
#include "certdp/parallel.hpp"
#include "certdp/rng.hpp"
#include "certdp/sim.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace certdp;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;
    std::optional<std::size_t> knots;
    std::vector<std::size_t> knot_list;
    std::optional<double> tol;
    std::optional<double> tau;
    std::optional<double> alpha;
    std::optional<std::size_t> reps;
    std::string grid;
    std::string panel;
    std::string table;
    bool check_nesting = false;
};

cli::RunConfig load(const Overrides& ov) {
    cli::RunConfig cfg;
    if (!ov.config.empty()) cfg = cli::run_config_from_json(io::read_json(ov.config));
    if (ov.seed) cfg.seed = *ov.seed;
    if (!ov.out.empty()) cfg.output_dir = ov.out;
    if (ov.tau) cfg.bounds.tau = *ov.tau;
    if (ov.alpha) cfg.inference.alpha = *ov.alpha;
    if (ov.reps) cfg.experiments.replications = *ov.reps;
    if (!ov.grid.empty()) cfg.inference.grid = ThetaGrid::parse(ov.grid);
    if (ov.check_nesting) cfg.experiments.check_nesting = true;
    return cfg;
}

// Validates, creates the output directory and echoes the resolved config.
fs::path prepare(const cli::RunConfig& cfg) {
    cfg.validate();
    const fs::path out = cfg.output_dir;
    io::ensure_directory(out);
    io::write_json(out / "config.json", cli::to_json(cfg));
    return out;
}

std::vector<double> state_grid(const Model& model, std::size_t points) { return bound_grid(model, points); }

Panel panel_for(const cli::RunConfig& cfg, const Overrides& ov) {
    if (!ov.panel.empty()) return io::parse_panel_csv(io::read_text(ov.panel), ov.panel);
    return simulate_panel(cfg.sim_config()).panel;
}

nlohmann::json envelope_json(const LikelihoodEnvelope& e) {
    return {{"ll_lower", e.ll_lower}, {"ll_point", e.ll_point}, {"ll_upper", e.ll_upper}};
}

nlohmann::json optimum_json(const OptimumResult& r) {
    return {{"theta", r.theta},
            {"value", r.value},
            {"boundary", r.boundary},
            {"evals", r.evals},
            {"converged_starts", r.converged_starts}};
}

int cmd_simulate(const cli::RunConfig& cfg) {
    const fs::path out = prepare(cfg);
    const SimConfig sc = cfg.sim_config();
    const SimResult r = simulate_panel(sc);
    std::vector<std::size_t> counts(sc.model.n_choices, 0);
    for (const auto& o : r.panel.obs) ++counts[o.choice];
    std::vector<double> freq;
    for (std::size_t c : counts) freq.push_back(static_cast<double>(c) / static_cast<double>(r.panel.size()));

    io::write_text(out / "panel.csv", io::panel_csv(r.panel));
    io::write_json(out / "panel.meta.json", {{"T", r.panel.size()},
                                             {"seed", sc.seed},
                                             {"burn_in", sc.burn_in},
                                             {"initial_state", sc.initial_state},
                                             {"truth_knots", sc.truth_knots},
                                             {"truth_draws", sc.truth_draws},
                                             {"truth_draw_seed", r.truth_draw_seed},
                                             {"truth_iterations", r.truth_report.iterations},
                                             {"truth_final_delta", r.truth_report.final_delta},
                                             {"choice_counts", counts},
                                             {"choice_frequencies", freq},
                                             {"model", io::to_json(sc.model)}});
    std::printf("T = %zu\n", r.panel.size());
    for (std::size_t d = 0; d < freq.size(); ++d) std::printf("choice %zu: %zu (%.4f)\n", d, counts[d], freq[d]);
    return kOk;
}

int cmd_solve(cli::RunConfig cfg, const Overrides& ov) {
    if (ov.knots) cfg.dp.knots = *ov.knots;
    if (ov.tol) cfg.dp.tol = *ov.tol;
    const fs::path out = prepare(cfg);
    const auto model = make_model(cfg.model);
    const auto knots = state_grid(*model, cfg.dp.knots);
    const std::uint64_t draw_seed = rng::derive(cfg.seed, rng::Stream::SolveDraws);
    const DrawSet draws = cfg.dp.layout == DrawLayout::Common
                              ? DrawSet::common(draw_seed, cfg.dp.n_draws)
                              : DrawSet::per_point(draw_seed, knots.size(), model->n_choices(), cfg.dp.n_draws);
    const BellmanPlan plan(*model, knots, draws, knots);
    SolveOptions opts;
    opts.tol = cfg.dp.tol;
    opts.max_iter = cfg.dp.max_iter;
    opts.difference_form_below = cfg.dp.difference_form_below;

    std::string log = "iteration,delta,ratio\n";
    auto write_log = [&](const SolveReport& report) {
        for (std::size_t k = 0; k < report.deltas.size(); ++k) {
            log += std::to_string(k + 1) + "," + io::format_double(report.deltas[k]) + ",";
            if (k > 0 && report.deltas[k - 1] > 0.0) log += io::format_double(report.deltas[k] / report.deltas[k - 1]);
            log += "\n";
        }
        io::write_text(out / "convergence.csv", log);
    };
    SolveResult r;
    try {
        r = solve_value_function(*model, cfg.model.theta, plan, opts);
    } catch (const NonConvergence& e) {
        std::fprintf(stderr, "certdp solve: %s\n", e.what());
        return kNumerical;
    }
    write_log(r.report);
    io::write_text(out / "value_table.csv", io::value_table_csv(r.table));
    nlohmann::json meta = io::to_json(r.report);
    meta["knots"] = knots.size();
    meta["n_draws"] = cfg.dp.n_draws;
    meta["layout"] = to_string(cfg.dp.layout);
    meta["draw_seed"] = draw_seed;
    meta["theta"] = cfg.model.theta;
    io::write_json(out / "solve.json", meta);
    std::printf("converged in %d iterations (final delta %s)\n", r.report.iterations,
                io::format_double(r.report.final_delta).c_str());
    return kOk;
}

int cmd_bound(const cli::RunConfig& cfg, const Overrides& ov) {
    if (ov.table.empty()) throw ConfigError("bound needs --table PATH");
    const fs::path out = prepare(cfg);
    const auto model = make_model(cfg.model);
    const ValueTable vtab = io::parse_value_table_csv(io::read_text(ov.table), ov.table);
    if (vtab.n_choices() != model->n_choices()) throw ConfigError(ov.table + ": choice count does not match the model");
    const std::uint64_t draw_seed = rng::derive(cfg.seed, rng::Stream::CertificateDraws);
    const auto& theta = cfg.model.theta;

    nlohmann::json j;
    if (cfg.bounds.method == BoundMethod::Refinement) {
        const DrawSet draws = DrawSet::common(draw_seed, cfg.bounds.n_draws);
        const double bbar = b_bar(vtab, *model, theta);
        const double tau = cfg.bounds.tau ? *cfg.bounds.tau : cfg.bounds.tau_fraction * bbar;
        if (!(tau > 0.0)) throw NumericalError("tau = tau_fraction * b_bar is zero; pass --tau");
        RefineOptions opts;
        opts.initial_anchor_intervals = cfg.bounds.initial_anchor_intervals;
        opts.max_rounds = cfg.bounds.max_rounds;
        opts.candidate_points = cfg.bounds.candidate_points;
        opts.envelope.continuum_margin = cfg.bounds.continuum_margin;
        const RefinementResult r = refine_bound(vtab, *model, theta, tau, draws, opts);
        j = io::to_json(r.certificate);
        j["tau"] = tau;
        nlohmann::json rounds = nlohmann::json::array();
        for (const auto& round : r.rounds) {
            rounds.push_back({{"anchor_states", round.anchor_states},
                              {"B_upper", round.B_upper},
                              {"B_lower", round.B_lower}});
        }
        j["rounds"] = rounds;
    } else {
        const auto grid = state_grid(*model, cfg.bounds.dense_points);
        const DrawSet draws = DrawSet::common(draw_seed, cfg.bounds.n_draws);
        const BellmanPlan plan(*model, grid, draws, vtab.knots());
        j = io::to_json(dense_grid_certificate(plan, vtab, *model, theta, plan.utilities(*model, theta)));
        j["evaluation_points"] = grid.size();
    }
    j["draw_seed"] = draw_seed;
    j["n_draws"] = cfg.bounds.n_draws;
    io::write_json(out / "certificate.json", j);
    std::printf("B_upper = %s, B_lower = %s\n", io::format_double(j["B_upper"].get<double>()).c_str(),
                io::format_double(j["B_lower"].get<double>()).c_str());
    return kOk;
}

int cmd_estimate(cli::RunConfig cfg, const Overrides& ov) {
    if (ov.knots) cfg.inference.knots = *ov.knots;
    const fs::path out = prepare(cfg);
    const auto model = make_model(cfg.model);
    Panel panel = panel_for(cfg, ov);
    const LikelihoodProblem problem(*model, std::move(panel), cfg.estimation(cfg.inference.knots));
    const OptimumResult hat = mle(problem);
    const auto at_hat = problem.evaluate(hat.theta);
    const OptimumResult lower = sup_lower_loglik(problem);

    nlohmann::json j = optimum_json(hat);
    j["theta_hat"] = hat.theta;
    j["loglik"] = hat.value;
    j["knots"] = problem.knots().size();
    j["T"] = problem.panel().size();
    j["panel"] = ov.panel.empty() ? "simulated" : ov.panel;
    j["certificate"] = io::to_json(at_hat.cert);
    j["envelope"] = envelope_json(at_hat.envelope);
    j["sup_ll_lower"] = optimum_json(lower);
    io::write_json(out / "estimate.json", j);
    std::printf("theta_hat = (%s, %s), loglik %s%s\n", io::format_double(hat.theta[0]).c_str(),
                io::format_double(hat.theta[1]).c_str(), io::format_double(hat.value).c_str(),
                hat.boundary ? " [boundary]" : "");
    return kOk;
}

int cmd_setgrid(cli::RunConfig cfg, const Overrides& ov) {
    if (ov.knots) cfg.inference.knots = *ov.knots;
    const fs::path out = prepare(cfg);
    const auto model = make_model(cfg.model);
    Panel panel = panel_for(cfg, ov);
    const LikelihoodProblem problem(*model, std::move(panel), cfg.estimation(cfg.inference.knots));
    const ThetaGrid grid = cfg.inference.grid ? *cfg.inference.grid : ThetaGrid::around(cfg.model.theta);
    const SetGridResult r =
        export_set_grid(problem, grid, cfg.inference.alpha, out / "membership.csv", cfg.inference.robust_variant);
    std::size_t set = 0, robust = 0, standard = 0;
    for (const auto& row : r.rows) {
        set += row.membership.in_set_estimate;
        robust += row.membership.in_robust_ci;
        standard += row.membership.in_standard_ci;
    }
    std::printf("%zu grid points: set estimate %zu, robust CI %zu, standard CI %zu\n", r.rows.size(), set, robust,
                standard);
    return kOk;
}

int cmd_coverage(cli::RunConfig cfg, const Overrides& ov) {
    if (!ov.knot_list.empty()) cfg.experiments.knot_counts = ov.knot_list;
    const fs::path out = prepare(cfg);
    nlohmann::json fingerprint = cli::to_json(cfg);
    fingerprint.erase("output_dir");
    CoverageRunOptions opts;
    opts.checkpoint_dir = out / "replications";
    opts.fingerprint = fingerprint.dump();
    opts.on_replication = [](const ReplicationOutcome& r) {
        std::fprintf(stderr, "replication %zu done\n", r.index);
    };
    const CoverageRun run = run_coverage(cfg.coverage_config(), opts);
    io::write_text(out / "coverage.csv", coverage_csv(run.report));
    io::write_json(out / "coverage.json", to_json(run.report));
    if (run.resumed > 0) std::fprintf(stderr, "resumed %zu replications from %s\n", run.resumed,
                                      opts.checkpoint_dir.string().c_str());
    std::fputs(coverage_csv(run.report).c_str(), stdout);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic discrete choice estimation with certified approximation bounds"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides ov;
    app.add_option("--config", ov.config, "JSON run configuration");
    app.add_option("--seed", ov.seed, "Master seed");
    app.add_option("--threads", ov.threads, "Worker thread cap")->check(CLI::PositiveNumber);
    app.add_option("--out", ov.out, "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Simulate a panel at the configured theta");
    auto* solve = app.add_subcommand("solve", "Solve the value function on a knot grid");
    solve->add_option("--knots", ov.knots, "Knot count");
    solve->add_option("--tol", ov.tol, "Sup-norm tolerance");
    auto* bound = app.add_subcommand("bound", "Certify the error of a value table");
    bound->add_option("--table", ov.table, "Value table CSV")->required();
    bound->add_option("--tau", ov.tau, "Refinement tolerance");
    auto* estimate = app.add_subcommand("estimate", "Plug-in MLE with envelope diagnostics");
    estimate->add_option("--panel", ov.panel, "Panel CSV (default: simulate one)");
    estimate->add_option("--knots", ov.knots, "Estimation knot count");
    auto* setgrid = app.add_subcommand("setgrid", "Membership of a theta grid in the three sets");
    setgrid->add_option("--panel", ov.panel, "Panel CSV (default: simulate one)");
    setgrid->add_option("--knots", ov.knots, "Estimation knot count");
    setgrid->add_option("--grid", ov.grid, "t1_lo:t1_hi:n1,t2_lo:t2_hi:n2");
    setgrid->add_option("--alpha", ov.alpha, "Test level");
    auto* coverage = app.add_subcommand("coverage", "Monte Carlo coverage study");
    coverage->add_option("--reps", ov.reps, "Replications");
    coverage->add_option("--knots", ov.knot_list, "Knot counts")->delimiter(',');
    coverage->add_option("--alpha", ov.alpha, "Test level");
    coverage->add_flag("--check-nesting", ov.check_nesting, "Also test the dense-grid MLE against each set estimate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        set_max_threads(ov.threads);
        const cli::RunConfig cfg = load(ov);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (solve->parsed()) return cmd_solve(cfg, ov);
        if (bound->parsed()) return cmd_bound(cfg, ov);
        if (estimate->parsed()) return cmd_estimate(cfg, ov);
        if (setgrid->parsed()) return cmd_setgrid(cfg, ov);
        if (coverage->parsed()) return cmd_coverage(cfg, ov);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "certdp: config error: %s\n", e.what());
        return kConfig;
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "certdp: invalid input: %s\n", e.what());
        return kConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "certdp: numerical failure: %s\n", e.what());
        return kNumerical;
    } catch (const IoError& e) {
        std::fprintf(stderr, "certdp: I/O error: %s\n", e.what());
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "certdp: I/O error: %s\n", e.what());
        return kIo;
    }
    return kConfig;
}
