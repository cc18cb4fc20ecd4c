#include "run_config.hpp"

#include "certdp/errors.hpp"
#include "certdp/io.hpp"
#include "certdp/rng.hpp"

namespace certdp::cli {

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

// Enum fields stored as strings; the parser's ContractViolation becomes a ConfigError.
template <class T, class Parse>
void read_enum(const nlohmann::json& j, const char* key, T& out, const std::string& where, Parse parse) {
    std::string name;
    if (!j.contains(key)) return;
    read(j, key, name, where);
    try {
        out = parse(name);
    } catch (const ContractViolation& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void check_theta(const Theta& t, const std::string& where) {
    if (t.size() != 2) throw ConfigError(where + " must have two entries");
}

SimBlock sim_from_json(const nlohmann::json& j) {
    const std::string w = "sim";
    io::check_keys(j, {"horizon", "truth_knots", "truth_draws", "initial_state", "burn_in"}, w);
    SimBlock b;
    read(j, "horizon", b.horizon, w);
    read(j, "truth_knots", b.truth_knots, w);
    read(j, "truth_draws", b.truth_draws, w);
    read(j, "initial_state", b.initial_state, w);
    read(j, "burn_in", b.burn_in, w);
    return b;
}

DpBlock dp_from_json(const nlohmann::json& j) {
    const std::string w = "dp";
    io::check_keys(j, {"knots", "n_draws", "layout", "tol", "max_iter", "difference_form_below"}, w);
    DpBlock b;
    read(j, "knots", b.knots, w);
    read(j, "n_draws", b.n_draws, w);
    read_enum(j, "layout", b.layout, w, draw_layout_from_string);
    read(j, "tol", b.tol, w);
    read(j, "max_iter", b.max_iter, w);
    read(j, "difference_form_below", b.difference_form_below, w);
    return b;
}

BoundsBlock bounds_from_json(const nlohmann::json& j) {
    const std::string w = "bounds";
    io::check_keys(j,
                   {"method", "tau", "tau_fraction", "dense_points", "n_draws", "initial_anchor_intervals",
                    "max_rounds", "candidate_points", "continuum_margin"},
                   w);
    BoundsBlock b;
    read_enum(j, "method", b.method, w, bound_method_from_string);
    if (j.contains("tau") && !j.at("tau").is_null()) {
        double tau = 0.0;
        read(j, "tau", tau, w);
        b.tau = tau;
    }
    read(j, "tau_fraction", b.tau_fraction, w);
    read(j, "dense_points", b.dense_points, w);
    read(j, "n_draws", b.n_draws, w);
    read(j, "initial_anchor_intervals", b.initial_anchor_intervals, w);
    read(j, "max_rounds", b.max_rounds, w);
    read(j, "candidate_points", b.candidate_points, w);
    read(j, "continuum_margin", b.continuum_margin, w);
    return b;
}

InferenceBlock inference_from_json(const nlohmann::json& j) {
    const std::string w = "inference";
    io::check_keys(j,
                   {"knots", "n_draws", "layout", "tol", "max_iter", "certificate", "certificate_points", "factor",
                    "alpha", "robust_variant", "starts", "initial_step", "xtol", "max_evals", "lower", "upper",
                    "grid"},
                   w);
    InferenceBlock b;
    read(j, "knots", b.knots, w);
    read(j, "n_draws", b.n_draws, w);
    read_enum(j, "layout", b.layout, w, draw_layout_from_string);
    read(j, "tol", b.tol, w);
    read(j, "max_iter", b.max_iter, w);
    read_enum(j, "certificate", b.certificate, w, bound_method_from_string);
    read(j, "certificate_points", b.certificate_points, w);
    read_enum(j, "factor", b.factor, w, factor_mode_from_string);
    read(j, "alpha", b.alpha, w);
    read_enum(j, "robust_variant", b.robust_variant, w, robust_variant_from_string);
    auto& o = b.optimizer;
    read(j, "starts", o.starts, w);
    for (const auto& s : o.starts) check_theta(s, w + ".starts[]");
    read(j, "initial_step", o.initial_step, w);
    read(j, "xtol", o.xtol, w);
    read(j, "max_evals", o.max_evals, w);
    read(j, "lower", o.lower, w);
    check_theta(o.lower, w + ".lower");
    read(j, "upper", o.upper, w);
    check_theta(o.upper, w + ".upper");
    if (j.contains("grid") && !j.at("grid").is_null()) {
        std::string spec;
        read(j, "grid", spec, w);
        b.grid = ThetaGrid::parse(spec);
    }
    return b;
}

ExperimentsBlock experiments_from_json(const nlohmann::json& j) {
    const std::string w = "experiments";
    io::check_keys(j, {"replications", "knot_counts", "horizon", "check_nesting"}, w);
    ExperimentsBlock b;
    read(j, "replications", b.replications, w);
    read(j, "knot_counts", b.knot_counts, w);
    read(j, "horizon", b.horizon, w);
    read(j, "check_nesting", b.check_nesting, w);
    return b;
}

std::string grid_text(const ThetaGrid& g) {
    return io::format_double(g.t1_lo) + ":" + io::format_double(g.t1_hi) + ":" + std::to_string(g.n1) + "," +
           io::format_double(g.t2_lo) + ":" + io::format_double(g.t2_hi) + ":" + std::to_string(g.n2);
}

void need(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

void RunConfig::validate() const {
    try {
        model.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    need(!output_dir.empty(), "output_dir must be nonempty");
    need(sim.horizon >= 1, "sim.horizon must be at least 1");
    need(sim.truth_knots >= 2, "sim.truth_knots must be at least 2");
    need(sim.truth_draws >= 1, "sim.truth_draws must be at least 1");
    need(sim.initial_state >= model.state_lo && sim.initial_state <= model.state_hi,
         "sim.initial_state must lie in [model.state_lo, model.state_hi]");
    need(dp.knots >= 2, "dp.knots must be at least 2");
    need(dp.n_draws >= 1, "dp.n_draws must be at least 1");
    need(dp.tol > 0.0, "dp.tol must be positive");
    need(dp.max_iter >= 1, "dp.max_iter must be at least 1");
    need(!bounds.tau || *bounds.tau > 0.0, "bounds.tau must be positive");
    need(bounds.tau_fraction > 0.0, "bounds.tau_fraction must be positive");
    need(bounds.dense_points >= 2, "bounds.dense_points must be at least 2");
    need(bounds.n_draws >= 1, "bounds.n_draws must be at least 1");
    need(bounds.initial_anchor_intervals >= 1, "bounds.initial_anchor_intervals must be at least 1");
    need(bounds.max_rounds >= 1, "bounds.max_rounds must be at least 1");
    need(bounds.candidate_points >= 2, "bounds.candidate_points must be at least 2");
    need(inference.knots >= 2, "inference.knots must be at least 2");
    need(inference.n_draws >= 1, "inference.n_draws must be at least 1");
    need(inference.tol > 0.0, "inference.tol must be positive");
    need(inference.max_iter >= 1, "inference.max_iter must be at least 1");
    need(inference.certificate_points >= 2, "inference.certificate_points must be at least 2");
    need(inference.alpha > 0.0 && inference.alpha < 1.0, "inference.alpha must lie in (0, 1)");
    need(!inference.optimizer.starts.empty(), "inference.starts must be nonempty");
    need(inference.optimizer.initial_step > 0.0, "inference.initial_step must be positive");
    need(inference.optimizer.xtol > 0.0, "inference.xtol must be positive");
    need(inference.optimizer.max_evals >= 1, "inference.max_evals must be at least 1");
    for (int i = 0; i < 2; ++i) {
        need(inference.optimizer.lower[i] < inference.optimizer.upper[i], "inference.lower must lie below inference.upper");
    }
    need(inference.certificate == BoundMethod::DenseGrid || inference.layout == DrawLayout::Common,
         "inference.certificate = refinement needs inference.layout = common");
    if (inference.grid) {
        try {
            inference.grid->validate();
        } catch (const ContractViolation& e) {
            throw ConfigError(std::string("inference.grid: ") + e.what());
        }
    }
    need(experiments.replications >= 1, "experiments.replications must be at least 1");
    need(!experiments.knot_counts.empty(), "experiments.knot_counts must be nonempty");
    for (std::size_t k : experiments.knot_counts) need(k >= 2, "experiments.knot_counts entries must be at least 2");
    need(experiments.horizon >= 1, "experiments.horizon must be at least 1");
}

SimConfig RunConfig::sim_config() const {
    SimConfig s;
    s.model = model;
    s.horizon = sim.horizon;
    s.truth_knots = sim.truth_knots;
    s.truth_draws = sim.truth_draws;
    s.seed = seed;
    s.initial_state = sim.initial_state;
    s.burn_in = sim.burn_in;
    s.solve.tol = dp.tol;
    s.solve.max_iter = dp.max_iter;
    s.solve.difference_form_below = dp.difference_form_below;
    return s;
}

EstimationSettings RunConfig::estimation(std::size_t knots) const {
    EstimationSettings e;
    e.knots = knots;
    e.layout = inference.layout;
    e.n_draws = inference.n_draws;
    e.draw_seed = rng::derive(seed, rng::Stream::EstimationDraws);
    e.solve.tol = inference.tol;
    e.solve.max_iter = inference.max_iter;
    e.solve.difference_form_below = dp.difference_form_below;
    auto& c = e.certificate;
    c.method = inference.certificate;
    c.dense_points = inference.certificate_points;
    c.layout = inference.layout;
    c.n_draws = inference.n_draws;
    c.seed = e.draw_seed;
    c.tau_fraction = bounds.tau_fraction;
    c.refine.initial_anchor_intervals = bounds.initial_anchor_intervals;
    c.refine.max_rounds = bounds.max_rounds;
    c.refine.candidate_points = inference.certificate_points;
    c.refine.envelope.continuum_margin = bounds.continuum_margin;
    c.factor = inference.factor;
    e.optimizer = inference.optimizer;
    return e;
}

CoverageConfig RunConfig::coverage_config() const {
    CoverageConfig c;
    c.sim = sim_config();
    c.sim.horizon = experiments.horizon;
    c.knot_counts = experiments.knot_counts;
    c.replications = experiments.replications;
    c.alpha = inference.alpha;
    c.master_seed = seed;
    c.estimation = estimation(inference.knots);
    c.robust_variant = inference.robust_variant;
    c.check_nesting = experiments.check_nesting;
    return c;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    io::check_keys(j, {"model", "seed", "output_dir", "sim", "dp", "bounds", "inference", "experiments"}, "config");
    RunConfig cfg;
    const std::string w = "config";
    if (j.contains("model")) cfg.model = io::model_spec_from_json(j.at("model"));
    read(j, "seed", cfg.seed, w);
    read(j, "output_dir", cfg.output_dir, w);
    if (j.contains("sim")) cfg.sim = sim_from_json(j.at("sim"));
    if (j.contains("dp")) cfg.dp = dp_from_json(j.at("dp"));
    if (j.contains("bounds")) cfg.bounds = bounds_from_json(j.at("bounds"));
    if (j.contains("inference")) cfg.inference = inference_from_json(j.at("inference"));
    if (j.contains("experiments")) cfg.experiments = experiments_from_json(j.at("experiments"));
    return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
    const auto& i = cfg.inference;
    const auto& o = i.optimizer;
    return {
        {"model", io::to_json(cfg.model)},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"sim",
         {{"horizon", cfg.sim.horizon},
          {"truth_knots", cfg.sim.truth_knots},
          {"truth_draws", cfg.sim.truth_draws},
          {"initial_state", cfg.sim.initial_state},
          {"burn_in", cfg.sim.burn_in}}},
        {"dp",
         {{"knots", cfg.dp.knots},
          {"n_draws", cfg.dp.n_draws},
          {"layout", to_string(cfg.dp.layout)},
          {"tol", cfg.dp.tol},
          {"max_iter", cfg.dp.max_iter},
          {"difference_form_below", cfg.dp.difference_form_below}}},
        {"bounds",
         {{"method", to_string(cfg.bounds.method)},
          {"tau", cfg.bounds.tau ? nlohmann::json(*cfg.bounds.tau) : nlohmann::json(nullptr)},
          {"tau_fraction", cfg.bounds.tau_fraction},
          {"dense_points", cfg.bounds.dense_points},
          {"n_draws", cfg.bounds.n_draws},
          {"initial_anchor_intervals", cfg.bounds.initial_anchor_intervals},
          {"max_rounds", cfg.bounds.max_rounds},
          {"candidate_points", cfg.bounds.candidate_points},
          {"continuum_margin", cfg.bounds.continuum_margin}}},
        {"inference",
         {{"knots", i.knots},
          {"n_draws", i.n_draws},
          {"layout", to_string(i.layout)},
          {"tol", i.tol},
          {"max_iter", i.max_iter},
          {"certificate", to_string(i.certificate)},
          {"certificate_points", i.certificate_points},
          {"factor", to_string(i.factor)},
          {"alpha", i.alpha},
          {"robust_variant", to_string(i.robust_variant)},
          {"starts", o.starts},
          {"initial_step", o.initial_step},
          {"xtol", o.xtol},
          {"max_evals", o.max_evals},
          {"lower", o.lower},
          {"upper", o.upper},
          {"grid", i.grid ? nlohmann::json(grid_text(*i.grid)) : nlohmann::json(nullptr)}}},
        {"experiments",
         {{"replications", cfg.experiments.replications},
          {"knot_counts", cfg.experiments.knot_counts},
          {"horizon", cfg.experiments.horizon},
          {"check_nesting", cfg.experiments.check_nesting}}},
    };
}

}  // namespace certdp::cli
