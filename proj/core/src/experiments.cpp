#include "certdp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>

#include "certdp/errors.hpp"
#include "certdp/io.hpp"
#include "certdp/parallel.hpp"
#include "certdp/rng.hpp"

namespace certdp {

namespace {

nlohmann::json envelope_json(const LikelihoodEnvelope& e) {
    return {{"ll_lower", e.ll_lower}, {"ll_point", e.ll_point}, {"ll_upper", e.ll_upper}};
}

LikelihoodEnvelope envelope_from_json(const nlohmann::json& j) {
    return {j.at("ll_lower").get<double>(), j.at("ll_point").get<double>(), j.at("ll_upper").get<double>()};
}

nlohmann::json membership_json(const Membership& m) {
    return {{"in_set_estimate", m.in_set_estimate}, {"in_robust_ci", m.in_robust_ci},
            {"in_standard_ci", m.in_standard_ci}};
}

std::string rep_file_name(std::size_t rep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%06zu.json", rep);
    return buf;
}

}  // namespace

void CoverageConfig::validate() const {
    sim.validate();
    require(!knot_counts.empty(), "coverage needs at least one knot count");
    for (std::size_t k : knot_counts) require(k >= 2, "every knot count must be at least 2");
    require(replications >= 1, "replications must be at least 1");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
}

void CoverageReport::validate() const {
    require(replications >= 1, "coverage report needs at least one replication");
    for (const auto& r : rows) {
        for (double f : {r.set_cov, r.robust_cov, r.std_cov}) {
            require(f >= 0.0 && f <= 1.0, "coverage frequencies must lie in [0, 1]");
        }
        require(r.mse >= 0.0 || std::isnan(r.mse), "MSE must be nonnegative");
    }
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t rep) {
    return rng::derive(master_seed, rng::Stream::Replication, rep);
}

EstimationSettings replication_estimation(const CoverageConfig& cfg, std::uint64_t rep_seed, std::size_t knots) {
    EstimationSettings s = cfg.estimation;
    s.knots = knots;
    s.draw_seed = rng::derive(rep_seed, rng::Stream::EstimationDraws);
    s.certificate.seed = s.certificate.layout == s.layout ? s.draw_seed
                                                          : rng::derive(rep_seed, rng::Stream::CertificateDraws);
    return s;
}

ReplicationOutcome run_replication(const CoverageConfig& cfg, std::size_t rep) {
    ReplicationOutcome out;
    out.index = rep;
    out.seed = replication_seed(cfg.master_seed, rep);

    SimConfig sim = cfg.sim;
    sim.seed = out.seed;
    SimResult simulated;
    try {
        simulated = simulate_panel(sim);
    } catch (const NumericalError& e) {
        out.error = e.what();
        return out;
    }
    const auto model = make_model(sim.model);
    const Theta& truth = sim.model.theta;
    const double critical = critical_value(cfg.alpha);

    if (cfg.check_nesting) {
        EstimationSettings dense = cfg.estimation;
        dense.knots = sim.truth_knots;
        dense.layout = DrawLayout::PerPoint;
        dense.n_draws = sim.truth_draws;
        dense.draw_seed = simulated.truth_draw_seed;
        dense.optimizer.starts = {truth};
        try {
            const LikelihoodProblem problem(*model, simulated.panel, dense);
            const OptimumResult r = mle(problem);
            out.infeasible_ok = true;
            out.infeasible_theta = r.theta;
            out.infeasible_ll = r.value;
        } catch (const NumericalError&) {
            out.infeasible_ok = false;
        }
    }

    for (std::size_t knots : cfg.knot_counts) {
        KnotOutcome k;
        k.knots = knots;
        try {
            const LikelihoodProblem problem(*model, simulated.panel, replication_estimation(cfg, out.seed, knots));
            const OptimumResult hat = mle(problem);
            k.theta_hat = hat.theta;
            k.boundary = hat.boundary;
            k.sup.ll_plugin = hat.value;
            k.sup.ll_lower = sup_lower_loglik(problem).value;
            k.sup.ll_upper = cfg.robust_variant == RobustVariant::UpperSup ? sup_upper_loglik(problem).value
                                                                           : std::numeric_limits<double>::quiet_NaN();
            const auto at_truth = problem.evaluate(truth);
            k.at_truth = at_truth.envelope;
            k.cert_at_truth = at_truth.cert;
            k.truth = classify(k.sup, k.at_truth, critical, cfg.robust_variant);
            if (out.infeasible_ok) {
                k.at_infeasible = problem.evaluate(out.infeasible_theta).envelope;
                k.infeasible_in_set = set_estimate_member(k.sup.ll_lower, k.at_infeasible);
                k.nesting_checked = true;
            }
            k.ok = true;
        } catch (const NumericalError& e) {
            k.ok = false;
            k.error = e.what();
        }
        out.knots.push_back(std::move(k));
    }
    return out;
}

CoverageReport aggregate(const CoverageConfig& cfg, std::span<const ReplicationOutcome> outcomes) {
    std::vector<const ReplicationOutcome*> ordered;
    for (const auto& o : outcomes) ordered.push_back(&o);
    std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->index < b->index; });

    CoverageReport report;
    report.replications = ordered.size();
    report.alpha = cfg.alpha;
    const Theta& truth = cfg.sim.model.theta;
    for (std::size_t j = 0; j < cfg.knot_counts.size(); ++j) {
        CoverageRow row;
        row.knots = cfg.knot_counts[j];
        double se = 0.0;
        std::size_t set = 0, robust = 0, standard = 0;
        for (const ReplicationOutcome* o : ordered) {
            if (!o->error.empty() || j >= o->knots.size() || !o->knots[j].ok) {
                ++row.failures;
                continue;
            }
            const KnotOutcome& k = o->knots[j];
            ++row.n_rep;
            double sq = 0.0;
            for (std::size_t i = 0; i < truth.size(); ++i) sq += (k.theta_hat[i] - truth[i]) * (k.theta_hat[i] - truth[i]);
            se += sq / static_cast<double>(truth.size());
            set += k.truth.in_set_estimate;
            robust += k.truth.in_robust_ci;
            standard += k.truth.in_standard_ci;
            if (k.nesting_checked) {
                ++row.nesting_checked;
                row.nesting_held += k.infeasible_in_set;
            }
        }
        if (row.n_rep > 0) {
            const double n = static_cast<double>(row.n_rep);
            row.mse = se / n;
            row.set_cov = static_cast<double>(set) / n;
            row.robust_cov = static_cast<double>(robust) / n;
            row.std_cov = static_cast<double>(standard) / n;
        }
        report.rows.push_back(row);
    }
    return report;
}

CoverageRun run_coverage(const CoverageConfig& cfg, const CoverageRunOptions& options) {
    cfg.validate();
    const std::size_t n = cfg.replications;
    std::vector<std::optional<ReplicationOutcome>> slots(n);
    CoverageRun run;

    const bool checkpoint = !options.checkpoint_dir.empty();
    const auto manifest_path = options.checkpoint_dir / "manifest.json";
    if (checkpoint) {
        io::ensure_directory(options.checkpoint_dir);
        if (std::filesystem::exists(manifest_path)) {
            const auto manifest = io::read_json(manifest_path);
            if (manifest.value("fingerprint", std::string()) != options.fingerprint) {
                throw ConfigError("checkpoint directory '" + options.checkpoint_dir.string() +
                                  "' belongs to a different configuration");
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto path = options.checkpoint_dir / rep_file_name(i);
                if (!std::filesystem::exists(path)) continue;
                try {
                    slots[i] = replication_from_json(io::read_json(path));
                    ++run.resumed;
                } catch (const ConfigError&) {
                    slots[i].reset();
                } catch (const nlohmann::json::exception&) {
                    slots[i].reset();
                }
            }
        }
    }

    std::mutex mutex;
    auto write_manifest = [&] {
        nlohmann::json completed = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            if (slots[i]) completed.push_back(i);
        }
        io::write_json(manifest_path, {{"fingerprint", options.fingerprint},
                                       {"replications", n},
                                       {"completed", completed},
                                       {"complete", completed.size() == n}});
    };
    if (checkpoint) write_manifest();

    parallel_for(n, [&](std::size_t i) {
        if (slots[i]) return;
        ReplicationOutcome outcome = run_replication(cfg, i);
        if (checkpoint) io::write_json(options.checkpoint_dir / rep_file_name(i), to_json(outcome));
        const std::lock_guard lock(mutex);
        slots[i] = std::move(outcome);
        if (checkpoint) write_manifest();
        if (options.on_replication) options.on_replication(*slots[i]);
    });

    for (auto& s : slots) run.outcomes.push_back(std::move(*s));
    run.report = aggregate(cfg, run.outcomes);
    return run;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const KnotOutcome& k) {
    nlohmann::json j{{"knots", k.knots}, {"ok", k.ok}};
    if (!k.ok) {
        j["error"] = k.error;
        return j;
    }
    j["theta_hat"] = k.theta_hat;
    j["boundary"] = k.boundary;
    j["sup_ll_lower"] = k.sup.ll_lower;
    j["sup_ll_plugin"] = k.sup.ll_plugin;
    // NaN (not computed) serializes as null.
    j["sup_ll_upper"] = k.sup.ll_upper;
    j["at_truth"] = envelope_json(k.at_truth);
    j["certificate_at_truth"] = io::to_json(k.cert_at_truth);
    j["truth"] = membership_json(k.truth);
    j["nesting_checked"] = k.nesting_checked;
    if (k.nesting_checked) {
        j["at_infeasible"] = envelope_json(k.at_infeasible);
        j["infeasible_in_set"] = k.infeasible_in_set;
    }
    return j;
}

nlohmann::json to_json(const ReplicationOutcome& r) {
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& k : r.knots) knots.push_back(to_json(k));
    nlohmann::json j{{"index", r.index}, {"seed", r.seed}, {"knots", knots}, {"infeasible_ok", r.infeasible_ok}};
    if (!r.error.empty()) j["error"] = r.error;
    if (r.infeasible_ok) {
        j["infeasible_theta"] = r.infeasible_theta;
        j["infeasible_ll"] = r.infeasible_ll;
    }
    return j;
}

ReplicationOutcome replication_from_json(const nlohmann::json& j) {
    ReplicationOutcome r;
    r.index = j.at("index").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.error = j.value("error", std::string());
    r.infeasible_ok = j.at("infeasible_ok").get<bool>();
    if (r.infeasible_ok) {
        r.infeasible_theta = j.at("infeasible_theta").get<Theta>();
        r.infeasible_ll = j.at("infeasible_ll").get<double>();
    }
    for (const auto& kj : j.at("knots")) {
        KnotOutcome k;
        k.knots = kj.at("knots").get<std::size_t>();
        k.ok = kj.at("ok").get<bool>();
        if (!k.ok) {
            k.error = kj.value("error", std::string());
            r.knots.push_back(std::move(k));
            continue;
        }
        k.theta_hat = kj.at("theta_hat").get<Theta>();
        k.boundary = kj.at("boundary").get<bool>();
        k.sup.ll_lower = kj.at("sup_ll_lower").get<double>();
        k.sup.ll_plugin = kj.at("sup_ll_plugin").get<double>();
        k.sup.ll_upper = kj.at("sup_ll_upper").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                         : kj.at("sup_ll_upper").get<double>();
        k.at_truth = envelope_from_json(kj.at("at_truth"));
        k.cert_at_truth = io::certificate_from_json(kj.at("certificate_at_truth"));
        const auto& m = kj.at("truth");
        k.truth = {m.at("in_set_estimate").get<bool>(), m.at("in_robust_ci").get<bool>(),
                   m.at("in_standard_ci").get<bool>()};
        k.nesting_checked = kj.at("nesting_checked").get<bool>();
        if (k.nesting_checked) {
            k.at_infeasible = envelope_from_json(kj.at("at_infeasible"));
            k.infeasible_in_set = kj.at("infeasible_in_set").get<bool>();
        }
        r.knots.push_back(std::move(k));
    }
    return r;
}

nlohmann::json to_json(const CoverageReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row{{"knots", r.knots},           {"n_rep", r.n_rep},
                           {"failures", r.failures},     {"mse", r.mse},
                           {"set_cov", r.set_cov},       {"robust_cov", r.robust_cov},
                           {"std_cov", r.std_cov}};
        if (r.nesting_checked > 0) {
            row["nesting_checked"] = r.nesting_checked;
            row["nesting_held"] = r.nesting_held;
        }
        rows.push_back(row);
    }
    return {{"replications", report.replications}, {"alpha", report.alpha}, {"rows", rows}};
}

std::string coverage_csv(const CoverageReport& report) {
    std::string out = "knots,n_rep,mse,set_cov,robust_cov,std_cov\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.knots) + ',' + std::to_string(r.n_rep) + ',' + io::format_double(r.mse) + ',' +
               io::format_double(r.set_cov) + ',' + io::format_double(r.robust_cov) + ',' +
               io::format_double(r.std_cov) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

void ThetaGrid::validate() const {
    require(n1 >= 1 && n2 >= 1, "theta grid needs at least one point per axis");
    require(std::isfinite(t1_lo) && std::isfinite(t1_hi) && std::isfinite(t2_lo) && std::isfinite(t2_hi),
            "theta grid bounds must be finite");
    require(t1_lo <= t1_hi && t2_lo <= t2_hi, "theta grid bounds must satisfy lo <= hi");
}

std::vector<Theta> ThetaGrid::points() const {
    validate();
    const auto a = linspace(t1_lo, t1_hi, n1);
    const auto b = linspace(t2_lo, t2_hi, n2);
    std::vector<Theta> out;
    out.reserve(n1 * n2);
    for (double x : a) {
        for (double y : b) out.push_back({x, y});
    }
    return out;
}

ThetaGrid ThetaGrid::parse(const std::string& text) {
    auto fail = [&] {
        return ConfigError("grid spec '" + text + "' must look like t1_lo:t1_hi:n1,t2_lo:t2_hi:n2");
    };
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw fail();
    auto axis = [&](const std::string& part, double& lo, double& hi, std::size_t& n) {
        std::istringstream in(part);
        std::string a, b, c;
        if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) ) throw fail();
        try {
            std::size_t used = 0;
            lo = std::stod(a, &used);
            if (used != a.size()) throw fail();
            hi = std::stod(b, &used);
            if (used != b.size()) throw fail();
            const long long count = std::stoll(c, &used);
            if (used != c.size() || count < 0) throw fail();
            n = static_cast<std::size_t>(count);
        } catch (const std::logic_error&) {
            throw fail();
        }
    };
    ThetaGrid g;
    axis(text.substr(0, comma), g.t1_lo, g.t1_hi, g.n1);
    axis(text.substr(comma + 1), g.t2_lo, g.t2_hi, g.n2);
    g.validate();
    return g;
}

ThetaGrid ThetaGrid::around(const Theta& center) {
    require(center.size() == 2, "theta grid center needs two components");
    return {center[0] - 1.0, center[0] + 1.0, 41, center[1] - 3.0, center[1] + 3.0, 41};
}

SetGridResult compute_set_grid(const LikelihoodProblem& problem, const ThetaGrid& grid, double alpha,
                               RobustVariant variant) {
    const auto points = grid.points();
    SetGridResult result;
    result.alpha = alpha;
    result.variant = variant;
    result.critical = critical_value(alpha);
    result.theta_hat = mle(problem);
    result.lower_arg = sup_lower_loglik(problem);
    result.sup.ll_plugin = result.theta_hat.value;
    result.sup.ll_lower = result.lower_arg.value;
    if (variant == RobustVariant::UpperSup) result.sup.ll_upper = sup_upper_loglik(problem).value;

    result.rows.resize(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        SetGridRow& row = result.rows[i];
        row.theta = points[i];
        try {
            row.envelope = problem.evaluate(points[i]).envelope;
            row.membership = classify(result.sup, row.envelope, result.critical, variant);
        } catch (const NumericalError&) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.envelope = {nan, nan, nan};
            row.membership = {};
        }
    });
    return result;
}

std::string membership_csv(const SetGridResult& result) {
    std::string out = "theta1,theta2,in_set_estimate,in_robust_ci,in_standard_ci,ll_upper,ll_lower,ll_point\n";
    for (const auto& r : result.rows) {
        out += io::format_double(r.theta[0]) + ',' + io::format_double(r.theta[1]) + ',' +
               (r.membership.in_set_estimate ? "1" : "0") + ',' + (r.membership.in_robust_ci ? "1" : "0") + ',' +
               (r.membership.in_standard_ci ? "1" : "0") + ',' + io::format_double(r.envelope.ll_upper) + ',' +
               io::format_double(r.envelope.ll_lower) + ',' + io::format_double(r.envelope.ll_point) + '\n';
    }
    return out;
}

nlohmann::json set_grid_sidecar(const SetGridResult& result) {
    nlohmann::json j{
        {"theta_hat", result.theta_hat.theta},
        {"theta_hat_boundary", result.theta_hat.boundary},
        {"sup_ll_plugin", result.sup.ll_plugin},
        {"sup_ll_lower", result.sup.ll_lower},
        {"sup_ll_lower_argmax", result.lower_arg.theta},
        {"critical_value", result.critical},
        {"alpha", result.alpha},
        {"robust_variant", to_string(result.variant)},
        {"rows", result.rows.size()},
    };
    if (result.variant == RobustVariant::UpperSup) j["sup_ll_upper"] = result.sup.ll_upper;
    return j;
}

SetGridResult export_set_grid(const LikelihoodProblem& problem, const ThetaGrid& grid, double alpha,
                              const std::filesystem::path& csv_path, RobustVariant variant) {
    SetGridResult result = compute_set_grid(problem, grid, alpha, variant);
    if (csv_path.has_parent_path()) io::ensure_directory(csv_path.parent_path());
    io::write_text(csv_path, membership_csv(result));
    io::write_json(csv_path.parent_path() / (csv_path.stem().string() + ".meta.json"), set_grid_sidecar(result));
    return result;
}

}  // namespace certdp
