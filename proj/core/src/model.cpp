#include "certdp/model.hpp"

#include <algorithm>
#include <cmath>

#include "certdp/errors.hpp"

namespace certdp {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::BusEngine: return "bus_engine";
        case ModelKind::FiniteSurrogate: return "finite_surrogate";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "bus_engine") return ModelKind::BusEngine;
    if (name == "finite_surrogate") return ModelKind::FiniteSurrogate;
    throw ContractViolation("unknown model kind '" + name + "' (expected bus_engine or finite_surrogate)");
}

void ModelSpec::validate() const {
    require(std::isfinite(beta) && beta >= 0.0 && beta < 1.0, "beta must satisfy 0 <= beta < 1");
    require(std::isfinite(state_lo) && std::isfinite(state_hi) && state_lo < state_hi,
            "state_lo must be strictly below state_hi");
    require(std::isfinite(gamma[2]) && gamma[2] > 0.0, "gamma3 (uniform half-width) must be positive");
    require(std::isfinite(gamma[0]) && std::isfinite(gamma[1]), "gamma1 and gamma2 must be finite");
    require(n_choices >= 2, "n_choices must be at least 2");
    require(n_choices == 2, "the bus-engine family has exactly two choices");
    require(theta.size() == 2, "theta must have two components (theta1, theta2)");
    require(std::isfinite(theta[0]) && std::isfinite(theta[1]), "theta must be finite");
    if (kind == ModelKind::FiniteSurrogate) {
        require(surrogate_states >= 2 && surrogate_states <= 401,
                "surrogate_states must lie in [2, 401]");
    }
}

ClippedUniform ClippedUniform::make(double location, double half_width, double lo, double hi) {
    ClippedUniform law;
    const double left = location - half_width;
    const double right = location + half_width;
    const double width = 2.0 * half_width;
    law.density = 1.0 / width;
    law.lo_atom = std::clamp((lo - left) / width, 0.0, 1.0);
    law.hi_atom = std::clamp((right - hi) / width, 0.0, 1.0);
    law.a = std::max(lo, left);
    law.b = std::min(hi, right);
    if (law.b < law.a) law.b = law.a;
    return law;
}

double total_variation(const ClippedUniform& p, const ClippedUniform& q) {
    double atoms = std::abs(p.lo_atom - q.lo_atom) + std::abs(p.hi_atom - q.hi_atom);

    std::array<double, 4> cuts{p.a, p.b, q.a, q.b};
    std::sort(cuts.begin(), cuts.end());
    auto density_at = [](const ClippedUniform& law, double x) {
        return (x > law.a && x < law.b) ? law.density : 0.0;
    };
    double interior = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double len = cuts[i + 1] - cuts[i];
        if (len <= 0.0) continue;
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        interior += len * std::abs(density_at(p, mid) - density_at(q, mid));
    }
    return std::clamp(0.5 * (atoms + interior), 0.0, 1.0);
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void Model::check_choice(int d) const {
    if (d < 0 || d >= spec_.n_choices) {
        throw ContractViolation("choice index " + std::to_string(d) + " out of range [0, " +
                                std::to_string(spec_.n_choices) + ")");
    }
}

void Model::check_state(double s) const {
    if (!(s >= spec_.state_lo && s <= spec_.state_hi)) {
        throw ContractViolation("state " + std::to_string(s) + " outside [" + std::to_string(spec_.state_lo) +
                                ", " + std::to_string(spec_.state_hi) + "]");
    }
}

double bus_utility(double s, int d, std::span<const double> theta) {
    switch (d) {
        case 0: return theta[0] * s;
        case 1: return theta[1];
        default: throw ContractViolation("choice index " + std::to_string(d) + " out of range [0, 2)");
    }
}

double bus_transition_sample(double s, int d, const std::array<double, 3>& gamma, double u01, double lo,
                             double hi) {
    const double drift = d == 0 ? gamma[0] : gamma[1];
    return std::clamp(s + drift + (2.0 * u01 - 1.0) * gamma[2], lo, hi);
}

// ---------------------------------------------------------------------------
// BusEngineModel

BusEngineModel::BusEngineModel(ModelSpec spec) : Model(std::move(spec)) {
    const auto& g = this->spec().gamma;
    const double far_left = state_lo() + std::min(g[0], g[1]);
    const double far_right = state_hi() + std::max(g[0], g[1]);
    delta_sup_ = total_variation(ClippedUniform::make(far_left, g[2], state_lo(), state_hi()),
                                 ClippedUniform::make(far_right, g[2], state_lo(), state_hi()));
}

double BusEngineModel::utility(double s, int d, std::span<const double> theta) const {
    check_choice(d);
    return bus_utility(s, d, theta);
}

double BusEngineModel::transition_sample(double s, int d, double u01) const {
    check_choice(d);
    return bus_transition_sample(s, d, spec().gamma, u01, state_lo(), state_hi());
}

void BusEngineModel::transition_nodes(double s, int d, std::span<const double> uniforms,
                                      std::vector<Node>& out) const {
    check_choice(d);
    out.clear();
    const double w = 1.0 / static_cast<double>(uniforms.size());
    for (double u : uniforms) {
        out.push_back({bus_transition_sample(s, d, spec().gamma, u, state_lo(), state_hi()), w});
    }
}

ClippedUniform BusEngineModel::law(double s, int d) const {
    check_choice(d);
    const auto& g = spec().gamma;
    return ClippedUniform::make(s + (d == 0 ? g[0] : g[1]), g[2], state_lo(), state_hi());
}

double BusEngineModel::transition_tv(double s, int d, double s2, int d2) const {
    return total_variation(law(s, d), law(s2, d2));
}

double BusEngineModel::same_state_tv_sup() const {
    const auto& g = spec().gamma;
    return std::min(std::abs((g[0] - g[1]) / (2.0 * g[2])), 1.0);
}

// ---------------------------------------------------------------------------
// FiniteSurrogateModel

FiniteSurrogateModel::FiniteSurrogateModel(ModelSpec spec) : Model(std::move(spec)) {
    const std::size_t n = this->spec().surrogate_states;
    const double lo = state_lo();
    const double hi = state_hi();
    const double h = (hi - lo) / static_cast<double>(n - 1);
    states_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        states_[j] = j + 1 == n ? hi : lo + (hi - lo) * (static_cast<double>(j) / static_cast<double>(n - 1));
    }

    const auto& g = this->spec().gamma;
    const int nc = n_choices();
    probs_.assign(n * static_cast<std::size_t>(nc) * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (int d = 0; d < nc; ++d) {
            const double left = states_[k] + (d == 0 ? g[0] : g[1]) - g[2];
            auto cdf = [&](double x) { return std::clamp((x - left) / (2.0 * g[2]), 0.0, 1.0); };
            double* row = &probs_[(k * nc + d) * n];
            double prev = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double next = j + 1 == n ? 1.0 : cdf(states_[j] + 0.5 * h);
                row[j] = next - prev;
                prev = next;
            }
        }
    }

    auto tv_rows = [&](std::size_t r1, std::size_t r2) {
        const double* p = &probs_[r1 * n];
        const double* q = &probs_[r2 * n];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += std::abs(p[j] - q[j]);
        return 0.5 * acc;
    };
    const std::size_t rows = n * nc;
    for (std::size_t r1 = 0; r1 < rows; ++r1) {
        for (std::size_t r2 = r1 + 1; r2 < rows; ++r2) {
            const double tv = tv_rows(r1, r2);
            delta_sup_ = std::max(delta_sup_, tv);
            if (r1 / nc == r2 / nc) same_state_sup_ = std::max(same_state_sup_, tv);
        }
    }
}

std::size_t FiniteSurrogateModel::state_index(double s) const {
    const double lo = state_lo();
    const double h = (state_hi() - lo) / static_cast<double>(states_.size() - 1);
    const double pos = std::round((s - lo) / h);
    if (!(pos >= 0.0 && pos < static_cast<double>(states_.size()))) {
        throw ContractViolation("state " + std::to_string(s) + " is not a surrogate state");
    }
    const auto j = static_cast<std::size_t>(pos);
    if (std::abs(states_[j] - s) > 1e-9 * std::max(1.0, std::abs(s))) {
        throw ContractViolation("state " + std::to_string(s) + " is not a surrogate state");
    }
    return j;
}

std::span<const double> FiniteSurrogateModel::probabilities(std::size_t state, int d) const {
    check_choice(d);
    const std::size_t n = states_.size();
    return {&probs_[(state * n_choices() + d) * n], n};
}

double FiniteSurrogateModel::utility(double s, int d, std::span<const double> theta) const {
    check_choice(d);
    return bus_utility(s, d, theta);
}

double FiniteSurrogateModel::transition_sample(double s, int d, double u01) const {
    const auto p = probabilities(state_index(s), d);
    double cum = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        cum += p[j];
        if (u01 <= cum && p[j] > 0.0) return states_[j];
    }
    for (std::size_t j = p.size(); j-- > 0;) {
        if (p[j] > 0.0) return states_[j];
    }
    return states_.back();
}

void FiniteSurrogateModel::transition_nodes(double s, int d, std::span<const double> /*uniforms*/,
                                            std::vector<Node>& out) const {
    const auto p = probabilities(state_index(s), d);
    out.clear();
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] > 0.0) out.push_back({states_[j], p[j]});
    }
}

double FiniteSurrogateModel::transition_tv(double s, int d, double s2, int d2) const {
    const auto p = probabilities(state_index(s), d);
    const auto q = probabilities(state_index(s2), d2);
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) acc += std::abs(p[j] - q[j]);
    return 0.5 * acc;
}

std::unique_ptr<Model> make_model(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::BusEngine: return std::make_unique<BusEngineModel>(spec);
        case ModelKind::FiniteSurrogate: return std::make_unique<FiniteSurrogateModel>(spec);
    }
    throw ContractViolation("unknown model kind");
}

}  // namespace certdp
