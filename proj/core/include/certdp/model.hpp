#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace certdp {

using Theta = std::vector<double>;

// Euler-Mascheroni constant: the mean of a standard type-1 extreme value draw.
inline constexpr double kEulerGamma = 0.5772156649015329;

enum class ModelKind { BusEngine, FiniteSurrogate };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Parameters of a dynamic discrete choice model. The utility parameters are
// the "true" or default values; estimation passes its own Theta around.
struct ModelSpec {
    ModelKind kind = ModelKind::BusEngine;
    double beta = 0.8;
    Theta theta{-0.6, -4.0};
    std::array<double, 3> gamma{1.0, -1.0, 5.0};  // drift without repair, drift with repair, half-width
    double state_lo = 0.0;
    double state_hi = 20.0;
    int n_choices = 2;
    std::size_t surrogate_states = 41;  // only read for ModelKind::FiniteSurrogate

    // Throws ContractViolation naming the first broken invariant.
    void validate() const;
};

// One support point of a (possibly approximated) next-state distribution.
struct Node {
    double state;
    double weight;
};

// Law of clip(m + U[-h, h], lo, hi): two boundary atoms plus a flat density
// on [a, b]. When the interval is empty the law is a pure atom.
struct ClippedUniform {
    double lo_atom = 0.0;
    double hi_atom = 0.0;
    double a = 0.0;
    double b = 0.0;
    double density = 0.0;

    static ClippedUniform make(double location, double half_width, double lo, double hi);

    double interior_mass() const { return b > a ? (b - a) * density : 0.0; }
};

double total_variation(const ClippedUniform& p, const ClippedUniform& q);

// Interface every model plugs in through. Implementations are immutable after
// construction and safe to share across threads.
class Model {
public:
    virtual ~Model() = default;

    const ModelSpec& spec() const { return spec_; }
    double beta() const { return spec_.beta; }
    int n_choices() const { return spec_.n_choices; }
    double state_lo() const { return spec_.state_lo; }
    double state_hi() const { return spec_.state_hi; }

    virtual std::size_t n_theta() const = 0;

    // u(s, d; theta)
    virtual double utility(double s, int d, std::span<const double> theta) const = 0;

    // Inverse-CDF draw of the next state given a uniform variate.
    virtual double transition_sample(double s, int d, double u01) const = 0;

    // Support points used to integrate over the next state. Monte Carlo models
    // map each uniform to one equally weighted node; exact models ignore the
    // uniforms and emit their full discrete support.
    virtual void transition_nodes(double s, int d, std::span<const double> uniforms,
                                  std::vector<Node>& out) const = 0;

    // Total variation distance between F_{s,d} and F_{s2,d2}.
    virtual double transition_tv(double s, int d, double s2, int d2) const = 0;

    // sup over all state/choice pairs of transition_tv.
    virtual double delta_sup() const = 0;

    // sup over s of max_{d,d'} transition_tv(s, d, s, d').
    virtual double same_state_tv_sup() const = 0;

    // Nonempty when the state space is a finite set of points.
    virtual std::span<const double> finite_states() const { return {}; }

    // True when the model ignores the uniforms in transition_nodes.
    virtual bool exact_expectation() const { return false; }

protected:
    explicit Model(ModelSpec spec);
    void check_choice(int d) const;
    void check_state(double s) const;

private:
    ModelSpec spec_;
};

// The modified bus-engine repair model: u(s,0) = theta1*s, u(s,1) = theta2,
// S' = clip(s + gamma_{d+1} + U[-gamma3, gamma3], lo, hi).
class BusEngineModel final : public Model {
public:
    explicit BusEngineModel(ModelSpec spec);

    std::size_t n_theta() const override { return 2; }
    double utility(double s, int d, std::span<const double> theta) const override;
    double transition_sample(double s, int d, double u01) const override;
    void transition_nodes(double s, int d, std::span<const double> uniforms,
                          std::vector<Node>& out) const override;
    double transition_tv(double s, int d, double s2, int d2) const override;
    double delta_sup() const override { return delta_sup_; }
    double same_state_tv_sup() const override;

    ClippedUniform law(double s, int d) const;

private:
    double delta_sup_;
};

// Finite-state discretisation of the bus model. States are `surrogate_states`
// evenly spaced points on [lo, hi]; F_{s,d} puts on each state the mass that
// the continuous clipped uniform assigns to that state's cell. Expectations
// are exact sums, so Bellman fixed points can be computed to machine precision.
class FiniteSurrogateModel final : public Model {
public:
    explicit FiniteSurrogateModel(ModelSpec spec);

    std::size_t n_theta() const override { return 2; }
    double utility(double s, int d, std::span<const double> theta) const override;
    double transition_sample(double s, int d, double u01) const override;
    void transition_nodes(double s, int d, std::span<const double> uniforms,
                          std::vector<Node>& out) const override;
    double transition_tv(double s, int d, double s2, int d2) const override;
    double delta_sup() const override { return delta_sup_; }
    double same_state_tv_sup() const override { return same_state_sup_; }
    std::span<const double> finite_states() const override { return states_; }
    bool exact_expectation() const override { return true; }

    std::size_t state_index(double s) const;
    std::span<const double> probabilities(std::size_t state, int d) const;

private:
    std::vector<double> states_;
    std::vector<double> probs_;  // [(state * n_choices + d) * n_states + j]
    double delta_sup_ = 0.0;
    double same_state_sup_ = 0.0;
};

std::unique_ptr<Model> make_model(const ModelSpec& spec);

// utility() for the bus engine family, free of any model object.
double bus_utility(double s, int d, std::span<const double> theta);

// clip(s + gamma_{d+1} + (2*u01 - 1)*gamma3, lo, hi)
double bus_transition_sample(double s, int d, const std::array<double, 3>& gamma, double u01,
                             double lo, double hi);

}  // namespace certdp
