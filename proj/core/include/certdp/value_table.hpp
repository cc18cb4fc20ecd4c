#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace certdp {

// n evenly spaced points from lo to hi inclusive; the last point is exactly hi.
std::vector<double> linspace(double lo, double hi, std::size_t n);

// Position of a state relative to a knot grid: value = (1-frac)*v[index] + frac*v[index+1].
struct Bracket {
    std::size_t index = 0;
    double frac = 0.0;
};

// Per-choice values sampled on a strictly increasing knot grid. Evaluation
// between knots is linear; outside [knots.front(), knots.back()] it clamps.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(std::vector<double> knots, int n_choices);
    ValueTable(std::vector<double> knots, int n_choices, std::vector<double> values);

    std::span<const double> knots() const { return knots_; }
    std::size_t n_knots() const { return knots_.size(); }
    int n_choices() const { return n_choices_; }

    // values laid out choice-major: [d * n_knots + k]
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::span<const double> values(int d) const { return {values_.data() + d * knots_.size(), knots_.size()}; }
    std::span<double> values(int d) { return {values_.data() + d * knots_.size(), knots_.size()}; }

    double at(std::size_t k, int d) const { return values_[d * knots_.size() + k]; }
    double& at(std::size_t k, int d) { return values_[d * knots_.size() + k]; }

    Bracket locate(double s) const;
    double interpolate(const Bracket& b, int d) const;
    double evaluate(double s, int d) const { return interpolate(locate(s), d); }

    // Throws ContractViolation unless knots are strictly increasing and values finite.
    void validate() const;

    ValueTable& operator+=(double shift);

private:
    std::vector<double> knots_;
    int n_choices_ = 0;
    std::vector<double> values_;
};

double sup_norm_distance(const ValueTable& a, const ValueTable& b);

}  // namespace certdp
