#include "certdp/value_table.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "certdp/errors.hpp"

namespace certdp {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    require(n >= 1, "linspace needs at least one point");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double span = hi - lo;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) out[i] = lo + span * (static_cast<double>(i) / denom);
    out[n - 1] = hi;
    return out;
}

ValueTable::ValueTable(std::vector<double> knots, int n_choices)
    : knots_(std::move(knots)), n_choices_(n_choices), values_(knots_.size() * n_choices, 0.0) {
    validate();
}

ValueTable::ValueTable(std::vector<double> knots, int n_choices, std::vector<double> values)
    : knots_(std::move(knots)), n_choices_(n_choices), values_(std::move(values)) {
    validate();
}

void ValueTable::validate() const {
    require(!knots_.empty(), "value table needs at least one knot");
    require(n_choices_ >= 1, "value table needs at least one choice");
    require(values_.size() == knots_.size() * static_cast<std::size_t>(n_choices_),
            "value table size does not match knots x choices");
    for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
        require(knots_[k] < knots_[k + 1], "knots must be strictly increasing");
    }
    for (double k : knots_) require(std::isfinite(k), "knots must be finite");
    for (double v : values_) require(std::isfinite(v), "value table entries must be finite");
}

Bracket ValueTable::locate(double s) const {
    const std::size_t n = knots_.size();
    if (n == 1 || s <= knots_.front()) return {0, 0.0};
    if (s >= knots_.back()) return {n - 2, 1.0};
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double frac = (s - knots_[j]) / (knots_[j + 1] - knots_[j]);
    return {j, std::clamp(frac, 0.0, 1.0)};
}

double ValueTable::interpolate(const Bracket& b, int d) const {
    const double* v = values_.data() + d * knots_.size();
    if (knots_.size() == 1) return v[0];
    return (1.0 - b.frac) * v[b.index] + b.frac * v[b.index + 1];
}

ValueTable& ValueTable::operator+=(double shift) {
    for (double& v : values_) v += shift;
    return *this;
}

double sup_norm_distance(const ValueTable& a, const ValueTable& b) {
    require(a.values().size() == b.values().size(), "value tables differ in shape");
    double out = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        out = std::max(out, std::abs(a.values()[i] - b.values()[i]));
    }
    return out;
}

}  // namespace certdp
