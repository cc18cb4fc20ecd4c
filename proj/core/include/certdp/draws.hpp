#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace certdp {

enum class DrawLayout {
    // Independent uniforms for every (point, choice, draw), keyed by a counter hash.
    PerPoint,
    // One stratified set u_i = (i + v)/n shared by every point and choice. Makes
    // the empirical Bellman operator a continuous function of the state.
    Common,
};

std::string to_string(DrawLayout layout);
DrawLayout draw_layout_from_string(const std::string& name);

// Uniform variates behind the next-state draws S_{s,d,i}. Generated once and
// reused for every Bellman iteration and every candidate theta.
class DrawSet {
public:
    static DrawSet per_point(std::uint64_t seed, std::size_t n_points, int n_choices, int n_draws);
    static DrawSet common(std::uint64_t seed, int n_draws);

    std::span<const double> draws(std::size_t point, int choice) const;

    DrawLayout layout() const { return layout_; }
    int n_draws() const { return n_draws_; }
    std::size_t n_points() const { return n_points_; }
    int n_choices() const { return n_choices_; }
    std::uint64_t seed() const { return seed_; }

    // True when draws(point, choice) is defined for every point < n and choice < n_choices.
    bool covers(std::size_t n, int n_choices) const;

private:
    DrawLayout layout_ = DrawLayout::Common;
    std::uint64_t seed_ = 0;
    std::size_t n_points_ = 0;
    int n_choices_ = 0;
    int n_draws_ = 0;
    std::vector<double> u_;
};

}  // namespace certdp
