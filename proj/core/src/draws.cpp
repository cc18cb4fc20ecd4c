#include "certdp/draws.hpp"

#include "certdp/errors.hpp"
#include "certdp/rng.hpp"

namespace certdp {

std::string to_string(DrawLayout layout) { return layout == DrawLayout::PerPoint ? "per_point" : "common"; }

DrawLayout draw_layout_from_string(const std::string& name) {
    if (name == "per_point") return DrawLayout::PerPoint;
    if (name == "common") return DrawLayout::Common;
    throw ContractViolation("unknown draw layout '" + name + "' (expected per_point or common)");
}

DrawSet DrawSet::per_point(std::uint64_t seed, std::size_t n_points, int n_choices, int n_draws) {
    require(n_draws >= 1, "draw count must be at least 1");
    require(n_choices >= 1, "draw set needs at least one choice");
    DrawSet set;
    set.layout_ = DrawLayout::PerPoint;
    set.seed_ = seed;
    set.n_points_ = n_points;
    set.n_choices_ = n_choices;
    set.n_draws_ = n_draws;
    set.u_.resize(n_points * static_cast<std::size_t>(n_choices) * n_draws);
    std::size_t at = 0;
    for (std::size_t p = 0; p < n_points; ++p) {
        for (int d = 0; d < n_choices; ++d) {
            for (int i = 0; i < n_draws; ++i) {
                set.u_[at++] = rng::uniform(seed, {p, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(i)});
            }
        }
    }
    return set;
}

DrawSet DrawSet::common(std::uint64_t seed, int n_draws) {
    require(n_draws >= 1, "draw count must be at least 1");
    DrawSet set;
    set.layout_ = DrawLayout::Common;
    set.seed_ = seed;
    set.n_draws_ = n_draws;
    const double offset = rng::uniform(seed, {0});
    set.u_.resize(n_draws);
    for (int i = 0; i < n_draws; ++i) set.u_[i] = (static_cast<double>(i) + offset) / n_draws;
    return set;
}

std::span<const double> DrawSet::draws(std::size_t point, int choice) const {
    const auto n = static_cast<std::size_t>(n_draws_);
    if (layout_ == DrawLayout::Common) return {u_.data(), n};
    require(point < n_points_ && choice >= 0 && choice < n_choices_, "draw index out of range");
    return {u_.data() + (point * n_choices_ + choice) * n, n};
}

bool DrawSet::covers(std::size_t n, int n_choices) const {
    if (layout_ == DrawLayout::Common) return true;
    return n <= n_points_ && n_choices <= n_choices_;
}

}  // namespace certdp
