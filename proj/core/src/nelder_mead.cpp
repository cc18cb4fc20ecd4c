#include "certdp/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "certdp/errors.hpp"

namespace certdp {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

}  // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> x0, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    require(n >= 1, "optimizer needs at least one parameter");
    require(options.xtol > 0.0 && options.initial_step > 0.0, "optimizer tolerances must be positive");
    require(options.lower.empty() || options.lower.size() == n, "lower bound has wrong dimension");
    require(options.upper.empty() || options.upper.size() == n, "upper bound has wrong dimension");

    auto project = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!options.lower.empty()) x[i] = std::max(x[i], options.lower[i]);
            if (!options.upper.empty()) x[i] = std::min(x[i], options.upper[i]);
        }
    };

    NelderMeadResult result;
    auto eval = [&](std::vector<double> x) {
        project(x);
        double v = f(x);
        ++result.evals;
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        return Vertex{std::move(x), v};
    };

    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back(eval(x0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = simplex[0].x;
        x[i] += options.initial_step;
        if (!options.upper.empty() && x[i] > options.upper[i]) x[i] = simplex[0].x[i] - options.initial_step;
        simplex.push_back(eval(std::move(x)));
    }

    auto order = [&] {
        std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(simplex[v].x[i] - simplex[0].x[i]));
        }
        return d;
    };
    auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = c[i] + t * (w[i] - c[i]);
        return x;
    };

    order();
    while (result.evals < options.max_evals) {
        if (diameter() < options.xtol) {
            result.converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
        }
        Vertex& worst = simplex[n];
        Vertex reflected = eval(along(centroid, worst.x, -1.0));
        if (reflected.f < simplex[0].f) {
            Vertex expanded = eval(along(centroid, worst.x, -2.0));
            worst = expanded.f < reflected.f ? std::move(expanded) : std::move(reflected);
        } else if (reflected.f < simplex[n - 1].f) {
            worst = std::move(reflected);
        } else {
            const bool outside = reflected.f < worst.f;
            Vertex contracted = eval(along(centroid, outside ? reflected.x : worst.x, 0.5));
            if (contracted.f < std::min(reflected.f, worst.f)) {
                worst = std::move(contracted);
            } else {
                for (std::size_t v = 1; v <= n; ++v) simplex[v] = eval(along(simplex[0].x, simplex[v].x, 0.5));
            }
        }
        order();
    }

    result.x = simplex[0].x;
    result.f = simplex[0].f;
    for (std::size_t i = 0; i < n; ++i) {
        if (!options.lower.empty() && result.x[i] - options.lower[i] < options.xtol) result.at_boundary = true;
        if (!options.upper.empty() && options.upper[i] - result.x[i] < options.xtol) result.at_boundary = true;
    }
    return result;
}

}  // namespace certdp
