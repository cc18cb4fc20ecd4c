#pragma once

#include <functional>
#include <span>
#include <vector>

namespace certdp {

struct NelderMeadOptions {
    double initial_step = 0.5;  // simplex edge along each coordinate
    double xtol = 1e-5;         // stop when every vertex is within xtol (sup norm) of the best
    int max_evals = 2000;
    std::vector<double> lower;  // optional box; trial points are projected onto it
    std::vector<double> upper;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    bool converged = false;
    bool at_boundary = false;  // best point within xtol of a box face
};

// Minimizes f from x0. Non-finite objective values count as +infinity.
NelderMeadResult nelder_mead_minimize(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> x0, const NelderMeadOptions& options = {});

}  // namespace certdp
