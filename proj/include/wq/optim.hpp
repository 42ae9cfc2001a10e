#pragma once

#include <functional>
#include <span>
#include <vector>

namespace wq::optim {

struct NelderMeadOptions {
    /// Stop when max f - min f over the simplex falls below this.
    double f_tol = 1e-8;
    int max_evaluations = 5000;
    /// Per-coordinate offsets of the initial simplex vertices.
    std::vector<double> initial_step;
    /// Fresh simplexes built around the optimum after convergence; guards
    /// against a collapsed simplex stopping early.
    int restarts = 1;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `f` with the Nelder-Mead downhill simplex (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2). Non-finite objective values
/// are treated as +infinity, which lets callers encode box constraints.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options);

}  // namespace wq::optim
