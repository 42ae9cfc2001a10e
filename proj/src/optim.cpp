#include "wq/optim.hpp"

#include "wq/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wq::optim {

namespace {

struct Simplex {
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
};

double safe(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options) {
    const std::size_t dim = x0.size();
    if (dim == 0) throw ParameterError("nelder_mead needs at least one parameter");
    if (!options.initial_step.empty() && options.initial_step.size() != dim)
        throw ParameterError("initial_step size does not match parameter count");

    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return safe(f(x));
    };

    std::vector<double> best = std::move(x0);
    double best_val = eval(best);

    for (int round = 0; round <= options.restarts; ++round) {
        Simplex s;
        s.pts.push_back(best);
        s.vals.push_back(best_val);
        for (std::size_t i = 0; i < dim; ++i) {
            auto p = best;
            double step = options.initial_step.empty() ? (p[i] != 0 ? 0.05 * std::abs(p[i]) : 0.00025)
                                                        : options.initial_step[i];
            p[i] += step;
            s.pts.push_back(p);
            s.vals.push_back(eval(p));
        }

        std::vector<std::size_t> order(dim + 1);
        bool converged = false;
        while (res.evaluations < options.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.vals[a] < s.vals[b]; });
            const auto lo = order.front(), hi = order.back(), second = order[dim - 1];
            if (std::isfinite(s.vals[hi]) && s.vals[hi] - s.vals[lo] <= options.f_tol) {
                converged = true;
                break;
            }
            ++res.iterations;

            std::vector<double> centroid(dim, 0.0);
            for (auto idx : order)
                if (idx != hi)
                    for (std::size_t j = 0; j < dim; ++j) centroid[j] += s.pts[idx][j] / static_cast<double>(dim);

            auto along = [&](double coef) {
                std::vector<double> p(dim);
                for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + coef * (s.pts[hi][j] - centroid[j]);
                return p;
            };

            auto xr = along(-1.0);
            double fr = eval(xr);
            if (fr < s.vals[lo]) {
                auto xe = along(-2.0);
                double fe = eval(xe);
                if (fe < fr) {
                    s.pts[hi] = std::move(xe);
                    s.vals[hi] = fe;
                } else {
                    s.pts[hi] = std::move(xr);
                    s.vals[hi] = fr;
                }
                continue;
            }
            if (fr < s.vals[second]) {
                s.pts[hi] = std::move(xr);
                s.vals[hi] = fr;
                continue;
            }
            // Contraction: outside if the reflected point improved on the
            // worst vertex, inside otherwise.
            bool outside = fr < s.vals[hi];
            auto xc = along(outside ? -0.5 : 0.5);
            double fc = eval(xc);
            if (fc < (outside ? fr : s.vals[hi])) {
                s.pts[hi] = std::move(xc);
                s.vals[hi] = fc;
                continue;
            }
            for (auto idx : order) {
                if (idx == lo) continue;
                for (std::size_t j = 0; j < dim; ++j) s.pts[idx][j] = s.pts[lo][j] + 0.5 * (s.pts[idx][j] - s.pts[lo][j]);
                s.vals[idx] = eval(s.pts[idx]);
            }
        }
        auto it = std::min_element(s.vals.begin(), s.vals.end());
        auto bi = static_cast<std::size_t>(it - s.vals.begin());
        double round_improvement = best_val - *it;
        if (*it <= best_val) {
            best = s.pts[bi];
            best_val = *it;
        }
        res.converged = converged;
        if (!converged) break;
        if (round > 0 && round_improvement <= options.f_tol) break;
    }
    res.x = std::move(best);
    res.value = best_val;
    return res;
}

}  // namespace wq::optim
