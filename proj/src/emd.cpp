#include "wq/decompose.hpp"
#include "wq/error.hpp"

#include <algorithm>
#include <cmath>

namespace wq::decompose {

void EmdConfig::validate() const {
    if (!(sd_threshold > 0)) throw ParameterError("EMD sd_threshold must be positive");
    if (max_sift_iters < 1) throw ParameterError("EMD max_sift_iters must be at least 1");
    if (max_imfs < 1) throw ParameterError("EMD max_imfs must be at least 1");
    if (mirror_extrema < 1) throw ParameterError("EMD mirror_extrema must be at least 1");
}

Extrema find_extrema(std::span<const double> x) {
    Extrema e;
    const std::size_t n = x.size();
    if (n < 3) return e;
    // Runs of equal values; a run strictly above (below) both neighbouring
    // runs is a maximum (minimum) located at its midpoint.
    struct Run {
        std::size_t begin, end;
        double value;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && x[j] == x[i]) ++j;
        runs.push_back({i, j - 1, x[i]});
        i = j;
    }
    for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
        const auto& prev = runs[r - 1];
        const auto& cur = runs[r];
        const auto& next = runs[r + 1];
        std::size_t mid = (cur.begin + cur.end) / 2;
        if (cur.value > prev.value && cur.value > next.value) e.maxima.push_back(mid);
        else if (cur.value < prev.value && cur.value < next.value) e.minima.push_back(mid);
    }
    return e;
}

std::size_t count_zero_crossings(std::span<const double> x) {
    std::size_t count = 0;
    int last = 0;
    for (double v : x) {
        int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

std::vector<double> cubic_spline_on_grid(std::span<const double> xs, std::span<const double> ys, std::size_t n) {
    const std::size_t k = xs.size();
    if (k != ys.size() || k < 2) throw ParameterError("spline needs at least two knots");
    std::vector<double> out(n);
    if (k == 2) {
        double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        for (std::size_t i = 0; i < n; ++i) out[i] = ys[0] + slope * (static_cast<double>(i) - xs[0]);
        return out;
    }
    // Natural spline: second derivatives M with M_0 = M_{k-1} = 0, tridiagonal
    // system solved by the Thomas algorithm.
    std::vector<double> h(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        h[i] = xs[i + 1] - xs[i];
        if (!(h[i] > 0)) throw ParameterError("spline knots must be strictly increasing");
    }
    std::vector<double> M(k, 0.0), c(k, 0.0), d(k, 0.0);
    for (std::size_t i = 1; i + 1 < k; ++i) {
        double a = h[i - 1], b = 2 * (h[i - 1] + h[i]), cc = h[i];
        double rhs = 6 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = k - 2; i >= 1; --i) M[i] = d[i] - c[i] * M[i + 1];

    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i);
        while (seg + 2 < k && t > xs[seg + 1]) ++seg;
        double hh = h[seg];
        double A = (xs[seg + 1] - t) / hh, B = (t - xs[seg]) / hh;
        out[i] = A * ys[seg] + B * ys[seg + 1] +
                 ((A * A * A - A) * M[seg] + (B * B * B - B) * M[seg + 1]) * hh * hh / 6.0;
    }
    return out;
}

namespace {

struct Knots {
    std::vector<double> pos;
    std::vector<double> val;
};

/// Mirror extension of `nsym` extrema at each end. The symmetry axis is the
/// outermost extremum when the end sample lies beyond it, otherwise the end
/// sample itself, which then also acts as an extremum of the opposite kind.
void boundary_knots(std::span<const double> x, const Extrema& e, std::size_t nsym, Knots& upper, Knots& lower) {
    const auto n = x.size();
    const auto& mx = e.maxima;
    const auto& mn = e.minima;
    auto take = [](const std::vector<std::size_t>& v, std::size_t from, std::size_t count) {
        std::vector<double> out;
        for (std::size_t i = from; i < std::min(v.size(), from + count); ++i) out.push_back(static_cast<double>(i < v.size() ? v[i] : 0));
        return out;
    };

    // Left end.
    std::vector<double> lmax, lmin;  // original positions to be mirrored
    double lsym;
    bool max_first = mx.front() < mn.front();
    if (max_first) {
        if (x[0] > x[mn.front()]) {
            lmax = take(mx, 1, nsym);
            lmin = take(mn, 0, nsym);
            lsym = static_cast<double>(mx.front());
        } else {
            lmax = take(mx, 0, nsym);
            lmin = take(mn, 0, nsym - 1);
            lmin.insert(lmin.begin(), 0.0);
            lsym = 0.0;
        }
    } else {
        if (x[0] < x[mx.front()]) {
            lmax = take(mx, 0, nsym);
            lmin = take(mn, 1, nsym);
            lsym = static_cast<double>(mn.front());
        } else {
            lmax = take(mx, 0, nsym - 1);
            lmax.insert(lmax.begin(), 0.0);
            lmin = take(mn, 0, nsym);
            lsym = 0.0;
        }
    }
    auto mirrored_min_pos = [&](const std::vector<double>& v, double sym) {
        double m = 1e300;
        for (double p : v) m = std::min(m, 2 * sym - p);
        return v.empty() ? 1e300 : m;
    };
    if (lmax.empty() || lmin.empty() || mirrored_min_pos(lmax, lsym) > 0 || mirrored_min_pos(lmin, lsym) > 0) {
        lsym = 0.0;
        lmax = take(mx, 0, nsym);
        lmin = take(mn, 0, nsym);
    }

    // Right end, same rules reflected.
    const double last = static_cast<double>(n - 1);
    std::vector<double> rmax, rmin;
    double rsym;
    auto take_back = [](const std::vector<std::size_t>& v, std::size_t skip, std::size_t count) {
        std::vector<double> out;
        for (std::size_t i = 0; i < count && skip + i < v.size(); ++i)
            out.push_back(static_cast<double>(v[v.size() - 1 - skip - i]));
        return out;
    };
    bool max_last = mx.back() > mn.back();
    if (max_last) {
        if (x[n - 1] > x[mn.back()]) {
            rmax = take_back(mx, 1, nsym);
            rmin = take_back(mn, 0, nsym);
            rsym = static_cast<double>(mx.back());
        } else {
            rmax = take_back(mx, 0, nsym);
            rmin = take_back(mn, 0, nsym - 1);
            rmin.insert(rmin.begin(), last);
            rsym = last;
        }
    } else {
        if (x[n - 1] < x[mx.back()]) {
            rmax = take_back(mx, 0, nsym);
            rmin = take_back(mn, 1, nsym);
            rsym = static_cast<double>(mn.back());
        } else {
            rmax = take_back(mx, 0, nsym - 1);
            rmax.insert(rmax.begin(), last);
            rmin = take_back(mn, 0, nsym);
            rsym = last;
        }
    }
    auto mirrored_max_pos = [&](const std::vector<double>& v, double sym) {
        double m = -1e300;
        for (double p : v) m = std::max(m, 2 * sym - p);
        return v.empty() ? -1e300 : m;
    };
    if (rmax.empty() || rmin.empty() || mirrored_max_pos(rmax, rsym) < last ||
        mirrored_max_pos(rmin, rsym) < last) {
        rsym = last;
        rmax = take_back(mx, 0, nsym);
        rmin = take_back(mn, 0, nsym);
    }

    auto value_at = [&](double p) { return x[static_cast<std::size_t>(p)]; };
    auto assemble = [&](const std::vector<double>& left, const std::vector<std::size_t>& mid,
                        const std::vector<double>& right, Knots& k) {
        std::vector<std::pair<double, double>> pts;
        for (double p : left) pts.emplace_back(2 * lsym - p, value_at(p));
        for (auto p : mid) pts.emplace_back(static_cast<double>(p), x[p]);
        for (double p : right) pts.emplace_back(2 * rsym - p, value_at(p));
        std::sort(pts.begin(), pts.end());
        k.pos.clear();
        k.val.clear();
        for (const auto& [p, v] : pts) {
            if (!k.pos.empty() && p <= k.pos.back()) continue;
            k.pos.push_back(p);
            k.val.push_back(v);
        }
    };
    assemble(lmax, mx, rmax, upper);
    assemble(lmin, mn, rmin, lower);
}

bool is_monotonic(std::span<const double> x) {
    bool up = true, down = true;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] < x[i - 1]) up = false;
        if (x[i] > x[i - 1]) down = false;
    }
    return up || down;
}

bool imf_condition(std::span<const double> h, const Extrema& e) {
    auto ext = e.maxima.size() + e.minima.size();
    auto zc = count_zero_crossings(h);
    return (ext > zc ? ext - zc : zc - ext) <= 1;
}

}  // namespace

ImfSet emd(std::span<const double> x, const EmdConfig& config) {
    config.validate();
    ImfSet out;
    std::vector<double> r(x.begin(), x.end());
    auto finish = [&] {
        std::reverse(out.imfs.begin(), out.imfs.end());
        std::reverse(out.sift_stats.begin(), out.sift_stats.end());
        out.residue = std::move(r);
        return out;
    };
    const auto nsym = static_cast<std::size_t>(config.mirror_extrema);
    const std::size_t n = x.size();
    {
        auto e = find_extrema(r);
        if (n < 10 || e.maxima.size() < 2 || e.minima.size() < 2) {
            out.degenerate = true;
            return finish();
        }
    }

    std::vector<double> h(n), h_next(n);
    Knots upper, lower;
    while (static_cast<int>(out.imfs.size()) < config.max_imfs) {
        auto e = find_extrema(r);
        if (e.maxima.size() + e.minima.size() < 3 || e.maxima.size() < 2 || e.minima.size() < 2 ||
            is_monotonic(r))
            break;
        h = r;
        SiftStats stats;
        stats.stop = SiftStop::max_iterations;
        while (stats.iterations < config.max_sift_iters) {
            auto he = find_extrema(h);
            if (he.maxima.size() < 2 || he.minima.size() < 2) {
                stats.stop = SiftStop::insufficient_extrema;
                break;
            }
            boundary_knots(h, he, nsym, upper, lower);
            auto env_hi = cubic_spline_on_grid(upper.pos, upper.val, n);
            auto env_lo = cubic_spline_on_grid(lower.pos, lower.val, n);
            double num = 0, den = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double mean = 0.5 * (env_hi[i] + env_lo[i]);
                h_next[i] = h[i] - mean;
                num += mean * mean;
                den += h[i] * h[i];
            }
            std::swap(h, h_next);
            ++stats.iterations;
            stats.final_sd = den > 0 ? num / den : 0.0;
            if (stats.final_sd < config.sd_threshold && imf_condition(h, find_extrema(h))) {
                stats.stop = SiftStop::sd_threshold;
                break;
            }
        }
        if (stats.iterations == 0) break;
        for (std::size_t i = 0; i < n; ++i) r[i] -= h[i];
        out.imfs.push_back(h);
        out.sift_stats.push_back(stats);
    }
    return finish();
}

}  // namespace wq::decompose
