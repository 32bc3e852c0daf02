#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "unpci/error.hpp"
#include "unpci/rng.hpp"
#include "unpci/stats.hpp"

namespace unpci {

/// Gaussian kernel density estimate of a single feature.
struct KdeModel {
    std::vector<double> points;
    double h = 1.0;
};

struct CriticalBandwidth {
    double h1 = 0.0;               // smallest unimodal bandwidth found
    double mode_location = 0.0;    // argmax of the density at h1
    double search_tolerance = 0.0; // final bracket width relative to h1
};

namespace detail {

inline constexpr int kModeGridSize = 2048;
// Kernel contributions beyond this many bandwidths underflow to zero.
inline constexpr double kKernelCut = 38.7;

/// Density values on an evenly spaced grid. Points must be sorted; only
/// points within the kernel support window contribute, which keeps small-h
/// evaluations cheap without changing any representable value.
inline std::vector<double> kde_grid(const std::vector<double>& sorted, double h,
                                    double lo, double hi, int grid_size) {
    const std::size_t n = sorted.size();
    const double step = (hi - lo) / static_cast<double>(grid_size - 1);
    const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * kPi));
    const double window = kKernelCut * h;
    std::vector<double> ys(static_cast<std::size_t>(grid_size), 0.0);
    std::size_t first = 0;
    for (int g = 0; g < grid_size; ++g) {
        const double t = lo + step * static_cast<double>(g);
        while (first < n && sorted[first] < t - window) ++first;
        double acc = 0.0;
        for (std::size_t i = first; i < n && sorted[i] <= t + window; ++i) {
            const double z = (t - sorted[i]) / h;
            acc += std::exp(-0.5 * z * z);
        }
        ys[static_cast<std::size_t>(g)] = acc * norm;
    }
    return ys;
}

/// Strict local maxima with plateau runs collapsed; a missing neighbor at
/// either grid boundary counts as satisfied.
inline int count_grid_modes(const std::vector<double>& ys) {
    const std::size_t g = ys.size();
    int modes = 0;
    std::size_t i = 0;
    while (i < g) {
        std::size_t j = i;
        while (j + 1 < g && ys[j + 1] == ys[i]) ++j;
        const bool left_ok = (i == 0) || ys[i] > ys[i - 1];
        const bool right_ok = (j == g - 1) || ys[j] > ys[j + 1];
        if (left_ok && right_ok) ++modes;
        i = j + 1;
    }
    return modes;
}

}

/// Pointwise density of the Gaussian KDE.
inline double density(const KdeModel& model, double t) {
    if (model.points.empty()) throw Error("density: empty model");
    if (!(model.h > 0.0)) throw Error("density: bandwidth must be positive");
    double acc = 0.0;
    for (double x : model.points) acc += normal_pdf((t - x) / model.h);
    return acc / (static_cast<double>(model.points.size()) * model.h);
}

/// Number of modes of the KDE, read off a 2048-point grid spanning
/// [min - 3h, max + 3h]. The grid endpoints sit within three bandwidths of
/// the extreme points, so even near-degenerate bandwidths register their
/// boundary bumps.
inline int mode_count(const KdeModel& model) {
    if (model.points.size() < 1) throw Error("mode_count: empty model");
    if (!(model.h > 0.0)) throw Error("mode_count: bandwidth must be positive");
    std::vector<double> sorted = model.points;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) return 1;
    const double lo = sorted.front() - 3.0 * model.h;
    const double hi = sorted.back() + 3.0 * model.h;
    const auto ys = detail::kde_grid(sorted, model.h, lo, hi, detail::kModeGridSize);
    return detail::count_grid_modes(ys);
}

inline int mode_count(const std::vector<double>& points, double h) {
    return mode_count(KdeModel{points, h});
}

/// Smallest bandwidth at which the KDE is unimodal (Silverman's h1).
/// Bisection is valid because the Gaussian-kernel mode count is monotone
/// non-increasing in h. The returned h1 is the unimodal end of the final
/// bracket, so mode_count(h1) == 1 always holds.
inline CriticalBandwidth critical_bandwidth(const std::vector<double>& points) {
    if (points.size() < 2) throw Error("critical_bandwidth: need at least 2 points");
    std::vector<double> sorted = points;
    std::sort(sorted.begin(), sorted.end());
    const double range = sorted.back() - sorted.front();
    if (!(range > 0.0)) throw DegenerateError("degenerate feature");

    const auto unimodal = [&](double h) {
        const double lo = sorted.front() - 3.0 * h;
        const double hi = sorted.back() + 3.0 * h;
        const auto ys = detail::kde_grid(sorted, h, lo, hi, detail::kModeGridSize);
        return detail::count_grid_modes(ys) <= 1;
    };

    double lower = 1e-6 * range;
    double upper = range;
    int doublings = 0;
    while (!unimodal(upper)) {
        upper *= 2.0;
        if (++doublings > 60) throw Error("critical_bandwidth: no unimodal bracket found");
    }
    const double tol = 1e-3 * upper;
    while (upper - lower >= tol) {
        const double mid = 0.5 * (lower + upper);
        if (unimodal(mid)) {
            upper = mid;
        } else {
            lower = mid;
        }
    }

    CriticalBandwidth out;
    out.h1 = upper;
    out.search_tolerance = (upper - lower) / upper;
    const double lo = sorted.front() - 3.0 * out.h1;
    const double hi = sorted.back() + 3.0 * out.h1;
    const auto ys = detail::kde_grid(sorted, out.h1, lo, hi, detail::kModeGridSize);
    const std::size_t arg = static_cast<std::size_t>(
        std::max_element(ys.begin(), ys.end()) - ys.begin());
    const double step = (hi - lo) / static_cast<double>(detail::kModeGridSize - 1);
    out.mode_location = lo + step * static_cast<double>(arg);
    return out;
}

/// Smoothed-bootstrap draws from the unimodal KDE, rescaled so the sampling
/// distribution keeps the mean and the variance of the empirical
/// distribution of the points (variance with denominator n): resample a
/// point, add h1-scaled Gaussian noise, shrink the deviation from the mean
/// by (1 + h1^2/sigma^2)^(-1/2). h1 = 0 degenerates to a plain bootstrap
/// resample.
inline std::vector<double> sample_null_feature(const std::vector<double>& points,
                                               double h1, std::size_t m,
                                               const RngStream& rng) {
    if (points.empty()) throw Error("sample_null_feature: empty input");
    if (h1 < 0.0) throw Error("sample_null_feature: negative bandwidth");
    auto eng = rng.engine();
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    std::vector<double> out(m);
    if (h1 == 0.0) {
        for (std::size_t i = 0; i < m; ++i) out[i] = points[pick(eng)];
        return out;
    }
    const double var = population_variance(points);
    if (!(var > 0.0)) throw DegenerateError("degenerate feature: zero variance");
    const double mu = mean_of(points);
    const double shrink = 1.0 / std::sqrt(1.0 + h1 * h1 / var);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double base = points[pick(eng)];
        out[i] = mu + shrink * (base - mu + h1 * gauss(eng));
    }
    return out;
}

}
