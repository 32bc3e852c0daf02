#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "unpci/error.hpp"
#include "unpci/matrix.hpp"
#include "unpci/rng.hpp"

namespace unpci {

enum class ClusterMethod { kKmeans, kSingle, kWard };

enum class CiVariant { kSquaredL2, kL2, kL1 };

struct Clustering {
    std::vector<int> labels;   // values in {1, 2}; observation 0 is in cluster 1
    Matrix cluster_means;      // 2 x p
    double wss = 0.0;          // within-cluster sum of squares
    ClusterMethod method = ClusterMethod::kKmeans;
    // Hierarchical cuts may legitimately isolate one observation; the caller
    // decides whether that invalidates the run.
    bool singleton_warning = false;
};

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t p) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double d = a[j] - b[j];
        acc += d * d;
    }
    return acc;
}

/// Swaps labels so observation 0 carries label 1; reorders means to match.
inline void canonicalize(Clustering& c) {
    if (c.labels.empty() || c.labels[0] == 1) return;
    for (int& l : c.labels) l = 3 - l;
    const std::size_t p = c.cluster_means.cols();
    for (std::size_t j = 0; j < p; ++j) {
        std::swap(c.cluster_means(0, j), c.cluster_means(1, j));
    }
}

inline void fill_means_and_wss(const Matrix& x, Clustering& c) {
    const std::size_t n = x.rows(), p = x.cols();
    c.cluster_means = Matrix(2, p);
    std::size_t counts[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(c.labels[i] - 1);
        ++counts[k];
        const double* xi = x.row_ptr(i);
        double* m = c.cluster_means.row_ptr(k);
        for (std::size_t j = 0; j < p; ++j) m[j] += xi[j];
    }
    for (std::size_t k = 0; k < 2; ++k) {
        if (counts[k] == 0) throw Error("empty cluster");
        double* m = c.cluster_means.row_ptr(k);
        for (std::size_t j = 0; j < p; ++j) m[j] /= static_cast<double>(counts[k]);
    }
    c.wss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(c.labels[i] - 1);
        c.wss += sq_dist(x.row_ptr(i), c.cluster_means.row_ptr(k), p);
    }
    c.singleton_warning = counts[0] <= 1 || counts[1] <= 1;
}

}

/// Best-of-restarts Lloyd's 2-means with kmeans++ seeding. Ties in the
/// assignment step go to the lower cluster id; restarts that end with a
/// singleton or empty cluster are discarded.
inline Clustering kmeans2(const Matrix& x, const RngStream& rng, int restarts = 10) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 4) throw Error("kmeans2: need at least 4 observations");
    if (restarts < 1) throw Error("kmeans2: restarts must be positive");
    constexpr int kMaxIter = 100;

    Clustering best;
    bool have_best = false;
    std::vector<int> labels(n);
    std::vector<double> c1(p), c2(p), d2first(n);

    for (int r = 0; r < restarts; ++r) {
        auto eng = rng.derive(static_cast<std::uint64_t>(r)).engine();
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        const std::size_t i1 = pick(eng);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2first[i] = detail::sq_dist(x.row_ptr(i), x.row_ptr(i1), p);
            total += d2first[i];
        }
        if (!(total > 0.0)) continue;  // all points identical to the seed
        std::uniform_real_distribution<double> unif(0.0, total);
        const double target = unif(eng);
        std::size_t i2 = n - 1;
        double cum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cum += d2first[i];
            if (cum >= target && d2first[i] > 0.0) {
                i2 = i;
                break;
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            c1[j] = x(i1, j);
            c2[j] = x(i2, j);
        }

        std::fill(labels.begin(), labels.end(), 0);
        bool valid = true;
        for (int it = 0; it < kMaxIter; ++it) {
            bool changed = false;
            std::size_t n1 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double* xi = x.row_ptr(i);
                const double da = detail::sq_dist(xi, c1.data(), p);
                const double db = detail::sq_dist(xi, c2.data(), p);
                const int lab = (db < da) ? 2 : 1;
                if (lab != labels[i]) {
                    labels[i] = lab;
                    changed = true;
                }
                if (lab == 1) ++n1;
            }
            if (n1 == 0 || n1 == n) {
                valid = false;
                break;
            }
            if (!changed) break;
            std::fill(c1.begin(), c1.end(), 0.0);
            std::fill(c2.begin(), c2.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double* xi = x.row_ptr(i);
                double* c = (labels[i] == 1) ? c1.data() : c2.data();
                for (std::size_t j = 0; j < p; ++j) c[j] += xi[j];
            }
            for (std::size_t j = 0; j < p; ++j) {
                c1[j] /= static_cast<double>(n1);
                c2[j] /= static_cast<double>(n - n1);
            }
        }
        if (!valid) continue;
        const std::size_t n1 = static_cast<std::size_t>(
            std::count(labels.begin(), labels.end(), 1));
        if (n1 <= 1 || n - n1 <= 1) continue;  // singleton restart

        Clustering cand;
        cand.labels = labels;
        cand.method = ClusterMethod::kKmeans;
        detail::fill_means_and_wss(x, cand);
        if (!have_best || cand.wss < best.wss) {
            best = std::move(cand);
            have_best = true;
        }
    }
    if (!have_best) throw DegenerateError("degenerate clustering");
    detail::canonicalize(best);
    return best;
}

/// Agglomerative 2-cluster cut. The merge tree is built with the
/// nearest-neighbor chain algorithm, valid here because single linkage and
/// Ward's method are both reducible; the two clusters standing before the
/// final merge form the cut. Single linkage works on Euclidean distances,
/// Ward on squared distances through the Lance-Williams recurrence.
inline Clustering hierarchical2(const Matrix& x, ClusterMethod linkage) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 4) throw Error("hierarchical2: need at least 4 observations");
    if (linkage != ClusterMethod::kSingle && linkage != ClusterMethod::kWard) {
        throw Error("hierarchical2: linkage must be single or ward");
    }
    const bool ward = linkage == ClusterMethod::kWard;

    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double sq = detail::sq_dist(x.row_ptr(i), x.row_ptr(j), p);
            const double v = ward ? sq : std::sqrt(sq);
            d(i, j) = v;
            d(j, i) = v;
        }
    }

    std::vector<bool> active(n, true);
    std::vector<double> size(n, 1.0);
    std::vector<std::pair<std::size_t, std::size_t>> merges;
    merges.reserve(n - 1);
    std::vector<std::size_t> chain;
    chain.reserve(n);

    while (merges.size() < n - 1) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < n; ++i) {
                if (active[i]) {
                    chain.push_back(i);
                    break;
                }
            }
        }
        for (;;) {
            const std::size_t c = chain.back();
            const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
            std::size_t nearest = n;
            double bestd = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < n; ++k) {
                if (!active[k] || k == c) continue;
                if (d(c, k) < bestd) {
                    bestd = d(c, k);
                    nearest = k;
                }
            }
            if (prev < n && d(c, prev) == bestd) nearest = prev;
            if (nearest == prev) {
                const std::size_t a = std::min(c, prev), b = std::max(c, prev);
                for (std::size_t k = 0; k < n; ++k) {
                    if (!active[k] || k == a || k == b) continue;
                    double nd;
                    if (ward) {
                        const double na = size[a], nb = size[b], nk = size[k];
                        nd = ((na + nk) * d(a, k) + (nb + nk) * d(b, k) -
                              nk * d(a, b)) /
                             (na + nb + nk);
                    } else {
                        nd = std::min(d(a, k), d(b, k));
                    }
                    d(a, k) = nd;
                    d(k, a) = nd;
                }
                size[a] += size[b];
                active[b] = false;
                merges.emplace_back(a, b);
                chain.pop_back();
                chain.pop_back();
                break;
            }
            chain.push_back(nearest);
        }
    }

    // Union-find over all merges but the last; the surviving two roots are
    // the 2-cut clusters.
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    const auto find = [&](std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (std::size_t m = 0; m + 1 < merges.size(); ++m) {
        parent[find(merges[m].second)] = find(merges[m].first);
    }
    const std::size_t root1 = find(0);
    Clustering out;
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = find(i) == root1 ? 1 : 2;
    out.method = linkage;
    detail::fill_means_and_wss(x, out);
    detail::canonicalize(out);
    return out;
}

/// Within-to-total dispersion ratio of a 2-way partition. Centers are the
/// cluster means and the grand mean for every variant; the variants change
/// only the per-observation distance (squared L2 by default, plain L2 or L1
/// as alternatives).
inline double cluster_index(const Matrix& x, const std::vector<int>& labels,
                            CiVariant variant = CiVariant::kSquaredL2) {
    const std::size_t n = x.rows(), p = x.cols();
    if (labels.size() != n) throw Error("cluster_index: label length mismatch");
    std::size_t counts[2] = {0, 0};
    for (int l : labels) {
        if (l != 1 && l != 2) throw Error("cluster_index: labels must be 1 or 2");
        ++counts[static_cast<std::size_t>(l - 1)];
    }
    if (counts[0] == 0 || counts[1] == 0) throw Error("empty cluster");

    Matrix centers(2, p);
    std::vector<double> grand(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row_ptr(i);
        double* m = centers.row_ptr(static_cast<std::size_t>(labels[i] - 1));
        for (std::size_t j = 0; j < p; ++j) {
            m[j] += xi[j];
            grand[j] += xi[j];
        }
    }
    for (std::size_t k = 0; k < 2; ++k) {
        double* m = centers.row_ptr(k);
        for (std::size_t j = 0; j < p; ++j) m[j] /= static_cast<double>(counts[k]);
    }
    for (std::size_t j = 0; j < p; ++j) grand[j] /= static_cast<double>(n);

    const auto dist = [&](const double* a, const double* b) {
        double acc = 0.0;
        switch (variant) {
            case CiVariant::kSquaredL2:
                return detail::sq_dist(a, b, p);
            case CiVariant::kL2:
                return std::sqrt(detail::sq_dist(a, b, p));
            case CiVariant::kL1:
                for (std::size_t j = 0; j < p; ++j) acc += std::fabs(a[j] - b[j]);
                return acc;
        }
        return acc;
    };

    double wss = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row_ptr(i);
        wss += dist(xi, centers.row_ptr(static_cast<std::size_t>(labels[i] - 1)));
        tss += dist(xi, grand.data());
    }
    if (!(tss > 0.0)) throw DegenerateError("zero total variation");
    return wss / tss;
}

}
