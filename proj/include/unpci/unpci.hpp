#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "unpci/clustering.hpp"
#include "unpci/covariance.hpp"
#include "unpci/data_model.hpp"
#include "unpci/error.hpp"
#include "unpci/kde.hpp"
#include "unpci/matrix.hpp"
#include "unpci/parallel.hpp"
#include "unpci/rng.hpp"
#include "unpci/stats.hpp"

namespace unpci {

enum class CovChoice { kAuto, kSample, kGlasso };

struct UnpciConfig {
    std::size_t b = 1000;          // null replicates
    double alpha_screen = 0.10;    // t-test screening level
    double rho = 0.02;             // glasso penalty
    ClusterMethod cluster_method = ClusterMethod::kKmeans;
    bool dimension_reduction = false;
    std::uint64_t seed = 0;
    CiVariant ci_variant = CiVariant::kSquaredL2;
    CovChoice covariance = CovChoice::kAuto;
    // Reports the add-one estimate (#{CI_b <= CI_data}+1)/(B+1) alongside the
    // plain proportion; the plain proportion stays the headline number.
    bool add_one_pvalue = false;
    int kmeans_restarts = 10;
    unsigned threads = 0;          // 0: UNPCI_THREADS env or 1

    void validate() const {
        if (b < 1) throw Error("config: B must be at least 1");
        if (!(alpha_screen > 0.0 && alpha_screen < 1.0)) {
            throw Error("config: alpha_screen must be in (0,1)");
        }
        if (rho < 0.0) throw Error("config: rho must be nonnegative");
        if (kmeans_restarts < 1) throw Error("config: restarts must be positive");
    }
};

struct UnpciResult {
    double ci_data = 0.0;
    std::vector<double> null_cis;
    // Fraction of null replicates at least as cluster-indicative as the data:
    // #{CI_b < CI_data} / B, strict. A small index means tight clusters, so
    // the rejection region is the lower tail, matching the z-score below.
    double p_perm = 1.0;
    double z = 0.0;
    double p_normal = 1.0;   // lower tail: small CI means strong clustering
    double p_add_one = 1.0;  // (#{CI_b <= CI_data} + 1) / (B + 1)
    double mu_ci = 0.0;
    double sigma_ci = 0.0;
    std::vector<std::string> selected_features;
    std::vector<int> labels;
    bool screening_fallback = false;   // screening kept only the best feature
    bool singleton_clustering = false; // hierarchical cut isolated one observation
    CovMethod cov_method = CovMethod::kSample;
};

struct ScreenResult {
    std::vector<std::string> selected;  // original feature order
    std::vector<std::size_t> indices;
    bool fallback = false;
};

/// Features whose two-sample Welch t-test across the putative clusters falls
/// below alpha. An empty selection degrades to the single smallest-p feature
/// so downstream stages always have a working matrix.
inline ScreenResult screen_features(const DataMatrix& x, const std::vector<int>& labels,
                                    double alpha) {
    if (labels.size() != x.n()) throw Error("screen_features: label length mismatch");
    std::size_t n1 = 0, n2 = 0;
    for (int l : labels) {
        if (l == 1) {
            ++n1;
        } else if (l == 2) {
            ++n2;
        } else {
            throw Error("screen_features: labels must be 1 or 2");
        }
    }
    if (n1 < 2 || n2 < 2) throw Error("screen_features: each group needs >= 2 observations");

    ScreenResult res;
    double best_p = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    std::vector<double> g1, g2;
    g1.reserve(n1);
    g2.reserve(n2);
    for (std::size_t j = 0; j < x.p(); ++j) {
        g1.clear();
        g2.clear();
        for (std::size_t i = 0; i < x.n(); ++i) {
            (labels[i] == 1 ? g1 : g2).push_back(x.values(i, j));
        }
        const double p = welch_t_test(g1, g2).p_two_sided;
        if (p < alpha) {
            res.selected.push_back(x.feature_ids[j]);
            res.indices.push_back(j);
        }
        if (p < best_p) {
            best_p = p;
            best_j = j;
        }
    }
    if (res.selected.empty()) {
        res.selected.push_back(x.feature_ids[best_j]);
        res.indices.push_back(best_j);
        res.fallback = true;
    }
    return res;
}

namespace detail {

/// X^T X / (n-1) without the SPD requirement of sample_covariance; glasso
/// input in the p >= n regime.
inline Matrix scatter_covariance(const Matrix& x) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 2) throw Error("scatter_covariance: need >= 2 rows");
    Matrix s(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row_ptr(i);
        for (std::size_t a = 0; a < p; ++a) {
            if (xi[a] == 0.0) continue;
            double* row = s.row_ptr(a);
            for (std::size_t b = a; b < p; ++b) row[b] += xi[a] * xi[b];
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            const double v = s(a, b) / denom;
            s(a, b) = v;
            s(b, a) = v;
        }
    }
    return s;
}

/// Divides each column by its sample standard deviation, in place.
inline void scale_columns_unit(Matrix& m) {
    const auto vars = column_variances(m);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (!(vars[j] > 0.0)) {
            throw DegenerateError("degenerate feature in null replicate: zero variance");
        }
        const double inv = 1.0 / std::sqrt(vars[j]);
        for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) *= inv;
    }
}

inline Clustering cluster_matrix(const Matrix& x, ClusterMethod method,
                                 int restarts, const RngStream& rng) {
    if (method == ClusterMethod::kKmeans) return kmeans2(x, rng, restarts);
    return hierarchical2(x, method);
}

}

/// One unimodal reference replicate: every column of the unit-variance
/// working matrix is resampled from its critical-bandwidth smoothed KDE, the
/// independent columns are then recolored by the Cholesky root of the
/// covariance estimated from the unscaled working matrix.
inline Matrix generate_null_replicate(const ScaledMatrix& xs,
                                      const std::vector<double>& bandwidths,
                                      const Matrix& l, const RngStream& rng) {
    const std::size_t n = xs.values.rows(), p = xs.values.cols();
    if (bandwidths.size() != p) throw Error("generate_null_replicate: bandwidth count mismatch");
    if (l.rows() != p || l.cols() != p) throw Error("generate_null_replicate: Cholesky root mismatch");
    Matrix z(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = xs.values.column(j);
        const auto draws = sample_null_feature(col, bandwidths[j], n, rng.derive(j));
        for (std::size_t i = 0; i < n; ++i) z(i, j) = draws[i];
    }
    return recolor(z, l);
}

/// Cluster indices of B independent null replicates. Replicates are indexed
/// substreams of the root stream, so the output vector is identical for any
/// thread count.
inline std::vector<double> null_replicate_cis(const ScaledMatrix& xs,
                                              const std::vector<double>& bandwidths,
                                              const Matrix& l, const UnpciConfig& cfg,
                                              const RngStream& root) {
    std::vector<double> cis(cfg.b, 0.0);
    const RngStream gen_root = root.derive(stream_domain::kNullReplicate);
    const RngStream clu_root = root.derive(stream_domain::kReplicateClustering);
    parallel_for(cfg.b, resolve_threads(cfg.threads), [&](std::size_t b) {
        const Matrix x0 = generate_null_replicate(
            xs, bandwidths, l, gen_root.derive(static_cast<std::uint64_t>(b)));
        const RngStream clu = clu_root.derive(static_cast<std::uint64_t>(b));
        Clustering c;
        if (cfg.cluster_method == ClusterMethod::kKmeans) {
            // 2-means operates on unit-variance features, like the data pass.
            Matrix x0s = x0;
            detail::scale_columns_unit(x0s);
            c = detail::cluster_matrix(x0s, cfg.cluster_method, cfg.kmeans_restarts, clu);
        } else {
            // Hierarchical linkages use Euclidean distances of the replicate
            // as generated, matching the distance matrix used for the data.
            c = detail::cluster_matrix(x0, cfg.cluster_method, cfg.kmeans_restarts, clu);
        }
        cis[b] = cluster_index(x0, c.labels, cfg.ci_variant);
    });
    return cis;
}

/// Full significance test: cluster the data (or accept the supplied labels),
/// optionally screen features and recluster, compute the observed cluster
/// index on the centered unscaled working matrix, build B unimodal reference
/// replicates matched to its covariance, and compare. 2-means runs on the
/// unit-variance matrix; hierarchical linkages run on Euclidean distances of
/// the centered matrix directly.
inline UnpciResult run_unpci(const DataMatrix& x, const std::vector<int>& given_labels,
                             const UnpciConfig& cfg) {
    x.validate();
    cfg.validate();
    const RngStream root(cfg.seed);
    const RngStream data_clu = root.derive(stream_domain::kDataClustering);

    const ScaledMatrix centered = center(x);
    const ScaledMatrix scaled = scale_unit_variance(centered);

    UnpciResult res;
    const bool external_labels = !given_labels.empty();
    if (external_labels) {
        if (given_labels.size() != x.n()) throw Error("run_unpci: label length mismatch");
        std::size_t n1 = 0, n2 = 0;
        for (int l : given_labels) {
            if (l == 1) {
                ++n1;
            } else if (l == 2) {
                ++n2;
            } else {
                throw Error("run_unpci: labels must be 1 or 2");
            }
        }
        if (n1 == 0 || n2 == 0) throw Error("run_unpci: labels must use both clusters");
        res.labels = given_labels;
        res.singleton_clustering = n1 <= 1 || n2 <= 1;
    } else {
        // 2-means clusters the unit-variance matrix; hierarchical linkages
        // cut the Euclidean distance tree of the centered matrix as-is.
        const Matrix& base = cfg.cluster_method == ClusterMethod::kKmeans
                                 ? scaled.values
                                 : centered.values;
        const Clustering c = detail::cluster_matrix(
            base, cfg.cluster_method, cfg.kmeans_restarts, data_clu.derive(0));
        res.labels = c.labels;
        res.singleton_clustering = c.singleton_warning;
    }

    // Working matrices: centered unscaled for the index and the covariance,
    // unit variance for clustering and KDE resampling.
    Matrix work = centered.values;
    Matrix work_scaled = scaled.values;
    std::vector<std::string> work_ids = x.feature_ids;
    if (cfg.dimension_reduction) {
        const ScreenResult sel = screen_features(x, res.labels, cfg.alpha_screen);
        res.screening_fallback = sel.fallback;
        const std::size_t q = sel.indices.size();
        Matrix w(x.n(), q), ws(x.n(), q);
        for (std::size_t i = 0; i < x.n(); ++i) {
            for (std::size_t k = 0; k < q; ++k) {
                w(i, k) = centered.values(i, sel.indices[k]);
                ws(i, k) = scaled.values(i, sel.indices[k]);
            }
        }
        work = std::move(w);
        work_scaled = std::move(ws);
        work_ids = sel.selected;
        if (!external_labels) {
            const Matrix& base = cfg.cluster_method == ClusterMethod::kKmeans
                                     ? work_scaled
                                     : work;
            const Clustering c = detail::cluster_matrix(
                base, cfg.cluster_method, cfg.kmeans_restarts, data_clu.derive(1));
            res.labels = c.labels;
            res.singleton_clustering = c.singleton_warning;
        }
    }
    res.selected_features = work_ids;

    res.ci_data = cluster_index(work, res.labels, cfg.ci_variant);

    const std::size_t n = work.rows(), pw = work.cols();
    CovarianceModel cov;
    const bool use_sample = cfg.covariance == CovChoice::kSample ||
                            (cfg.covariance == CovChoice::kAuto && n > pw);
    if (use_sample) {
        cov = sample_covariance(work);
    } else {
        cov = graphical_lasso(detail::scatter_covariance(work), cfg.rho);
    }
    res.cov_method = cov.method;

    std::vector<double> bandwidths(pw);
    for (std::size_t j = 0; j < pw; ++j) {
        bandwidths[j] = critical_bandwidth(work_scaled.column(j)).h1;
    }

    ScaledMatrix xs;
    xs.values = work_scaled;
    xs.feature_ids = work_ids;
    xs.unit_variance = true;
    res.null_cis = null_replicate_cis(xs, bandwidths, cov.cholesky, cfg, root);

    const double bd = static_cast<double>(cfg.b);
    std::size_t below = 0, at_most = 0;
    double mu = 0.0;
    for (double ci : res.null_cis) {
        if (ci < res.ci_data) ++below;
        if (ci <= res.ci_data) ++at_most;
        mu += ci;
    }
    mu /= bd;
    double var = 0.0;
    for (double ci : res.null_cis) var += (ci - mu) * (ci - mu);
    const double sigma = cfg.b > 1 ? std::sqrt(var / (bd - 1.0)) : 0.0;

    res.p_perm = static_cast<double>(below) / bd;
    res.p_add_one = static_cast<double>(at_most + 1) / (bd + 1.0);
    res.mu_ci = mu;
    res.sigma_ci = sigma;
    if (sigma > 0.0) {
        res.z = (res.ci_data - mu) / sigma;
        res.p_normal = normal_cdf(res.z);
    } else {
        res.z = 0.0;
        res.p_normal = res.ci_data < mu ? 0.0 : (res.ci_data > mu ? 1.0 : 0.5);
    }
    return res;
}

inline UnpciResult run_unpci(const DataMatrix& x, const UnpciConfig& cfg) {
    return run_unpci(x, {}, cfg);
}

}
