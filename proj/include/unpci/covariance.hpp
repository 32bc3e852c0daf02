#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "unpci/error.hpp"
#include "unpci/matrix.hpp"

namespace unpci {

enum class CovMethod { kSample, kGlasso };

struct GlassoDiagnostics {
    // Penalized log-likelihood (log det Theta - tr(S Theta) - rho*||Theta||_1
    // at Theta = W^-1) after each sweep, one trace per connected component of
    // the screening graph. Non-decreasing traces certify convergence quality.
    std::vector<std::vector<double>> objective_traces;
    std::vector<int> sweeps;
    std::size_t components = 0;
    bool jitter_applied = false;
};

struct CovarianceModel {
    Matrix sigma_hat;      // estimated covariance W
    Matrix cholesky;       // lower triangular, cholesky * cholesky^T = sigma_hat
    Matrix theta_hat;      // precision estimate; empty for the sample method
    CovMethod method = CovMethod::kSample;
    double rho = 0.0;
    GlassoDiagnostics glasso;
};

/// Lower-triangular Cholesky factor of an SPD matrix. The error names the
/// 1-based leading principal minor whose pivot failed.
inline Matrix cholesky_root(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols()) throw Error("cholesky_root: matrix not square");
    const std::size_t p = sigma.rows();
    Matrix l(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        double diag = sigma(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) {
            throw Error("matrix not positive definite at leading minor " +
                        std::to_string(j + 1));
        }
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < p; ++i) {
            double acc = sigma(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / l(j, j);
        }
    }
    return l;
}

/// Inverse of an SPD matrix via its Cholesky factor.
inline Matrix invert_spd(const Matrix& a) {
    const Matrix l = cholesky_root(a);
    const std::size_t p = a.rows();
    Matrix inv(p, p);
    std::vector<double> col(p);
    for (std::size_t c = 0; c < p; ++c) {
        for (std::size_t i = 0; i < p; ++i) col[i] = (i == c) ? 1.0 : 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            double acc = col[i];
            for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * col[k];
            col[i] = acc / l(i, i);
        }
        for (std::size_t ii = p; ii-- > 0;) {
            double acc = col[ii];
            for (std::size_t k = ii + 1; k < p; ++k) acc -= l(k, ii) * col[k];
            col[ii] = acc / l(ii, ii);
        }
        for (std::size_t i = 0; i < p; ++i) inv(i, c) = col[i];
    }
    return inv;
}

/// X0 = Z * L^T (row-vector convention): rows with identity covariance come
/// out with covariance L L^T.
inline Matrix recolor(const Matrix& z, const Matrix& l) {
    if (l.rows() != l.cols() || z.cols() != l.rows()) {
        throw Error("recolor: dimension mismatch");
    }
    const std::size_t m = z.rows(), p = z.cols();
    Matrix out(m, p);
    for (std::size_t i = 0; i < m; ++i) {
        const double* zi = z.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= j; ++k) acc += zi[k] * l(j, k);
            oi[j] = acc;
        }
    }
    return out;
}

/// Sample covariance X^T X / (n-1) of a centered matrix, for the n > p regime.
inline CovarianceModel sample_covariance(const Matrix& x) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n <= p) throw Error("sample_covariance requires n > p");
    CovarianceModel model;
    model.method = CovMethod::kSample;
    model.sigma_hat = Matrix(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row_ptr(i);
        for (std::size_t a = 0; a < p; ++a) {
            if (xi[a] == 0.0) continue;
            double* row = model.sigma_hat.row_ptr(a);
            for (std::size_t b = a; b < p; ++b) row[b] += xi[a] * xi[b];
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            const double v = model.sigma_hat(a, b) / denom;
            model.sigma_hat(a, b) = v;
            model.sigma_hat(b, a) = v;
        }
    }
    try {
        model.cholesky = cholesky_root(model.sigma_hat);
    } catch (const Error&) {
        throw DegenerateError("rank-deficient covariance (consider graphical lasso)");
    }
    return model;
}

namespace detail {

/// Connected components of the screening graph {|S_ij| > rho}: the penalized
/// solution is block diagonal over them (Witten et al. 2011), so each block
/// is solved independently.
inline std::vector<std::vector<std::size_t>> screening_components(const Matrix& s,
                                                                  double rho) {
    const std::size_t p = s.rows();
    std::vector<std::size_t> parent(p);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    const auto find = [&](std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            if (std::fabs(s(i, j)) > rho) parent[find(i)] = find(j);
        }
    }
    std::vector<std::vector<std::size_t>> comps;
    std::vector<long> slot(p, -1);
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(comps.size());
            comps.emplace_back();
        }
        comps[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    return comps;
}

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

/// Penalized log-likelihood at Theta = W^-1.
inline double glasso_objective(const Matrix& s, const Matrix& w, double rho) {
    const Matrix l = cholesky_root(w);
    double logdet_w = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) logdet_w += std::log(l(i, i));
    logdet_w *= 2.0;
    const Matrix theta = invert_spd(w);
    double tr = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            tr += s(i, j) * theta(i, j);
            l1 += std::fabs(theta(i, j));
        }
    }
    return -logdet_w - tr - rho * l1;
}

struct GlassoBlockResult {
    Matrix w;
    Matrix theta;
    std::vector<double> objective_trace;
    int sweeps = 0;
};

/// Blockwise coordinate descent on one screening component. outer_eps is the
/// absolute threshold on the mean off-diagonal change of W per sweep.
inline GlassoBlockResult glasso_block(const Matrix& s, double rho, double outer_eps) {
    const std::size_t q = s.rows();
    GlassoBlockResult res;
    res.w = s;
    for (std::size_t i = 0; i < q; ++i) res.w(i, i) += rho;
    res.theta = Matrix(q, q);
    if (q == 1) {
        res.theta(0, 0) = 1.0 / res.w(0, 0);
        res.objective_trace.push_back(glasso_objective(s, res.w, rho));
        res.sweeps = 1;
        return res;
    }

    double wmax = 0.0;
    for (std::size_t i = 0; i < q; ++i) wmax = std::max(wmax, res.w(i, i));
    const double inner_eps = std::max(1e-2 * outer_eps, 1e-14 * wmax) /
                             static_cast<double>(q);
    constexpr int kMaxSweeps = 10000;
    constexpr int kMaxInner = 10000;

    Matrix beta(q, q);          // column j holds the lasso coefficients for column j
    std::vector<double> v(q);   // v_k = sum_{l != j} W_kl beta_lj
    for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
        double delta_sum = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            for (std::size_t k = 0; k < q; ++k) {
                double acc = 0.0;
                for (std::size_t l = 0; l < q; ++l) {
                    if (l != j) acc += res.w(k, l) * beta(l, j);
                }
                v[k] = acc;
            }
            for (int it = 0; it < kMaxInner; ++it) {
                double max_step = 0.0;
                for (std::size_t k = 0; k < q; ++k) {
                    if (k == j) continue;
                    const double resid = s(k, j) - (v[k] - res.w(k, k) * beta(k, j));
                    const double bnew = soft_threshold(resid, rho) / res.w(k, k);
                    const double step = bnew - beta(k, j);
                    if (step != 0.0) {
                        for (std::size_t r = 0; r < q; ++r) v[r] += res.w(r, k) * step;
                        beta(k, j) = bnew;
                        max_step = std::max(max_step, std::fabs(step));
                    }
                }
                if (max_step <= inner_eps) break;
            }
            for (std::size_t k = 0; k < q; ++k) {
                if (k == j) continue;
                delta_sum += std::fabs(v[k] - res.w(k, j));
                res.w(k, j) = v[k];
                res.w(j, k) = v[k];
            }
        }
        res.objective_trace.push_back(glasso_objective(s, res.w, rho));
        res.sweeps = sweep;
        const double avg = delta_sum / static_cast<double>(q * (q - 1));
        if (avg <= outer_eps) break;
        if (sweep == kMaxSweeps) {
            throw Error("graphical lasso failed to converge after " +
                        std::to_string(kMaxSweeps) + " sweeps");
        }
    }

    for (std::size_t j = 0; j < q; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            if (k != j) dot += res.w(k, j) * beta(k, j);
        }
        const double tjj = 1.0 / (res.w(j, j) - dot);
        res.theta(j, j) = tjj;
        for (std::size_t k = 0; k < q; ++k) {
            if (k != j) res.theta(k, j) = -beta(k, j) * tjj;
        }
    }
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            const double m = 0.5 * (res.theta(i, j) + res.theta(j, i));
            res.theta(i, j) = m;
            res.theta(j, i) = m;
        }
    }
    return res;
}

}

/// L1-penalized covariance estimate: maximizes
/// log det Theta - tr(S Theta) - rho*||Theta||_1 and returns W = Theta^-1
/// with its Cholesky root. Connected components of the screening graph are
/// solved independently; each component runs blockwise coordinate descent
/// until the mean absolute off-diagonal change of W per sweep drops to
/// 1e-4 times the mean absolute off-diagonal of S.
inline CovarianceModel graphical_lasso(const Matrix& s, double rho) {
    const std::size_t p = s.rows();
    if (p == 0 || s.cols() != p) throw Error("graphical_lasso: S must be square");
    if (rho < 0.0) throw Error("graphical_lasso: rho must be nonnegative");
    double asym = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        if (!(s(i, i) > 0.0)) throw Error("graphical_lasso: nonpositive diagonal");
        for (std::size_t j = i + 1; j < p; ++j) {
            asym = std::max(asym, std::fabs(s(i, j) - s(j, i)));
        }
    }
    if (asym >= 1e-10) throw Error("graphical_lasso: S not symmetric");

    double off_mean = 0.0;
    if (p > 1) {
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                if (i != j) off_mean += std::fabs(s(i, j));
            }
        }
        off_mean /= static_cast<double>(p * (p - 1));
    }
    const double outer_eps = 1e-4 * off_mean;

    CovarianceModel model;
    model.method = CovMethod::kGlasso;
    model.rho = rho;
    model.sigma_hat = Matrix(p, p);
    model.theta_hat = Matrix(p, p);

    const auto comps = detail::screening_components(s, rho);
    model.glasso.components = comps.size();
    for (const auto& idx : comps) {
        const std::size_t q = idx.size();
        Matrix sc(q, q);
        for (std::size_t a = 0; a < q; ++a) {
            for (std::size_t b = 0; b < q; ++b) sc(a, b) = s(idx[a], idx[b]);
        }
        auto block = detail::glasso_block(sc, rho, outer_eps);
        for (std::size_t a = 0; a < q; ++a) {
            for (std::size_t b = 0; b < q; ++b) {
                model.sigma_hat(idx[a], idx[b]) = block.w(a, b);
                model.theta_hat(idx[a], idx[b]) = block.theta(a, b);
            }
        }
        model.glasso.objective_traces.push_back(std::move(block.objective_trace));
        model.glasso.sweeps.push_back(block.sweeps);
    }

    try {
        model.cholesky = cholesky_root(model.sigma_hat);
    } catch (const Error&) {
        double mean_diag = 0.0;
        for (std::size_t i = 0; i < p; ++i) mean_diag += model.sigma_hat(i, i);
        mean_diag /= static_cast<double>(p);
        for (std::size_t i = 0; i < p; ++i) model.sigma_hat(i, i) += 1e-8 * mean_diag;
        model.glasso.jitter_applied = true;
        model.cholesky = cholesky_root(model.sigma_hat);
    }
    return model;
}

}
