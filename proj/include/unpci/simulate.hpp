#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "unpci/covariance.hpp"
#include "unpci/data_model.hpp"
#include "unpci/error.hpp"
#include "unpci/matrix.hpp"
#include "unpci/rng.hpp"
#include "unpci/stats.hpp"
#include "unpci/unpci.hpp"

namespace unpci {

/// Named generator with optional dimension and parameter overrides; anything
/// left unset takes the scenario's published default.
struct ScenarioSpec {
    std::string name;
    std::size_t n = 0;  // 0 = scenario default
    std::size_t p = 0;
    std::optional<double> shift;               // mean shift / segment offset
    std::optional<std::size_t> shift_features; // width of the shifted block
    std::optional<std::size_t> shift_obs;      // height of the shifted block
    std::optional<double> noncentrality;       // t-scenario shift
    std::optional<double> cov_value;           // low-dim correlated block value
    std::optional<double> noise_sd;            // elongated / arc noise
};

struct ScenarioData {
    DataMatrix data;
    std::vector<int> true_labels;  // empty for null scenarios
};

namespace detail {

inline double draw_t2(std::mt19937_64& eng, std::normal_distribution<double>& gauss,
                      std::chi_squared_distribution<double>& chi2, double ncp) {
    const double z = gauss(eng) + ncp;
    const double w = chi2(eng);
    return z / std::sqrt(w / 2.0);
}

inline std::vector<std::string> default_feature_ids(std::size_t p) {
    std::vector<std::string> ids(p);
    for (std::size_t j = 0; j < p; ++j) ids[j] = "f" + std::to_string(j + 1);
    return ids;
}

inline std::size_t scaled_count(std::size_t total, std::size_t def_total,
                                std::size_t def_count) {
    if (total == def_total) return def_count;
    const double v = std::round(static_cast<double>(total) *
                                static_cast<double>(def_count) /
                                static_cast<double>(def_total));
    return static_cast<std::size_t>(std::max(1.0, v));
}

/// Cholesky root of the equicorrelated block (1 on the diagonal, cov_value
/// off it) used by the low-dimensional correlated scenarios.
inline Matrix correlated_block_root(std::size_t q, double cov_value) {
    Matrix block(q, q);
    for (std::size_t a = 0; a < q; ++a) {
        for (std::size_t b = 0; b < q; ++b) block(a, b) = a == b ? 1.0 : cov_value;
    }
    return cholesky_root(block);
}

}

/// Deterministic draw from one of the published scenario generators.
/// Clustered scenarios return ground-truth labels (1 = background group,
/// 2 = shifted group; the two arcs for the hierarchical pair).
inline ScenarioData gen_scenario(const ScenarioSpec& spec, const RngStream& rng) {
    auto eng = rng.engine();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::chi_squared_distribution<double> chi2(2.0);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    const auto make = [&](std::size_t n, std::size_t p) {
        ScenarioData d;
        d.data.values = Matrix(n, p);
        d.data.feature_ids = detail::default_feature_ids(p);
        return d;
    };
    const std::string& s = spec.name;

    if (s == "5d_sphere") {
        const std::size_t n = spec.n ? spec.n : 1000, p = spec.p ? spec.p : 5;
        ScenarioData d = make(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    const double v = gauss(eng);
                    d.data.values(i, j) = v;
                    norm2 += v * v;
                }
            } while (!(norm2 > 0.0));
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t j = 0; j < p; ++j) d.data.values(i, j) *= inv;
        }
        return d;
    }

    if (s == "null_normal" || s == "hd_null_normal") {
        const bool hd = s[0] == 'h';
        const std::size_t n = spec.n ? spec.n : (hd ? 100 : 200);
        const std::size_t p = spec.p ? spec.p : (hd ? 10000 : 100);
        ScenarioData d = make(n, p);
        for (double& v : d.data.values.storage()) v = gauss(eng);
        return d;
    }

    if (s == "null_t" || s == "hd_null_t") {
        const bool hd = s[0] == 'h';
        const std::size_t n = spec.n ? spec.n : (hd ? 100 : 200);
        const std::size_t p = spec.p ? spec.p : (hd ? 10000 : 100);
        ScenarioData d = make(n, p);
        for (double& v : d.data.values.storage()) {
            v = detail::draw_t2(eng, gauss, chi2, 0.0);
        }
        return d;
    }

    if (s == "null_correlated" || s == "correlated_clusters") {
        const std::size_t n = spec.n ? spec.n : 200, p = spec.p ? spec.p : 100;
        const double cv = spec.cov_value.value_or(0.20);
        const std::size_t block =
            std::min(p, spec.shift_features && s == "null_correlated"
                            ? *spec.shift_features
                            : detail::scaled_count(p, 100, 40));
        const Matrix root = detail::correlated_block_root(block, cv);
        ScenarioData d = make(n, p);
        std::vector<double> z(block);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < block; ++j) z[j] = gauss(eng);
            for (std::size_t j = 0; j < block; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k <= j; ++k) acc += root(j, k) * z[k];
                d.data.values(i, j) = acc;
            }
            for (std::size_t j = block; j < p; ++j) d.data.values(i, j) = gauss(eng);
        }
        if (s == "correlated_clusters") {
            const double shift = spec.shift.value_or(2.0);
            const std::size_t obs =
                spec.shift_obs ? *spec.shift_obs : detail::scaled_count(n, 200, 50);
            const std::size_t start = detail::scaled_count(p, 100, 45) - 1;
            const std::size_t len =
                spec.shift_features ? *spec.shift_features : detail::scaled_count(p, 100, 30);
            for (std::size_t i = 0; i < std::min(obs, n); ++i) {
                for (std::size_t j = start; j < std::min(start + len, p); ++j) {
                    d.data.values(i, j) += shift;
                }
            }
            d.true_labels.assign(n, 1);
            for (std::size_t i = 0; i < std::min(obs, n); ++i) d.true_labels[i] = 2;
        }
        return d;
    }

    if (s == "normal_clustered" || s == "hd_normal_clustered") {
        const bool hd = s[0] == 'h';
        const std::size_t n = spec.n ? spec.n : (hd ? 100 : 200);
        const std::size_t p = spec.p ? spec.p : (hd ? 10000 : 100);
        const std::size_t def_obs = hd ? 30 : 50, def_feat = hd ? 50 : 30;
        const std::size_t def_n = hd ? 100 : 200, def_p = hd ? 10000 : 100;
        const double shift = spec.shift.value_or(2.0);
        const std::size_t obs =
            spec.shift_obs ? *spec.shift_obs : detail::scaled_count(n, def_n, def_obs);
        const std::size_t feat = spec.shift_features
                                     ? *spec.shift_features
                                     : detail::scaled_count(p, def_p, def_feat);
        ScenarioData d = make(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                double v = gauss(eng);
                if (i < obs && j < feat) v += shift;
                d.data.values(i, j) = v;
            }
        }
        d.true_labels.assign(n, 1);
        for (std::size_t i = 0; i < std::min(obs, n); ++i) d.true_labels[i] = 2;
        return d;
    }

    if (s == "t_clustered" || s == "hd_t_clustered") {
        const bool hd = s[0] == 'h';
        const std::size_t n = spec.n ? spec.n : (hd ? 100 : 200);
        const std::size_t p = spec.p ? spec.p : (hd ? 10000 : 100);
        const std::size_t def_obs = hd ? 30 : 40, def_feat = hd ? 100 : 30;
        const std::size_t def_n = hd ? 100 : 200, def_p = hd ? 10000 : 100;
        const double ncp = spec.noncentrality.value_or(12.0);
        const std::size_t obs =
            spec.shift_obs ? *spec.shift_obs : detail::scaled_count(n, def_n, def_obs);
        const std::size_t feat = spec.shift_features
                                     ? *spec.shift_features
                                     : detail::scaled_count(p, def_p, def_feat);
        ScenarioData d = make(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                const double use_ncp = (i < obs && j < feat) ? ncp : 0.0;
                d.data.values(i, j) = detail::draw_t2(eng, gauss, chi2, use_ncp);
            }
        }
        d.true_labels.assign(n, 1);
        for (std::size_t i = 0; i < std::min(obs, n); ++i) d.true_labels[i] = 2;
        return d;
    }

    if (s == "elongated_clusters") {
        const std::size_t n = spec.n ? spec.n : 202, p = spec.p ? spec.p : 3;
        if (n < 4) throw Error("elongated_clusters: n too small");
        const double sd = spec.noise_sd.value_or(0.10);
        const double offset = spec.shift.value_or(4.0);
        const std::size_t m1 = (n + 1) / 2, m2 = n - m1;
        ScenarioData d = make(n, p);
        d.true_labels.assign(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const bool second = i >= m1;
            const std::size_t k = second ? i - m1 : i;
            const std::size_t m = second ? m2 : m1;
            const double t = -0.5 + static_cast<double>(k) / static_cast<double>(m - 1);
            const double base = second ? t + offset : t;
            for (std::size_t j = 0; j < p; ++j) {
                d.data.values(i, j) = base + sd * gauss(eng);
            }
            if (second) d.true_labels[i] = 2;
        }
        return d;
    }

    if (s == "hd_null_correlated") {
        // Feature variance 0.80, lag covariance 0.80^(lag+1): an AR(1) chain
        // with coefficient 0.80 scaled by sqrt(0.80). The published band cap
        // at lag 42 truncates covariances of order 1e-4 and below, which the
        // recursion realizes only approximately.
        const std::size_t n = spec.n ? spec.n : 100, p = spec.p ? spec.p : 10000;
        const double phi = 0.80;
        const double innov = std::sqrt(1.0 - phi * phi);
        const double scale = std::sqrt(0.80);
        ScenarioData d = make(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            double f = gauss(eng);
            d.data.values(i, 0) = scale * f;
            for (std::size_t j = 1; j < p; ++j) {
                f = phi * f + innov * gauss(eng);
                d.data.values(i, j) = scale * f;
            }
        }
        return d;
    }

    if (s == "hier_null") {
        const std::size_t n = spec.n ? spec.n : 500, p = spec.p ? spec.p : 75;
        const std::size_t pairs = p / 3;
        ScenarioData d = make(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                if (j < 2 * pairs) {
                    const bool odd_published = (j % 2 == 0);  // 1-based 2j-1
                    d.data.values(i, j) = odd_published ? 5.0 + 5.0 * unif01(eng)
                                                        : -2.0 + 5.0 * unif01(eng);
                } else {
                    d.data.values(i, j) = gauss(eng);
                }
            }
        }
        return d;
    }

    if (s == "hier_two_clusters") {
        const std::size_t n = spec.n ? spec.n : 1200, p = spec.p ? spec.p : 75;
        const std::size_t pairs = p / 3;
        const std::size_t n1 =
            spec.shift_obs ? *spec.shift_obs : detail::scaled_count(n, 1200, 500);
        const double sd = spec.noise_sd.value_or(0.2);
        ScenarioData d = make(n, p);
        d.true_labels.assign(n, 1);
        std::uniform_real_distribution<double> angle(0.0, kPi);
        for (std::size_t i = 0; i < n; ++i) {
            const bool first = i < n1;
            const double theta = angle(eng) + (first ? 0.0 : kPi);
            for (std::size_t j = 0; j < p; ++j) {
                if (j < 2 * pairs) {
                    const bool odd_published = (j % 2 == 0);
                    const double arc = odd_published
                                           ? (first ? 5.0 : 0.0) + 5.0 * std::cos(theta)
                                           : (first ? -2.0 : 0.0) + 5.0 * std::sin(theta);
                    d.data.values(i, j) = arc + sd * gauss(eng);
                } else {
                    d.data.values(i, j) = gauss(eng);
                }
            }
            if (!first) d.true_labels[i] = 2;
        }
        return d;
    }

    throw Error("unknown scenario '" + s + "'");
}

struct TableRow {
    std::string scenario;
    std::size_t reps = 0;
    std::size_t significant = 0;  // p_perm < 0.05
    std::size_t reruns = 0;       // degenerate or singleton runs replaced
    std::vector<double> p_values;
};

/// Repeated end-to-end runs of one scenario. A rep whose clustering
/// degenerates or isolates a single observation is discarded and redrawn
/// with a fresh substream, mirroring the published rejection rule.
inline TableRow run_table(const ScenarioSpec& spec, std::size_t reps,
                          const UnpciConfig& cfg) {
    TableRow row;
    row.scenario = spec.name;
    row.reps = reps;
    const RngStream scen = RngStream(cfg.seed).derive(stream_domain::kScenario);
    for (std::size_t r = 0; r < reps; ++r) {
        const RngStream rep_root = scen.derive(static_cast<std::uint64_t>(r));
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt >= 20) {
                throw Error("run_table: rep " + std::to_string(r) +
                            " degenerated 20 times in a row");
            }
            const RngStream attempt_rng = rep_root.derive(attempt);
            const ScenarioData d = gen_scenario(spec, attempt_rng.derive(0));
            UnpciConfig run_cfg = cfg;
            run_cfg.seed = attempt_rng.derive(1).key();
            try {
                const UnpciResult res = run_unpci(d.data, {}, run_cfg);
                if (res.singleton_clustering) {
                    ++row.reruns;
                    continue;
                }
                row.p_values.push_back(res.p_perm);
                if (res.p_perm < 0.05) ++row.significant;
            } catch (const DegenerateError&) {
                ++row.reruns;
                continue;
            }
            break;
        }
    }
    return row;
}

inline std::vector<TableRow> run_table(const std::vector<ScenarioSpec>& specs,
                                       std::size_t reps, const UnpciConfig& cfg) {
    std::vector<TableRow> rows;
    rows.reserve(specs.size());
    for (const auto& spec : specs) rows.push_back(run_table(spec, reps, cfg));
    return rows;
}

}
