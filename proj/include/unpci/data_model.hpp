#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "unpci/error.hpp"
#include "unpci/matrix.hpp"

namespace unpci {

/// n x p observations-by-features table. Construction validates that every
/// entry is finite, n >= 2 and p >= 1, and feature ids are unique.
struct DataMatrix {
    Matrix values;
    std::vector<std::string> feature_ids;

    DataMatrix() = default;
    DataMatrix(Matrix v, std::vector<std::string> ids)
        : values(std::move(v)), feature_ids(std::move(ids)) {
        validate();
    }

    std::size_t n() const { return values.rows(); }
    std::size_t p() const { return values.cols(); }

    void validate() const {
        if (values.rows() < 2) throw Error("data matrix needs at least 2 observations");
        if (values.cols() < 1) throw Error("data matrix needs at least 1 feature");
        if (feature_ids.size() != values.cols())
            throw Error("feature id count does not match column count");
        std::unordered_set<std::string> seen;
        for (const auto& id : feature_ids)
            if (!seen.insert(id).second) throw Error("duplicate feature id '" + id + "'");
        for (std::size_t i = 0; i < values.rows(); ++i)
            for (std::size_t j = 0; j < values.cols(); ++j)
                if (!std::isfinite(values(i, j)))
                    throw Error("non-finite entry at row " + std::to_string(i + 1) +
                                ", column " + std::to_string(j + 1) + " (feature '" +
                                feature_ids[j] + "')");
    }
};

/// Centered (and optionally unit-variance) matrix together with the column
/// means and sample standard deviations needed to undo the transform.
/// Sample moments use denominator n-1.
struct ScaledMatrix {
    Matrix values;
    std::vector<double> column_means;
    std::vector<double> column_sds;
    std::vector<std::string> feature_ids;
    bool unit_variance = false;

    std::size_t n() const { return values.rows(); }
    std::size_t p() const { return values.cols(); }
};

/// Subtract each column's mean. Standard deviations are recorded but the
/// columns are not rescaled.
inline ScaledMatrix center(const DataMatrix& x) {
    x.validate();
    ScaledMatrix out;
    out.values = x.values;
    out.feature_ids = x.feature_ids;
    out.column_means = column_means(x.values);
    const std::size_t n = x.n(), p = x.p();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.values.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) row[j] -= out.column_means[j];
    }
    out.column_sds.assign(p, 0.0);
    const std::vector<double> vars = column_variances(out.values);
    for (std::size_t j = 0; j < p; ++j) out.column_sds[j] = std::sqrt(vars[j]);
    out.unit_variance = false;
    return out;
}

/// Rescale each column of a centered matrix to sample variance 1.
/// The recorded column_sds keep the original scale for back-transformation.
inline ScaledMatrix scale_unit_variance(const ScaledMatrix& x) {
    ScaledMatrix out = x;
    const std::size_t n = x.n(), p = x.p();
    if (n < 2) throw Error("scale_unit_variance: need at least 2 observations");
    const std::vector<double> vars = column_variances(x.values);
    std::vector<double> sds(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (!(vars[j] > 0.0))
            throw DegenerateError("degenerate feature '" + x.feature_ids[j] +
                                  "': zero variance");
        sds[j] = std::sqrt(vars[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.values.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) row[j] /= sds[j];
    }
    out.unit_variance = true;
    return out;
}

/// Column subset by feature id, preserving the original column order and
/// all observations.
inline DataMatrix subset_features(const DataMatrix& x, const std::vector<std::string>& keep) {
    if (keep.empty()) throw Error("no features selected");
    std::unordered_set<std::string> want(keep.begin(), keep.end());
    for (const auto& id : keep) {
        if (std::find(x.feature_ids.begin(), x.feature_ids.end(), id) == x.feature_ids.end())
            throw Error("unknown feature id '" + id + "'");
    }
    std::vector<std::size_t> cols;
    std::vector<std::string> ids;
    for (std::size_t j = 0; j < x.p(); ++j) {
        if (want.count(x.feature_ids[j])) {
            cols.push_back(j);
            ids.push_back(x.feature_ids[j]);
        }
    }
    Matrix sub(x.n(), cols.size());
    for (std::size_t i = 0; i < x.n(); ++i)
        for (std::size_t k = 0; k < cols.size(); ++k) sub(i, k) = x.values(i, cols[k]);
    return DataMatrix(std::move(sub), std::move(ids));
}

}
