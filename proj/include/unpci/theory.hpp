#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "unpci/error.hpp"
#include "unpci/stats.hpp"

namespace unpci {

/// Two-component location mixture with independent features: component means
/// differ by a on every feature, mixing proportion eta, per-feature variances
/// lambdas (largest first by convention).
struct MixtureSpec {
    std::vector<double> lambdas;
    double a = 0.0;
    double eta = 0.5;

    void validate() const {
        if (lambdas.empty()) throw Error("MixtureSpec: lambdas empty");
        for (double l : lambdas) {
            if (!(l > 0.0)) throw Error("MixtureSpec: lambdas must be positive");
        }
        if (!(eta > 0.0 && eta < 1.0)) throw Error("MixtureSpec: eta must be in (0,1)");
        if (a < 0.0) throw Error("MixtureSpec: a must be nonnegative");
    }
};

/// Population 2-means cluster index of a centered Gaussian with independent
/// features of variance lambda_j: the optimal split halves the dominant
/// feature, removing 2/pi of its variance.
inline double tci_gauss(const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw Error("tci_gauss: lambdas empty");
    double sum = 0.0, top = 0.0;
    for (double l : lambdas) {
        if (!(l > 0.0)) throw Error("tci_gauss: lambdas must be positive");
        sum += l;
        top = std::max(top, l);
    }
    return 1.0 - (2.0 / kPi) * top / sum;
}

/// Population cluster index of the unimodal reference distribution matched to
/// the mixture's covariance: the mean shift inflates the dominant direction
/// by eta(1-eta)a^2 and every feature's total variation by the same amount.
inline double tci_null_mixture(const MixtureSpec& spec) {
    spec.validate();
    const double sum = std::accumulate(spec.lambdas.begin(), spec.lambdas.end(), 0.0);
    const double top = *std::max_element(spec.lambdas.begin(), spec.lambdas.end());
    const double p = static_cast<double>(spec.lambdas.size());
    const double c = spec.eta * (1.0 - spec.eta) * spec.a * spec.a;
    return 1.0 - (2.0 / kPi) * (top + c) / (p * c + sum);
}

/// Population cluster index of the mixture itself, assembled from its
/// within-group and total dispersion: WSS = sum(lambda) - 2*lambda_1/pi,
/// TSS = p*eta*(1-eta)*a^2 + sum(lambda). Always below tci_null_mixture when
/// a > 0, which is what makes the test consistent.
inline double tci_mix(const MixtureSpec& spec) {
    spec.validate();
    const double sum = std::accumulate(spec.lambdas.begin(), spec.lambdas.end(), 0.0);
    const double top = *std::max_element(spec.lambdas.begin(), spec.lambdas.end());
    const double p = static_cast<double>(spec.lambdas.size());
    const double c = spec.eta * (1.0 - spec.eta) * spec.a * spec.a;
    return (sum - 2.0 * top / kPi) / (p * c + sum);
}

}
