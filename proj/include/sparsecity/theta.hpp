#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sparsecity/errors.hpp"

namespace sparsecity {

/// Bounded zero-mean law of the diagonal entries theta.
///
/// When every value is an integer multiple of a common scale, the integer
/// multipliers are kept in `integer_values` so products can be formed with
/// integer arithmetic and a single trailing scalar.
struct ThetaDistribution {
    std::string name;
    std::vector<double> values;
    std::vector<double> probabilities;
    double bound = 0.0;
    bool normalized = false;
    std::vector<int> integer_values;  // empty when the law has no integer form
    double integer_scale = 1.0;       // values[i] == integer_values[i] * integer_scale

    double mean() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) acc += probabilities[i] * values[i];
        return acc;
    }

    double second_moment() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            acc += probabilities[i] * values[i] * values[i];
        return acc;
    }

    bool has_integer_form() const { return !integer_values.empty(); }

    /// Index of the value selected by a uniform draw u in [0, 1).
    std::size_t pick(double u) const {
        double cumulative = 0.0;
        for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
            cumulative += probabilities[i];
            if (u < cumulative) return i;
        }
        return probabilities.size() - 1;
    }

    void validate() const {
        if (values.empty() || values.size() != probabilities.size())
            detail::fail<domain_error>("ThetaDistribution: values/probabilities mismatch");
        const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12)
            detail::fail<domain_error>("ThetaDistribution: probabilities do not sum to 1");
        for (double p : probabilities)
            if (p < 0.0) detail::fail<domain_error>("ThetaDistribution: negative probability");
        if (std::abs(mean()) > 1e-12)
            detail::fail<domain_error>("ThetaDistribution: mean is not zero");
        double max_abs = 0.0;
        for (double v : values) max_abs = std::max(max_abs, std::abs(v));
        if (std::abs(max_abs - bound) > 1e-12)
            detail::fail<domain_error>("ThetaDistribution: bound does not match max |value|");
        if (normalized && std::abs(second_moment() - 1.0) > 1e-12)
            detail::fail<domain_error>("ThetaDistribution: normalized law needs E[theta^2] = 1");
    }
};

/// Values {+1, -1, +3, -3}, each with probability 1/4. Normalized mode
/// scales by 1/sqrt(5) so that E[theta^2] = 1 and E[A^T A] = I.
inline ThetaDistribution theta_fourpoint(bool normalized = true) {
    const double scale = normalized ? 1.0 / std::sqrt(5.0) : 1.0;
    ThetaDistribution d;
    d.name = "fourpoint";
    d.integer_values = {1, -1, 3, -3};
    d.integer_scale = scale;
    for (int v : d.integer_values) d.values.push_back(v * scale);
    d.probabilities.assign(4, 0.25);
    d.bound = 3.0 * scale;
    d.normalized = normalized;
    return d;
}

/// Values {+1, -1} with equal probability; already has unit second moment.
inline ThetaDistribution theta_rademacher() {
    ThetaDistribution d;
    d.name = "rademacher";
    d.integer_values = {1, -1};
    d.values = {1.0, -1.0};
    d.probabilities = {0.5, 0.5};
    d.bound = 1.0;
    d.normalized = true;
    return d;
}

inline ThetaDistribution theta_by_name(const std::string& name, bool normalized = true) {
    if (name == "fourpoint") return theta_fourpoint(normalized);
    if (name == "rademacher") return theta_rademacher();
    detail::fail<domain_error>("unknown theta distribution '" + name + "'");
}

}  // namespace sparsecity
