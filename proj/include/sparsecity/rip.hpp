#pragma once

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsecity/csv.hpp"
#include "sparsecity/errors.hpp"
#include "sparsecity/linear_operator.hpp"
#include "sparsecity/parallel.hpp"
#include "sparsecity/rng.hpp"
#include "sparsecity/sparse_city.hpp"

namespace sparsecity {

// Restricted-isometry diagnostics. For a symmetric M,
//
//   ||M||_Gamma = max over |Gamma| <= s of || M restricted to Gamma x Gamma ||_2,
//
// i.e. the same support for both arguments of the bilinear form. delta_s is
// ||I - A^T A||_Gamma. Principal-submatrix spectral norms only grow when the
// support grows, so only supports of size exactly s are enumerated.

enum class RipMethod { exact, monte_carlo };

inline std::string to_string(RipMethod m) {
    return m == RipMethod::exact ? "exact" : "monte_carlo";
}

inline constexpr std::int64_t kEnumerationBudget = 1'000'000;
inline constexpr double kEigenTolerance = 1e-10;

struct RestrictedNorm {
    double value = 0.0;
    std::vector<Index> support;  // lexicographically first maximizer
    std::int64_t supports_evaluated = 0;
};

struct RipReport {
    Index s = 0;
    double value = 0.0;
    RipMethod method = RipMethod::exact;
    std::int64_t supports_evaluated = 0;
    std::vector<Index> extremal_support;
    bool in_theorem_regime = true;

    nlohmann::json to_json() const {
        return {{"s", s},
                {"value", value},
                {"method", to_string(method)},
                {"supports_evaluated", supports_evaluated},
                {"extremal_support", extremal_support},
                {"in_theorem_regime", in_theorem_regime}};
    }
};

/// C(n, k), saturating at int64 max.
inline std::int64_t binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    __int128 r = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::int64_t>::max()) return std::numeric_limits<std::int64_t>::max();
    }
    return static_cast<std::int64_t>(r);
}

namespace detail {

/// Visits every size-k subset of 0..n-1 in lexicographic order.
template <typename Fn>
void for_each_combination(Index n, Index k, Fn&& fn) {
    std::vector<Index> idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    if (k > n) return;
    while (true) {
        fn(static_cast<const std::vector<Index>&>(idx));
        Index i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (Index j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

inline Matrix principal(const Matrix& m, const std::vector<Index>& support) {
    const auto k = static_cast<Index>(support.size());
    Matrix sub(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j)
            sub(i, j) = m(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
    return sub;
}

inline Vector symmetric_eigenvalues(const Matrix& sym) {
    if (sym.rows() == 1) return sym.col(0);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();  // ascending
}

/// max(|lambda_min - 1|, |lambda_max - 1|) of a Gram submatrix.
inline double gram_deviation(const Matrix& gram_sub) {
    const Vector ev = symmetric_eigenvalues(gram_sub);
    return std::max(std::abs(ev(0) - 1.0), std::abs(ev(ev.size() - 1) - 1.0));
}

inline void check_budget(Index n, Index s, std::int64_t budget) {
    const auto count = binomial(n, s);
    if (count > budget)
        fail<budget_error>("support enumeration needs C(" + std::to_string(n) + ", " +
                           std::to_string(s) + ") = " + std::to_string(count) +
                           " supports, over budget " + std::to_string(budget) +
                           "; use the monte_carlo estimator");
}

inline bool better(double value, const std::vector<Index>& support, double best,
                   const std::vector<Index>& best_support) {
    if (value != best) return value > best;
    return support < best_support;
}

template <LinearOperator Op>
Matrix dense_of(const Op& op, Index limit) {
    if constexpr (requires { { op.to_dense(limit) } -> std::convertible_to<Matrix>; })
        return op.to_dense(limit);
    else
        return materialize(op, limit);
}

template <LinearOperator Op>
bool regime_of(const Op& op) {
    return op.rows() <= op.cols();
}

}  // namespace detail

/// ||M||_Gamma by enumerating every support of size min(s, N).
inline RestrictedNorm restricted_norm_exact(const Matrix& m, Index s,
                                            std::int64_t budget = kEnumerationBudget) {
    if (m.rows() != m.cols()) detail::fail<shape_error>("restricted_norm_exact: matrix not square");
    if (s < 0) detail::fail<domain_error>("restricted_norm_exact: negative s");
    if (m.size() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > kEigenTolerance)
        detail::fail<domain_error>("restricted_norm_exact: matrix is not symmetric");
    const Index k = std::min(s, m.rows());
    RestrictedNorm best;
    if (k == 0) {
        best.supports_evaluated = 1;
        return best;
    }
    detail::check_budget(m.rows(), k, budget);
    best.value = -1.0;
    detail::for_each_combination(m.rows(), k, [&](const std::vector<Index>& support) {
        const Vector ev = detail::symmetric_eigenvalues(detail::principal(m, support));
        const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
        ++best.supports_evaluated;
        if (detail::better(norm, support, best.value, best.support)) {
            best.value = norm;
            best.support = support;
        }
    });
    return best;
}

struct RipOptions {
    std::int64_t budget = kEnumerationBudget;
    Index dense_limit = kDenseEntryLimit;
};

/// Exact delta_s = ||I - A^T A||_Gamma. Computed both as the restricted norm
/// of I - G and as max(|lambda_min - 1|, |lambda_max - 1|) over Gram
/// submatrices; the two must agree to 1e-10.
template <LinearOperator Op>
RipReport delta_exact(const Op& a, Index s, const RipOptions& opt = {}) {
    if (s < 0) detail::fail<domain_error>("delta_exact: negative s");
    RipReport report;
    report.s = s;
    report.method = RipMethod::exact;
    report.in_theorem_regime = detail::regime_of(a);
    const Index n = a.cols();
    const Index k = std::min(s, n);
    if (k == 0) {
        report.supports_evaluated = 1;
        return report;
    }
    detail::check_budget(n, k, opt.budget);
    if (n * n > opt.dense_limit) detail::fail<size_error>("delta_exact: Gram matrix exceeds dense limit");

    const Matrix dense = detail::dense_of(a, opt.dense_limit);
    const Matrix gram = dense.transpose() * dense;
    const Matrix deviation = Matrix::Identity(n, n) - gram;

    const RestrictedNorm by_norm = restricted_norm_exact(deviation, k, opt.budget);

    double by_spectrum = -1.0;
    detail::for_each_combination(n, k, [&](const std::vector<Index>& support) {
        by_spectrum = std::max(by_spectrum, detail::gram_deviation(detail::principal(gram, support)));
    });
    if (std::abs(by_norm.value - by_spectrum) > kEigenTolerance)
        throw std::logic_error("delta_exact: restricted-norm and spectral formulations disagree");

    report.value = by_norm.value;
    report.supports_evaluated = by_norm.supports_evaluated;
    report.extremal_support = by_norm.support;
    return report;
}

/// Lower bound on delta_s from `trials` uniformly random supports of size s.
/// Trial t always draws the same support for a given seed, so more trials can
/// only raise the estimate.
template <LinearOperator Op>
RipReport delta_monte_carlo(const Op& a, Index s, std::int64_t trials, std::uint64_t seed,
                            unsigned threads = 1) {
    if (trials < 1) detail::fail<domain_error>("delta_monte_carlo: need trials >= 1");
    if (s < 0) detail::fail<domain_error>("delta_monte_carlo: negative s");
    RipReport report;
    report.s = s;
    report.method = RipMethod::monte_carlo;
    report.in_theorem_regime = detail::regime_of(a);
    const Index k = std::min(s, a.cols());
    if (k == 0) {
        report.supports_evaluated = trials;
        return report;
    }

    std::vector<double> values(static_cast<std::size_t>(trials));
    std::vector<std::vector<Index>> supports(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
        const auto pick = random_subset(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(k),
                                        CounterRng(seed, t));
        std::vector<Index> support(pick.begin(), pick.end());
        const Matrix cols = columns(a, support);
        values[t] = detail::gram_deviation(cols.transpose() * cols);
        supports[t] = std::move(support);
    });

    report.value = -1.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
        if (detail::better(values[t], supports[t], report.value, report.extremal_support)) {
            report.value = values[t];
            report.extremal_support = supports[t];
        }
    }
    report.supports_evaluated = trials;
    return report;
}

struct GridPoint {
    Index m;
    Index n;
    Index b;
};

struct ScanOptions {
    RipOptions rip;
    std::int64_t mc_supports = 2000;  // supports per matrix when exact is over budget
    unsigned threads = 1;
    ThetaDistribution dist = theta_fourpoint();
};

struct ScalingRow {
    Index m = 0;
    Index n = 0;
    Index b = 0;
    Index s = 0;
    std::int64_t trials = 0;
    double mean_value = 0.0;
    double std_value = 0.0;
    double bound_proxy = 0.0;
    RipMethod method = RipMethod::exact;
    bool in_theorem_regime = true;
    bool degenerate = false;
};

/// sqrt(s log^2(s) log(mb) log(nb) / m) with natural logarithms: the shape of
/// the expected-norm bound with its constant dropped. Zero for s <= 1.
inline double bound_proxy(Index m, Index n, Index b, Index s) {
    if (s <= 1) return 0.0;
    const double ls = std::log(static_cast<double>(s));
    return std::sqrt(static_cast<double>(s) * ls * ls * std::log(static_cast<double>(m * b)) *
                     std::log(static_cast<double>(n * b)) / static_cast<double>(m));
}

/// Seed of the trial-th matrix at a grid point; shared by the scan and the
/// tail estimate so both see the same draws.
inline std::uint64_t trial_seed(std::uint64_t seed, const GridPoint& g, std::int64_t trial) {
    return derive_seed(seed, g.m, g.n, g.b, trial);
}

namespace detail {

inline bool exact_feasible(const GridPoint& g, Index s, const RipOptions& opt) {
    const Index n = g.n * g.b;
    return binomial(n, std::min(s, n)) <= opt.budget && n * n <= opt.dense_limit &&
           g.m * n <= opt.dense_limit;
}

inline double delta_estimate(const SparseCityMatrix& a, Index s, const ScanOptions& opt, bool exact,
                             std::uint64_t seed) {
    if (exact) return delta_exact(a, s, opt.rip).value;
    return delta_monte_carlo(a, s, opt.mc_supports, derive_seed(seed, 0x6d63)).value;
}

}  // namespace detail

/// Mean and sample standard deviation of delta_s over fresh Sparse City
/// draws at each grid point.
inline std::vector<ScalingRow> expectation_scan(const std::vector<GridPoint>& grid, Index s,
                                                std::int64_t trials, std::uint64_t seed,
                                                const ScanOptions& opt = {}) {
    if (trials < 1) detail::fail<domain_error>("expectation_scan: need trials >= 1");
    std::vector<ScalingRow> rows;
    for (const auto& g : grid) {
        ScalingRow row;
        row.m = g.m;
        row.n = g.n;
        row.b = g.b;
        row.s = s;
        row.trials = trials;
        row.bound_proxy = bound_proxy(g.m, g.n, g.b, s);
        row.in_theorem_regime = g.m <= g.n * g.b;
        row.degenerate = s == 0;
        const bool exact = detail::exact_feasible(g, s, opt.rip);
        row.method = exact ? RipMethod::exact : RipMethod::monte_carlo;

        std::vector<double> values(static_cast<std::size_t>(trials), 0.0);
        if (s > 0) {
            parallel_for(values.size(), opt.threads, [&](std::size_t t) {
                const auto ts = trial_seed(seed, g, static_cast<std::int64_t>(t));
                const SparseCityMatrix a(g.m, g.n, g.b, ts, opt.dist);
                values[t] = detail::delta_estimate(a, s, opt, exact, ts);
            });
        }
        double sum = 0.0;
        for (double v : values) sum += v;
        row.mean_value = sum / static_cast<double>(trials);
        double sq = 0.0;
        for (double v : values) sq += (v - row.mean_value) * (v - row.mean_value);
        row.std_value = trials > 1 ? std::sqrt(sq / static_cast<double>(trials - 1)) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

struct TailEstimate {
    double probability = 0.0;
    std::int64_t exceedances = 0;
    std::int64_t trials = 0;
    RipMethod method = RipMethod::exact;
    bool in_theorem_regime = true;
};

/// Fraction of independent draws whose delta_s estimate is >= delta.
inline TailEstimate tail_estimate(const GridPoint& g, Index s, double delta, std::int64_t trials,
                                  std::uint64_t seed, const ScanOptions& opt = {}) {
    if (trials < 1) detail::fail<domain_error>("tail_estimate: need trials >= 1");
    TailEstimate out;
    out.trials = trials;
    out.in_theorem_regime = g.m <= g.n * g.b;
    const bool exact = detail::exact_feasible(g, s, opt.rip);
    out.method = exact ? RipMethod::exact : RipMethod::monte_carlo;
    std::vector<char> hit(static_cast<std::size_t>(trials), 0);
    parallel_for(hit.size(), opt.threads, [&](std::size_t t) {
        const auto ts = trial_seed(seed, g, static_cast<std::int64_t>(t));
        const SparseCityMatrix a(g.m, g.n, g.b, ts, opt.dist);
        const double v = s == 0 ? 0.0 : detail::delta_estimate(a, s, opt, exact, ts);
        hit[t] = v >= delta;
    });
    for (char h : hit) out.exceedances += h;
    out.probability = static_cast<double>(out.exceedances) / static_cast<double>(trials);
    return out;
}

inline std::string scaling_csv(const std::vector<ScalingRow>& rows, const std::string& manifest_hash) {
    std::string out;
    csv::row(out, "m", "n", "b", "s", "trials", "mean_value", "std_value", "bound_proxy", "method",
             "in_theorem_regime", "degenerate", "manifest_hash");
    for (const auto& r : rows)
        csv::row(out, r.m, r.n, r.b, r.s, r.trials, r.mean_value, r.std_value, r.bound_proxy,
                 to_string(r.method), r.in_theorem_regime, r.degenerate, manifest_hash);
    return out;
}

}  // namespace sparsecity
