#pragma once

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sparsecity/csv.hpp"
#include "sparsecity/errors.hpp"
#include "sparsecity/linear_operator.hpp"
#include "sparsecity/parallel.hpp"
#include "sparsecity/rng.hpp"
#include "sparsecity/sparse_city.hpp"

namespace sparsecity {

// Noiseless sparse recovery: find s-sparse x with y = A x. Every solver
// touches A only through apply/adjoint_apply.

inline constexpr double kSuccessTolerance = 1e-4;

template <LinearOperator Op>
struct RecoveryProblem {
    const Op* op;
    Vector y;
    std::optional<Index> s;
    std::optional<Vector> ground_truth;
};

template <LinearOperator Op>
RecoveryProblem<Op> make_problem(const Op& op, Vector y, std::optional<Index> s = std::nullopt,
                                 std::optional<Vector> truth = std::nullopt) {
    detail::check_length(y.size(), op.rows(), "RecoveryProblem: measurement length");
    if (truth) detail::check_length(truth->size(), op.cols(), "RecoveryProblem: ground truth length");
    return {&op, std::move(y), s, std::move(truth)};
}

enum class RecoveryStatus { converged, max_iterations, rank_deficient, diverged };

inline std::string to_string(RecoveryStatus s) {
    switch (s) {
        case RecoveryStatus::converged: return "converged";
        case RecoveryStatus::max_iterations: return "max_iterations";
        case RecoveryStatus::rank_deficient: return "rank_deficient";
        case RecoveryStatus::diverged: return "diverged";
    }
    return "unknown";
}

struct RecoveryResult {
    Vector x_hat;
    std::vector<Index> support;
    double residual = 0.0;
    int iterations = 0;
    std::optional<double> relative_error;
    bool success = false;
    RecoveryStatus status = RecoveryStatus::converged;

    nlohmann::json to_json() const {
        nlohmann::json x = nlohmann::json::array();
        for (Index i = 0; i < x_hat.size(); ++i) x.push_back(x_hat(i));
        return {{"x_hat", x},
                {"support", support},
                {"residual", residual},
                {"iterations", iterations},
                {"relative_error", relative_error ? nlohmann::json(*relative_error) : nlohmann::json()},
                {"success", success},
                {"status", to_string(status)}};
    }
};

namespace detail {

/// Residual, error against ground truth, and the success flag. Without
/// ground truth, success means the solver converged.
template <LinearOperator Op>
void finalize(RecoveryResult& r, const RecoveryProblem<Op>& p) {
    r.residual = (p.y - p.op->apply(r.x_hat)).norm();
    if (p.ground_truth) {
        const double scale = p.ground_truth->norm();
        const double err = (r.x_hat - *p.ground_truth).norm();
        r.relative_error = scale > 0.0 ? err / scale : err;
        r.success = *r.relative_error <= kSuccessTolerance;
    } else {
        r.success = r.status == RecoveryStatus::converged;
    }
}

/// Index of the largest |v_i| not yet selected; lowest index wins ties.
inline Index argmax_abs(const Vector& v, const std::vector<char>& taken) {
    Index best = -1;
    double best_value = -1.0;
    for (Index i = 0; i < v.size(); ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double a = std::abs(v(i));
        if (a > best_value) {
            best_value = a;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Keeps the s largest-magnitude entries (ties to the lower index) and
/// zeroes the rest.
inline Vector hard_threshold(const Vector& v, Index s) {
    std::vector<Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(v(a)) > std::abs(v(b)); });
    Vector out = Vector::Zero(v.size());
    for (Index i = 0; i < std::min(s, v.size()); ++i) out(order[static_cast<std::size_t>(i)]) = v(order[static_cast<std::size_t>(i)]);
    return out;
}

inline Vector soft_threshold(const Vector& v, double t) {
    return v.unaryExpr([t](double x) { return x > t ? x - t : (x < -t ? x + t : 0.0); });
}

inline std::vector<Index> support_of(const Vector& v, double relative_floor = 0.0) {
    const double floor = v.size() ? relative_floor * v.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Index> out;
    for (Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > floor) out.push_back(i);
    return out;
}

struct OmpOptions {
    double residual_tolerance = 1e-10;
};

/// Orthogonal matching pursuit: pick the column most correlated with the
/// residual, refit by least squares on the support, repeat.
template <LinearOperator Op>
RecoveryResult omp(const RecoveryProblem<Op>& p, const OmpOptions& opt = {}) {
    if (!p.s) detail::fail<domain_error>("omp: sparsity s is required");
    const Index s = *p.s;
    const Op& a = *p.op;
    if (s < 1 || s > a.rows()) detail::fail<domain_error>("omp: need 1 <= s <= m");

    RecoveryResult r;
    r.x_hat = Vector::Zero(a.cols());
    Vector residual = p.y;
    std::vector<char> taken(static_cast<std::size_t>(a.cols()), 0);
    Matrix basis(a.rows(), 0);
    Vector coef;

    while (r.iterations < s && residual.norm() >= opt.residual_tolerance) {
        const Vector corr = a.adjoint_apply(residual);
        const Index pick = detail::argmax_abs(corr, taken);
        if (pick < 0) break;

        Matrix grown(a.rows(), basis.cols() + 1);
        grown << basis, column(a, pick);
        Eigen::ColPivHouseholderQR<Matrix> qr(grown);
        qr.setThreshold(1e-12);
        if (qr.rank() < grown.cols()) {
            r.status = RecoveryStatus::rank_deficient;
            break;
        }
        basis = std::move(grown);
        taken[static_cast<std::size_t>(pick)] = 1;
        r.support.push_back(pick);
        coef = qr.solve(p.y);
        residual = p.y - basis * coef;
        ++r.iterations;
    }
    for (std::size_t i = 0; i < r.support.size(); ++i) r.x_hat(r.support[i]) = coef(static_cast<Index>(i));
    std::vector<Index> sorted = r.support;
    std::sort(sorted.begin(), sorted.end());
    r.support = std::move(sorted);
    detail::finalize(r, p);
    return r;
}

struct IhtOptions {
    double step = 1.0;
    int max_iters = 500;
    double residual_tolerance = 1e-10;
    std::optional<Vector> initial;
};

/// Iterative hard thresholding: x <- H_s(x + step * A^T (y - A x)).
template <LinearOperator Op>
RecoveryResult iht(const RecoveryProblem<Op>& p, const IhtOptions& opt = {}) {
    if (!p.s) detail::fail<domain_error>("iht: sparsity s is required");
    if (!(opt.step >= 0.0)) detail::fail<domain_error>("iht: step must be nonnegative");
    const Op& a = *p.op;
    RecoveryResult r;
    r.x_hat = opt.initial ? *opt.initial : Vector::Zero(a.cols());
    detail::check_length(r.x_hat.size(), a.cols(), "iht: initial iterate");

    Vector residual = p.y - a.apply(r.x_hat);
    const double start = residual.norm();
    r.status = RecoveryStatus::max_iterations;
    if (start < opt.residual_tolerance) {
        r.status = RecoveryStatus::converged;
    } else {
        while (r.iterations < opt.max_iters) {
            r.x_hat = hard_threshold(r.x_hat + opt.step * a.adjoint_apply(residual), *p.s);
            residual = p.y - a.apply(r.x_hat);
            ++r.iterations;
            const double norm = residual.norm();
            if (norm < opt.residual_tolerance) {
                r.status = RecoveryStatus::converged;
                break;
            }
            if (norm > 10.0 * start) {
                r.status = RecoveryStatus::diverged;
                break;
            }
        }
    }
    r.support = support_of(r.x_hat);
    detail::finalize(r, p);
    return r;
}

struct BasisPursuitOptions {
    double tol_primal = 1e-7;
    double tol_dual = 1e-7;
    int max_iters = 20000;
    double gamma = 0.0;          // prox step; 0 picks one from the data
    double cg_tolerance = 1e-10; // relative, inner solve on A A^T
};

namespace detail {

/// Conjugate gradients on A A^T lambda = rhs, warm-started from lambda and
/// capped at m iterations. Stops at residual tol * max(||rhs||, scale): once
/// rhs is at rounding level, a purely relative target is unreachable and CG
/// on a singular A A^T wanders off.
template <LinearOperator Op>
void solve_normal(const Op& a, const Vector& rhs, Vector& lambda, double tol, double scale) {
    const double target = tol * std::max({rhs.norm(), scale, std::numeric_limits<double>::min()});
    Vector r = rhs - a.apply(a.adjoint_apply(lambda));
    if (r.norm() <= target) return;
    Vector p = r;
    double rr = r.squaredNorm();
    for (Index it = 0; it < a.rows(); ++it) {
        const Vector q = a.apply(a.adjoint_apply(p));
        const double pq = p.dot(q);
        if (pq <= 0.0) break;
        const double alpha = rr / pq;
        lambda += alpha * p;
        r -= alpha * q;
        const double rr_next = r.squaredNorm();
        if (std::sqrt(rr_next) <= target) break;
        p = r + (rr_next / rr) * p;
        rr = rr_next;
    }
}

/// CGLS for min ||A_S u - y|| over vectors supported on S, started from x
/// restricted to S. Touches A only through apply/adjoint_apply.
template <LinearOperator Op>
Vector restricted_least_squares(const Op& a, const Vector& y, const std::vector<Index>& support,
                                const Vector& x0, double tol) {
    auto restrict = [&](const Vector& v) {
        Vector out = Vector::Zero(v.size());
        for (Index i : support) out(i) = v(i);
        return out;
    };
    Vector u = restrict(x0);
    Vector r = y - a.apply(u);
    Vector s = restrict(a.adjoint_apply(r));
    Vector p = s;
    double ss = s.squaredNorm();
    const double target = tol * std::max(y.norm(), std::numeric_limits<double>::min());
    for (std::size_t it = 0; it < 2 * support.size() + 10 && std::sqrt(ss) > target * 1e-3; ++it) {
        const Vector q = a.apply(p);
        const double qq = q.squaredNorm();
        if (qq <= 0.0) break;
        const double alpha = ss / qq;
        u += alpha * p;
        r -= alpha * q;
        s = restrict(a.adjoint_apply(r));
        const double ss_next = s.squaredNorm();
        p = s + (ss_next / ss) * p;
        ss = ss_next;
    }
    return u;
}

}  // namespace detail

/// min ||x||_1 subject to A x = y, by Douglas-Rachford splitting between the
/// l1 prox (soft thresholding) and projection onto {x : A x = y}. The
/// projection solves A A^T lambda = A z - y by warm-started CG.
///
/// Stops once ||A x - y|| <= tol_primal and the iterate moves by at most
/// tol_dual * max(1, ||x||). The splitting iterate is then polished by a
/// least-squares solve on its support, kept only if it stays feasible and
/// does not increase the l1 norm.
template <LinearOperator Op>
RecoveryResult basis_pursuit(const RecoveryProblem<Op>& p, const BasisPursuitOptions& opt = {}) {
    if (!(opt.tol_primal > 0.0 && opt.tol_dual > 0.0))
        detail::fail<domain_error>("basis_pursuit: tolerances must be positive");
    const Op& a = *p.op;
    RecoveryResult r;
    r.status = RecoveryStatus::max_iterations;

    Vector lambda = Vector::Zero(a.rows());
    auto project = [&](const Vector& z) {
        detail::solve_normal(a, a.apply(z) - p.y, lambda, opt.cg_tolerance, p.y.norm());
        return Vector(z - a.adjoint_apply(lambda));
    };

    // least-norm feasible point
    Vector z = project(Vector::Zero(a.cols()));
    Vector x = z;
    const double scale = x.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        r.x_hat = Vector::Zero(a.cols());
        r.status = RecoveryStatus::converged;
        detail::finalize(r, p);
        return r;
    }
    const double gamma = opt.gamma > 0.0 ? opt.gamma : 0.1 * scale;

    Vector previous = x;
    while (r.iterations < opt.max_iters) {
        x = project(z);
        const Vector v = soft_threshold(2.0 * x - z, gamma);
        z += v - x;
        ++r.iterations;
        const double move = (x - previous).norm();
        previous = x;
        if (r.iterations > 1 && move <= opt.tol_dual * std::max(1.0, x.norm()) &&
            (a.apply(x) - p.y).norm() <= opt.tol_primal) {
            r.status = RecoveryStatus::converged;
            break;
        }
    }
    if (r.status == RecoveryStatus::converged) {
        const auto support = support_of(x, 1e-6);
        if (static_cast<Index>(support.size()) <= a.rows()) {
            const Vector polished =
                detail::restricted_least_squares(a, p.y, support, x, opt.cg_tolerance);
            if ((a.apply(polished) - p.y).norm() <= opt.tol_primal &&
                polished.lpNorm<1>() <= x.lpNorm<1>())
                x = polished;
        }
    }
    r.x_hat = x;
    r.support = support_of(x, 1e-6);
    detail::finalize(r, p);
    return r;
}

enum class Solver { omp, iht, basis_pursuit };

inline std::string to_string(Solver s) {
    switch (s) {
        case Solver::omp: return "omp";
        case Solver::iht: return "iht";
        case Solver::basis_pursuit: return "basis_pursuit";
    }
    return "unknown";
}

inline Solver solver_from_string(const std::string& name) {
    if (name == "omp") return Solver::omp;
    if (name == "iht") return Solver::iht;
    if (name == "basis_pursuit" || name == "bp") return Solver::basis_pursuit;
    detail::fail<domain_error>("unknown solver '" + name + "'");
}

struct SolverOptions {
    OmpOptions omp;
    IhtOptions iht;
    BasisPursuitOptions bp;

    nlohmann::json to_json() const {
        return {{"omp_residual_tolerance", omp.residual_tolerance},
                {"iht_step", iht.step},
                {"iht_max_iters", iht.max_iters},
                {"bp_tol_primal", bp.tol_primal},
                {"bp_tol_dual", bp.tol_dual},
                {"bp_max_iters", bp.max_iters},
                {"bp_gamma", bp.gamma}};
    }
};

template <LinearOperator Op>
RecoveryResult solve(const RecoveryProblem<Op>& p, Solver solver, const SolverOptions& opt = {}) {
    switch (solver) {
        case Solver::omp: return omp(p, opt.omp);
        case Solver::iht: return iht(p, opt.iht);
        case Solver::basis_pursuit: return basis_pursuit(p, opt.bp);
    }
    detail::fail<domain_error>("solve: unknown solver");
}

// Phase-transition harness.

/// Random s-sparse vector with +-1 amplitudes on a uniform support.
inline Vector random_sparse_signal(Index n, Index s, std::uint64_t seed) {
    const auto support = random_subset(static_cast<std::size_t>(n), static_cast<std::size_t>(s),
                                       CounterRng(seed, 0x5));
    const CounterRng signs(seed, 0x6);
    Vector x = Vector::Zero(n);
    for (std::size_t i = 0; i < support.size(); ++i)
        x(static_cast<Index>(support[i])) = signs.sign(i);
    return x;
}

struct PhaseRow {
    Index s = 0;
    std::int64_t trials = 0;
    std::int64_t successes = 0;
    double rate = 0.0;
    double mean_iterations = 0.0;
    double mean_residual = 0.0;
    Solver solver = Solver::omp;
};

struct PhaseOptions {
    SolverOptions solver;
    unsigned threads = 1;
};

/// Seed of cell (s, trial): hash of (master, s, trial).
inline std::uint64_t cell_seed(std::uint64_t master, Index s, std::int64_t trial) {
    return derive_seed(master, s, trial);
}

/// For each s, the fraction of trials recovered to relative error <= 1e-4.
/// make_operator(seed) builds the measurement matrix for a cell, so each
/// trial sees a fresh draw of the ensemble as well as of the signal.
template <typename Factory>
std::vector<PhaseRow> phase_transition(Factory&& make_operator, const std::vector<Index>& s_grid,
                                       std::int64_t trials, Solver solver, std::uint64_t seed,
                                       const PhaseOptions& opt = {}) {
    if (trials < 1) detail::fail<domain_error>("phase_transition: need trials >= 1");
    struct Cell {
        bool success;
        int iterations;
        double residual;
    };
    std::vector<PhaseRow> rows;
    for (Index s : s_grid) {
        std::vector<Cell> cells(static_cast<std::size_t>(trials));
        parallel_for(cells.size(), opt.threads, [&](std::size_t t) {
            const auto cs = cell_seed(seed, s, static_cast<std::int64_t>(t));
            const auto a = make_operator(derive_seed(cs, 1));
            const Vector x = random_sparse_signal(a.cols(), s, derive_seed(cs, 2));
            const auto problem = make_problem(a, a.apply(x), s, x);
            const auto result = solve(problem, solver, opt.solver);
            cells[t] = {result.success, result.iterations, result.residual};
        });
        PhaseRow row;
        row.s = s;
        row.trials = trials;
        row.solver = solver;
        double iters = 0.0, resid = 0.0;
        for (const auto& c : cells) {
            row.successes += c.success;
            iters += c.iterations;
            resid += c.residual;
        }
        row.rate = static_cast<double>(row.successes) / static_cast<double>(trials);
        row.mean_iterations = iters / static_cast<double>(trials);
        row.mean_residual = resid / static_cast<double>(trials);
        rows.push_back(row);
    }
    return rows;
}

/// Sparse City convenience overload.
inline std::vector<PhaseRow> phase_transition(Index m, Index n, Index b, const std::vector<Index>& s_grid,
                                              std::int64_t trials, Solver solver, std::uint64_t seed,
                                              const PhaseOptions& opt = {},
                                              const ThetaDistribution& dist = theta_fourpoint()) {
    return phase_transition([&](std::uint64_t sd) { return SparseCityMatrix(m, n, b, sd, dist); }, s_grid,
                            trials, solver, seed, opt);
}

inline std::string phase_csv(const std::vector<PhaseRow>& rows, const std::string& manifest_hash) {
    std::string out;
    csv::row(out, "s", "trials", "successes", "rate", "mean_iterations", "mean_residual", "solver",
             "manifest_hash");
    for (const auto& r : rows)
        csv::row(out, r.s, r.trials, r.successes, r.rate, r.mean_iterations, r.mean_residual,
                 to_string(r.solver), manifest_hash);
    return out;
}

}  // namespace sparsecity
