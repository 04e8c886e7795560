#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "sparsecity/errors.hpp"
#include "sparsecity/linear_operator.hpp"
#include "sparsecity/manifest.hpp"
#include "sparsecity/parallel.hpp"
#include "sparsecity/recovery.hpp"
#include "sparsecity/rng.hpp"
#include "sparsecity/sparse_city.hpp"

namespace sparsecity {

inline constexpr std::uint64_t kSignStream = 0x51a;

enum class SignMode { random, all_positive };

/// Base operator with randomized column signs: P x = base(signs .* x).
template <LinearOperator Base>
class JlProjector {
public:
    JlProjector(Base base, Vector signs, std::uint64_t seed)
        : base_(std::move(base)), signs_(std::move(signs)), seed_(seed) {
        detail::check_length(signs_.size(), base_.cols(), "JlProjector: sign vector");
    }

    Index rows() const { return base_.rows(); }
    Index cols() const { return base_.cols(); }

    Vector apply(const Vector& x) const {
        detail::check_length(x.size(), cols(), "JlProjector::apply");
        return base_.apply(signs_.cwiseProduct(x));
    }
    Vector adjoint_apply(const Vector& y) const {
        return signs_.cwiseProduct(base_.adjoint_apply(y));
    }

    const Base& base() const noexcept { return base_; }
    const Vector& signs() const noexcept { return signs_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    Base base_;
    Vector signs_;
    std::uint64_t seed_;
};

template <LinearOperator Base>
JlProjector<Base> make_projector(Base base, std::uint64_t seed, SignMode mode = SignMode::random) {
    Vector signs = Vector::Ones(base.cols());
    if (mode == SignMode::random) {
        const CounterRng rng(seed, kSignStream);
        for (Index i = 0; i < signs.size(); ++i) signs(i) = rng.sign(static_cast<std::uint64_t>(i));
    }
    return JlProjector<Base>(std::move(base), std::move(signs), seed);
}

struct DistortionReport {
    double max_distortion = 0.0;
    std::int64_t violations = 0;     // pairs with distortion > eps
    std::int64_t pairs = 0;          // pairs compared
    std::int64_t duplicates = 0;     // coincident pairs skipped
};

/// max over pairs of | ||P(u - v)||^2 / ||u - v||^2 - 1 |.
template <LinearOperator Op>
DistortionReport distortion_report(const Op& p, const std::vector<Vector>& points, double eps) {
    if (points.size() < 2) detail::fail<domain_error>("distortion_report: need at least 2 points");
    DistortionReport r;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const Vector d = points[i] - points[j];
            const double before = d.squaredNorm();
            if (before == 0.0) {
                ++r.duplicates;
                continue;
            }
            const double dist = std::abs(p.apply(d).squaredNorm() / before - 1.0);
            r.max_distortion = std::max(r.max_distortion, dist);
            r.violations += dist > eps;
            ++r.pairs;
        }
    return r;
}

// Synthetic classification data: each class lives on a random subspace.

struct SyntheticClassSet {
    Index k = 5;
    Index ambient = 128;
    Index subspace_dim = 4;
    Index samples_per_class = 10;
    Index tests_per_class = 1;
    double noise = 0.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"k", k}, {"ambient", ambient}, {"subspace_dim", subspace_dim},
                {"samples_per_class", samples_per_class}, {"tests_per_class", tests_per_class},
                {"noise", noise}, {"seed", seed}};
    }
};

struct SyntheticData {
    Matrix phi;                 // ambient x (k * samples_per_class), class-major columns
    std::vector<Index> labels;  // class of each column of phi
    Matrix tests;               // ambient x (k * tests_per_class)
    std::vector<Index> test_labels;
    std::vector<Matrix> bases;  // orthonormal ambient x subspace_dim, one per class
};

namespace detail {

inline Matrix gaussian_matrix(Index rows, Index cols, const CounterRng& rng, std::uint64_t offset = 0) {
    Matrix g(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            g(r, c) = rng.normal(offset + static_cast<std::uint64_t>(c * rows + r));
    return g;
}

}  // namespace detail

inline SyntheticData synth_subspace_data(const SyntheticClassSet& spec) {
    if (spec.k < 1 || spec.ambient < 1 || spec.subspace_dim < 1 || spec.samples_per_class < 1 ||
        spec.tests_per_class < 0)
        detail::fail<shape_error>("synth_subspace_data: dimensions must be positive");
    if (spec.subspace_dim > spec.ambient)
        detail::fail<shape_error>("synth_subspace_data: subspace_dim exceeds ambient dimension");
    if (spec.noise < 0.0) detail::fail<domain_error>("synth_subspace_data: negative noise");

    SyntheticData d;
    d.phi.resize(spec.ambient, spec.k * spec.samples_per_class);
    d.tests.resize(spec.ambient, spec.k * spec.tests_per_class);
    for (Index j = 0; j < spec.k; ++j) {
        const auto cs = derive_seed(spec.seed, j);
        // thin Q of a Gaussian matrix is a uniformly random orthonormal basis
        const Matrix g = detail::gaussian_matrix(spec.ambient, spec.subspace_dim, CounterRng(cs, 1));
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix basis = qr.householderQ() * Matrix::Identity(spec.ambient, spec.subspace_dim);

        auto draw = [&](Index count, std::uint64_t stream) {
            const Matrix coef = detail::gaussian_matrix(spec.subspace_dim, count, CounterRng(cs, stream));
            Matrix s = basis * coef;
            if (spec.noise > 0.0)
                s += spec.noise * detail::gaussian_matrix(spec.ambient, count, CounterRng(cs, stream + 1));
            return s;
        };
        d.phi.middleCols(j * spec.samples_per_class, spec.samples_per_class) = draw(spec.samples_per_class, 2);
        if (spec.tests_per_class > 0)
            d.tests.middleCols(j * spec.tests_per_class, spec.tests_per_class) = draw(spec.tests_per_class, 4);
        d.labels.insert(d.labels.end(), static_cast<std::size_t>(spec.samples_per_class), j);
        d.test_labels.insert(d.test_labels.end(), static_cast<std::size_t>(spec.tests_per_class), j);
        d.bases.push_back(std::move(basis));
    }
    return d;
}

/// Smallest principal angle (radians) between any two class subspaces.
inline double min_principal_angle(const std::vector<Matrix>& bases) {
    double angle = std::acos(0.0);
    for (std::size_t i = 0; i < bases.size(); ++i)
        for (std::size_t j = i + 1; j < bases.size(); ++j) {
            const Matrix c = bases[i].transpose() * bases[j];
            const double top = Eigen::JacobiSVD<Matrix>(c).singularValues()(0);
            angle = std::min(angle, std::acos(std::clamp(top, -1.0, 1.0)));
        }
    return angle;
}

// Sparse-representation classification.

struct SrcOptions {
    Solver solver = Solver::omp;
    std::optional<Index> sparsity;  // OMP/IHT atom budget; default: one class's sample count
    bool normalize_columns = true;
    SolverOptions solver_options;

    nlohmann::json to_json() const {
        return {{"solver", to_string(solver)},
                {"sparsity", sparsity ? nlohmann::json(*sparsity) : nlohmann::json()},
                {"normalize_columns", normalize_columns},
                {"solver_options", solver_options.to_json()}};
    }
};

struct SrcResult {
    Index label = 0;
    std::vector<double> residuals;  // per class
    Vector x_hat;
    RecoveryStatus status = RecoveryStatus::converged;
};

namespace detail {

inline Index class_count(const std::vector<Index>& labels) {
    Index k = 0;
    for (Index l : labels) {
        if (l < 0) fail<domain_error>("src: negative class label");
        k = std::max(k, l + 1);
    }
    return k;
}

template <LinearOperator Op>
Matrix project_columns(const Op& p, const Matrix& phi) {
    Matrix out(p.rows(), phi.cols());
    for (Index c = 0; c < phi.cols(); ++c) out.col(c) = p.apply(phi.col(c));
    return out;
}

/// The classifier proper, on an already projected dictionary.
inline SrcResult src_on(Matrix dict, const std::vector<Index>& labels, const Vector& y, const SrcOptions& opt) {
    if (y.norm() == 0.0) fail<domain_error>("src_classify: degenerate (zero) test sample");
    if (static_cast<Index>(labels.size()) != dict.cols())
        fail<shape_error>("src_classify: one label per dictionary column required");
    if (opt.normalize_columns)
        for (Index c = 0; c < dict.cols(); ++c) {
            const double n = dict.col(c).norm();
            if (n > 0.0) dict.col(c) /= n;
        }
    const Index k = class_count(labels);
    Index per_class = 0;
    for (Index l : labels) per_class += l == 0;
    const Index s = std::min(opt.sparsity.value_or(std::max<Index>(per_class, 1)),
                             std::min(dict.rows(), dict.cols()));

    const DenseOperator a(dict);
    const auto r = solve(make_problem(a, y, s), opt.solver, opt.solver_options);

    SrcResult out;
    out.x_hat = r.x_hat;
    out.status = r.status;
    out.residuals.assign(static_cast<std::size_t>(k), 0.0);
    for (Index j = 0; j < k; ++j) {
        Vector xj = Vector::Zero(r.x_hat.size());
        for (Index c = 0; c < xj.size(); ++c)
            if (labels[static_cast<std::size_t>(c)] == j) xj(c) = r.x_hat(c);
        out.residuals[static_cast<std::size_t>(j)] = (y - dict * xj).norm();
    }
    // first minimum: ties go to the lowest class id
    out.label = static_cast<Index>(std::min_element(out.residuals.begin(), out.residuals.end()) -
                                   out.residuals.begin());
    return out;
}

}  // namespace detail

inline SrcResult src_classify(const Matrix& phi, const std::vector<Index>& labels, const Vector& y,
                              const SrcOptions& opt = {}) {
    detail::check_length(y.size(), phi.rows(), "src_classify: test sample");
    return detail::src_on(phi, labels, y, opt);
}

/// Projected variant: y~ = P y and P Phi are formed before solving.
template <LinearOperator Op>
SrcResult src_classify(const Matrix& phi, const std::vector<Index>& labels, const Vector& y,
                       const Op& projector, const SrcOptions& opt = {}) {
    detail::check_length(y.size(), phi.rows(), "src_classify: test sample");
    detail::check_length(projector.cols(), phi.rows(), "src_classify: projector input");
    return detail::src_on(detail::project_columns(projector, phi), labels, projector.apply(y), opt);
}

// Classification experiment.

struct ClassificationSpec {
    SyntheticClassSet data;
    Index m = 32, n = 32, b = 4;  // Sparse City base for the projector
    bool project = true;
    std::int64_t trials = 100;
    std::uint64_t seed = 0;
    SrcOptions src;
    ThetaDistribution dist = theta_fourpoint();
    unsigned threads = 1;

    nlohmann::json to_json() const {
        return {{"data", data.to_json()}, {"m", m}, {"n", n}, {"b", b}, {"project", project},
                {"trials", trials}, {"seed", seed}, {"src", src.to_json()}, {"dist", dist.name},
                {"normalized", dist.normalized}};
    }
};

struct ClassificationReport {
    double accuracy = 0.0;
    double unprojected_accuracy = 0.0;
    double agreement = 0.0;  // projected and unprojected decisions equal
    std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
    double compression_ratio = 1.0;
    std::int64_t trials = 0;
    std::int64_t nonconverged = 0;
    Solver solver = Solver::omp;
    ExperimentManifest manifest;

    nlohmann::json to_json() const {
        return {{"accuracy", accuracy},
                {"unprojected_accuracy", unprojected_accuracy},
                {"agreement", agreement},
                {"per_class_confusion", confusion},
                {"compression_ratio", compression_ratio},
                {"trials", trials},
                {"nonconverged", nonconverged},
                {"solver", to_string(solver)},
                {"manifest", manifest.to_json()}};
    }
};

/// Each trial draws fresh class subspaces, a fresh projector, and one test
/// sample of class (trial mod k); it is classified with and without the
/// projection.
inline ClassificationReport classification_experiment(const ClassificationSpec& spec) {
    if (spec.trials < 1) detail::fail<domain_error>("classification_experiment: need trials >= 1");
    if (spec.project && spec.n * spec.b != spec.data.ambient)
        detail::fail<shape_error>("classification_experiment: projector needs n*b == ambient");
    struct Outcome {
        Index truth, projected, plain;
        bool converged;
    };
    std::vector<Outcome> out(static_cast<std::size_t>(spec.trials));
    parallel_for(out.size(), spec.threads, [&](std::size_t t) {
        SyntheticClassSet ds = spec.data;
        ds.seed = derive_seed(spec.seed, t, 1);
        ds.tests_per_class = 1;
        const auto data = synth_subspace_data(ds);
        const Index truth = static_cast<Index>(t) % ds.k;
        const Vector y = data.tests.col(truth);
        const auto plain = src_classify(data.phi, data.labels, y, spec.src);
        Outcome o{truth, plain.label, plain.label, plain.status == RecoveryStatus::converged};
        if (spec.project) {
            const SparseCityMatrix base(spec.m, spec.n, spec.b, derive_seed(spec.seed, t, 2), spec.dist);
            const auto p = make_projector(base, derive_seed(spec.seed, t, 3));
            const auto proj = src_classify(data.phi, data.labels, y, p, spec.src);
            o.projected = proj.label;
            o.converged = o.converged && proj.status == RecoveryStatus::converged;
        }
        out[t] = o;
    });

    ClassificationReport r;
    r.trials = spec.trials;
    r.solver = spec.src.solver;
    r.compression_ratio = spec.project ? static_cast<double>(spec.data.ambient) / static_cast<double>(spec.m) : 1.0;
    r.confusion.assign(static_cast<std::size_t>(spec.data.k),
                       std::vector<std::int64_t>(static_cast<std::size_t>(spec.data.k), 0));
    std::int64_t hit = 0, plain_hit = 0, agree = 0;
    for (const auto& o : out) {
        ++r.confusion[static_cast<std::size_t>(o.truth)][static_cast<std::size_t>(o.projected)];
        hit += o.projected == o.truth;
        plain_hit += o.plain == o.truth;
        agree += o.projected == o.plain;
        r.nonconverged += !o.converged;
    }
    const double n = static_cast<double>(spec.trials);
    r.accuracy = static_cast<double>(hit) / n;
    r.unprojected_accuracy = static_cast<double>(plain_hit) / n;
    r.agreement = static_cast<double>(agree) / n;
    r.manifest = ExperimentManifest{"embed.classify", spec.to_json()};
    return r;
}

}  // namespace sparsecity
