#pragma once

#include <concepts>
#include <string>
#include <vector>

#include "sparsecity/errors.hpp"
#include "sparsecity/walsh.hpp"

namespace sparsecity {

/// Anything with forward and adjoint matrix-vector products. Solvers and
/// diagnostics touch measurement matrices only through this surface.
template <typename Op>
concept LinearOperator = requires(const Op& op, const Vector& v) {
    { op.rows() } -> std::convertible_to<Index>;
    { op.cols() } -> std::convertible_to<Index>;
    { op.apply(v) } -> std::convertible_to<Vector>;
    { op.adjoint_apply(v) } -> std::convertible_to<Vector>;
};

/// Explicit matrix behind the operator contract.
class DenseOperator {
public:
    DenseOperator() = default;
    explicit DenseOperator(Matrix a) : a_(std::move(a)) {}

    Index rows() const noexcept { return a_.rows(); }
    Index cols() const noexcept { return a_.cols(); }

    Vector apply(const Vector& x) const {
        detail::check_length(x.size(), cols(), "DenseOperator::apply");
        return a_ * x;
    }
    Vector adjoint_apply(const Vector& y) const {
        detail::check_length(y.size(), rows(), "DenseOperator::adjoint_apply");
        return a_.transpose() * y;
    }

    const Matrix& matrix() const noexcept { return a_; }

private:
    Matrix a_;
};

/// Wraps an operator and counts how it is used.
template <LinearOperator Op>
class CountingOperator {
public:
    explicit CountingOperator(const Op& op) : op_(&op) {}

    Index rows() const { return op_->rows(); }
    Index cols() const { return op_->cols(); }

    Vector apply(const Vector& x) const {
        ++applies_;
        return op_->apply(x);
    }
    Vector adjoint_apply(const Vector& y) const {
        ++adjoints_;
        return op_->adjoint_apply(y);
    }

    Vector column(Index c) const {
        ++columns_;
        if constexpr (requires { op_->column(c); })
            return op_->column(c);
        else {
            Vector e = Vector::Zero(cols());
            e(c) = 1.0;
            return op_->apply(e);
        }
    }
    Matrix to_dense(Index limit) const
        requires requires(const Op& o) { o.to_dense(limit); }
    {
        ++dense_;
        return op_->to_dense(limit);
    }

    long applies() const noexcept { return applies_; }
    long adjoint_applies() const noexcept { return adjoints_; }
    long column_reads() const noexcept { return columns_; }
    long dense_copies() const noexcept { return dense_; }

private:
    const Op* op_;
    mutable long applies_ = 0;
    mutable long adjoints_ = 0;
    mutable long columns_ = 0;
    mutable long dense_ = 0;
};

/// Column c of the operator: the operator's own column() when it has one,
/// apply(e_c) otherwise.
template <LinearOperator Op>
Vector column(const Op& op, Index c) {
    if constexpr (requires { { op.column(c) } -> std::convertible_to<Vector>; }) {
        return op.column(c);
    } else {
        Vector e = Vector::Zero(op.cols());
        e(c) = 1.0;
        return op.apply(e);
    }
}

/// Dense matrix, column by column.
template <LinearOperator Op>
Matrix materialize(const Op& op, Index limit) {
    if (op.rows() * op.cols() > limit)
        detail::fail<size_error>("materialize: " + std::to_string(op.rows()) + " x " +
                                 std::to_string(op.cols()) + " exceeds dense limit");
    Matrix a(op.rows(), op.cols());
    for (Index c = 0; c < op.cols(); ++c) a.col(c) = column(op, c);
    return a;
}

/// Columns of the operator restricted to a support set.
template <LinearOperator Op>
Matrix columns(const Op& op, const std::vector<Index>& support) {
    Matrix a(op.rows(), static_cast<Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) a.col(static_cast<Index>(i)) = column(op, support[i]);
    return a;
}

}  // namespace sparsecity
