#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "sparsecity/rng.hpp"

namespace sparsecity::testing {

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
    const CounterRng rng(seed, 0x7e57);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal(static_cast<std::uint64_t>(i));
    return v;
}

inline double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    const double scale = want.norm();
    return scale == 0.0 ? got.norm() : (got - want).norm() / scale;
}

}  // namespace sparsecity::testing
