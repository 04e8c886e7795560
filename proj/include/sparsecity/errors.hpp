#pragma once

#include <stdexcept>
#include <string>

namespace sparsecity {

// Vector or matrix dimensions do not line up.
class shape_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of the operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Dense materialization would exceed the configured threshold.
class size_error : public std::length_error {
public:
    using std::length_error::length_error;
};

// Combinatorial enumeration would exceed its budget.
class budget_error : public std::length_error {
public:
    using std::length_error::length_error;
};

class index_error : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Integer accumulation could exceed the declared integer width.
class overflow_error : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

namespace detail {

template <typename Error>
[[noreturn]] inline void fail(const std::string& what) {
    throw Error(what);
}

inline void require_shape(bool ok, const char* what) {
    if (!ok) fail<shape_error>(what);
}

}  // namespace detail

}  // namespace sparsecity
