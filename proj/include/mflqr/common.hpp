#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace mflqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Error hierarchy. The CLI maps each category onto a stable exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad dimensions, invalid options, malformed configuration.
struct InvalidArgument : Error {
    using Error::Error;
};

// Non-finite state reached during integration.
struct DivergenceError : Error {
    using Error::Error;
};

// Riccati/Lyapunov solve failed (missing stable subspace, singular basis,
// non-Hurwitz closed loop for a cost evaluation).
struct SolveError : Error {
    using Error::Error;
};

// Malformed trajectory/gains/config file.
struct ParseError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

} // namespace mflqr
