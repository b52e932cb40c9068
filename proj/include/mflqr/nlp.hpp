#pragma once

#include <functional>
#include <ostream>
#include <string>

#include "mflqr/common.hpp"

namespace mflqr {

// Generic smooth equality-constrained program
//     min f(theta)  s.t.  c(theta) = 0.
// Evaluators must be deterministic.
struct NlpProblem {
    int dim = 0;
    int constraint_count = 0;
    std::function<double(const Vector&)> objective_value;
    std::function<Vector(const Vector&)> objective_gradient;
    std::function<Vector(const Vector&)> constraint_value;       // e-vector
    std::function<SparseMatrix(const Vector&)> constraint_jacobian;
    std::string name = "nlp";
};

struct SolverOptions {
    double tol_constraint = 1e-8;   // ||c||_inf at the solution
    double tol_optimality = 1e-6;   // ||grad f + J^T lambda||_inf
    int max_outer = 50;
    int max_inner = 500;            // quasi-Newton iterations per outer pass
    double initial_penalty = 10.0;  // mu_0
    double penalty_growth = 10.0;
    std::ostream* log = nullptr;    // one line per outer iteration when set

    void validate() const;
};

enum class SolveStatus { Converged, MaxIterations, LineSearchFailure, Diverged };

const char* status_name(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::MaxIterations;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double feasibility = 0.0;    // final ||c||_inf
    double stationarity = 0.0;   // final ||grad f + J^T lambda||_inf
    Vector multipliers;
};

// Augmented-Lagrangian outer loop with an L-BFGS (memory 20) inner
// minimizer and Armijo backtracking. Multipliers update when feasibility
// improved by at least 4x (or already meets tolerance); otherwise the
// penalty grows.
std::pair<Vector, SolveReport> minimize(const NlpProblem& problem, const Vector& theta0,
                                        const SolverOptions& opts = {});

// (stationarity, feasibility) = (||grad f + J^T lambda||_inf, ||c||_inf).
std::pair<double, double> kkt_residual(const NlpProblem& problem, const Vector& theta,
                                       const Vector& lambda);

} // namespace mflqr
