#include "mflqr/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

namespace mflqr {

void SolverOptions::validate() const {
    require(tol_constraint > 0.0 && tol_optimality > 0.0,
            "SolverOptions: tolerances must be positive");
    require(max_outer >= 1 && max_inner >= 1, "SolverOptions: iteration limits must be >= 1");
    require(initial_penalty > 0.0 && penalty_growth > 1.0,
            "SolverOptions: penalty parameters out of range");
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::LineSearchFailure: return "line_search_failure";
        case SolveStatus::Diverged: return "diverged";
    }
    return "?";
}

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kLbfgsMemory = 20;
constexpr int kMaxBacktracks = 60;

struct NonFinite {};

// Augmented-Lagrangian value at theta; c is returned for reuse.
double auglag_value(const NlpProblem& pb, const Vector& theta, const Vector& lambda,
                    double mu, Vector& c) {
    const double f = pb.objective_value(theta);
    if (pb.constraint_count > 0) {
        c = pb.constraint_value(theta);
        if (!c.allFinite()) throw NonFinite{};
        const double v = f + lambda.dot(c) + 0.5 * mu * c.squaredNorm();
        if (!std::isfinite(v)) throw NonFinite{};
        return v;
    }
    if (!std::isfinite(f)) throw NonFinite{};
    c.resize(0);
    return f;
}

Vector auglag_gradient(const NlpProblem& pb, const Vector& theta, const Vector& lambda,
                       double mu, const Vector& c) {
    Vector g = pb.objective_gradient(theta);
    if (pb.constraint_count > 0) {
        const SparseMatrix J = pb.constraint_jacobian(theta);
        g += J.transpose() * (lambda + mu * c);
    }
    if (!g.allFinite()) throw NonFinite{};
    return g;
}

struct InnerResult {
    int iterations = 0;
    bool stalled = false;   // Armijo found no acceptable step
    double grad_inf = 0.0;
};

// Limited-memory BFGS with Armijo backtracking on the augmented Lagrangian.
InnerResult lbfgs_min(const NlpProblem& pb, Vector& theta, const Vector& lambda, double mu,
                      double gtol, int max_iter) {
    InnerResult res;
    Vector c;
    double fval = auglag_value(pb, theta, lambda, mu, c);
    Vector grad = auglag_gradient(pb, theta, lambda, mu, c);

    std::deque<Vector> svecs, yvecs;
    std::deque<double> rhos;

    while (res.iterations < max_iter) {
        res.grad_inf = grad.lpNorm<Eigen::Infinity>();
        if (res.grad_inf <= gtol) return res;

        // Two-loop recursion.
        Vector d = grad;
        std::vector<double> alphas(svecs.size());
        for (int i = static_cast<int>(svecs.size()) - 1; i >= 0; --i) {
            alphas[i] = rhos[i] * svecs[i].dot(d);
            d -= alphas[i] * yvecs[i];
        }
        if (!svecs.empty()) {
            const double gamma = svecs.back().dot(yvecs.back()) / yvecs.back().squaredNorm();
            d *= gamma;
        }
        for (std::size_t i = 0; i < svecs.size(); ++i) {
            const double beta = rhos[i] * yvecs[i].dot(d);
            d += (alphas[i] - beta) * svecs[i];
        }
        d = -d;

        double slope = grad.dot(d);
        if (!(slope < 0.0)) {  // fall back to steepest descent
            d = -grad;
            slope = -grad.squaredNorm();
        }

        double alpha = 1.0;
        bool accepted = false;
        Vector theta_new, c_new;
        double f_new = 0.0;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            theta_new = theta + alpha * d;
            try {
                f_new = auglag_value(pb, theta_new, lambda, mu, c_new);
            } catch (const NonFinite&) {
                alpha *= 0.5;
                continue;
            }
            if (f_new <= fval + kArmijoSlope * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            res.stalled = true;
            return res;
        }

        Vector grad_new = auglag_gradient(pb, theta_new, lambda, mu, c_new);
        const Vector s = theta_new - theta;
        const Vector y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            svecs.push_back(s);
            yvecs.push_back(y);
            rhos.push_back(1.0 / sy);
            if (static_cast<int>(svecs.size()) > kLbfgsMemory) {
                svecs.pop_front();
                yvecs.pop_front();
                rhos.pop_front();
            }
        }
        theta = std::move(theta_new);
        fval = f_new;
        grad = std::move(grad_new);
        ++res.iterations;
    }
    res.grad_inf = grad.lpNorm<Eigen::Infinity>();
    return res;
}

} // namespace

std::pair<Vector, SolveReport> minimize(const NlpProblem& problem, const Vector& theta0,
                                        const SolverOptions& opts) {
    opts.validate();
    require(problem.dim > 0, "minimize: problem dimension must be positive");
    require(theta0.size() == problem.dim, "minimize: theta0 dimension mismatch");
    require(static_cast<bool>(problem.objective_value) &&
                static_cast<bool>(problem.objective_gradient),
            "minimize: objective evaluators required");
    if (problem.constraint_count > 0)
        require(static_cast<bool>(problem.constraint_value) &&
                    static_cast<bool>(problem.constraint_jacobian),
                "minimize: constraint evaluators required");

    Vector theta = theta0;
    SolveReport rep;
    rep.multipliers = Vector::Zero(problem.constraint_count);

    Vector lambda = Vector::Zero(problem.constraint_count);
    double mu = opts.initial_penalty;
    double c_prev = std::numeric_limits<double>::infinity();
    int consecutive_stalls = 0;

    try {
        for (int outer = 0; outer < opts.max_outer; ++outer) {
            const InnerResult inner =
                lbfgs_min(problem, theta, lambda, mu, opts.tol_optimality, opts.max_inner);
            rep.inner_iterations += inner.iterations;
            rep.outer_iterations = outer + 1;

            Vector c = problem.constraint_count > 0 ? problem.constraint_value(theta)
                                                    : Vector();
            const double cinf =
                problem.constraint_count > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
            const Vector lambda_trial =
                problem.constraint_count > 0 ? Vector(lambda + mu * c) : lambda;

            Vector g = problem.objective_gradient(theta);
            if (problem.constraint_count > 0)
                g += problem.constraint_jacobian(theta).transpose() * lambda_trial;
            const double stat = g.lpNorm<Eigen::Infinity>();
            const double fobj = problem.objective_value(theta);

            if (opts.log) {
                char line[160];
                std::snprintf(line, sizeof(line), "%d, %d, %.17g, %.17g, %.17g",
                              outer, rep.inner_iterations, fobj, cinf, mu);
                (*opts.log) << line << '\n';
            }

            rep.feasibility = cinf;
            rep.stationarity = stat;
            rep.multipliers = lambda_trial;
            if (cinf <= opts.tol_constraint && stat <= opts.tol_optimality) {
                rep.status = SolveStatus::Converged;
                return {theta, rep};
            }

            if (inner.stalled) {
                if (++consecutive_stalls >= 2) {
                    rep.status = SolveStatus::LineSearchFailure;
                    return {theta, rep};
                }
            } else {
                consecutive_stalls = 0;
            }

            if (problem.constraint_count > 0) {
                if (cinf <= std::max(opts.tol_constraint, 0.25 * c_prev))
                    lambda = lambda_trial;
                else
                    mu *= opts.penalty_growth;
                c_prev = cinf;
            }
        }
    } catch (const NonFinite&) {
        rep.status = SolveStatus::Diverged;
        return {theta, rep};
    }

    rep.status = SolveStatus::MaxIterations;
    return {theta, rep};
}

std::pair<double, double> kkt_residual(const NlpProblem& problem, const Vector& theta,
                                       const Vector& lambda) {
    require(theta.size() == problem.dim, "kkt_residual: theta dimension mismatch");
    Vector g = problem.objective_gradient(theta);
    double feas = 0.0;
    if (problem.constraint_count > 0) {
        require(lambda.size() == problem.constraint_count,
                "kkt_residual: multiplier dimension mismatch");
        const Vector c = problem.constraint_value(theta);
        feas = c.lpNorm<Eigen::Infinity>();
        g += problem.constraint_jacobian(theta).transpose() * lambda;
    }
    return {g.lpNorm<Eigen::Infinity>(), feas};
}

} // namespace mflqr
