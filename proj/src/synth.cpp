#include "mflqr/synth.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>

namespace mflqr {

namespace {

std::pair<int, double> rank_and_ratio(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    if (smax == 0.0) return {0, 0.0};
    const double ratio = sv[sv.size() - 1] / smax;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > smax * 1e-12) ++rank;
    return {rank, ratio};
}

} // namespace

ExcitationReport excitation_diagnostic(const Trajectory& data, int depth) {
    require(depth >= 1, "excitation_diagnostic: depth must be positive");
    const int N = data.sample_count();
    const int m = data.m();
    const int p = data.p();
    if (N <= depth * (m + 1))
        throw InvalidArgument("excitation_diagnostic: insufficient samples for depth " +
                              std::to_string(depth));

    ExcitationReport rep;
    rep.depth = depth;

    // Block Hankel of U: rows [u_k; ...; u_{k+depth-1}].
    const int cols = N + 2 - depth;  // k = 0 .. N+1-depth
    Matrix Hk(depth * m, cols);
    for (int k = 0; k < cols; ++k)
        for (int d = 0; d < depth; ++d)
            Hk.block(d * m, k, m, 1) = data.U.col(k + d);
    auto [hrank, hratio] = rank_and_ratio(Hk);
    rep.hankel_rank = hrank;
    rep.hankel_rows = depth * m;
    rep.hankel_sv_ratio = hratio;

    Matrix YU(p + m, N + 1);
    YU.topRows(p) = data.Y;
    YU.bottomRows(m) = data.U;
    auto [yrank, yratio] = rank_and_ratio(YU);
    rep.yu_rank = yrank;
    rep.yu_rows = p + m;
    rep.yu_sv_ratio = yratio;

    rep.pass = rep.hankel_rank == rep.hankel_rows && rep.hankel_sv_ratio >= 1e-8 &&
               rep.yu_rank == rep.yu_rows && rep.yu_sv_ratio >= 1e-8;
    return rep;
}

namespace {

// The raw constraints carry a 2/dt factor; scaling them by dt/2 keeps the
// penalty Hessian tame. Solved in scaled variables z with theta = D .* z,
// where D undoes the Jacobian column imbalance between the small gain
// blocks and the wide X block.
struct ProblemScaling {
    double c_scale = 1.0;
    Vector D;  // variable scaling, theta = D .* z
};

ProblemScaling make_scaling(const DecisionLayout& lay, const Vector& theta0,
                            const Trajectory& data, const SynthesisSpec& spec) {
    ProblemScaling sc;
    sc.c_scale = spec.dt / 2.0;
    sc.D = Vector::Ones(lay.dim);
    const SparseMatrix J = jacobian(lay, theta0, data, spec);
    // Column norms of the scaled Jacobian for the non-X blocks.
    Vector colnorm = Vector::Zero(lay.dim);
    for (int col = 0; col < J.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(J, col); it; ++it)
            colnorm[col] += it.value() * it.value();
    colnorm = (sc.c_scale * colnorm.cwiseSqrt().array()).matrix();
    auto scale_range = [&](int offset, int count) {
        for (int i = 0; i < count; ++i)
            sc.D[offset + i] = 1.0 / std::max(colnorm[offset + i], 1e-3);
    };
    scale_range(lay.L_offset, lay.n * lay.n);
    if (lay.has_K) scale_range(lay.K_offset, lay.m * lay.n);
    if (lay.has_F) scale_range(lay.F_offset, lay.m * lay.q);
    if (lay.has_eq) {
        scale_range(lay.xeq_offset, lay.n);
        scale_range(lay.ueq_offset, lay.m);
    }
    return sc;
}

} // namespace

SynthesisResult synthesize(const Trajectory& data, const SynthesisSpec& spec,
                           const SolverOptions& opts) {
    data.validate();
    const int n = data.p();
    const int m = data.m();
    const int N = data.sample_count();
    require(N >= 1, "synthesize: need at least two samples");
    require(std::abs(data.dt - spec.dt) <= 1e-12 * std::max(1.0, spec.dt),
            "synthesize: data dt does not match spec dt");
    const DecisionLayout lay = DecisionLayout::create(spec, n, m, N);

    SynthesisResult result;

    // Excitation warning (depth 5 when the record allows it).
    {
        int depth = 5;
        while (depth > 1 && N <= depth * (m + 1)) --depth;
        if (N > depth * (m + 1)) {
            const ExcitationReport exc = excitation_diagnostic(data, depth);
            if (!exc.pass) {
                std::ostringstream os;
                os << "excitation diagnostic failed at depth " << depth
                   << " (hankel rank " << exc.hankel_rank << "/" << exc.hankel_rows
                   << ", sv ratio " << exc.hankel_sv_ratio << ")";
                result.warnings.push_back(os.str());
            }
        }
    }

    const Vector theta0 = initial_point(lay, data);
    const ProblemScaling sc = make_scaling(lay, theta0, data, spec);

    NlpProblem pb;
    pb.dim = lay.dim;
    pb.constraint_count = lay.constraint_count;
    pb.name = std::string("synthesis/") + variant_name(spec.variant);
    pb.objective_value = [&lay, &data, sc](const Vector& z) {
        const Vector theta = sc.D.cwiseProduct(z);
        return objective(lay, theta, data, nullptr);
    };
    pb.objective_gradient = [&lay, &data, sc](const Vector& z) {
        const Vector theta = sc.D.cwiseProduct(z);
        Vector g;
        objective(lay, theta, data, &g);
        return Vector(g.cwiseProduct(sc.D));
    };
    pb.constraint_value = [&lay, &data, &spec, sc](const Vector& z) {
        const Vector theta = sc.D.cwiseProduct(z);
        return Vector(sc.c_scale * residual_flat(lay, theta, data, spec));
    };
    pb.constraint_jacobian = [&lay, &data, &spec, sc](const Vector& z) {
        const Vector theta = sc.D.cwiseProduct(z);
        SparseMatrix J = jacobian(lay, theta, data, spec);
        J = sc.c_scale * J * Vector(sc.D).asDiagonal();
        return J;
    };

    const Vector z0 = theta0.cwiseQuotient(sc.D);
    auto [z_star, report] = minimize(pb, z0, opts);
    const Vector theta_star = sc.D.cwiseProduct(z_star);

    const DecisionVector dv = DecisionVector::unflatten(lay, theta_star);
    result.solve = report;
    result.latent_states = dv.X;
    result.gains.P = dv.P();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.gains.are_residual = nan;        // model-free: not computable here
    result.gains.spectral_abscissa = nan;   // filled by compare_gains when a model exists
    if (lay.has_K) {
        result.gains.K = dv.K;
    } else {
        // Mixed variants eliminate K analytically: K = R^{-1} Btil^T P.
        Matrix Btil = Matrix::Zero(n, m);
        Btil.bottomRows(lay.pa) = spec.known_actuator->B_hat;
        result.gains.K = spec.weights.R.llt().solve(Btil.transpose() * result.gains.P);
    }
    if (lay.has_F) result.gains.F = dv.F;
    return result;
}

GainComparison compare_gains(const Matrix& K_hat, const std::optional<Matrix>& F_hat,
                             const GainSet& oracle, const LtiSystem& sys, const Weights& w) {
    require(K_hat.rows() == oracle.K.rows() && K_hat.cols() == oracle.K.cols(),
            "compare_gains: gain dimensions differ");
    GainComparison cmp;
    cmp.max_abs_diff_K = (K_hat - oracle.K).cwiseAbs().maxCoeff();
    cmp.frobenius_diff_K = (K_hat - oracle.K).norm();
    if (F_hat && oracle.F)
        cmp.max_abs_diff_F = (*F_hat - *oracle.F).cwiseAbs().maxCoeff();

    const StabilityReport s_hat = stability_check(sys.A, sys.B, K_hat);
    const StabilityReport s_star = stability_check(sys.A, sys.B, oracle.K);
    cmp.both_stable = s_hat.stable && s_star.stable;
    if (cmp.both_stable) {
        const Matrix X0 = Matrix::Identity(sys.n(), sys.n());
        const double j_hat = closed_loop_cost(sys.A, sys.B, K_hat, w.Q, w.R, X0);
        const double j_star = closed_loop_cost(sys.A, sys.B, oracle.K, w.Q, w.R, X0);
        cmp.cost_ratio = j_hat / j_star;
    }
    return cmp;
}

} // namespace mflqr
