#include "mflqr/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace mflqr {

namespace {

void check_symmetric(const Matrix& M, const char* name) {
    require(M.rows() == M.cols(), std::string(name) + " must be square");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            std::string(name) + " must be symmetric");
}

double min_eigenvalue(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    return es.eigenvalues().minCoeff();
}

double spectral_abscissa_of(const Matrix& M) {
    Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

double care_residual_norm(const Matrix& A, const Matrix& B, const Matrix& Q,
                          const Matrix& R, const Matrix& P) {
    const Matrix res = A.transpose() * P + P * A -
                       P * B * R.llt().solve(B.transpose() * P) + Q;
    return res.norm();
}

} // namespace

Weights::Weights(Matrix Q_, Matrix R_) : Q(std::move(Q_)), R(std::move(R_)) {
    check_symmetric(Q, "Weights: Q");
    check_symmetric(R, "Weights: R");
    require(min_eigenvalue(Q) >= -1e-10, "Weights: Q must be positive semi-definite");
    require(min_eigenvalue(R) > 0.0, "Weights: R must be positive definite");
}

TrackingSpec::TrackingSpec(Matrix H_, Vector r_hat_, Matrix C_)
    : H(std::move(H_)), r_hat(std::move(r_hat_)), C(std::move(C_)) {
    require(H.cols() == r_hat.size(), "TrackingSpec: H columns must match r dimension");
    require(C.rows() == H.cols() && C.cols() == H.rows(),
            "TrackingSpec: C must be q x n");
    const Matrix CH = C * H;
    require((CH - Matrix::Identity(CH.rows(), CH.cols())).cwiseAbs().maxCoeff() <= 1e-10,
            "TrackingSpec: C*H must be the identity (x = Hr must give Cx = r)");
}

Matrix TrackingSpec::h_from_c(const Matrix& C) {
    const Matrix CCt = C * C.transpose();
    Eigen::FullPivLU<Matrix> lu(CCt);
    require(lu.isInvertible(), "TrackingSpec: C C^T is singular");
    return C.transpose() * lu.solve(Matrix::Identity(CCt.rows(), CCt.cols()));
}

Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    const int n = static_cast<int>(A.rows());
    require(A.cols() == n && B.rows() == n, "solve_care: dimension mismatch");
    require(Q.rows() == n && Q.cols() == n, "solve_care: Q must be n x n");
    require(R.rows() == B.cols() && R.cols() == B.cols(), "solve_care: R must be m x m");

    Eigen::LLT<Matrix> rchol(R);
    if (rchol.info() != Eigen::Success)
        throw SolveError("solve_care: R is not positive definite");
    const Matrix BRinvBt = B * rchol.solve(B.transpose());

    Matrix ham(2 * n, 2 * n);
    ham.topLeftCorner(n, n) = A;
    ham.topRightCorner(n, n) = -BRinvBt;
    ham.bottomLeftCorner(n, n) = -Q;
    ham.bottomRightCorner(n, n) = -A.transpose();

    Eigen::EigenSolver<Matrix> es(ham);
    if (es.info() != Eigen::Success)
        throw SolveError("solve_care: Hamiltonian eigendecomposition failed");

    // Stable invariant subspace: eigenvectors for Re(lambda) < 0.
    Eigen::MatrixXcd basis(2 * n, n);
    int count = 0;
    for (int i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()[i].real() < 0.0) {
            if (count == n)
                throw SolveError("solve_care: more than n stable Hamiltonian eigenvalues");
            basis.col(count++) = es.eigenvectors().col(i);
        }
    }
    if (count != n) {
        std::ostringstream os;
        os << "solve_care: no n-dimensional stable subspace (" << count
           << " stable eigenvalues of " << 2 * n << ")";
        throw SolveError(os.str());
    }

    const Eigen::MatrixXcd U1 = basis.topRows(n);
    const Eigen::MatrixXcd U2 = basis.bottomRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(U1);
    if (!lu.isInvertible() || lu.rcond() < 1e-13)
        throw SolveError("solve_care: singular stable-subspace basis");
    Matrix P = (U2 * lu.inverse()).real();
    P = 0.5 * (P + P.transpose());

    // Newton-Kleinman: P+ solves (A-BK)^T P+ + P+ (A-BK) = -(Q + K^T R K).
    // One sweep absorbs eigensolver roundoff; extra sweeps only run if the
    // residual contract is still unmet.
    const double tol = 1e-8;
    for (int sweep = 0; sweep < 4; ++sweep) {
        const Matrix K = rchol.solve(B.transpose() * P);
        const Matrix Acl = A - B * K;
        if (spectral_abscissa_of(Acl) >= 0.0) break;
        P = solve_lyapunov(Acl, Q + K.transpose() * (R * K));
        P = 0.5 * (P + P.transpose());
        if (care_residual_norm(A, B, Q, R, P) <= tol * (1.0 + P.norm()))
            break;
    }

    if (care_residual_norm(A, B, Q, R, P) > 1e-6 * (1.0 + P.norm()))
        throw SolveError("solve_care: residual tolerance not met after refinement");
    if (min_eigenvalue(P) < -1e-8 * (1.0 + P.norm()))
        throw SolveError("solve_care: solution is not positive semi-definite");
    return P;
}

Matrix lqr_gain(const Matrix& P, const Matrix& B, const Matrix& R) {
    require(P.rows() == B.rows(), "lqr_gain: P and B row counts differ");
    require(R.rows() == B.cols() && R.cols() == B.cols(), "lqr_gain: R must be m x m");
    Eigen::FullPivLU<Matrix> lu(R);
    if (!lu.isInvertible()) throw SolveError("lqr_gain: singular R");
    return lu.solve(B.transpose() * P);
}

Matrix solve_sylvester(const Matrix& A1, const Matrix& A2, const Matrix& C) {
    require(A1.rows() == A1.cols() && A2.rows() == A2.cols(),
            "solve_sylvester: A1, A2 must be square");
    require(C.rows() == A1.rows() && C.cols() == A2.rows(),
            "solve_sylvester: C dimension mismatch");
    using CMatrix = Eigen::MatrixXcd;
    Eigen::ComplexSchur<Matrix> s1(A1), s2(A2);
    if (s1.info() != Eigen::Success || s2.info() != Eigen::Success)
        throw SolveError("solve_sylvester: Schur decomposition failed");
    const CMatrix S = s1.matrixT();  // upper triangular
    const CMatrix T = s2.matrixT();
    const CMatrix U = s1.matrixU();
    const CMatrix V = s2.matrixU();
    CMatrix Ct = U.adjoint() * C.cast<std::complex<double>>() * V;

    // Solve S Y + Y T + Ct = 0 column by column.
    const auto nr = S.rows();
    const auto nc = T.rows();
    CMatrix Y(nr, nc);
    for (Eigen::Index j = 0; j < nc; ++j) {
        Eigen::VectorXcd rhs = -Ct.col(j);
        for (Eigen::Index i = 0; i < j; ++i) rhs -= T(i, j) * Y.col(i);
        CMatrix lhs = S + T(j, j) * CMatrix::Identity(nr, nr);
        Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
        if (!Y.col(j).allFinite())
            throw SolveError("solve_sylvester: singular spectrum pairing");
    }
    return (U * Y * V.adjoint()).real();
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& C) {
    return solve_sylvester(A.transpose(), A, C);
}

Matrix feedforward(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                   const Matrix& K, const Matrix& H) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    require(C.cols() == n && D.rows() == C.rows() && D.cols() == m,
            "feedforward: C/D dimension mismatch");
    require(K.rows() == m && K.cols() == n, "feedforward: K must be m x n");
    require(H.rows() == n && H.cols() == C.rows(), "feedforward: H must be n x q");

    Matrix block(n + C.rows(), n + m);
    block.topLeftCorner(n, n) = A;
    block.topRightCorner(n, m) = B;
    block.bottomLeftCorner(C.rows(), n) = C;
    block.bottomRightCorner(C.rows(), m) = D;
    Matrix rhs = Matrix::Zero(n + C.rows(), C.rows());
    rhs.bottomRows(C.rows()).setIdentity();

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(block);
    const Matrix W = cod.solve(rhs);
    const double mismatch = (block * W - rhs).cwiseAbs().maxCoeff();
    if (mismatch > 1e-8) {
        std::ostringstream os;
        os << "feedforward: block system rank " << cod.rank() << " of "
           << std::min(block.rows(), block.cols()) << " leaves residual " << mismatch;
        throw SolveError(os.str());
    }
    const Matrix Nx = W.topRows(n);
    const Matrix Nu = W.bottomRows(m);
    return Nu + K * (Nx - H);
}

double closed_loop_cost(const Matrix& A, const Matrix& B, const Matrix& K,
                        const Matrix& Q, const Matrix& R, const Matrix& X0) {
    const Matrix Acl = A - B * K;
    const double abscissa = spectral_abscissa_of(Acl);
    if (abscissa >= 0.0) {
        std::ostringstream os;
        os << "closed_loop_cost: A-BK is not Hurwitz (spectral abscissa " << abscissa
           << "), cost is infinite";
        throw SolveError(os.str());
    }
    const Matrix PK = solve_lyapunov(Acl, Q + K.transpose() * (R * K));
    const Matrix res = Acl.transpose() * PK + PK * Acl + Q + K.transpose() * (R * K);
    if (res.norm() > 1e-9 * (1.0 + PK.norm()))
        throw SolveError("closed_loop_cost: Lyapunov residual tolerance not met");
    return (PK * X0).trace();
}

StabilityReport stability_check(const Matrix& A, const Matrix& B, const Matrix& K) {
    StabilityReport rep;
    rep.spectral_abscissa = spectral_abscissa_of(A - B * K);
    rep.stable = rep.spectral_abscissa < 0.0;
    return rep;
}

GainSet lqr_synthesis(const LtiSystem& sys, const Weights& w,
                      const std::optional<TrackingSpec>& tracking) {
    GainSet gs;
    gs.P = solve_care(sys.A, sys.B, w.Q, w.R);
    gs.K = lqr_gain(gs.P, sys.B, w.R);
    gs.are_residual = care_residual_norm(sys.A, sys.B, w.Q, w.R, gs.P);
    gs.spectral_abscissa = spectral_abscissa_of(sys.A - sys.B * gs.K);
    if (tracking) {
        gs.F = feedforward(sys.A, sys.B, tracking->C,
                           Matrix::Zero(tracking->C.rows(), sys.m()), gs.K, tracking->H);
    }
    return gs;
}

Trajectory simulate_tracking(const LtiSystem& sys, const Matrix& K, const Matrix& F,
                             const TrackingSpec& spec, const ReferenceFn& r_of_t,
                             const Vector& x0, double T, double dt, int substeps) {
    require(K.rows() == sys.m() && K.cols() == sys.n(), "simulate_tracking: K must be m x n");
    require(F.rows() == sys.m() && F.cols() == spec.q(), "simulate_tracking: F must be m x q");
    require(spec.H.rows() == sys.n(), "simulate_tracking: H must be n x q");

    auto control = [&](double t, const Vector& x) -> Vector {
        const Vector r = r_of_t(t);
        return -K * (x - spec.H * r) + F * r;
    };

    const double steps = T / dt;
    const int N = static_cast<int>(std::lround(steps));
    require(std::abs(steps - N) < 1e-9 * std::max(1.0, steps),
            "simulate_tracking: T/dt must be an integer sample count");
    require(substeps >= 1, "simulate_tracking: substeps must be >= 1");

    Trajectory traj;
    traj.dt = dt;
    traj.Y.resize(sys.n(), N + 1);
    traj.U.resize(sys.m(), N + 1);

    auto deriv = [&](double t, const Vector& x) -> Vector {
        return sys.A * x + sys.B * control(t, x);
    };

    Vector x = x0;
    traj.Y.col(0) = x;
    traj.U.col(0) = control(0.0, x);
    const double h = dt / substeps;
    for (int k = 0; k < N; ++k) {
        const double tk = k * dt;
        for (int s = 0; s < substeps; ++s) {
            const double ts = tk + s * h;
            const Vector k1 = deriv(ts, x);
            const Vector k2 = deriv(ts + 0.5 * h, x + (0.5 * h) * k1);
            const Vector k3 = deriv(ts + 0.5 * h, x + (0.5 * h) * k2);
            const Vector k4 = deriv(ts + h, x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite()) {
                std::ostringstream os;
                os << "simulate_tracking: state diverged at t=" << ts + h;
                throw DivergenceError(os.str());
            }
        }
        traj.Y.col(k + 1) = x;
        traj.U.col(k + 1) = control((k + 1) * dt, x);
    }
    return traj;
}

} // namespace mflqr
