#pragma once

#include <functional>
#include <optional>

#include "mflqr/lti.hpp"

namespace mflqr {

// LQR cost weights: Q symmetric PSD, R symmetric PD.
struct Weights {
    Matrix Q, R;

    Weights(Matrix Q_, Matrix R_);
};

// Solution bundle of a classical LQR synthesis. F is present only when a
// tracking configuration was supplied.
struct GainSet {
    Matrix P;  // value-function matrix, symmetric PSD
    Matrix K;  // state feedback, u = -K x
    std::optional<Matrix> F;  // feedforward, u = -K(x - H r) + F r
    double are_residual = 0.0;
    double spectral_abscissa = 0.0;
};

// Reference-tracking geometry: x - H r = 0 must imply C x = r, i.e. CH = I.
struct TrackingSpec {
    Matrix H;  // n x q
    Vector r_hat;
    Matrix C;  // q x n tracked-output map

    TrackingSpec(Matrix H_, Vector r_hat_, Matrix C_);

    // General construction H = C^T (C C^T)^{-1}.
    static Matrix h_from_c(const Matrix& C);
    int q() const { return static_cast<int>(H.cols()); }
};

// Solves A^T P + P A - P B R^{-1} B^T P + Q = 0 for the stabilizing PSD P.
// Method: eigendecomposition of the 2n x 2n Hamiltonian, stable invariant
// subspace, then Newton-Kleinman refinement (one sweep, repeated only if
// the residual still exceeds the contract tolerance).
Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

// K = R^{-1} B^T P.
Matrix lqr_gain(const Matrix& P, const Matrix& B, const Matrix& R);

// Solves A1 X + X A2 + C = 0 (Bartels-Stewart via complex Schur).
Matrix solve_sylvester(const Matrix& A1, const Matrix& A2, const Matrix& C);

// Solves A^T X + X A + C = 0.
Matrix solve_lyapunov(const Matrix& A, const Matrix& C);

// Steady-state feedforward F = N_u + K (N_x - H), where [N_x; N_u] solves
// [[A,B],[C,D]] [N_x; N_u] = [0; I] (pseudoinverse solution when the block
// system is not square).
Matrix feedforward(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                   const Matrix& K, const Matrix& H);

// trace(P_K X0) with (A-BK)^T P_K + P_K (A-BK) + Q + K^T R K = 0.
// Throws SolveError when A - BK is not Hurwitz.
double closed_loop_cost(const Matrix& A, const Matrix& B, const Matrix& K,
                        const Matrix& Q, const Matrix& R, const Matrix& X0);

struct StabilityReport {
    double spectral_abscissa = 0.0;
    bool stable = false;
};

StabilityReport stability_check(const Matrix& A, const Matrix& B, const Matrix& K);

// Convenience: CARE + gain + diagnostics (+ feedforward when tracking given).
GainSet lqr_synthesis(const LtiSystem& sys, const Weights& w,
                      const std::optional<TrackingSpec>& tracking = std::nullopt);

using ReferenceFn = std::function<Vector(double)>;

// RK4 simulation of x' = Ax + Bu with u(t) = -K (x - H r(t)) + F r(t).
// The returned trajectory records the full state in Y and the applied u.
Trajectory simulate_tracking(const LtiSystem& sys, const Matrix& K, const Matrix& F,
                             const TrackingSpec& spec, const ReferenceFn& r_of_t,
                             const Vector& x0, double T, double dt, int substeps = 10);

} // namespace mflqr
