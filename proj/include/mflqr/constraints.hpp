#pragma once

#include <optional>

#include "mflqr/lti.hpp"
#include "mflqr/riccati.hpp"

namespace mflqr {

enum class Variant {
    Regulator,
    Equilibrium,
    RefTracking,
    MixedModel,
    MixedTracking,
};

const char* variant_name(Variant v);

// Known actuator sub-block for the mixed variants: gamma' = A_hat gamma + B_hat u.
struct ActuatorModel {
    Matrix A_hat;  // pa x pa
    Matrix B_hat;  // pa x m

    ActuatorModel(Matrix A_hat_, Matrix B_hat_);
    int pa() const { return static_cast<int>(A_hat.rows()); }
};

// Everything that defines one synthesis problem besides the data itself.
struct SynthesisSpec {
    Variant variant = Variant::Regulator;
    Weights weights;
    double dt = 0.0;
    std::optional<TrackingSpec> tracking;
    std::optional<ActuatorModel> known_actuator;

    SynthesisSpec(Variant v, Weights w, double dt_,
                  std::optional<TrackingSpec> tracking_ = std::nullopt,
                  std::optional<ActuatorModel> actuator_ = std::nullopt);
};

// Flat decision-vector bookkeeping. Ordering is fixed:
//   [ vec(L), vec(K), vec(F), vec(X), x_eq, u_eq ]
// column-major within each block, with absent blocks skipped. For the mixed
// variants the state dimension n below is the joint dimension (unknown
// states + actuator states) and the X block stores Z.
struct DecisionLayout {
    int n = 0;   // state rows of the X block
    int m = 0;   // input dimension
    int q = 0;   // reference dimension (0 when no tracking)
    int N = 0;   // constraint sample count (X holds N+1 columns)
    int pa = 0;  // actuator states (mixed variants)
    bool has_K = false, has_F = false, has_eq = false;

    int L_offset = 0, K_offset = 0, F_offset = 0, X_offset = 0;
    int xeq_offset = 0, ueq_offset = 0;
    int dim = 0;
    int constraint_count = 0;

    static DecisionLayout create(const SynthesisSpec& spec, int n, int m, int N);

    int x_col_offset(int k) const { return X_offset + k * n; }
};

// Materialized decision blocks; unused blocks stay empty. The X block holds
// absolute states; variant shifts (x_eq, H r) are applied inside the
// residuals. P = L^T L is PSD by construction.
struct DecisionVector {
    Matrix L;      // n x n
    Matrix K;      // m x n, when present
    Matrix F;      // m x q, when present
    Matrix X;      // n x (N+1)
    Vector x_eq;   // equilibrium variant only
    Vector u_eq;

    Matrix P() const { return L.transpose() * L; }

    static DecisionVector unflatten(const DecisionLayout& lay, const Vector& flat);
    Vector flatten(const DecisionLayout& lay) const;
};

// The paper's initialization: X = Y, L = I, K = 1, F = 1 (x_eq = u_eq = 0).
Vector initial_point(const DecisionLayout& lay, const Trajectory& data);

// Per-variant residuals; entry k couples samples k and k+1. Mixed variants
// return the dynamic block (N entries) followed by the actuator block
// (N * pa entries, column-major in k).
Vector residual_regulator(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec);
Vector residual_equilibrium(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec);
Vector residual_reference(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec);
Vector residual_mixed(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec);

// Dispatch on spec.variant.
Vector residual(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec);
Vector residual_flat(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                     const SynthesisSpec& spec);

// Analytic Jacobian of the residual w.r.t. the flat decision vector.
// Row k has nonzeros only in the global blocks and the x_k / x_{k+1} columns.
SparseMatrix jacobian(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                      const SynthesisSpec& spec);

// Squared distance between latent and measured states plus its gradient.
// The variant shifts cancel between the two sides, so this is
// ||vec(X) - vec(Y)||^2 in every variant.
double objective(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                 Vector* gradient);

} // namespace mflqr
