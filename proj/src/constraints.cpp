#include "mflqr/constraints.hpp"

#include <vector>

namespace mflqr {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Regulator: return "regulator";
        case Variant::Equilibrium: return "equilibrium";
        case Variant::RefTracking: return "ref_tracking";
        case Variant::MixedModel: return "mixed_model";
        case Variant::MixedTracking: return "mixed_tracking";
    }
    return "?";
}

ActuatorModel::ActuatorModel(Matrix A_hat_, Matrix B_hat_)
    : A_hat(std::move(A_hat_)), B_hat(std::move(B_hat_)) {
    require(A_hat.rows() == A_hat.cols(), "ActuatorModel: A_hat must be square");
    require(B_hat.rows() == A_hat.rows(), "ActuatorModel: B_hat row count must match A_hat");
    require(A_hat.allFinite() && B_hat.allFinite(), "ActuatorModel: matrices must be finite");
}

SynthesisSpec::SynthesisSpec(Variant v, Weights w, double dt_,
                             std::optional<TrackingSpec> tracking_,
                             std::optional<ActuatorModel> actuator_)
    : variant(v), weights(std::move(w)), dt(dt_), tracking(std::move(tracking_)),
      known_actuator(std::move(actuator_)) {
    require(dt > 0.0, "SynthesisSpec: dt must be positive");
    const bool wants_tracking = v == Variant::RefTracking || v == Variant::MixedTracking;
    require(tracking.has_value() == wants_tracking,
            "SynthesisSpec: tracking data present iff variant tracks a reference");
    const bool wants_actuator = v == Variant::MixedModel || v == Variant::MixedTracking;
    require(known_actuator.has_value() == wants_actuator,
            "SynthesisSpec: known actuator present iff variant is mixed");
}

DecisionLayout DecisionLayout::create(const SynthesisSpec& spec, int n, int m, int N) {
    require(n > 0 && m > 0 && N >= 1, "DecisionLayout: need n, m > 0 and N >= 1");
    DecisionLayout lay;
    lay.n = n;
    lay.m = m;
    lay.N = N;
    const bool mixed = spec.variant == Variant::MixedModel || spec.variant == Variant::MixedTracking;
    lay.has_K = !mixed;
    lay.has_F = spec.variant == Variant::RefTracking || spec.variant == Variant::MixedTracking;
    lay.has_eq = spec.variant == Variant::Equilibrium;
    if (mixed) {
        lay.pa = spec.known_actuator->pa();
        require(lay.pa < n, "DecisionLayout: actuator block must be smaller than the joint state");
        require(spec.known_actuator->B_hat.cols() == m,
                "DecisionLayout: B_hat column count must match input dimension");
    }
    if (lay.has_F) {
        lay.q = spec.tracking->q();
        require(spec.tracking->H.rows() == n, "DecisionLayout: H row count must match state");
    }
    require(spec.weights.Q.rows() == n, "DecisionLayout: Q must match the state dimension");
    require(spec.weights.R.rows() == m, "DecisionLayout: R must match the input dimension");

    int off = 0;
    lay.L_offset = off;
    off += n * n;
    lay.K_offset = off;
    if (lay.has_K) off += m * n;
    lay.F_offset = off;
    if (lay.has_F) off += m * lay.q;
    lay.X_offset = off;
    off += n * (N + 1);
    lay.xeq_offset = off;
    if (lay.has_eq) off += n;
    lay.ueq_offset = off;
    if (lay.has_eq) off += m;
    lay.dim = off;
    lay.constraint_count = mixed ? N + N * lay.pa : N;
    return lay;
}

DecisionVector DecisionVector::unflatten(const DecisionLayout& lay, const Vector& flat) {
    require(flat.size() == lay.dim, "DecisionVector: flat vector has wrong dimension");
    DecisionVector dv;
    using CMap = Eigen::Map<const Matrix>;
    dv.L = CMap(flat.data() + lay.L_offset, lay.n, lay.n);
    if (lay.has_K) dv.K = CMap(flat.data() + lay.K_offset, lay.m, lay.n);
    if (lay.has_F) dv.F = CMap(flat.data() + lay.F_offset, lay.m, lay.q);
    dv.X = CMap(flat.data() + lay.X_offset, lay.n, lay.N + 1);
    if (lay.has_eq) {
        dv.x_eq = flat.segment(lay.xeq_offset, lay.n);
        dv.u_eq = flat.segment(lay.ueq_offset, lay.m);
    }
    return dv;
}

Vector DecisionVector::flatten(const DecisionLayout& lay) const {
    Vector flat = Vector::Zero(lay.dim);
    using Map = Eigen::Map<Matrix>;
    Map(flat.data() + lay.L_offset, lay.n, lay.n) = L;
    if (lay.has_K) Map(flat.data() + lay.K_offset, lay.m, lay.n) = K;
    if (lay.has_F) Map(flat.data() + lay.F_offset, lay.m, lay.q) = F;
    Map(flat.data() + lay.X_offset, lay.n, lay.N + 1) = X;
    if (lay.has_eq) {
        flat.segment(lay.xeq_offset, lay.n) = x_eq;
        flat.segment(lay.ueq_offset, lay.m) = u_eq;
    }
    return flat;
}

Vector initial_point(const DecisionLayout& lay, const Trajectory& data) {
    require(data.p() == lay.n && data.m() == lay.m && data.sample_count() == lay.N,
            "initial_point: data does not match the layout");
    DecisionVector dv;
    dv.L = Matrix::Identity(lay.n, lay.n);
    if (lay.has_K) dv.K = Matrix::Ones(lay.m, lay.n);
    if (lay.has_F) dv.F = Matrix::Ones(lay.m, lay.q);
    dv.X = data.Y;
    if (lay.has_eq) {
        dv.x_eq = Vector::Zero(lay.n);
        dv.u_eq = Vector::Zero(lay.m);
    }
    return dv.flatten(lay);
}

namespace {

struct EvalContext {
    const DecisionLayout& lay;
    const SynthesisSpec& spec;
    Eigen::Map<const Matrix> L, K, F, X;
    Vector shift;        // applied to every state column
    Vector input_shift;  // applied to u_k in the dynamic block
    bool mixed = false;
    Matrix Btil;   // n x m, [0; B_hat] (mixed only)
    Matrix Smat;   // Btil R^{-1} Btil^T (mixed only)

    EvalContext(const DecisionLayout& lay_, const Vector& theta, const Trajectory& data,
                const SynthesisSpec& spec_)
        : lay(lay_), spec(spec_),
          L(theta.data() + lay_.L_offset, lay_.n, lay_.n),
          K(lay_.has_K ? theta.data() + lay_.K_offset : theta.data(), lay_.has_K ? lay_.m : 0,
            lay_.has_K ? lay_.n : 0),
          F(lay_.has_F ? theta.data() + lay_.F_offset : theta.data(), lay_.has_F ? lay_.m : 0,
            lay_.has_F ? lay_.q : 0),
          X(theta.data() + lay_.X_offset, lay_.n, lay_.N + 1) {
        require(theta.size() == lay.dim, "residual: decision vector has wrong dimension");
        require(data.p() == lay.n, "residual: data state rows do not match layout");
        require(data.m() == lay.m, "residual: data input rows do not match layout");
        require(data.sample_count() == lay.N, "residual: data sample count does not match layout");

        mixed = spec.variant == Variant::MixedModel || spec.variant == Variant::MixedTracking;
        shift = Vector::Zero(lay.n);
        input_shift = Vector::Zero(lay.m);
        switch (spec.variant) {
            case Variant::Equilibrium:
                shift = theta.segment(lay.xeq_offset, lay.n);
                input_shift = theta.segment(lay.ueq_offset, lay.m);
                break;
            case Variant::RefTracking:
            case Variant::MixedTracking:
                shift = spec.tracking->H * spec.tracking->r_hat;
                input_shift = F * spec.tracking->r_hat;
                break;
            default:
                break;
        }
        if (mixed) {
            const auto& act = *spec.known_actuator;
            Btil = Matrix::Zero(lay.n, lay.m);
            Btil.bottomRows(lay.pa) = act.B_hat;
            Smat = Btil * spec.weights.R.llt().solve(Btil.transpose());
        }
    }
};

// Shared dynamic-block residual; also fills the actuator block for mixed
// variants.
Vector residual_core(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                     const SynthesisSpec& spec) {
    EvalContext ctx(lay, theta, data, spec);
    const int N = lay.N;
    const double dt = spec.dt;
    const Matrix P = ctx.L.transpose() * ctx.L;
    const Matrix& Q = spec.weights.Q;
    const Matrix& R = spec.weights.R;

    Matrix Xs = ctx.X.colwise() - ctx.shift;
    Matrix Vk = data.U.leftCols(N).colwise() - ctx.input_shift;
    const auto Xk = Xs.leftCols(N);
    const Matrix PX = P * Xs;

    Vector r(lay.constraint_count);
    Eigen::RowVectorXd t1 = (2.0 / dt) * (Xk.cwiseProduct(PX.rightCols(N)).colwise().sum() -
                                          Xk.cwiseProduct(PX.leftCols(N)).colwise().sum());
    Eigen::RowVectorXd t3 = Xk.cwiseProduct(Q * Xk).colwise().sum();
    if (!ctx.mixed) {
        const Matrix KX = ctx.K * Xk;
        Eigen::RowVectorXd t2 = KX.cwiseProduct(R * KX).colwise().sum();
        Eigen::RowVectorXd t4 = KX.cwiseProduct(R * Vk).colwise().sum();
        r = (t1 - t2 + t3 - 2.0 * t4).transpose();
    } else {
        const auto PXk = PX.leftCols(N);
        Eigen::RowVectorXd t2 = PXk.cwiseProduct(ctx.Smat * PXk).colwise().sum();
        Eigen::RowVectorXd t4 = PXk.cwiseProduct(ctx.Btil * Vk).colwise().sum();
        r.head(N) = (t1 - t2 + t3 - 2.0 * t4).transpose();
        // Actuator recursion on the raw actuator states and raw inputs.
        const int pa = lay.pa;
        const auto G = ctx.X.bottomRows(pa);
        const Matrix act = (G.rightCols(N) - G.leftCols(N)) / dt -
                           spec.known_actuator->A_hat * G.leftCols(N) -
                           spec.known_actuator->B_hat * data.U.leftCols(N);
        r.tail(N * pa) = Eigen::Map<const Vector>(act.data(), N * pa);
    }
    return r;
}

void require_variant(const SynthesisSpec& spec, Variant expected, const char* op) {
    require(spec.variant == expected,
            std::string(op) + ": spec variant is " + variant_name(spec.variant));
}

} // namespace

Vector residual_regulator(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec) {
    require_variant(spec, Variant::Regulator, "residual_regulator");
    return residual(th, data, spec);
}

Vector residual_equilibrium(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec) {
    require_variant(spec, Variant::Equilibrium, "residual_equilibrium");
    return residual(th, data, spec);
}

Vector residual_reference(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec) {
    require_variant(spec, Variant::RefTracking, "residual_reference");
    return residual(th, data, spec);
}

Vector residual_mixed(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec) {
    require(spec.variant == Variant::MixedModel || spec.variant == Variant::MixedTracking,
            "residual_mixed: spec variant is not mixed");
    return residual(th, data, spec);
}

Vector residual(const DecisionVector& th, const Trajectory& data, const SynthesisSpec& spec) {
    const DecisionLayout lay =
        DecisionLayout::create(spec, static_cast<int>(th.X.rows()), data.m(), data.sample_count());
    return residual_core(lay, th.flatten(lay), data, spec);
}

Vector residual_flat(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                     const SynthesisSpec& spec) {
    return residual_core(lay, theta, data, spec);
}

SparseMatrix jacobian(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                      const SynthesisSpec& spec) {
    EvalContext ctx(lay, theta, data, spec);
    const int N = lay.N;
    const int n = lay.n;
    const int m = lay.m;
    const double dt = spec.dt;
    const Matrix P = ctx.L.transpose() * ctx.L;
    const Matrix& Q = spec.weights.Q;
    const Matrix& R = spec.weights.R;

    Matrix Xs = ctx.X.colwise() - ctx.shift;
    Matrix Vk = data.U.leftCols(N).colwise() - ctx.input_shift;
    const Matrix Adif = Xs.rightCols(N) - Xs.leftCols(N);  // a_k = x_{k+1} - x_k
    const Matrix PX = P * Xs;
    const Matrix QXk = Q * Xs.leftCols(N);
    const Matrix LX = ctx.L * Xs.leftCols(N);
    const Matrix LA = ctx.L * Adif;

    std::vector<Eigen::Triplet<double>> trip;
    const int per_row = n * n + (lay.has_K ? m * n : 0) + (lay.has_F ? m * lay.q : 0) + 2 * n +
                        (lay.has_eq ? n + m : 0);
    trip.reserve(static_cast<std::size_t>(N) * per_row + static_cast<std::size_t>(N) * lay.pa * 3 * lay.pa);

    // Per-variant precomputations for the dynamic block.
    Matrix KX, RKXV, KtRK, KtRV, PSPXk, PBtV, SPXk, LSPXk, BtV, LBtV;
    if (!ctx.mixed) {
        KX = ctx.K * Xs.leftCols(N);
        RKXV = R * (KX + Vk);                    // -2 R (K xi + v) xi^T -> dK
        KtRK = ctx.K.transpose() * (R * ctx.K);  // for dX
        KtRV = ctx.K.transpose() * (R * Vk);
    } else {
        SPXk = ctx.Smat * PX.leftCols(N);
        PSPXk = P * SPXk;
        BtV = ctx.Btil * Vk;
        PBtV = P * BtV;
        LSPXk = ctx.L * SPXk;
        LBtV = ctx.L * BtV;
    }

    for (int k = 0; k < N; ++k) {
        const auto xi = Xs.col(k);
        const auto xi1 = Xs.col(k + 1);
        const auto a = Adif.col(k);

        // dL block: vec'd column-major.
        if (!ctx.mixed) {
            // (2/dt) L (a xi^T + xi a^T) = (2/dt) [ (La) xi^T + (Lxi) a^T ]
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    trip.emplace_back(k, lay.L_offset + j * n + i,
                                      (2.0 / dt) * (LA(i, k) * xi[j] + LX(i, k) * a[j]));
        } else {
            // L(G + G^T) with G from the P-quadratic and P-linear terms.
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    double v = (2.0 / dt) * (LX(i, k) * a[j] + LA(i, k) * xi[j]) -
                               2.0 * LX(i, k) * SPXk(j, k) - 2.0 * LSPXk(i, k) * xi[j] -
                               2.0 * LX(i, k) * BtV(j, k) - 2.0 * LBtV(i, k) * xi[j];
                    trip.emplace_back(k, lay.L_offset + j * n + i, v);
                }
        }

        if (lay.has_K) {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < m; ++i)
                    trip.emplace_back(k, lay.K_offset + j * m + i, -2.0 * RKXV(i, k) * xi[j]);
        }

        if (lay.has_F) {
            // d/dF of -2 (K xi)^T R (u - F r) = +2 (R K xi) r^T   (plain variants)
            //          -2 xi^T P Btil (u - F r) = +2 (Btil^T P xi) r^T (mixed)
            Vector lead = ctx.mixed ? Vector(ctx.Btil.transpose() * PX.col(k))
                                    : Vector(R * KX.col(k));
            for (int j = 0; j < lay.q; ++j)
                for (int i = 0; i < m; ++i)
                    trip.emplace_back(k, lay.F_offset + j * m + i,
                                      2.0 * lead[i] * spec.tracking->r_hat[j]);
        }

        // dX columns k and k+1.
        Vector dxk = (2.0 / dt) * (PX.col(k + 1) - 2.0 * PX.col(k)) + 2.0 * QXk.col(k);
        if (!ctx.mixed)
            dxk += -2.0 * (KtRK * xi) - 2.0 * KtRV.col(k);
        else
            dxk += -2.0 * PSPXk.col(k) - 2.0 * PBtV.col(k);
        const Vector dxk1 = (2.0 / dt) * PX.col(k);
        for (int i = 0; i < n; ++i) {
            trip.emplace_back(k, lay.x_col_offset(k) + i, dxk[i]);
            trip.emplace_back(k, lay.x_col_offset(k + 1) + i, dxk1[i]);
        }

        if (lay.has_eq) {
            // xi_k and xi_{k+1} both shift by -x_eq; u by -u_eq.
            for (int i = 0; i < n; ++i)
                trip.emplace_back(k, lay.xeq_offset + i, -(dxk[i] + dxk1[i]));
            const Vector due = 2.0 * (R * KX.col(k));
            for (int i = 0; i < m; ++i)
                trip.emplace_back(k, lay.ueq_offset + i, due[i]);
        }
    }

    if (ctx.mixed) {
        const int pa = lay.pa;
        const Matrix& Ah = spec.known_actuator->A_hat;
        for (int k = 0; k < N; ++k) {
            for (int i = 0; i < pa; ++i) {
                const int row = N + k * pa + i;
                const int gofs = n - pa;
                for (int j = 0; j < pa; ++j) {
                    double v = -Ah(i, j) - (i == j ? 1.0 / dt : 0.0);
                    trip.emplace_back(row, lay.x_col_offset(k) + gofs + j, v);
                }
                trip.emplace_back(row, lay.x_col_offset(k + 1) + gofs + i, 1.0 / dt);
            }
        }
    }

    SparseMatrix J(lay.constraint_count, lay.dim);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

double objective(const DecisionLayout& lay, const Vector& theta, const Trajectory& data,
                 Vector* gradient) {
    require(theta.size() == lay.dim, "objective: decision vector has wrong dimension");
    require(data.p() == lay.n && data.sample_count() == lay.N,
            "objective: data does not match layout");
    Eigen::Map<const Matrix> X(theta.data() + lay.X_offset, lay.n, lay.N + 1);
    const Matrix D = X - data.Y;
    if (gradient) {
        gradient->setZero(lay.dim);
        Eigen::Map<Matrix>(gradient->data() + lay.X_offset, lay.n, lay.N + 1) = 2.0 * D;
    }
    return D.squaredNorm();
}

} // namespace mflqr
