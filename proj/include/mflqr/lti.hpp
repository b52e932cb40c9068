#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>

#include "mflqr/common.hpp"

namespace mflqr {

// Continuous-time state-space model  x' = Ax + Bu,  y = Cx + Du.
struct LtiSystem {
    Matrix A, B, C, D;

    LtiSystem(Matrix A_, Matrix B_, Matrix C_, Matrix D_);

    // Full-state measurement: C = I, D = 0.
    static LtiSystem from_ab(Matrix A_, Matrix B_);

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }
};

// Uniformly sampled input/output record. N is the sample count excluding
// index 0, so Y and U hold N+1 columns each.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    Matrix Y;  // p x (N+1)
    Matrix U;  // m x (N+1)

    int sample_count() const { return static_cast<int>(Y.cols()) - 1; }
    int p() const { return static_cast<int>(Y.rows()); }
    int m() const { return static_cast<int>(U.rows()); }
    void validate() const;
};

// Linear-frequency sweep  u(t) = psi * sin(2*pi*(c/2*t^2 + f0*t)).
// When c is not given it defaults to (f1 - f0) / T.
struct ChirpSpec {
    double psi = 0.0;
    double f0 = 0.0;
    double f1 = 0.0;
    double T = 0.0;
    std::optional<double> c;

    double rate() const { return c ? *c : (f1 - f0) / T; }
};

// Additive i.i.d. Gaussian output noise, reproducible from the seed.
struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

double chirp_eval(const ChirpSpec& spec, double t);

using InputFn = std::function<Vector(double)>;

// Wraps one ChirpSpec per input channel as a vector-valued input signal.
InputFn chirp_input(const std::vector<ChirpSpec>& channels);

// Classical fixed-step RK4 with `substeps` internal steps per sample
// interval. Records the full state (C = I view) and the input on the grid
// t_k = t0 + k*dt. Throws DivergenceError naming the time at which the
// state left the finite range.
Trajectory simulate(const LtiSystem& sys, const InputFn& input, const Vector& x0,
                    double T, double dt, int substeps = 10);

// Returns a copy with Y perturbed entrywise by N(0, sigma^2); U, dt, N
// untouched. Same seed, same bytes.
Trajectory add_noise(const Trajectory& traj, const NoiseSpec& noise);

// Forward-Euler difference quotients: column k is (y_{k+1} - y_k)/dt,
// k = 0..N-1.
Matrix finite_diff(const Trajectory& traj);

void traj_write(const Trajectory& traj, const std::filesystem::path& path);
Trajectory traj_read(const std::filesystem::path& path);

} // namespace mflqr
