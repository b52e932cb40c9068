#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mflqr/constraints.hpp"
#include "mflqr/nlp.hpp"

namespace mflqr {

// Oracle-relative quality metrics for a synthesized gain set.
struct GainComparison {
    double max_abs_diff_K = 0.0;
    double frobenius_diff_K = 0.0;
    std::optional<double> max_abs_diff_F;
    std::optional<double> cost_ratio;  // J(K_hat)/J(K_star), identity X0; absent if unstable
    bool both_stable = false;
};

struct SynthesisResult {
    GainSet gains;
    SolveReport solve;
    Matrix latent_states;  // recovered X (or Z), n x (N+1)
    std::optional<GainComparison> comparison;
    std::vector<std::string> warnings;
};

// Hankel-rank excitation diagnostic per the persistent-excitation heuristic:
// the depth-block Hankel matrix of U and the single-block [Y; U] matrix must
// both have full row rank with singular-value ratio >= 1e-8.
struct ExcitationReport {
    int depth = 0;
    int hankel_rank = 0, hankel_rows = 0;
    double hankel_sv_ratio = 0.0;
    int yu_rank = 0, yu_rows = 0;
    double yu_sv_ratio = 0.0;
    bool pass = false;
};

ExcitationReport excitation_diagnostic(const Trajectory& data, int depth);

// Assembles the variant NLP from data and spec (paper initialization
// X = Y, L = I, K = 1, F = 1), scales and preconditions it, minimizes, and
// extracts (P, K, F). Non-convergence is reported in the result, not thrown.
SynthesisResult synthesize(const Trajectory& data, const SynthesisSpec& spec,
                           const SolverOptions& opts = {});

GainComparison compare_gains(const Matrix& K_hat, const std::optional<Matrix>& F_hat,
                             const GainSet& oracle, const LtiSystem& sys, const Weights& w);

} // namespace mflqr
