#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cjsr/family.hpp"

namespace cjsr {

struct StationaryResult {
    std::vector<double> p;
    bool converged = false;
    /// False when a second run from a random start lands elsewhere (reducible chain).
    bool unique = true;
    std::size_t iterations = 0;
};

/// Fixed point of p ← pP by power iteration from the uniform vector, on the
/// lazy chain (P + I)/2 so periodic chains converge too. Tolerance 1e-13 in
/// ℓ¹, cap 10⁶ iterations. Throws std::invalid_argument if P is not
/// row-stochastic.
StationaryResult stationary_distribution(const Matrix& transition);

/// Transition matrix P with its stationary row vector p.
class MarkovModel {
public:
    /// Computes p when `stationary` is absent, otherwise validates pP = p.
    explicit MarkovModel(Matrix transition, std::optional<std::vector<double>> stationary = std::nullopt);

    std::size_t size() const noexcept { return transition_.dim(); }
    const Matrix& transition() const noexcept { return transition_; }
    const std::vector<double>& stationary() const noexcept { return stationary_; }
    bool stationary_unique() const noexcept { return unique_; }

    /// P(i → j) with 1-based symbols.
    double probability(Symbol from, Symbol to) const;

private:
    Matrix transition_;
    std::vector<double> stationary_;
    bool unique_ = true;
};

/// 𝔸_ij = 1 iff P_ij > 0, untrimmed.
Constraint constraint_of(const MarkovModel& model);

struct CylinderMeasure {
    double probability = 0.0;
    bool admissible = true;
};

/// μ([i_1..i_n]) = p_{i_1} · P_{i_1 i_2} ⋯ P_{i_{n-1} i_n}. Inadmissible words
/// get exactly 0 with admissible = false. Throws on symbols out of range.
CylinderMeasure cylinder_measure(const MarkovModel& model, std::span<const Symbol> w);

/// First symbol from `initial` (default: the stationary vector), then
/// transitions from the rows of P. Deterministic for a fixed seed.
Word sample_switching_law(const MarkovModel& model, std::size_t length, std::uint64_t seed,
                          std::optional<std::vector<double>> initial = std::nullopt);

struct ExponentEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t length = 0;
    std::size_t trials = 0;
    /// Some product vanished exactly; mean is −∞.
    bool degenerate = false;
    std::vector<double> per_trial;
};

/// Averages (1/n)·log‖A_{σ(n)}⋯A_{σ(1)}‖ over sampled switching laws.
/// Products are renormalized every 20 steps. Trial t uses sub-seed
/// derive_seed(seed, t). With one trial the standard error comes from 20
/// batch means along the trajectory.
/// Throws std::invalid_argument if the chain can emit a transition the
/// family forbids.
ExponentEstimate max_lyapunov_mc(const MatrixFamily& f, const MarkovModel& model, std::size_t length,
                                 std::size_t trials, std::uint64_t seed, NormKind norm = NormKind::Spectral2);

struct LyapunovSpectrum {
    /// Nonincreasing, nats per step. Shorter than d when truncated.
    std::vector<double> exponents;
    std::vector<double> standard_errors;
    /// Standard error of the sum of all exponents (batch means).
    double sum_standard_error = 0.0;
    std::size_t trajectory_length = 0;
    std::size_t trials = 1;
    bool truncated = false;
};

/// Q ← orth(A_{σ(j)} Q) by Householder QR, averaging log|R_ii|.
LyapunovSpectrum lyapunov_spectrum_qr(const MatrixFamily& f, const MarkovModel& model, std::size_t length,
                                      std::uint64_t seed);

/// Family of ℓ-th compound matrices with the same constraint.
MatrixFamily exterior_lift(const MatrixFamily& f, std::size_t l);

/// Stationary average Σ_k p_k log|det A_k|. −∞ if some weighted A_k is singular.
double stationary_log_det_average(const MatrixFamily& f, const MarkovModel& model);

struct PeriodicReturn {
    std::size_t n = 0;
    double exponent = 0.0;
    Word word;
};

struct PeriodicApproximation {
    std::size_t window = 0;
    std::size_t max_length = 0;
    std::vector<PeriodicReturn> returns;
    ExponentEstimate reference;
};

struct PeriodicApproximationOptions {
    std::size_t reference_trials = 16;
    /// Keep the closed words in the result (costly for long returns).
    bool keep_words = false;
};

/// Samples one switching law σ of length max_length + window and finds the
/// return times n ≤ max_length with σ(n+1..n+window) = σ(1..window). Each
/// closed word σ(1..n) is periodic; its exponent is (1/n) log ρ(A_{σ(n)}⋯A_{σ(1)}).
/// The Monte-Carlo maximal exponent at length max_length is attached for comparison.
PeriodicApproximation periodic_approximation(const MatrixFamily& f, const MarkovModel& model, std::uint64_t seed,
                                             std::size_t window, std::size_t max_length,
                                             const PeriodicApproximationOptions& opts = {});

}  // namespace cjsr
