#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cjsr/matrix.hpp"

namespace cjsr {

enum class ConvergentSide { Below, Above, All };

std::string_view to_string(ConvergentSide side) noexcept;
ConvergentSide parse_convergent_side(std::string_view name);

struct Convergent {
    std::int64_t p = 0;
    std::int64_t q = 1;
    /// Position in the full convergent sequence (0 is a_0/1).
    std::size_t index = 0;
};

/// Irrational rotation number ω ∈ (0,1) given by its continued fraction
/// [0; a_1, a_2, ...] together with the reduced convergents p/q in (0,1) on
/// the requested side of ω.
struct RotationSystem {
    std::vector<std::int64_t> coefficients;
    long double omega = 0.0L;
    ConvergentSide side = ConvergentSide::All;
    std::vector<Convergent> convergents;
};

/// [0; 1, 1, 1, ...]: ω = (√5 − 1)/2.
std::vector<std::int64_t> golden_coefficients(std::size_t terms = 80);
/// [0; 2, 2, 2, ...]: ω = √2 − 1.
std::vector<std::int64_t> silver_coefficients(std::size_t terms = 50);

/// Backward evaluation of a finite continued fraction.
long double evaluate_continued_fraction(std::span<const std::int64_t> cf);

/// Convergents from p_n = a_n p_{n−1} + p_{n−2}, q_n = a_n q_{n−1} + q_{n−2}.
/// Only 0 < p < q is kept; Below keeps even-indexed convergents (p/q < ω),
/// Above odd-indexed ones. Returns the first `count` survivors.
/// Throws std::invalid_argument for a_0 ≠ 0 or nonpositive a_n, and
/// std::length_error when the coefficient list runs out first.
RotationSystem make_rotation_system(std::span<const std::int64_t> cf, std::size_t count, ConvergentSide side);

/// min(|Δ|, 1 − |Δ|) on fractional parts.
long double torus_distance(long double a, long double b);

struct ClosingCheck {
    Convergent convergent;
    double z0 = 0.0;
    double max_deviation = 0.0;
    /// tolerance_factor / q.
    double bound = 0.0;
    bool passed = false;
};

/// max over 0 ≤ k < q of the torus distance between z0 + kω and z0 + kp/q.
ClosingCheck closing_check(const RotationSystem& system, std::size_t n, double z0, double tolerance_factor = 1.0);

/// C(y, z) = (y/ω)·A over W = [0, ω] × 𝕋¹ driven by (y, z) ↦ (y, z + y),
/// with A the d×d upper-triangular all-ones matrix (ρ(A) = 1).
struct UnipotentRotationCocycle {
    UnipotentRotationCocycle(RotationSystem system, std::size_t dim);

    RotationSystem system;
    std::size_t dim;
    Matrix a;
};

struct PeriodicSpectralValue {
    Convergent convergent;
    /// p / (q ω).
    double closed_form = 0.0;
    /// ρ(C(q, w))^(1/q) from the actual q-step product.
    double numeric = 0.0;
};

/// Per-step spectral radius over the periodic fiber y = p_n/q_n of the n-th
/// stored convergent, which must lie below ω.
PeriodicSpectralValue unipotent_periodic_value(const UnipotentRotationCocycle& cocycle, std::size_t n);

struct UnipotentBracketReport {
    std::vector<PeriodicSpectralValue> periodic;
    double periodic_sup = 0.0;
    std::vector<std::size_t> n_values;
    /// max over sampled fibers of (y/ω)·‖A^n‖^(1/n); attained at y = ω.
    std::vector<double> upper;
    std::vector<double> fibers;
    double gap_at_max_n = 0.0;
    bool periodic_all_below_one = false;
    bool upper_all_at_least_one = false;
    bool gap_positive_everywhere = false;
    /// No periodic value within 1e-6 of any upper estimate.
    bool finiteness_fails = false;
};

UnipotentBracketReport unipotent_bracket_report(const UnipotentRotationCocycle& cocycle, std::size_t n_max,
                                                std::size_t fiber_samples);

/// 1×1 cocycle equal to γ^(1/q_n) on each periodic fiber p_n/q_n and to 1 on
/// the ω fiber.
struct FiberScalarCocycle {
    FiberScalarCocycle(RotationSystem system, double gamma);

    RotationSystem system;
    double gamma;
};

struct FiberProduct {
    Convergent convergent;
    double fiber_value = 0.0;
    /// fiber_value multiplied q times.
    double product = 0.0;
    /// exp(q · (log γ)/q).
    double product_exact_exponent = 0.0;
    /// Periodic margin of the orbit viewed as a q-cycle family.
    double margin = 0.0;
};

struct PeriodicVsUniformReport {
    double gamma = 0.0;
    std::vector<FiberProduct> fibers;
    double periodic_margin = 0.0;
    std::vector<double> omega_fiber_log_norms;
    double omega_fiber_exponent = 0.0;
    bool completely_periodically_stable = false;
    bool uniformly_stable = true;
    std::string verdict;
};

PeriodicVsUniformReport periodic_vs_uniform_report(const FiberScalarCocycle& cocycle, std::size_t n_max);

}  // namespace cjsr
