#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "cjsr/matrix.hpp"

namespace cjsr {

/// Driving point θ ∈ [0,1) moves as t·θ = θ + νt mod 1.
struct CircleRotation {
    double speed = 0.0;
};

/// Closed orbit of the given period, parametrized by the same circle angle
/// at speed 1/period.
struct PeriodicOrbit {
    double period = 1.0;
};

using Driving = std::variant<CircleRotation, PeriodicOrbit>;

struct TrigTerm {
    int harmonic = 1;
    Matrix cos_coeff;
    Matrix sin_coeff;
};

/// X(θ) = X0 + Σ_m [cos(2πmθ)·C_m + sin(2πmθ)·S_m]; a constant generator has
/// no terms.
struct Generator {
    Matrix constant;
    std::vector<TrigTerm> terms;

    std::size_t dim() const noexcept { return constant.dim(); }
    bool is_constant() const noexcept { return terms.empty(); }
    Matrix at(double theta) const;
};

class LinearFlow {
public:
    LinearFlow(Driving driving, Generator generator);

    std::size_t dim() const noexcept { return generator_.dim(); }
    const Driving& driving() const noexcept { return driving_; }
    const Generator& generator() const noexcept { return generator_; }
    double speed() const noexcept { return speed_; }
    std::optional<double> period() const noexcept;
    /// Exact norm for constant generators, else 1.01 × max over 4096 angles.
    double a_star() const noexcept { return a_star_; }

    double shift(double theta, double t) const;
    Matrix generator_at(double theta) const { return generator_.at(theta); }

private:
    Driving driving_;
    Generator generator_;
    double speed_ = 0.0;
    double a_star_ = 0.0;
};

/// 𝒳(t, w) by classical RK4 with fixed step; the last step is shortened to
/// land on t. Throws std::invalid_argument for step ≤ 0 or t < 0.
Matrix fundamental_matrix(const LinearFlow& flow, double w, double t, double step);

/// ‖𝒳(t+s, w) − 𝒳(t, s·w)·𝒳(s, w)‖₂.
double cocycle_residual(const LinearFlow& flow, double w, double s, double t, double step);

struct LiouvilleCheck {
    double determinant = 0.0;
    double predicted = 0.0;
    double relative_error = 0.0;
};

/// det 𝒳(t, w) against exp(∫₀ᵗ tr X(s·w) ds), the integral by Simpson's rule
/// on the integration grid.
LiouvilleCheck liouville_check(const LinearFlow& flow, double w, double t, double step);

struct LiaoConstants {
    double epsilon = 0.0;
    double a_star = 0.0;
    double delta = 0.0;
    double rho_pert = 0.0;
    double lambda = 0.0;
    double lambda_star = 0.0;
    double t_bar = 0.0;
    double big_t = 0.0;
    double beta_bar = 0.0;
};

/// δ = ε/2, ϱ = min{δ,1}/4, λ = ϱ/(4e^{2a*}), λ* = (λ/2)e^{−ϱ/2},
/// T̄ = 32/(λϱ)·log(32/λ*²),
/// 𝑻 = max{16a*T̄/ϱ, 2λT̄ + (64/ϱ)log(2/λ*), T̄ + 2}, β̄ = −ϱ/4.
LiaoConstants liao_constants(double epsilon, double a_star);

/// Recomputes every derived field from epsilon and a_star and compares for
/// exact equality, plus 𝑻 ≥ T̄ + 2 and λ* < λ/2.
bool liao_identities_hold(const LiaoConstants& c);

struct QuasiContractionReport {
    double period = 0.0;
    std::vector<double> subdivision;
    std::vector<double> per_segment_log_norms;
    double average = 0.0;
    double threshold_beta = 0.0;
    bool passed = false;
    /// (1/π)·log ρ(𝒳(π, w)).
    double period_log_radius_rate = 0.0;
    /// period_log_radius_rate ≤ average + 1e-8.
    bool submultiplicative = false;
};

/// Throws std::invalid_argument if the flow is not a PeriodicOrbit or the
/// subdivision is not 0 = t_0 < … < t_ℓ = π.
QuasiContractionReport quasi_contraction_test(const LinearFlow& flow, const std::vector<double>& subdivision,
                                              double beta, double step, double w = 0.0);

/// Evenly spaced subdivision of [0, π] with `segments` pieces; endpoints exact.
std::vector<double> uniform_subdivision(double period, std::size_t segments);

/// (1/T)·log‖𝒳(T, w)‖₂.
double xi_t(const LinearFlow& flow, double w, double horizon, double step);

struct ErgodicAverage {
    double estimate = 0.0;
    std::vector<double> sample_times;
    std::vector<double> values;
};

/// Uniform orbit average of ξ_T over `samples` equally spaced times in
/// [0, π); on a closed orbit this is the periodic trapezoid rule.
ErgodicAverage ergodic_average_criterion(const LinearFlow& flow, double horizon, std::size_t samples, double step,
                                         double w = 0.0);

/// (t, log‖𝒳(t, w)‖₂) on t = j·horizon/points, j = 0..points.
std::vector<std::pair<double, double>> log_norm_series(const LinearFlow& flow, double w, double horizon,
                                                       std::size_t points, double step);

struct DecayFit {
    double c = 0.0;
    double gamma = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

/// Least squares of log‖𝒳(t, w)‖ on t over all sample points; C absorbs the
/// largest positive residual so the bound covers every observation.
/// Empty when the slope is ≥ 0.
std::optional<DecayFit> uniform_decay_fit(const LinearFlow& flow, const std::vector<double>& points, double horizon,
                                          double step, std::size_t grid = 32);

}  // namespace cjsr
