#include "cjsr/ode_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cjsr {

namespace {

constexpr std::size_t kSupSamples = 4096;
constexpr double kSupSafety = 1.01;

void check_term(const TrigTerm& term, std::size_t d) {
    if (term.harmonic < 1) throw std::invalid_argument("trigonometric harmonic must be >= 1");
    if (term.cos_coeff.dim() != d || term.sin_coeff.dim() != d) {
        throw std::invalid_argument("trigonometric coefficient dimension mismatch");
    }
}

// Steps of size `step` from 0, with the last one ending exactly at t.
template <typename Fn>
void for_each_step(double t, double step, Fn&& fn) {
    if (t <= 0.0) return;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(t / step * (1.0 - 1e-12))));
    for (std::size_t k = 0; k < n; ++k) {
        const double a = static_cast<double>(k) * step;
        const double b = k + 1 == n ? t : static_cast<double>(k + 1) * step;
        fn(a, b - a);
    }
}

void check_step(double t, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("integration step must be positive");
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("integration horizon must be >= 0");
}

}  // namespace

Matrix Generator::at(double theta) const {
    Matrix x = constant;
    for (const auto& term : terms) {
        const double angle = 2.0 * std::numbers::pi * term.harmonic * theta;
        x += term.cos_coeff * std::cos(angle);
        x += term.sin_coeff * std::sin(angle);
    }
    return x;
}

LinearFlow::LinearFlow(Driving driving, Generator generator)
    : driving_(std::move(driving)), generator_(std::move(generator)) {
    const std::size_t d = generator_.dim();
    for (const auto& term : generator_.terms) check_term(term, d);
    if (const auto* orbit = std::get_if<PeriodicOrbit>(&driving_)) {
        if (!(orbit->period > 0.0) || !std::isfinite(orbit->period)) {
            throw std::invalid_argument("periodic orbit period must be > 0");
        }
        speed_ = 1.0 / orbit->period;
    } else {
        speed_ = std::get<CircleRotation>(driving_).speed;
        if (!std::isfinite(speed_)) throw std::invalid_argument("rotation speed must be finite");
    }

    if (generator_.is_constant()) {
        a_star_ = operator_norm(generator_.constant, NormKind::Spectral2);
    } else {
        double sup = 0.0;
        for (std::size_t j = 0; j < kSupSamples; ++j) {
            const double theta = static_cast<double>(j) / static_cast<double>(kSupSamples);
            sup = std::max(sup, operator_norm(generator_.at(theta), NormKind::Spectral2));
        }
        a_star_ = kSupSafety * sup;
    }
}

std::optional<double> LinearFlow::period() const noexcept {
    if (const auto* orbit = std::get_if<PeriodicOrbit>(&driving_)) return orbit->period;
    return std::nullopt;
}

double LinearFlow::shift(double theta, double t) const {
    const double x = theta + speed_ * t;
    return x - std::floor(x);
}

Matrix fundamental_matrix(const LinearFlow& flow, double w, double t, double step) {
    check_step(t, step);
    Matrix y = Matrix::identity(flow.dim());
    if (flow.generator().is_constant()) {
        const Matrix& x = flow.generator().constant;
        for_each_step(t, step, [&](double, double h) {
            const Matrix k1 = x * y;
            const Matrix k2 = x * (y + k1 * (h / 2));
            const Matrix k3 = x * (y + k2 * (h / 2));
            const Matrix k4 = x * (y + k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6);
        });
        return y;
    }
    for_each_step(t, step, [&](double a, double h) {
        const Matrix x0 = flow.generator_at(flow.shift(w, a));
        const Matrix xm = flow.generator_at(flow.shift(w, a + h / 2));
        const Matrix x1 = flow.generator_at(flow.shift(w, a + h));
        const Matrix k1 = x0 * y;
        const Matrix k2 = xm * (y + k1 * (h / 2));
        const Matrix k3 = xm * (y + k2 * (h / 2));
        const Matrix k4 = x1 * (y + k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6);
    });
    return y;
}

double cocycle_residual(const LinearFlow& flow, double w, double s, double t, double step) {
    if (!(s >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("cocycle_residual: s and t must be >= 0");
    const Matrix whole = fundamental_matrix(flow, w, t + s, step);
    const Matrix split = fundamental_matrix(flow, flow.shift(w, s), t, step) * fundamental_matrix(flow, w, s, step);
    return operator_norm(whole - split, NormKind::Spectral2);
}

LiouvilleCheck liouville_check(const LinearFlow& flow, double w, double t, double step) {
    check_step(t, step);
    double integral = 0.0;
    for_each_step(t, step, [&](double a, double h) {
        const double fa = flow.generator_at(flow.shift(w, a)).trace();
        const double fm = flow.generator_at(flow.shift(w, a + h / 2)).trace();
        const double fb = flow.generator_at(flow.shift(w, a + h)).trace();
        integral += h / 6 * (fa + 4 * fm + fb);
    });
    LiouvilleCheck out;
    out.determinant = determinant(fundamental_matrix(flow, w, t, step));
    out.predicted = std::exp(integral);
    out.relative_error = std::abs(out.determinant - out.predicted) / std::abs(out.predicted);
    return out;
}

LiaoConstants liao_constants(double epsilon, double a_star) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("liao_constants: epsilon must be > 0");
    if (!(a_star >= 0.0) || !std::isfinite(a_star)) throw std::invalid_argument("liao_constants: a_star must be >= 0");
    LiaoConstants c;
    c.epsilon = epsilon;
    c.a_star = a_star;
    c.delta = epsilon / 2;
    c.rho_pert = std::min(c.delta, 1.0) / 4;
    c.lambda = c.rho_pert / (4 * std::exp(2 * a_star));
    c.lambda_star = (c.lambda / 2) * std::exp(-c.rho_pert / 2);
    c.t_bar = (32 / (c.lambda * c.rho_pert)) * std::log(32 / (c.lambda_star * c.lambda_star));
    c.big_t = std::max({16 * a_star * c.t_bar / c.rho_pert,
                        2 * c.lambda * c.t_bar + (64 / c.rho_pert) * std::log(2 / c.lambda_star), c.t_bar + 2});
    c.beta_bar = -c.rho_pert / 4;
    return c;
}

bool liao_identities_hold(const LiaoConstants& c) {
    const LiaoConstants r = liao_constants(c.epsilon, c.a_star);
    return r.delta == c.delta && r.rho_pert == c.rho_pert && r.lambda == c.lambda && r.lambda_star == c.lambda_star &&
           r.t_bar == c.t_bar && r.big_t == c.big_t && r.beta_bar == c.beta_bar && c.big_t >= c.t_bar + 2 &&
           c.lambda_star < c.lambda / 2;
}

std::vector<double> uniform_subdivision(double period, std::size_t segments) {
    if (segments == 0) throw std::invalid_argument("uniform_subdivision: need at least one segment");
    std::vector<double> out(segments + 1);
    for (std::size_t k = 0; k <= segments; ++k) out[k] = period * static_cast<double>(k) / static_cast<double>(segments);
    out.front() = 0.0;
    out.back() = period;
    return out;
}

QuasiContractionReport quasi_contraction_test(const LinearFlow& flow, const std::vector<double>& subdivision,
                                              double beta, double step, double w) {
    const auto period = flow.period();
    if (!period) throw std::invalid_argument("quasi_contraction_test: flow must be a periodic orbit");
    if (subdivision.size() < 2 || subdivision.front() != 0.0 || subdivision.back() != *period) {
        throw std::invalid_argument("quasi_contraction_test: subdivision must run from 0 to the period");
    }
    for (std::size_t k = 1; k < subdivision.size(); ++k) {
        if (!(subdivision[k] > subdivision[k - 1])) {
            throw std::invalid_argument("quasi_contraction_test: subdivision must be strictly increasing");
        }
    }

    QuasiContractionReport out;
    out.period = *period;
    out.subdivision = subdivision;
    out.threshold_beta = beta;
    double sum = 0.0;
    for (std::size_t k = 1; k < subdivision.size(); ++k) {
        const double start = flow.shift(w, subdivision[k - 1]);
        const Matrix seg = fundamental_matrix(flow, start, subdivision[k] - subdivision[k - 1], step);
        const double v = std::log(operator_norm(seg, NormKind::Spectral2));
        out.per_segment_log_norms.push_back(v);
        sum += v;
    }
    out.average = sum / out.period;
    out.passed = out.average <= beta;
    out.period_log_radius_rate = log_spectral_radius(fundamental_matrix(flow, w, out.period, step)) / out.period;
    out.submultiplicative = out.period_log_radius_rate <= out.average + 1e-8;
    return out;
}

double xi_t(const LinearFlow& flow, double w, double horizon, double step) {
    if (!(horizon > 0.0)) throw std::invalid_argument("xi_t: horizon must be > 0");
    return std::log(operator_norm(fundamental_matrix(flow, w, horizon, step), NormKind::Spectral2)) / horizon;
}

ErgodicAverage ergodic_average_criterion(const LinearFlow& flow, double horizon, std::size_t samples, double step,
                                         double w) {
    const auto period = flow.period();
    if (!period) throw std::invalid_argument("ergodic_average_criterion: flow must be a periodic orbit");
    if (samples == 0) throw std::invalid_argument("ergodic_average_criterion: samples must be >= 1");
    ErgodicAverage out;
    double sum = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
        const double s = *period * static_cast<double>(j) / static_cast<double>(samples);
        const double v = xi_t(flow, flow.shift(w, s), horizon, step);
        out.sample_times.push_back(s);
        out.values.push_back(v);
        sum += v;
    }
    out.estimate = sum / static_cast<double>(samples);
    return out;
}

std::vector<std::pair<double, double>> log_norm_series(const LinearFlow& flow, double w, double horizon,
                                                       std::size_t points, double step) {
    if (!(horizon > 0.0)) throw std::invalid_argument("log_norm_series: horizon must be > 0");
    if (points == 0) throw std::invalid_argument("log_norm_series: need at least one grid point");
    std::vector<std::pair<double, double>> out;
    out.reserve(points + 1);
    for (std::size_t j = 0; j <= points; ++j) {
        const double t = horizon * static_cast<double>(j) / static_cast<double>(points);
        out.emplace_back(t, std::log(operator_norm(fundamental_matrix(flow, w, t, step), NormKind::Spectral2)));
    }
    return out;
}

std::optional<DecayFit> uniform_decay_fit(const LinearFlow& flow, const std::vector<double>& points, double horizon,
                                          double step, std::size_t grid) {
    if (!(horizon > 0.0)) throw std::invalid_argument("uniform_decay_fit: horizon must be > 0");
    if (points.empty()) throw std::invalid_argument("uniform_decay_fit: need at least one sample point");
    std::vector<std::pair<double, double>> data;
    for (double w : points) {
        const auto series = log_norm_series(flow, w, horizon, grid, step);
        data.insert(data.end(), series.begin(), series.end());
    }
    const double n = static_cast<double>(data.size());
    double mt = 0.0, my = 0.0;
    for (const auto& [t, y] : data) {
        mt += t;
        my += y;
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0;
    for (const auto& [t, y] : data) {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
    }
    const double slope = sty / stt;
    if (!(slope < 0.0)) return std::nullopt;
    DecayFit fit;
    fit.slope = slope;
    fit.intercept = my - slope * mt;
    for (const auto& [t, y] : data) fit.max_residual = std::max(fit.max_residual, y - (fit.intercept + slope * t));
    fit.gamma = std::exp(slope);
    fit.c = std::exp(fit.max_residual + fit.intercept);
    return fit;
}

}  // namespace cjsr
