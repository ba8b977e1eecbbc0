#include "cjsr/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cjsr/family.hpp"
#include "cjsr/jsr_bounds.hpp"

namespace cjsr {

namespace {

std::int64_t checked_affine(std::int64_t a, std::int64_t x, std::int64_t y) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, x, &out) || __builtin_add_overflow(out, y, &out)) {
        throw std::overflow_error("continued-fraction convergent exceeds 64-bit range");
    }
    return out;
}

long double frac(long double x) { return x - std::floor(x); }

}  // namespace

std::string_view to_string(ConvergentSide side) noexcept {
    switch (side) {
        case ConvergentSide::Below: return "below";
        case ConvergentSide::Above: return "above";
        case ConvergentSide::All: return "alternating";
    }
    return "unknown";
}

ConvergentSide parse_convergent_side(std::string_view name) {
    if (name == "below") return ConvergentSide::Below;
    if (name == "above") return ConvergentSide::Above;
    if (name == "alternating" || name == "all") return ConvergentSide::All;
    throw std::invalid_argument("unknown convergent side '" + std::string(name) + "'");
}

std::vector<std::int64_t> golden_coefficients(std::size_t terms) {
    std::vector<std::int64_t> cf(terms + 1, 1);
    cf[0] = 0;
    return cf;
}

std::vector<std::int64_t> silver_coefficients(std::size_t terms) {
    std::vector<std::int64_t> cf(terms + 1, 2);
    cf[0] = 0;
    return cf;
}

long double evaluate_continued_fraction(std::span<const std::int64_t> cf) {
    if (cf.empty()) throw std::invalid_argument("empty continued fraction");
    long double x = static_cast<long double>(cf.back());
    for (std::size_t i = cf.size() - 1; i-- > 0;) x = static_cast<long double>(cf[i]) + 1.0L / x;
    return x;
}

RotationSystem make_rotation_system(std::span<const std::int64_t> cf, std::size_t count, ConvergentSide side) {
    if (cf.size() < 2 || cf[0] != 0) {
        throw std::invalid_argument("rotation number must be [0; a_1, a_2, ...] with at least one a_n");
    }
    for (std::size_t i = 1; i < cf.size(); ++i)
        if (cf[i] <= 0) throw std::invalid_argument("continued-fraction coefficients a_n must be positive");
    if (count == 0) throw std::invalid_argument("convergent count must be positive");

    RotationSystem sys;
    sys.coefficients.assign(cf.begin(), cf.end());
    sys.omega = evaluate_continued_fraction(cf);
    sys.side = side;

    std::int64_t p_prev2 = 0, p_prev1 = 1;
    std::int64_t q_prev2 = 1, q_prev1 = 0;
    for (std::size_t n = 0; n < cf.size() && sys.convergents.size() < count; ++n) {
        const std::int64_t p = checked_affine(cf[n], p_prev1, p_prev2);
        const std::int64_t q = checked_affine(cf[n], q_prev1, q_prev2);
        p_prev2 = p_prev1;
        p_prev1 = p;
        q_prev2 = q_prev1;
        q_prev1 = q;
        if (!(p > 0 && p < q)) continue;
        const bool below = n % 2 == 0;
        if ((side == ConvergentSide::Below && !below) || (side == ConvergentSide::Above && below)) continue;
        if (std::gcd(p, q) != 1) throw std::logic_error("convergent not in lowest terms");
        sys.convergents.push_back({p, q, n});
    }
    if (sys.convergents.size() < count) {
        throw std::length_error("continued fraction has too few coefficients for " + std::to_string(count) +
                                " convergents");
    }
    return sys;
}

long double torus_distance(long double a, long double b) {
    const long double delta = std::abs(frac(a) - frac(b));
    return std::min(delta, 1.0L - delta);
}

ClosingCheck closing_check(const RotationSystem& system, std::size_t n, double z0, double tolerance_factor) {
    if (n >= system.convergents.size()) throw std::out_of_range("closing_check: convergent index out of range");
    const Convergent& cv = system.convergents[n];
    ClosingCheck out;
    out.convergent = cv;
    out.z0 = z0;
    long double worst = 0.0L;
    const long double start = frac(static_cast<long double>(z0));
    for (std::int64_t k = 0; k < cv.q; ++k) {
        const long double true_angle = start + static_cast<long double>(k) * system.omega;
        // k·p/q mod 1 is computed exactly from integers.
        const long double periodic_angle =
            start + static_cast<long double>((k * cv.p) % cv.q) / static_cast<long double>(cv.q);
        worst = std::max(worst, torus_distance(true_angle, periodic_angle));
    }
    out.max_deviation = static_cast<double>(worst);
    out.bound = tolerance_factor / static_cast<double>(cv.q);
    out.passed = worst < static_cast<long double>(tolerance_factor) / static_cast<long double>(cv.q);
    return out;
}

UnipotentRotationCocycle::UnipotentRotationCocycle(RotationSystem sys, std::size_t d)
    : system(std::move(sys)), dim(d), a(d) {
    if (d == 0) throw std::invalid_argument("UnipotentRotationCocycle: dimension must be positive");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) a(i, j) = 1.0;
}

PeriodicSpectralValue unipotent_periodic_value(const UnipotentRotationCocycle& cocycle, std::size_t n) {
    const auto& convs = cocycle.system.convergents;
    if (n >= convs.size()) throw std::out_of_range("unipotent_periodic_value: convergent index out of range");
    const Convergent& cv = convs[n];
    const long double y = static_cast<long double>(cv.p) / static_cast<long double>(cv.q);
    if (!(y < cocycle.system.omega)) {
        throw std::invalid_argument("unipotent_periodic_value: fiber p/q must lie below omega");
    }
    PeriodicSpectralValue out;
    out.convergent = cv;
    const long double scale = y / cocycle.system.omega;
    out.closed_form = static_cast<double>(scale);

    // The fiber map is constant along the orbit, so the q-step product is
    // (scale·A)^q; evaluate it step by step.
    const Matrix step = cocycle.a * static_cast<double>(scale);
    ScaledMatrix product = ScaledMatrix::identity(cocycle.dim);
    for (std::int64_t k = 0; k < cv.q; ++k) product.left_multiply(step);
    out.numeric = std::exp(product.log_spectral_radius() / static_cast<double>(cv.q));
    return out;
}

UnipotentBracketReport unipotent_bracket_report(const UnipotentRotationCocycle& cocycle, std::size_t n_max,
                                                std::size_t fiber_samples) {
    if (n_max == 0) throw std::invalid_argument("unipotent_bracket_report: n_max must be positive");
    UnipotentBracketReport out;
    const auto& sys = cocycle.system;
    for (std::size_t i = 0; i < sys.convergents.size(); ++i) {
        const auto& cv = sys.convergents[i];
        if (static_cast<long double>(cv.p) / static_cast<long double>(cv.q) >= sys.omega) continue;
        out.periodic.push_back(unipotent_periodic_value(cocycle, i));
    }
    out.periodic_all_below_one = true;
    for (const auto& v : out.periodic) {
        out.periodic_sup = std::max(out.periodic_sup, v.closed_form);
        out.periodic_all_below_one = out.periodic_all_below_one && v.closed_form < 1.0 && v.numeric < 1.0;
    }

    out.fibers.push_back(static_cast<double>(sys.omega));
    for (std::size_t i = 0; i < out.periodic.size() && i < fiber_samples; ++i) {
        const auto& cv = out.periodic[i].convergent;
        out.fibers.push_back(static_cast<double>(static_cast<long double>(cv.p) / static_cast<long double>(cv.q)));
    }

    out.upper_all_at_least_one = true;
    out.gap_positive_everywhere = true;
    out.finiteness_fails = true;
    Matrix power = Matrix::identity(cocycle.dim);
    for (std::size_t n = 1; n <= n_max; ++n) {
        power = cocycle.a * power;
        const double root = std::pow(operator_norm(power, NormKind::Spectral2), 1.0 / static_cast<double>(n));
        double best = 0.0;
        for (double y : out.fibers) best = std::max(best, static_cast<double>(y / sys.omega) * root);
        out.n_values.push_back(n);
        out.upper.push_back(best);
        out.upper_all_at_least_one = out.upper_all_at_least_one && best >= 1.0;
        out.gap_positive_everywhere = out.gap_positive_everywhere && best - out.periodic_sup > 0.0;
        for (const auto& v : out.periodic)
            if (std::abs(v.closed_form - best) <= 1e-6) out.finiteness_fails = false;
    }
    out.gap_at_max_n = out.upper.back() - out.periodic_sup;
    return out;
}

FiberScalarCocycle::FiberScalarCocycle(RotationSystem sys, double g) : system(std::move(sys)), gamma(g) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("FiberScalarCocycle: gamma must lie in (0, 1)");
}

PeriodicVsUniformReport periodic_vs_uniform_report(const FiberScalarCocycle& cocycle, std::size_t n_max) {
    if (n_max == 0) throw std::invalid_argument("periodic_vs_uniform_report: n_max must be positive");
    PeriodicVsUniformReport out;
    out.gamma = cocycle.gamma;
    const double log_gamma = std::log(cocycle.gamma);
    for (const auto& cv : cocycle.system.convergents) {
        FiberProduct fp;
        fp.convergent = cv;
        const double q = static_cast<double>(cv.q);
        fp.fiber_value = std::exp(log_gamma / q);
        double product = 1.0;
        for (std::int64_t k = 0; k < cv.q; ++k) product *= fp.fiber_value;
        fp.product = product;
        fp.product_exact_exponent = std::exp(q * (log_gamma / q));

        // The orbit of (p/q, z) is a q-cycle; as a constrained family it has
        // one symbol per orbit point, each carrying the fiber value.
        const auto qs = static_cast<std::size_t>(cv.q);
        std::vector<std::uint8_t> cycle(qs * qs, 0);
        for (std::size_t i = 0; i < qs; ++i) cycle[i * qs + (i + 1) % qs] = 1;
        std::vector<Matrix> letters(qs, Matrix{{fp.fiber_value}});
        const MatrixFamily orbit(std::move(letters), Constraint(qs, std::move(cycle)));
        fp.margin = complete_periodic_stability_margin(orbit, qs).margin;

        out.periodic_margin = std::max(out.periodic_margin, fp.margin);
        out.fibers.push_back(fp);
    }

    // Along the ω fiber the cocycle is identically 1.
    const Matrix one{{1.0}};
    ScaledMatrix along = ScaledMatrix::identity(1);
    for (std::size_t n = 1; n <= n_max; ++n) {
        along.left_multiply(one);
        out.omega_fiber_log_norms.push_back(along.log_norm(NormKind::Spectral2));
    }
    out.omega_fiber_exponent = out.omega_fiber_log_norms.back() / static_cast<double>(n_max);

    out.completely_periodically_stable = out.periodic_margin < 1.0;
    // Uniform decay needs ‖S(n)‖ → 0; a zero exponent on the ω fiber rules it out.
    out.uniformly_stable = out.omega_fiber_exponent < 0.0;
    if (out.completely_periodically_stable && !out.uniformly_stable) {
        out.verdict = "completely periodically stable on probed orbits, not uniformly stable";
    } else if (out.completely_periodically_stable) {
        out.verdict = "completely periodically stable on probed orbits, uniform decay observed";
    } else {
        out.verdict = "not completely periodically stable on probed orbits";
    }
    return out;
}

}  // namespace cjsr
