#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cjsr/ode_flow.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cjsr;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

LinearFlow constant_flow(Matrix x) { return LinearFlow(CircleRotation{0.3}, Generator{std::move(x), {}}); }

// −I + 0.1·B(θ) with B(θ) = [[sin, cos], [cos, −sin]] of angle 2πθ; ‖B‖ = 1.
LinearFlow perturbed_contraction(Driving driving) {
    Generator g{Matrix::diagonal({-1.0, -1.0}),
                {TrigTerm{1, Matrix{{0, 0.1}, {0.1, 0}}, Matrix{{0.1, 0}, {0, -0.1}}}}};
    return LinearFlow(std::move(driving), std::move(g));
}

// Non-normal, non-commuting trig generator with two harmonics.
LinearFlow wobbly_flow() {
    Generator g{Matrix{{-0.2, 0.5}, {-0.3, 0.1}},
                {TrigTerm{1, Matrix{{0.4, 0.1}, {0, -0.2}}, Matrix{{0, 0.3}, {-0.3, 0}}},
                 TrigTerm{2, Matrix{{0.1, 0}, {0.2, 0}}, Matrix{{0, 0}, {0, 0.25}}}}};
    return LinearFlow(CircleRotation{0.37}, std::move(g));
}

double rel_matrix_error(const Matrix& a, const Matrix& b) {
    return operator_norm(a - b, NormKind::Spectral2) / operator_norm(b, NormKind::Spectral2);
}

}  // namespace

TEST_SUITE("ode_flow") {

TEST_CASE("flow construction") {
    CHECK_THROWS_AS(LinearFlow(PeriodicOrbit{0.0}, Generator{Matrix(2), {}}), std::invalid_argument);
    CHECK_THROWS_AS(LinearFlow(CircleRotation{1}, Generator{Matrix(2), {TrigTerm{0, Matrix(2), Matrix(2)}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LinearFlow(CircleRotation{1}, Generator{Matrix(2), {TrigTerm{1, Matrix(3), Matrix(2)}}}),
                    std::invalid_argument);
    const auto orbit = perturbed_contraction(PeriodicOrbit{kTwoPi});
    CHECK(*orbit.period() == kTwoPi);
    CHECK(orbit.speed() == doctest::Approx(1 / kTwoPi));
    CHECK_FALSE(constant_flow(Matrix(2)).period().has_value());
    CHECK(orbit.shift(0.9, kTwoPi * 0.2) == doctest::Approx(0.1));
}

TEST_CASE("a_star bounds the generator") {
    const auto c = constant_flow(Matrix{{0, 2}, {0, 0}});
    CHECK(c.a_star() == doctest::Approx(2.0));
    const auto w = wobbly_flow();
    for (int j = 0; j < 1000; ++j) {
        const double theta = j / 1000.0 + 1e-4;
        CHECK(operator_norm(w.generator_at(theta), NormKind::Spectral2) <= w.a_star());
    }
    CHECK(perturbed_contraction(PeriodicOrbit{1}).a_star() == doctest::Approx(1.01 * 1.1).epsilon(1e-9));
}

TEST_CASE("fundamental matrix") {
    const auto w = wobbly_flow();
    CHECK(fundamental_matrix(w, 0.2, 0.0, 1e-3) == Matrix::identity(2));
    CHECK_THROWS_AS(fundamental_matrix(w, 0.2, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fundamental_matrix(w, 0.2, -1.0, 0.1), std::invalid_argument);

    Rng rng(19);
    for (int trial = 0; trial < 6; ++trial) {
        Matrix x = testing::random_matrix(rng, 2 + trial % 2);
        x *= (0.5 + 1.5 * rng.uniform01()) / operator_norm(x, NormKind::Spectral2);
        const auto flow = constant_flow(x);
        for (double t : {0.37, 2.0, 10.0}) {
            CHECK(rel_matrix_error(fundamental_matrix(flow, 0.0, t, 1e-3), matrix_exponential(x * t)) <= 1e-6);
        }
    }
}

TEST_CASE("Liouville identity") {
    for (const auto& flow : {wobbly_flow(), perturbed_contraction(PeriodicOrbit{kTwoPi}),
                             constant_flow(Matrix{{0.3, -1.2}, {0.7, 0.1}})}) {
        for (double t : {0.5, 3.3, 10.0}) CHECK(liouville_check(flow, 0.15, t, 1e-3).relative_error <= 1e-6);
    }
}

TEST_CASE("cocycle residual") {
    const auto w = wobbly_flow();
    CHECK(cocycle_residual(w, 0.4, 0.0, 2.5, 1e-3) == 0.0);
    const auto c = constant_flow(Matrix{{-0.4, 1.1}, {-0.6, 0.2}});
    for (double s : {0.5, 1.7, 2.5})
        for (double t : {0.3, 2.5}) {
            CHECK(cocycle_residual(c, 0.0, s, t, 1e-3) <= 1e-8);
            CHECK(cocycle_residual(w, 0.8, s, t, 1e-3) <= 1e-6);
        }
    for (double s : {4.0, 10.0}) CHECK(cocycle_residual(w, 0.1, s, 10.0 - s, 1e-3) <= 1e-6);

    // fourth order: halving the step cuts the residual by ≥ 8
    for (const auto& flow : {w, c}) {
        const double coarse = cocycle_residual(flow, 0.3, 0.73, 1.91, 0.2);
        const double fine = cocycle_residual(flow, 0.3, 0.73, 1.91, 0.1);
        CHECK(coarse > 0.0);
        CHECK(coarse / fine >= 8.0);
    }

    // driving point returns after one period
    const auto orbit = perturbed_contraction(PeriodicOrbit{kTwoPi});
    CHECK(cocycle_residual(orbit, 0.0, kTwoPi, 1.3, 1e-3) <= 1e-6);
    CHECK_THROWS_AS(cocycle_residual(w, 0.0, -1.0, 1.0, 1e-3), std::invalid_argument);
}

TEST_CASE("Liao constants") {
    for (double eps : {0.1, 1.0, 3.0, 10.0})
        for (double a : {0.0, 0.5, 1.0, 2.0}) {
            const auto c = liao_constants(eps, a);
            CHECK(liao_identities_hold(c));
            CHECK(c.delta == eps / 2);
            CHECK(c.rho_pert == std::min(eps / 2, 1.0) / 4);
            CHECK(c.lambda == c.rho_pert / (4 * std::exp(2 * a)));
            CHECK(c.lambda_star == (c.lambda / 2) * std::exp(-c.rho_pert / 2));
            CHECK(c.t_bar == (32 / (c.lambda * c.rho_pert)) * std::log(32 / (c.lambda_star * c.lambda_star)));
            CHECK(c.big_t >= c.t_bar + 2);
            CHECK(c.lambda_star < c.lambda / 2);
            CHECK(c.beta_bar == -c.rho_pert / 4);
        }
    const auto z = liao_constants(0.5, 0.0);
    CHECK(z.lambda == z.rho_pert / 4);
    CHECK(z.big_t == std::max(2 * z.lambda * z.t_bar + (64 / z.rho_pert) * std::log(2 / z.lambda_star), z.t_bar + 2));
    CHECK(liao_constants(0.5, 0.5).big_t < liao_constants(0.5, 1.0).big_t);
    CHECK(liao_constants(0.5, 1.0).big_t < liao_constants(0.5, 2.0).big_t);

    auto tampered = liao_constants(0.5, 1.0);
    tampered.t_bar *= 1.0 + 1e-15;
    CHECK_FALSE(liao_identities_hold(tampered));
    CHECK_THROWS_AS(liao_constants(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("quasi-contraction test") {
    const LinearFlow minus_i(PeriodicOrbit{5.0}, Generator{Matrix::diagonal({-1.0, -1.0}), {}});
    const std::vector<double> sub{0.0, 0.7, 2.0, 3.1, 5.0};
    const auto r = quasi_contraction_test(minus_i, sub, -0.5, 1e-3);
    for (std::size_t k = 0; k + 1 < sub.size(); ++k)
        CHECK(std::abs(r.per_segment_log_norms[k] + (sub[k + 1] - sub[k])) <= 1e-6);
    CHECK(std::abs(r.average + 1.0) <= 1e-6);
    CHECK(r.passed);
    CHECK(r.submultiplicative);
    double sum = 0.0;
    for (double v : r.per_segment_log_norms) sum += v;
    CHECK(std::abs(sum / r.period - r.average) <= 1e-12);

    const LinearFlow zero(PeriodicOrbit{3.0}, Generator{Matrix(2), {}});
    const auto z = quasi_contraction_test(zero, uniform_subdivision(3.0, 3), -1e-6, 1e-3);
    CHECK(std::abs(z.average) <= 1e-12);
    CHECK_FALSE(z.passed);

    const auto p = perturbed_contraction(PeriodicOrbit{kTwoPi});
    for (std::size_t segs : {1u, 2u, 3u, 6u}) {
        const auto q = quasi_contraction_test(p, uniform_subdivision(kTwoPi, segs), -0.85, 1e-3, 0.21);
        CHECK(q.average <= -0.9 + 1e-3);
        CHECK(q.passed);
        CHECK(q.submultiplicative);
        CHECK(q.period_log_radius_rate <= q.average + 1e-8);
    }

    CHECK_THROWS_AS(quasi_contraction_test(p, {0.0, 1.0}, -0.5, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(quasi_contraction_test(p, {0.0, 4.0, 3.0, kTwoPi}, -0.5, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(quasi_contraction_test(wobbly_flow(), {0.0, 1.0}, -0.5, 1e-3), std::invalid_argument);
    const auto u = uniform_subdivision(kTwoPi, 7);
    CHECK(u.front() == 0.0);
    CHECK(u.back() == kTwoPi);
}

TEST_CASE("xi_T and the ergodic average") {
    const auto minus_i = constant_flow(Matrix::diagonal({-1.0, -1.0}));
    CHECK(std::abs(xi_t(minus_i, 0.0, 3.0, 1e-3) + 1.0) <= 1e-6);
    const auto split = constant_flow(Matrix::diagonal({1.0, -2.0}));
    CHECK(std::abs(xi_t(split, 0.0, 2.0, 1e-3) - 1.0) <= 1e-6);
    const auto doubled = constant_flow(Matrix::diagonal({2.0, -4.0}));
    CHECK(std::abs(xi_t(doubled, 0.0, 0.5, 1e-3) - 2 * xi_t(split, 0.0, 0.5, 1e-3)) <= 1e-8);
    CHECK_THROWS_AS(xi_t(split, 0.0, 0.0, 1e-3), std::invalid_argument);

    const LinearFlow mi(PeriodicOrbit{2.0}, Generator{Matrix::diagonal({-1.0, -1.0}), {}});
    CHECK(std::abs(ergodic_average_criterion(mi, 1.5, 8, 1e-3).estimate + 1.0) <= 1e-6);
    const LinearFlow zero(PeriodicOrbit{2.0}, Generator{Matrix(2), {}});
    CHECK(std::abs(ergodic_average_criterion(zero, 1.5, 4, 1e-3).estimate) <= 1e-12);
    const auto p = perturbed_contraction(PeriodicOrbit{kTwoPi});
    const auto e = ergodic_average_criterion(p, 2.0, 16, 1e-3);
    CHECK(e.values.size() == 16);
    CHECK(e.estimate <= -0.9 + 2e-3);
    CHECK_THROWS_AS(ergodic_average_criterion(p, 2.0, 0, 1e-3), std::invalid_argument);
}

TEST_CASE("uniform decay fit") {
    const auto minus_i = constant_flow(Matrix::diagonal({-1.0, -1.0}));
    const auto fit = uniform_decay_fit(minus_i, {0.0, 0.5}, 5.0, 1e-3);
    REQUIRE(fit.has_value());
    CHECK(std::abs(fit->gamma - std::exp(-1.0)) <= 1e-4);
    CHECK(fit->c <= 1.0 + 1e-4);
    CHECK_FALSE(uniform_decay_fit(constant_flow(Matrix(2)), {0.0}, 5.0, 1e-3).has_value());

    const Matrix x{{-0.5, 1.0}, {0.0, -0.8}};
    // long horizon so the non-normal transient barely tilts the fitted slope
    const auto stable = uniform_decay_fit(constant_flow(x), {0.0}, 320.0, 2e-2, 64);
    REQUIRE(stable.has_value());
    CHECK(std::abs(stable->gamma - std::exp(-0.5)) <= 1e-3);
    for (double t : {0.0, 5.0, 40.0, 160.0, 320.0}) {
        const double nv = operator_norm(fundamental_matrix(constant_flow(x), 0.0, t, 2e-2), NormKind::Spectral2);
        CHECK(nv <= stable->c * std::pow(stable->gamma, t) * (1 + 1e-9));
    }

    const auto series = log_norm_series(minus_i, 0.0, 2.0, 4, 1e-3);
    REQUIRE(series.size() == 5);
    CHECK(series[2].first == 1.0);
    CHECK(std::abs(series[2].second + 1.0) <= 1e-9);
}

}  // TEST_SUITE
