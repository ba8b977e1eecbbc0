#include <cmath>

#include "cjsr/jsr_bounds.hpp"
#include "cjsr/markov.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cjsr;

namespace {

Matrix random_stochastic(Rng& rng, std::size_t k, double zero_prob = 0.0) {
    for (;;) {
        Matrix p(k);
        bool ok = true;
        for (std::size_t i = 0; i < k; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                p(i, j) = rng.uniform01() < zero_prob ? 0.0 : rng.uniform(0.05, 1.0);
                row += p(i, j);
            }
            if (row == 0.0) {
                ok = false;
                break;
            }
            for (std::size_t j = 0; j < k; ++j) p(i, j) /= row;
        }
        if (ok) return p;
    }
}

const Matrix kUniform2{{0.5, 0.5}, {0.5, 0.5}};
const Matrix kSwap{{0, 1}, {1, 0}};

double birkhoff_scalar(const MarkovModel& m, const std::vector<double>& a) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += m.stationary()[k] * std::log(std::abs(a[k]));
    return acc;
}

MatrixFamily family_for(const MarkovModel& m, std::vector<Matrix> mats) {
    return MatrixFamily(std::move(mats), constraint_of(m));
}

}  // namespace

TEST_SUITE("markov") {

TEST_CASE("stationary distribution examples") {
    auto s = stationary_distribution(kUniform2);
    CHECK(s.converged);
    CHECK(s.unique);
    CHECK(s.p[0] == doctest::Approx(0.5).epsilon(1e-13));

    s = stationary_distribution(Matrix::identity(2));
    CHECK(s.p[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK_FALSE(s.unique);

    s = stationary_distribution(Matrix{{0.9, 0.1}, {0.5, 0.5}});
    CHECK(std::abs(s.p[0] - 5.0 / 6.0) <= 1e-12);
    CHECK(std::abs(s.p[1] - 1.0 / 6.0) <= 1e-12);

    s = stationary_distribution(kSwap);
    CHECK(s.converged);
    CHECK(s.unique);
    CHECK(std::abs(s.p[0] - 0.5) <= 1e-13);

    CHECK_THROWS_AS(stationary_distribution(Matrix{{0.5, 0.6}, {0.5, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(stationary_distribution(Matrix{{1.5, -0.5}, {0.5, 0.5}}), std::invalid_argument);
}

TEST_CASE("stationary vector is invariant on random chains") {
    Rng rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 1 + rng.below(5);
        const MarkovModel m(random_stochastic(rng, k, 0.3));
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double pj = 0.0;
            for (std::size_t i = 0; i < k; ++i) pj += m.stationary()[i] * m.transition()(i, j);
            CHECK(std::abs(pj - m.stationary()[j]) <= 1e-10);
            total += m.stationary()[j];
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("model validation") {
    CHECK_NOTHROW(MarkovModel(kUniform2, std::vector<double>{0.5, 0.5}));
    CHECK_THROWS_AS(MarkovModel(kUniform2, std::vector<double>{0.6, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(MarkovModel(Matrix{{0.9, 0.1}, {0.5, 0.5}}, std::vector<double>{0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(MarkovModel(kUniform2, std::vector<double>{1.0}), std::invalid_argument);
    const MarkovModel m(kUniform2);
    CHECK_THROWS_AS(m.probability(0, 1), std::out_of_range);
}

TEST_CASE("induced constraint") {
    CHECK(constraint_of(MarkovModel(kUniform2)) == Constraint::full(2));
    CHECK(constraint_of(MarkovModel(kSwap)) == Constraint{{0, 1}, {1, 0}});
    // state 2 is never entered: the family trims it and the pairing is refused
    const MarkovModel leaky(Matrix{{1, 0}, {1, 0}});
    const MatrixFamily f({Matrix{{0.5}}, Matrix{{0.7}}}, constraint_of(leaky));
    CHECK(f.was_trimmed());
    CHECK_THROWS_AS(max_lyapunov_mc(f, leaky, 10, 1, 1), std::invalid_argument);
    const MatrixFamily wrong_size({Matrix{{0.5}}});
    CHECK_THROWS_AS(max_lyapunov_mc(wrong_size, MarkovModel(kUniform2), 10, 1, 1), std::invalid_argument);
    const MatrixFamily forbids({Matrix{{0.5}}, Matrix{{0.7}}}, Constraint{{0, 1}, {1, 0}});
    CHECK_THROWS_AS(max_lyapunov_mc(forbids, MarkovModel(kUniform2), 10, 1, 1), std::invalid_argument);
}

TEST_CASE("cylinder measure examples") {
    const MarkovModel m(kUniform2);
    CHECK(cylinder_measure(m, Word{1}).probability == doctest::Approx(0.5));
    CHECK(cylinder_measure(m, Word{1, 2}).probability == doctest::Approx(0.25));
    const MarkovModel s(kSwap);
    const auto bad = cylinder_measure(s, Word{1, 1});
    CHECK(bad.probability == 0.0);
    CHECK_FALSE(bad.admissible);
    CHECK_THROWS_AS(cylinder_measure(m, Word{3}), std::out_of_range);
    CHECK_THROWS_AS(cylinder_measure(m, Word{}), std::invalid_argument);
}

TEST_CASE("cylinder additivity, total mass and shift stationarity") {
    Rng rng(17);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t k = 2 + rng.below(2);
        const MarkovModel m(random_stochastic(rng, k, 0.25));
        const Constraint c = constraint_of(m);
        const Constraint full = Constraint::full(k);
        for (std::size_t n = 1; n <= 6; ++n) {
            double mass = 0.0;
            enumerate_words(n, full, [&](std::span<const Symbol> w) {
                const double mu = cylinder_measure(m, w).probability;
                mass += mu;
                Word ext(w.begin(), w.end());
                ext.push_back(1);
                double children = 0.0, parents = 0.0;
                for (Symbol j = 1; j <= static_cast<Symbol>(k); ++j) {
                    ext.back() = j;
                    children += cylinder_measure(m, ext).probability;
                    Word pre{j};
                    pre.insert(pre.end(), w.begin(), w.end());
                    parents += cylinder_measure(m, pre).probability;
                }
                CHECK(std::abs(children - mu) <= 1e-14);
                CHECK(std::abs(parents - mu) <= 1e-12);
                CHECK(cylinder_measure(m, w).admissible == is_admissible(w, c));
            });
            CHECK(std::abs(mass - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("sampled switching laws") {
    const MarkovModel s(kSwap);
    const Word alt = sample_switching_law(s, 9, 3, std::vector<double>{1.0, 0.0});
    CHECK(alt == Word{1, 2, 1, 2, 1, 2, 1, 2, 1});

    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const MarkovModel m(random_stochastic(rng, 3, 0.3));
        const Word w = sample_switching_law(m, 500, trial);
        CHECK(is_admissible(w, constraint_of(m)));
        CHECK(w == sample_switching_law(m, 500, trial));
    }
    CHECK(sample_switching_law(s, 50, 1) != sample_switching_law(MarkovModel(kUniform2), 50, 1));
    CHECK_THROWS_AS(sample_switching_law(s, 0, 1), std::invalid_argument);

    // cylinder [1,2] frequency over 10^4 windows of length 2
    const MarkovModel m(Matrix{{0.7, 0.3}, {0.4, 0.6}});
    const double mu = cylinder_measure(m, Word{1, 2}).probability;
    const std::size_t windows = 10000;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < windows; ++i) {
        const Word w = sample_switching_law(m, 2, derive_seed(99, i));
        hits += (w == Word{1, 2}) ? 1 : 0;
    }
    const double freq = static_cast<double>(hits) / windows;
    CHECK(std::abs(freq - mu) <= 3 * std::sqrt(mu * (1 - mu) / windows));
}

TEST_CASE("Monte-Carlo maximal exponent") {
    const MarkovModel m(Matrix{{0.7, 0.3}, {0.4, 0.6}});
    const std::vector<double> a{0.5, 1.8};
    const auto f = family_for(m, {Matrix{{a[0]}}, Matrix{{a[1]}}});
    const auto est = max_lyapunov_mc(f, m, 2000, 16, 123);
    CHECK(est.trials == 16);
    CHECK(est.standard_error > 0.0);
    CHECK(std::abs(est.mean - birkhoff_scalar(m, a)) <= 3 * est.standard_error);
    const auto single = max_lyapunov_mc(f, m, 20000, 1, 9);
    CHECK(single.standard_error > 0.0);
    CHECK(std::abs(single.mean - birkhoff_scalar(m, a)) <= 3 * single.standard_error);

    // scaling shifts every trial by log|c|
    const auto scaled = max_lyapunov_mc(f.scaled(-3.0), m, 2000, 16, 123);
    for (std::size_t t = 0; t < est.per_trial.size(); ++t)
        CHECK(std::abs(scaled.per_trial[t] - est.per_trial[t] - std::log(3.0)) <= 1e-12);

    // single matrix: Gel'fand
    const MarkovModel one(Matrix{{1.0}});
    const Matrix a1{{0.9, 0.3}, {0.1, 0.5}};
    const auto lone = max_lyapunov_mc(MatrixFamily({a1}), one, 10000, 1, 1);
    CHECK(std::abs(lone.mean - log_spectral_radius(a1)) <= 1e-3);

    // exact zero product
    const auto dead = max_lyapunov_mc(family_for(m, {Matrix(2), Matrix::identity(2)}), m, 200, 4, 1);
    CHECK(dead.degenerate);
    CHECK(std::isinf(dead.mean));

    const auto again = max_lyapunov_mc(f, m, 2000, 16, 123);
    CHECK(again.mean == est.mean);
    CHECK(again.standard_error == est.standard_error);
}

TEST_CASE("QR Lyapunov spectrum") {
    const MarkovModel m(Matrix{{0.2, 0.8}, {0.5, 0.5}});
    const auto f = family_for(m, {Matrix::diagonal({2.0, 0.5}), Matrix::diagonal({0.7, 1.5})});
    const double x1 = birkhoff_scalar(m, {2.0, 0.7});
    const double x2 = birkhoff_scalar(m, {0.5, 1.5});
    const auto sp = lyapunov_spectrum_qr(f, m, 100000, 7);
    REQUIRE(sp.exponents.size() == 2);
    CHECK(sp.exponents[0] >= sp.exponents[1]);
    CHECK(std::abs(sp.exponents[0] - std::max(x1, x2)) <= 1e-2);
    CHECK(std::abs(sp.exponents[1] - std::min(x1, x2)) <= 1e-2);
    const double det_avg = stationary_log_det_average(f, m);
    CHECK(std::abs(sp.exponents[0] + sp.exponents[1] - det_avg) <= 3 * sp.sum_standard_error + 1e-12);

    const double th = 0.7;
    const MarkovModel one(Matrix{{1.0}});
    const auto rot = lyapunov_spectrum_qr(MatrixFamily({Matrix{{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}}}),
                                          one, 5000, 1);
    CHECK(std::abs(rot.exponents[0]) <= 1e-6);
    CHECK(std::abs(rot.exponents[1]) <= 1e-6);

    // top exponent agrees with the MC estimate on a non-commuting family
    Rng rng(3);
    const auto g = family_for(m, {testing::random_matrix(rng, 2), testing::random_matrix(rng, 2)});
    const auto qr = lyapunov_spectrum_qr(g, m, 50000, 11);
    const auto mc = max_lyapunov_mc(g, m, 5000, 16, 11);
    CHECK(std::abs(qr.exponents[0] - mc.mean) <=
          3 * std::hypot(qr.standard_errors[0], mc.standard_error) + 1e-3);

    // singular letter truncates the spectrum
    const auto sing = lyapunov_spectrum_qr(family_for(m, {Matrix{{1, 0}, {0, 0}}, Matrix::identity(2)}), m, 100, 1);
    CHECK(sing.truncated);
    CHECK(sing.exponents.size() < 2);
}

TEST_CASE("exterior lift") {
    const MarkovModel m(Matrix{{0.2, 0.8}, {0.5, 0.5}});
    Rng rng(8);
    const auto f = family_for(m, {testing::random_matrix(rng, 3), testing::random_matrix(rng, 3)});
    const auto l1 = exterior_lift(f, 1);
    CHECK(l1.matrices() == f.matrices());
    const auto l3 = exterior_lift(f, 3);
    CHECK(l3.dim() == 1);
    CHECK(l3.matrices()[0](0, 0) == doctest::Approx(determinant(f.matrices()[0])));
    CHECK(l3.constraint() == f.constraint());
    CHECK_THROWS_AS(exterior_lift(f, 4), std::out_of_range);

    const auto d = family_for(m, {Matrix::diagonal({2.0, 0.5, 0.9}), Matrix::diagonal({0.7, 1.5, 1.1})});
    const auto sp = lyapunov_spectrum_qr(d, m, 100000, 3);
    const auto lift = max_lyapunov_mc(exterior_lift(d, 2), m, 20000, 8, 3);
    CHECK(std::abs(lift.mean - (sp.exponents[0] + sp.exponents[1])) <= 2e-2);
}

TEST_CASE("periodic approximation") {
    const MarkovModel alt(kSwap);
    const Matrix a1{{0.9, 0.4}, {0.0, 0.3}}, a2{{0.2, 0.0}, {0.8, 1.1}};
    const auto f = family_for(alt, {a1, a2});
    const auto res = periodic_approximation(f, alt, 5, 8, 200);
    REQUIRE(res.returns.size() == 100);
    const double expected = 0.5 * log_spectral_radius(a2 * a1);
    for (const auto& r : res.returns) {
        CHECK(r.n % 2 == 0);
        CHECK(std::abs(r.exponent - expected) <= 1e-12);
    }

    const Matrix a{{0.9, 0.3}, {0.1, 0.5}};
    const MarkovModel one(Matrix{{1.0}});
    const auto single = periodic_approximation(MatrixFamily({a}), one, 2, 4, 300);
    CHECK(single.returns.size() == 300);
    for (const auto& r : single.returns) CHECK(std::abs(r.exponent - log_spectral_radius(a)) <= 1e-8);

    const MarkovModel m(Matrix{{0.6, 0.4, 0.0}, {0.1, 0.5, 0.4}, {0.5, 0.0, 0.5}});
    Rng rng(10);
    const auto g = family_for(m, {testing::random_matrix(rng, 2), testing::random_matrix(rng, 2),
                                  testing::random_matrix(rng, 2)});
    PeriodicApproximationOptions opts;
    opts.keep_words = true;
    opts.reference_trials = 4;
    const auto rr = periodic_approximation(g, m, 77, 1, 60, opts);
    CHECK_FALSE(rr.returns.empty());
    for (const auto& r : rr.returns) {
        CHECK(r.word.size() == r.n);
        CHECK(is_periodic(r.word, g.constraint()));
        if (r.n <= 10) {
            const auto beta = lower_bound(g, r.n);
            REQUIRE(beta.has_value());
            CHECK(std::exp(r.exponent) <= *beta + 1e-9);
        }
    }
    CHECK_THROWS_AS(periodic_approximation(g, m, 1, 0, 10), std::invalid_argument);

    const auto none = periodic_approximation(g, m, 3, 50, 20);
    CHECK(none.returns.empty());
}

}  // TEST_SUITE
