#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cjsr/rotation.hpp"
#include "doctest.h"

using namespace cjsr;

namespace {

const long double kGolden = (std::sqrt(5.0L) - 1.0L) / 2.0L;
const long double kSilver = std::sqrt(2.0L) - 1.0L;

std::vector<std::pair<std::int64_t, std::int64_t>> pairs_of(const RotationSystem& s) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& c : s.convergents) out.emplace_back(c.p, c.q);
    return out;
}

using Pairs = std::vector<std::pair<std::int64_t, std::int64_t>>;

}  // namespace

TEST_SUITE("rotation") {

TEST_CASE("continued fraction evaluation") {
    const auto g = golden_coefficients();
    CHECK(std::abs(evaluate_continued_fraction(g) - kGolden) <= 1e-18L);
    CHECK(std::abs(evaluate_continued_fraction(silver_coefficients()) - kSilver) <= 1e-18L);
    const std::vector<std::int64_t> cf{0, 2, 3};
    CHECK(evaluate_continued_fraction(cf) == doctest::Approx(3.0 / 7.0));
}

TEST_CASE("convergents") {
    const auto g = golden_coefficients();
    CHECK(pairs_of(make_rotation_system(g, 6, ConvergentSide::All)) ==
          Pairs{{1, 2}, {2, 3}, {3, 5}, {5, 8}, {8, 13}, {13, 21}});
    CHECK(pairs_of(make_rotation_system(g, 4, ConvergentSide::Below)) == Pairs{{1, 2}, {3, 5}, {8, 13}, {21, 34}});
    CHECK(pairs_of(make_rotation_system(g, 3, ConvergentSide::Above)) == Pairs{{2, 3}, {5, 8}, {13, 21}});
    CHECK(pairs_of(make_rotation_system(silver_coefficients(), 3, ConvergentSide::All)) ==
          Pairs{{1, 2}, {2, 5}, {5, 12}});

    for (const auto& cf : {golden_coefficients(), silver_coefficients()}) {
        for (auto side : {ConvergentSide::All, ConvergentSide::Below, ConvergentSide::Above}) {
            const auto s = make_rotation_system(cf, 12, side);
            for (std::size_t i = 0; i < s.convergents.size(); ++i) {
                const auto& c = s.convergents[i];
                const long double x = static_cast<long double>(c.p) / c.q;
                CHECK(std::gcd(c.p, c.q) == 1);
                CHECK(std::abs(s.omega - x) < 1.0L / (static_cast<long double>(c.q) * c.q));
                if (side == ConvergentSide::Below) CHECK(x < s.omega);
                if (side == ConvergentSide::Above) CHECK(x > s.omega);
                if (i > 0) {
                    CHECK(c.q > s.convergents[i - 1].q);
                    const long double prev = static_cast<long double>(s.convergents[i - 1].p) / s.convergents[i - 1].q;
                    if (side == ConvergentSide::Below) CHECK(x > prev);
                }
            }
        }
    }
}

TEST_CASE("convergent errors") {
    const std::vector<std::int64_t> short_cf{0, 1, 1, 1};
    CHECK_THROWS_AS(make_rotation_system(short_cf, 10, ConvergentSide::All), std::length_error);
    const std::vector<std::int64_t> bad_first{1, 1, 1};
    CHECK_THROWS_AS(make_rotation_system(bad_first, 1, ConvergentSide::All), std::invalid_argument);
    const std::vector<std::int64_t> bad_term{0, 1, 0, 1};
    CHECK_THROWS_AS(make_rotation_system(bad_term, 1, ConvergentSide::All), std::invalid_argument);
    CHECK_THROWS_AS(make_rotation_system(golden_coefficients(), 0, ConvergentSide::All), std::invalid_argument);
    CHECK_THROWS_AS(make_rotation_system(golden_coefficients(200), 150, ConvergentSide::All), std::overflow_error);
    CHECK(parse_convergent_side("below") == ConvergentSide::Below);
    CHECK_THROWS_AS(parse_convergent_side("left"), std::invalid_argument);
}

TEST_CASE("torus distance") {
    CHECK(torus_distance(0.1L, 0.9L) == doctest::Approx(0.2));
    CHECK(torus_distance(1.25L, 0.25L) == doctest::Approx(0.0));
    CHECK(torus_distance(-0.1L, 0.1L) == doctest::Approx(0.2));
}

TEST_CASE("closing check") {
    const auto s = make_rotation_system(golden_coefficients(), 8, ConvergentSide::All);
    const auto first = closing_check(s, 0, 0.0);
    CHECK(first.convergent.q == 2);
    CHECK(first.max_deviation == doctest::Approx(static_cast<double>(kGolden - 0.5L)).epsilon(1e-15));
    CHECK(first.passed);

    // direct high-precision simulation for q = 13
    const auto thirteen = closing_check(s, 4, 0.0);
    CHECK(thirteen.convergent.q == 13);
    CHECK(std::abs(thirteen.max_deviation - 0.031792480383353563) <= 1e-15);

    const auto silver = make_rotation_system(silver_coefficients(), 3, ConvergentSide::All);
    CHECK(std::abs(closing_check(silver, 2, 0.0).max_deviation - 0.026984147229287797) <= 1e-15);

    for (std::size_t n = 0; n < s.convergents.size(); ++n) {
        const auto& c = s.convergents[n];
        const double bound = static_cast<double>((c.q - 1) * std::abs(s.omega - static_cast<long double>(c.p) / c.q));
        for (int j = 0; j < 16; ++j) {
            const auto r = closing_check(s, n, j / 16.0 + 0.013);
            CHECK(r.passed);
            CHECK(r.max_deviation < 1.0 / c.q);
            CHECK(r.max_deviation <= bound + 1e-15);
        }
    }
    CHECK_THROWS_AS(closing_check(s, 8, 0.0), std::out_of_range);
}

TEST_CASE("unipotent periodic values") {
    const auto s = make_rotation_system(golden_coefficients(), 4, ConvergentSide::Below);
    const UnipotentRotationCocycle c2(s, 2);
    const auto v = unipotent_periodic_value(c2, 1);
    CHECK(v.convergent.q == 5);
    CHECK(std::abs(v.closed_form - 0.9708203932499369) <= 1e-15);

    for (std::size_t d = 1; d <= 4; ++d) {
        const UnipotentRotationCocycle c(s, d);
        double prev = 0.0;
        for (std::size_t n = 0; n < s.convergents.size(); ++n) {
            const auto x = unipotent_periodic_value(c, n);
            const double q = static_cast<double>(x.convergent.q);
            CHECK(x.closed_form < 1.0);
            CHECK(x.closed_form > 1.0 - 1.0 / (q * q * static_cast<double>(s.omega)));
            CHECK(x.closed_form > prev);
            CHECK(std::abs(x.numeric - x.closed_form) <= 1e-8 * x.closed_form);
            prev = x.closed_form;
        }
    }

    const auto above = make_rotation_system(golden_coefficients(), 2, ConvergentSide::Above);
    CHECK_THROWS_AS(unipotent_periodic_value(UnipotentRotationCocycle(above, 2), 0), std::invalid_argument);
    CHECK_THROWS_AS(UnipotentRotationCocycle(s, 0), std::invalid_argument);
}

TEST_CASE("unipotent bracket report") {
    const auto s = make_rotation_system(golden_coefficients(), 8, ConvergentSide::Below);
    const auto r = unipotent_bracket_report(UnipotentRotationCocycle(s, 2), 64, 4);
    CHECK(r.periodic.size() == 8);
    CHECK(r.periodic_sup > 0.99);
    CHECK(r.periodic_sup < 1.0);
    CHECK(r.periodic_all_below_one);
    CHECK(r.upper_all_at_least_one);
    CHECK(r.gap_positive_everywhere);
    CHECK(r.finiteness_fails);
    // ‖A^n‖^{1/n} by direct power computation
    const std::vector<std::pair<std::size_t, double>> oracle{{1, 1.618033988749895},  {2, 1.5537739740300374},
                                                             {4, 1.4346327151126494}, {8, 1.2993174243808931},
                                                             {16, 1.1894957972474174}, {32, 1.1144207017886512},
                                                             {64, 1.0671444700121813}};
    for (const auto& [n, val] : oracle) CHECK(std::abs(r.upper[n - 1] - val) <= 1e-12);
    for (std::size_t i = 1; i < r.upper.size(); ++i) CHECK(r.upper[i] <= r.upper[i - 1]);
    CHECK(r.gap_at_max_n == doctest::Approx(r.upper.back() - r.periodic_sup));
    CHECK(r.gap_at_max_n < 0.07);

    const auto one = unipotent_bracket_report(UnipotentRotationCocycle(s, 1), 10, 2);
    for (double u : one.upper) CHECK(u == 1.0);
}

TEST_CASE("periodic versus uniform stability") {
    const auto s = make_rotation_system(golden_coefficients(), 8, ConvergentSide::All);
    const auto r = periodic_vs_uniform_report(FiberScalarCocycle(s, 0.5), 50);
    REQUIRE(r.fibers.size() == 8);
    for (const auto& fp : r.fibers) {
        CHECK(std::abs(fp.product - 0.5) <= 1e-12);
        CHECK(std::abs(fp.product_exact_exponent - 0.5) <= 1e-15);
        CHECK(std::abs(fp.margin - 0.5) <= 1e-12);
        if (fp.convergent.q == 5) CHECK(std::abs(fp.product - 0.5) <= 1e-15);
    }
    CHECK(std::abs(r.periodic_margin - 0.5) <= 1e-12);
    for (double x : r.omega_fiber_log_norms) CHECK(x == 0.0);
    CHECK(r.omega_fiber_exponent == 0.0);
    CHECK(r.completely_periodically_stable);
    CHECK_FALSE(r.uniformly_stable);
    CHECK(r.verdict == "completely periodically stable on probed orbits, not uniformly stable");
    CHECK_THROWS_AS(FiberScalarCocycle(s, 1.0), std::invalid_argument);
}

}  // TEST_SUITE
