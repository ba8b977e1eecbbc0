#pragma once

#include <cstdint>
#include <vector>

#include "cjsr/constraint.hpp"
#include "cjsr/matrix.hpp"
#include "cjsr/random.hpp"

namespace testing {

inline cjsr::Matrix random_matrix(cjsr::Rng& rng, std::size_t d, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(d * d);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return cjsr::Matrix(d, std::move(v));
}

inline std::vector<cjsr::Matrix> random_matrices(cjsr::Rng& rng, std::size_t k, std::size_t d) {
    std::vector<cjsr::Matrix> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(random_matrix(rng, d));
    return out;
}

// Random 0/1 matrix, retried until trimming leaves all K symbols.
inline cjsr::Constraint random_trimmed_constraint(cjsr::Rng& rng, std::size_t k, double density = 0.6) {
    for (;;) {
        std::vector<std::uint8_t> e(k * k);
        for (auto& x : e) x = rng.uniform01() < density ? 1 : 0;
        cjsr::Constraint c(k, e);
        if (c.is_trimmed()) return c;
    }
}

// Integer matrix powers of the 0/1 constraint.
using IntMatrix = std::vector<std::vector<std::uint64_t>>;

inline IntMatrix to_int(const cjsr::Constraint& c) {
    IntMatrix m(c.size(), std::vector<std::uint64_t>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) m[i][j] = c.entry(i, j) ? 1 : 0;
    return m;
}

inline IntMatrix int_mul(const IntMatrix& a, const IntMatrix& b) {
    const std::size_t k = a.size();
    IntMatrix out(k, std::vector<std::uint64_t>(k, 0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t j = 0; j < k; ++j) out[i][j] += a[i][l] * b[l][j];
    return out;
}

inline IntMatrix int_power(const cjsr::Constraint& c, std::size_t n) {
    IntMatrix out(c.size(), std::vector<std::uint64_t>(c.size(), 0));
    for (std::size_t i = 0; i < c.size(); ++i) out[i][i] = 1;
    const IntMatrix a = to_int(c);
    for (std::size_t i = 0; i < n; ++i) out = int_mul(out, a);
    return out;
}

inline std::uint64_t int_trace(const IntMatrix& m) {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < m.size(); ++i) t += m[i][i];
    return t;
}

inline std::uint64_t int_sum(const IntMatrix& m) {
    std::uint64_t t = 0;
    for (const auto& row : m)
        for (auto x : row) t += x;
    return t;
}

inline double max_entry_diff(const cjsr::Matrix& a, const cjsr::Matrix& b) { return (a - b).max_abs(); }

}  // namespace testing
