#include "cjsr/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace cjsr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                                    " vs " + std::to_string(b.dim()) + ")");
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> mat_vec(const Matrix& m, std::span<const double> x) {
    const std::size_t d = m.dim();
    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += m(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

double euclidean(std::span<const double> x) {
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += (v / scale) * (v / scale);
    return scale * std::sqrt(acc);
}

}  // namespace

Matrix::Matrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

Matrix::Matrix(std::size_t dim, std::vector<double> entries) : dim_(dim), data_(std::move(entries)) {
    if (data_.size() != dim_ * dim_) {
        throw std::invalid_argument("Matrix: expected " + std::to_string(dim_ * dim_) + " entries, got " +
                                    std::to_string(data_.size()));
    }
    if (!all_finite()) throw std::invalid_argument("Matrix: entries must be finite");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) : dim_(rows.size()) {
    data_.reserve(dim_ * dim_);
    for (const auto& row : rows) {
        if (row.size() != dim_) throw std::invalid_argument("Matrix: rows must form a square array");
        data_.insert(data_.end(), row.begin(), row.end());
    }
    if (!all_finite()) throw std::invalid_argument("Matrix: entries must be finite");
}

Matrix Matrix::identity(std::size_t dim) {
    Matrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    if (!m.all_finite()) throw std::invalid_argument("Matrix: entries must be finite");
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::trace() const noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) acc += (*this)(i, i);
    return acc;
}

double Matrix::max_abs() const noexcept {
    double best = 0.0;
    for (double v : data_) best = std::max(best, std::abs(v));
    return best;
}

double Matrix::frobenius_norm() const noexcept { return euclidean(data_); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_dim(*this, other, "Matrix::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_dim(*this, other, "Matrix::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    require_same_dim(a, b, "matmul");
    const std::size_t d = a.dim_;
    Matrix c(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            const double aik = a.data_[i * d + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) c.data_[i * d + j] += aik * b.data_[k * d + j];
        }
    }
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) { return a * b; }

std::string_view to_string(NormKind kind) noexcept {
    switch (kind) {
        case NormKind::Spectral2: return "spectral2";
        case NormKind::MaxRowSum: return "max_row_sum";
        case NormKind::MaxColSum: return "max_col_sum";
    }
    return "unknown";
}

NormKind parse_norm_kind(std::string_view name) {
    if (name == "spectral2") return NormKind::Spectral2;
    if (name == "max_row_sum") return NormKind::MaxRowSum;
    if (name == "max_col_sum") return NormKind::MaxColSum;
    throw std::invalid_argument("unknown norm kind '" + std::string(name) + "'");
}

NormEstimate spectral_norm_estimate(const Matrix& m) {
    const std::size_t d = m.dim();
    if (d == 0) return {};
    if (d == 1) return {std::abs(m(0, 0)), true, 0};

    // Work with the Gram matrix scaled to unit max entry, then accelerate the
    // power iteration by squaring it five times (spectral gap raised to 32).
    const double scale = m.max_abs();
    if (scale == 0.0) return {0.0, true, 0};
    const Matrix ms = m * (1.0 / scale);
    const Matrix gram = ms.transposed() * ms;

    Matrix accel = gram;
    for (int s = 0; s < 5; ++s) {
        accel = accel * accel;
        const double mx = accel.max_abs();
        if (mx == 0.0) break;
        accel *= 1.0 / mx;
    }

    // Start from the heaviest column of the accelerated operator: it always
    // has a nonzero component along the dominant eigenvector.
    std::size_t best_col = 0;
    double best_norm = -1.0;
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < d; ++i) x[i] = accel(i, j);
        const double n = euclidean(x);
        if (n > best_norm) {
            best_norm = n;
            best_col = j;
        }
    }
    for (std::size_t i = 0; i < d; ++i) x[i] = accel(i, best_col);
    if (best_norm <= 0.0) {
        std::fill(x.begin(), x.end(), 1.0);
        best_norm = std::sqrt(static_cast<double>(d));
    }
    for (double& v : x) v /= best_norm;

    constexpr int kMaxIterations = 500;
    constexpr double kTolerance = 1e-12;
    double lambda = euclidean(mat_vec(ms, x));
    lambda *= lambda;
    NormEstimate out;
    out.converged = false;
    for (int it = 1; it <= kMaxIterations; ++it) {
        std::vector<double> y = mat_vec(accel, x);
        const double ny = euclidean(y);
        if (ny == 0.0) break;
        for (double& v : y) v /= ny;
        x = std::move(y);
        double next = euclidean(mat_vec(ms, x));
        next *= next;
        out.iterations = it;
        const bool done = std::abs(next - lambda) <= kTolerance * std::max(next, lambda);
        lambda = std::max(lambda, next);
        if (done) {
            out.converged = true;
            break;
        }
    }
    out.value = scale * std::sqrt(lambda);
    return out;
}

double operator_norm(const Matrix& m, NormKind kind) {
    const std::size_t d = m.dim();
    switch (kind) {
        case NormKind::Spectral2: return spectral_norm_estimate(m).value;
        case NormKind::MaxRowSum: {
            double best = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < d; ++j) row += std::abs(m(i, j));
                best = std::max(best, row);
            }
            return best;
        }
        case NormKind::MaxColSum: {
            double best = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double col = 0.0;
                for (std::size_t i = 0; i < d; ++i) col += std::abs(m(i, j));
                best = std::max(best, col);
            }
            return best;
        }
    }
    return 0.0;
}

double log_spectral_radius(const Matrix& m) {
    if (m.dim() == 0) throw std::invalid_argument("spectral_radius: empty matrix");
    if (!m.all_finite()) throw std::invalid_argument("spectral_radius: non-finite entries");
    if (m.dim() == 1) {
        const double a = std::abs(m(0, 0));
        return a == 0.0 ? kNegInf : std::log(a);
    }

    constexpr int kMaxSquarings = 60;
    constexpr double kTolerance = 1e-14;
    constexpr double kUnderflow = 1e-300;

    const double f = m.frobenius_norm();
    if (f == 0.0) return kNegInf;
    Matrix n = m * (1.0 / f);
    double log_norm = std::log(f);
    double estimate = log_norm;
    int agreements = 0;
    for (int k = 1; k <= kMaxSquarings; ++k) {
        Matrix sq = n * n;
        const double s = sq.frobenius_norm();
        if (s < kUnderflow) return kNegInf;
        n = std::move(sq);
        n *= 1.0 / s;
        log_norm = 2.0 * log_norm + std::log(s);
        const double next = std::ldexp(log_norm, -k);
        // Estimates live in log space, so an absolute difference here is a
        // relative difference of the radius.
        agreements = std::abs(next - estimate) < kTolerance ? agreements + 1 : 0;
        estimate = next;
        if (agreements >= 2) break;
    }
    return estimate;
}

double spectral_radius(const Matrix& m) {
    const double lr = log_spectral_radius(m);
    return lr == kNegInf ? 0.0 : std::exp(lr);
}

Matrix matrix_exponential(const Matrix& m) {
    const std::size_t d = m.dim();
    if (d == 0) return m;
    const double norm2 = spectral_norm_estimate(m).value;
    if (norm2 > 50.0) {
        throw std::domain_error("matrix_exponential: norm " + std::to_string(norm2) +
                                " exceeds the accuracy budget of 50");
    }
    const double norm1 = operator_norm(m, NormKind::MaxColSum);
    int squarings = 0;
    if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    const Matrix a = m * std::ldexp(1.0, -squarings);

    Matrix sum = Matrix::identity(d);
    Matrix term = Matrix::identity(d);
    for (int k = 1; k <= 40; ++k) {
        term = term * a;
        term *= 1.0 / k;
        sum += term;
        if (term.max_abs() <= 1e-18 * sum.max_abs()) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

double determinant(const Matrix& m) {
    const std::size_t d = m.dim();
    if (d == 0) return 1.0;
    std::vector<double> lu(m.entries().begin(), m.entries().end());
    double det = 1.0;
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(lu[r * d + col]) > std::abs(lu[pivot * d + col])) pivot = r;
        const double p = lu[pivot * d + col];
        if (p == 0.0) return 0.0;
        if (pivot != col) {
            for (std::size_t j = 0; j < d; ++j) std::swap(lu[pivot * d + j], lu[col * d + j]);
            det = -det;
        }
        det *= p;
        for (std::size_t r = col + 1; r < d; ++r) {
            const double factor = lu[r * d + col] / p;
            if (factor == 0.0) continue;
            for (std::size_t j = col + 1; j < d; ++j) lu[r * d + j] -= factor * lu[col * d + j];
        }
    }
    return det;
}

std::vector<std::vector<std::size_t>> index_subsets(std::size_t d, std::size_t l) {
    std::vector<std::vector<std::size_t>> out;
    if (l == 0 || l > d) return out;
    std::vector<std::size_t> cur(l);
    std::iota(cur.begin(), cur.end(), 0);
    while (true) {
        out.push_back(cur);
        std::size_t i = l;
        while (i > 0 && cur[i - 1] == d - l + (i - 1)) --i;
        if (i == 0) break;
        ++cur[i - 1];
        for (std::size_t j = i; j < l; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

Matrix exterior_power(const Matrix& m, std::size_t l) {
    const std::size_t d = m.dim();
    if (l < 1 || l > d) {
        throw std::out_of_range("exterior_power: l = " + std::to_string(l) + " outside [1, " + std::to_string(d) +
                                "]");
    }
    if (l == 1) return m;
    const auto subsets = index_subsets(d, l);
    Matrix out(subsets.size());
    Matrix minor(l);
    for (std::size_t a = 0; a < subsets.size(); ++a) {
        for (std::size_t b = 0; b < subsets.size(); ++b) {
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t j = 0; j < l; ++j) minor(i, j) = m(subsets[a][i], subsets[b][j]);
            out(a, b) = determinant(minor);
        }
    }
    return out;
}

QrFactors qr_decompose(const Matrix& m) {
    const std::size_t d = m.dim();
    Matrix r = m;
    Matrix q = Matrix::identity(d);
    std::vector<double> v(d);
    for (std::size_t k = 0; k + 1 < d; ++k) {
        double norm_x = 0.0;
        {
            std::vector<double> col(d - k);
            for (std::size_t i = k; i < d; ++i) col[i - k] = r(i, k);
            norm_x = euclidean(col);
        }
        if (norm_x == 0.0) continue;
        const double alpha = r(k, k) > 0 ? -norm_x : norm_x;
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t i = k; i < d; ++i) v[i] = r(i, k);
        v[k] -= alpha;
        const double vnorm2 = dot(v, v);
        if (vnorm2 == 0.0) continue;
        // r ← (I − 2vvᵀ/vᵀv) r
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < d; ++i) s += v[i] * r(i, j);
            s *= 2.0 / vnorm2;
            for (std::size_t i = k; i < d; ++i) r(i, j) -= s * v[i];
        }
        // q ← q (I − 2vvᵀ/vᵀv)
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t j = k; j < d; ++j) s += q(i, j) * v[j];
            s *= 2.0 / vnorm2;
            for (std::size_t j = k; j < d; ++j) q(i, j) -= s * v[j];
        }
        for (std::size_t i = k + 1; i < d; ++i) r(i, k) = 0.0;
    }
    return {std::move(q), std::move(r)};
}

ScaledMatrix ScaledMatrix::identity(std::size_t dim) {
    ScaledMatrix s{Matrix::identity(dim), 0.0};
    const double f = std::sqrt(static_cast<double>(dim));
    s.normalized *= 1.0 / f;
    s.log_scale = std::log(f);
    return s;
}

void ScaledMatrix::left_multiply(const Matrix& a) {
    if (is_zero()) return;
    normalized = a * normalized;
    const double f = normalized.frobenius_norm();
    if (f == 0.0) {
        log_scale = kNegInf;
        return;
    }
    normalized *= 1.0 / f;
    log_scale += std::log(f);
}

bool ScaledMatrix::is_zero() const noexcept { return log_scale == kNegInf; }

double ScaledMatrix::log_norm(NormKind kind) const {
    if (is_zero()) return kNegInf;
    const double n = operator_norm(normalized, kind);
    return n == 0.0 ? kNegInf : log_scale + std::log(n);
}

double ScaledMatrix::log_spectral_radius() const {
    if (is_zero()) return kNegInf;
    const double lr = cjsr::log_spectral_radius(normalized);
    return lr == kNegInf ? kNegInf : log_scale + lr;
}

}  // namespace cjsr
