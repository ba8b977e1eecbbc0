#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace cjsr {

/// Dense square real matrix stored row-major.
///
/// Every entry is finite; construction from raw data rejects NaN/Inf.
class Matrix {
public:
    Matrix() = default;

    /// Zero matrix of the given dimension.
    explicit Matrix(std::size_t dim);

    /// Takes ownership of `entries` (row-major, dim*dim values).
    Matrix(std::size_t dim, std::vector<double> entries);

    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t dim);
    static Matrix diagonal(std::span<const double> diag);
    static Matrix diagonal(std::initializer_list<double> diag) {
        return diagonal(std::span<const double>(diag.begin(), diag.size()));
    }

    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return dim_ == 0; }

    double& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * dim_ + col]; }
    double operator()(std::size_t row, std::size_t col) const noexcept { return data_[row * dim_ + col]; }

    std::span<const double> entries() const noexcept { return data_; }
    std::span<double> entries() noexcept { return data_; }

    Matrix transposed() const;
    double trace() const noexcept;
    double max_abs() const noexcept;
    double frobenius_norm() const noexcept;
    bool all_finite() const noexcept;

    Matrix& operator*=(double s) noexcept;
    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);

    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator*(double s, Matrix m) { return m *= s; }
    friend Matrix operator*(Matrix m, double s) { return m *= s; }
    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

enum class NormKind { Spectral2, MaxRowSum, MaxColSum };

std::string_view to_string(NormKind kind) noexcept;
/// Accepts "spectral2", "max_row_sum", "max_col_sum"; throws std::invalid_argument otherwise.
NormKind parse_norm_kind(std::string_view name);

/// Throws std::invalid_argument on dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Largest singular value together with the convergence status of the
/// power iteration that produced it.
struct NormEstimate {
    double value = 0.0;
    bool converged = true;
    int iterations = 0;
};

/// Spectral norm by power iteration on (mᵀm)^32, relative tolerance 1e-12.
NormEstimate spectral_norm_estimate(const Matrix& m);

/// Induced operator norm. MaxRowSum/MaxColSum are exact; Spectral2 uses
/// spectral_norm_estimate and drops the convergence flag.
double operator_norm(const Matrix& m, NormKind kind);

/// Spectral radius by normalized repeated squaring (Gel'fand's formula).
///
/// Tracks N_k = m^(2^k) / ‖m^(2^k)‖ and L_k = log ‖m^(2^k)‖ so the estimate
/// exp(L_k / 2^k) never overflows. Stops once two consecutive estimates agree
/// to 1e-14 relative, or after 60 squarings. Returns 0 when the normalized
/// square underflows below 1e-300 (nilpotent input).
double spectral_radius(const Matrix& m);

/// Same as spectral_radius but returns log ρ(m) (−∞ for nilpotent input).
double log_spectral_radius(const Matrix& m);

/// exp(m) by scaling and squaring around a Taylor core.
/// Throws std::domain_error when ‖m‖₂ > 50 (outside the accuracy budget).
Matrix matrix_exponential(const Matrix& m);

/// Determinant by LU with partial pivoting.
double determinant(const Matrix& m);

/// ℓ-th compound matrix: entry (I, J) is the minor with rows I and columns J,
/// for ℓ-subsets I, J of {0..d-1} in lexicographic order.
/// Throws std::out_of_range unless 1 ≤ l ≤ dim.
Matrix exterior_power(const Matrix& m, std::size_t l);

/// Lexicographically ordered ℓ-subsets of {0..d-1}.
std::vector<std::vector<std::size_t>> index_subsets(std::size_t d, std::size_t l);

struct QrFactors {
    Matrix q;
    Matrix r;
};

/// Householder QR, m = q·r with q orthogonal and r upper triangular.
QrFactors qr_decompose(const Matrix& m);

/// A matrix carried as exp(log_scale) · normalized, with ‖normalized‖_F = 1
/// (or normalized == 0 and log_scale == −∞).
struct ScaledMatrix {
    Matrix normalized;
    double log_scale = 0.0;

    static ScaledMatrix identity(std::size_t dim);

    /// this ← a · this, renormalized.
    void left_multiply(const Matrix& a);
    bool is_zero() const noexcept;
    double log_norm(NormKind kind) const;
    double log_spectral_radius() const;
};

}  // namespace cjsr
