#pragma once

#include <span>
#include <vector>

#include "cjsr/constraint.hpp"
#include "cjsr/matrix.hpp"

namespace cjsr {

/// Ordered matrices A_1..A_K of a common dimension together with the
/// switching constraint. The constraint is trimmed at construction; symbols
/// removed by trimming are dropped along with their matrices and the map back
/// to the caller's numbering is kept in original_symbols().
class MatrixFamily {
public:
    MatrixFamily(std::vector<Matrix> matrices, Constraint constraint);

    /// Unconstrained switching (all-ones constraint).
    explicit MatrixFamily(std::vector<Matrix> matrices);

    std::size_t size() const noexcept { return matrices_.size(); }
    std::size_t dim() const noexcept { return matrices_.front().dim(); }

    /// 1-based access: matrix(1) is A_1.
    const Matrix& matrix(Symbol s) const { return matrices_.at(static_cast<std::size_t>(s - 1)); }
    const std::vector<Matrix>& matrices() const noexcept { return matrices_; }
    const Constraint& constraint() const noexcept { return constraint_; }
    const std::vector<Symbol>& original_symbols() const noexcept { return original_; }
    bool was_trimmed() const noexcept { return original_.size() != input_size_; }

    /// Same constraint and symbol map, new matrices (same count, any common dimension).
    MatrixFamily with_matrices(std::vector<Matrix> matrices) const;
    MatrixFamily scaled(double c) const;

    /// A_{w_n} ⋯ A_{w_1}: the first symbol acts first.
    Matrix product(std::span<const Symbol> w) const;
    ScaledMatrix scaled_product(std::span<const Symbol> w) const;

    /// max_k ‖A_k‖ in the given norm.
    double max_letter_norm(NormKind kind) const;

private:
    MatrixFamily() = default;

    std::vector<Matrix> matrices_;
    Constraint constraint_;
    std::vector<Symbol> original_;
    std::size_t input_size_ = 0;
};

}  // namespace cjsr
