#include "cjsr/family.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cjsr {

MatrixFamily::MatrixFamily(std::vector<Matrix> matrices, Constraint constraint) {
    if (matrices.empty()) throw std::invalid_argument("MatrixFamily: at least one matrix required");
    const std::size_t d = matrices.front().dim();
    if (d == 0) throw std::invalid_argument("MatrixFamily: matrices must be nonempty");
    for (const auto& m : matrices) {
        if (m.dim() != d) throw std::invalid_argument("MatrixFamily: matrices must share one dimension");
    }
    if (constraint.size() != matrices.size()) {
        throw std::invalid_argument("MatrixFamily: constraint has K = " + std::to_string(constraint.size()) +
                                    " but " + std::to_string(matrices.size()) + " matrices were given");
    }
    input_size_ = matrices.size();
    auto trimmed = trim(constraint);
    original_ = std::move(trimmed.kept);
    constraint_ = std::move(trimmed.trimmed);
    matrices_.reserve(original_.size());
    for (Symbol s : original_) matrices_.push_back(std::move(matrices[static_cast<std::size_t>(s - 1)]));
}

MatrixFamily::MatrixFamily(std::vector<Matrix> matrices)
    : MatrixFamily(matrices, Constraint::full(std::max<std::size_t>(matrices.size(), 1))) {}

MatrixFamily MatrixFamily::with_matrices(std::vector<Matrix> matrices) const {
    if (matrices.size() != matrices_.size()) {
        throw std::invalid_argument("MatrixFamily::with_matrices: expected " + std::to_string(matrices_.size()) +
                                    " matrices");
    }
    const std::size_t d = matrices.front().dim();
    for (const auto& m : matrices)
        if (m.dim() != d || d == 0) throw std::invalid_argument("MatrixFamily: matrices must share one dimension");
    MatrixFamily out;
    out.matrices_ = std::move(matrices);
    out.constraint_ = constraint_;
    out.original_ = original_;
    out.input_size_ = input_size_;
    return out;
}

MatrixFamily MatrixFamily::scaled(double c) const {
    std::vector<Matrix> ms = matrices_;
    for (auto& m : ms) m *= c;
    return with_matrices(std::move(ms));
}

Matrix MatrixFamily::product(std::span<const Symbol> w) const {
    Matrix p = Matrix::identity(dim());
    for (Symbol s : w) p = matrix(s) * p;
    return p;
}

ScaledMatrix MatrixFamily::scaled_product(std::span<const Symbol> w) const {
    ScaledMatrix p = ScaledMatrix::identity(dim());
    for (Symbol s : w) p.left_multiply(matrix(s));
    return p;
}

double MatrixFamily::max_letter_norm(NormKind kind) const {
    double best = 0.0;
    for (const auto& m : matrices_) best = std::max(best, operator_norm(m, kind));
    return best;
}

}  // namespace cjsr
