#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace cjsr {

/// Switching symbol, 1-based: symbols range over {1, ..., K}.
using Symbol = int;
using Word = std::vector<Symbol>;

/// Raised when trimming removes every symbol: no bi-infinite admissible
/// sequence exists.
class EmptyConstraintError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// K×K {0,1} transition matrix. allows(i, j) is true when symbol j may
/// follow symbol i.
class Constraint {
public:
    Constraint() = default;
    Constraint(std::size_t k, std::vector<std::uint8_t> entries);
    Constraint(std::initializer_list<std::initializer_list<int>> rows);

    static Constraint full(std::size_t k);

    std::size_t size() const noexcept { return k_; }

    bool allows(Symbol from, Symbol to) const;
    /// 0-based raw access, no range checks.
    bool entry(std::size_t row, std::size_t col) const noexcept { return entries_[row * k_ + col] != 0; }

    /// Every row and every column has at least one 1.
    bool is_trimmed() const noexcept;

    friend bool operator==(const Constraint&, const Constraint&) = default;

private:
    std::size_t k_ = 0;
    std::vector<std::uint8_t> entries_;
};

struct TrimResult {
    /// Surviving original symbols, ascending. Symbol s of `trimmed` is kept[s-1].
    std::vector<Symbol> kept;
    Constraint trimmed;
};

/// Deletes symbols with an all-zero row or column until nothing changes.
/// Throws EmptyConstraintError when no symbol survives.
TrimResult trim(const Constraint& c);

/// True iff each adjacent pair is allowed. Length-1 words are admissible.
/// Throws std::out_of_range for a symbol outside {1..K}.
bool is_admissible(std::span<const Symbol> w, const Constraint& c);

/// Admissible and the last symbol may be followed by the first.
bool is_periodic(std::span<const Symbol> w, const Constraint& c);

/// Smallest rotation of `w` under lexicographic order.
Word minimal_rotation(std::span<const Symbol> w);
bool is_minimal_rotation(std::span<const Symbol> w);

using WordVisitor = std::function<void(std::span<const Symbol>)>;

/// Visits every admissible word of length n exactly once, in lexicographic
/// order. Words are streamed, never collected.
void enumerate_words(std::size_t n, const Constraint& c, const WordVisitor& visit);

/// Same, restricted to words starting with `first`.
void enumerate_words_from(Symbol first, std::size_t n, const Constraint& c, const WordVisitor& visit);

/// Visits every periodic word of length n. With `dedupe_rotations`, only the
/// lexicographically minimal rotation of each cyclic class is visited.
void enumerate_periodic_words(std::size_t n, const Constraint& c, bool dedupe_rotations, const WordVisitor& visit);

void enumerate_periodic_words_from(Symbol first, std::size_t n, const Constraint& c, bool dedupe_rotations,
                                   const WordVisitor& visit);

}  // namespace cjsr
