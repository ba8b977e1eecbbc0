#include "cjsr/constraint.hpp"

#include <algorithm>
#include <string>

namespace cjsr {

Constraint::Constraint(std::size_t k, std::vector<std::uint8_t> entries) : k_(k), entries_(std::move(entries)) {
    if (k_ == 0) throw std::invalid_argument("Constraint: K must be positive");
    if (entries_.size() != k_ * k_) {
        throw std::invalid_argument("Constraint: expected " + std::to_string(k_ * k_) + " entries");
    }
    for (auto v : entries_)
        if (v > 1) throw std::invalid_argument("Constraint: entries must be 0 or 1");
}

Constraint::Constraint(std::initializer_list<std::initializer_list<int>> rows) : k_(rows.size()) {
    if (k_ == 0) throw std::invalid_argument("Constraint: K must be positive");
    for (const auto& row : rows) {
        if (row.size() != k_) throw std::invalid_argument("Constraint: rows must form a square array");
        for (int v : row) {
            if (v != 0 && v != 1) throw std::invalid_argument("Constraint: entries must be 0 or 1");
            entries_.push_back(static_cast<std::uint8_t>(v));
        }
    }
}

Constraint Constraint::full(std::size_t k) { return Constraint(k, std::vector<std::uint8_t>(k * k, 1)); }

bool Constraint::allows(Symbol from, Symbol to) const {
    const auto k = static_cast<Symbol>(k_);
    if (from < 1 || from > k || to < 1 || to > k) {
        throw std::out_of_range("symbol outside {1.." + std::to_string(k_) + "}");
    }
    return entry(static_cast<std::size_t>(from - 1), static_cast<std::size_t>(to - 1));
}

bool Constraint::is_trimmed() const noexcept {
    for (std::size_t i = 0; i < k_; ++i) {
        bool row = false;
        bool col = false;
        for (std::size_t j = 0; j < k_; ++j) {
            row = row || entry(i, j);
            col = col || entry(j, i);
        }
        if (!row || !col) return false;
    }
    return k_ > 0;
}

TrimResult trim(const Constraint& c) {
    const std::size_t k = c.size();
    std::vector<bool> alive(k, true);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (!alive[i]) continue;
            bool row = false;
            bool col = false;
            for (std::size_t j = 0; j < k; ++j) {
                if (!alive[j]) continue;
                row = row || c.entry(i, j);
                col = col || c.entry(j, i);
            }
            if (!row || !col) {
                alive[i] = false;
                changed = true;
            }
        }
    }

    TrimResult out;
    for (std::size_t i = 0; i < k; ++i)
        if (alive[i]) out.kept.push_back(static_cast<Symbol>(i + 1));
    if (out.kept.empty()) {
        throw EmptyConstraintError("constraint trims to nothing: no admissible bi-infinite switching sequence");
    }
    const std::size_t m = out.kept.size();
    std::vector<std::uint8_t> entries(m * m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            entries[a * m + b] = c.entry(static_cast<std::size_t>(out.kept[a] - 1),
                                         static_cast<std::size_t>(out.kept[b] - 1));
    out.trimmed = Constraint(m, std::move(entries));
    return out;
}

bool is_admissible(std::span<const Symbol> w, const Constraint& c) {
    const auto k = static_cast<Symbol>(c.size());
    for (Symbol s : w)
        if (s < 1 || s > k) throw std::out_of_range("symbol " + std::to_string(s) + " outside {1.." + std::to_string(k) + "}");
    for (std::size_t j = 0; j + 1 < w.size(); ++j)
        if (!c.allows(w[j], w[j + 1])) return false;
    return true;
}

bool is_periodic(std::span<const Symbol> w, const Constraint& c) {
    if (w.empty()) return false;
    return is_admissible(w, c) && c.allows(w.back(), w.front());
}

Word minimal_rotation(std::span<const Symbol> w) {
    Word best(w.begin(), w.end());
    Word cur = best;
    for (std::size_t r = 1; r < w.size(); ++r) {
        std::rotate(cur.begin(), cur.begin() + 1, cur.end());
        if (cur < best) best = cur;
    }
    return best;
}

bool is_minimal_rotation(std::span<const Symbol> w) {
    const std::size_t n = w.size();
    for (std::size_t r = 1; r < n; ++r) {
        // Compare rotation starting at r with the word itself.
        for (std::size_t i = 0; i < n; ++i) {
            const Symbol a = w[(r + i) % n];
            const Symbol b = w[i];
            if (a < b) return false;
            if (a > b) break;
        }
    }
    return true;
}

namespace {

// Depth-first walk over the digraph. `floor` restricts every symbol after the
// first to be ≥ floor, which is how rotation-minimal words are generated.
void walk(Word& prefix, std::size_t n, const Constraint& c, Symbol floor, bool periodic, bool dedupe,
          const WordVisitor& visit) {
    if (prefix.size() == n) {
        if (periodic) {
            if (!c.allows(prefix.back(), prefix.front())) return;
            if (dedupe && !is_minimal_rotation(prefix)) return;
        }
        visit(prefix);
        return;
    }
    const Symbol last = prefix.back();
    const auto k = static_cast<Symbol>(c.size());
    for (Symbol next = floor; next <= k; ++next) {
        if (!c.entry(static_cast<std::size_t>(last - 1), static_cast<std::size_t>(next - 1))) continue;
        prefix.push_back(next);
        walk(prefix, n, c, floor, periodic, dedupe, visit);
        prefix.pop_back();
    }
}

void check_first(Symbol first, const Constraint& c) {
    if (first < 1 || first > static_cast<Symbol>(c.size())) {
        throw std::out_of_range("first symbol outside {1.." + std::to_string(c.size()) + "}");
    }
}

}  // namespace

void enumerate_words_from(Symbol first, std::size_t n, const Constraint& c, const WordVisitor& visit) {
    check_first(first, c);
    if (n == 0) return;
    Word prefix{first};
    prefix.reserve(n);
    walk(prefix, n, c, 1, false, false, visit);
}

void enumerate_words(std::size_t n, const Constraint& c, const WordVisitor& visit) {
    for (Symbol s = 1; s <= static_cast<Symbol>(c.size()); ++s) enumerate_words_from(s, n, c, visit);
}

void enumerate_periodic_words_from(Symbol first, std::size_t n, const Constraint& c, bool dedupe_rotations,
                                   const WordVisitor& visit) {
    check_first(first, c);
    if (n == 0) return;
    Word prefix{first};
    prefix.reserve(n);
    // A minimal rotation starts with its smallest symbol.
    walk(prefix, n, c, dedupe_rotations ? first : 1, true, dedupe_rotations, visit);
}

void enumerate_periodic_words(std::size_t n, const Constraint& c, bool dedupe_rotations, const WordVisitor& visit) {
    for (Symbol s = 1; s <= static_cast<Symbol>(c.size()); ++s)
        enumerate_periodic_words_from(s, n, c, dedupe_rotations, visit);
}

}  // namespace cjsr
