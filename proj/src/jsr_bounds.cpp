#include "cjsr/jsr_bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "cjsr/random.hpp"

namespace cjsr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Runs fn(first_symbol) for every symbol, on up to `threads` workers. Results
// are stored by symbol so merging is independent of scheduling.
template <class Result, class Fn>
std::vector<Result> per_first_symbol(std::size_t k, unsigned threads, Fn&& fn) {
    std::vector<Result> out(k);
    if (threads <= 1 || k <= 1) {
        for (std::size_t i = 0; i < k; ++i) out[i] = fn(static_cast<Symbol>(i + 1));
        return out;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        const std::size_t workers = std::min<std::size_t>(threads, k);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < k; i = next++) out[i] = fn(static_cast<Symbol>(i + 1));
            });
        }
    }
    return out;
}

void raise_to(std::atomic<double>& target, double value) {
    double cur = target.load(std::memory_order_relaxed);
    while (value > cur && !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
    }
}

double prune_slack(double best) { return 1e-12 * std::max(1.0, std::abs(best)); }

struct UpperSearch {
    const MatrixFamily& family;
    std::size_t n;
    NormKind norm;
    bool prune;
    double log_letter_max;
    std::atomic<double>& shared_best;
    std::optional<WordExtremum> local;
    Word prefix;

    void descend(const ScaledMatrix& p) {
        const std::size_t depth = prefix.size();
        const double ln = p.log_norm(norm);
        if (depth == n) {
            if (!local || ln > local->log_value) {
                local = WordExtremum{ln, prefix};
                raise_to(shared_best, ln);
            }
            return;
        }
        if (prune) {
            // Submultiplicativity: every extension has norm at most
            // ‖prefix‖ · (max letter norm)^(remaining letters).
            const double bound = ln + static_cast<double>(n - depth) * log_letter_max;
            const double best = std::max(local ? local->log_value : kNegInf, shared_best.load(std::memory_order_relaxed));
            if (bound < best - prune_slack(best)) return;
        }
        const Constraint& c = family.constraint();
        const auto last = static_cast<std::size_t>(prefix.back() - 1);
        for (std::size_t next = 0; next < c.size(); ++next) {
            if (!c.entry(last, next)) continue;
            prefix.push_back(static_cast<Symbol>(next + 1));
            ScaledMatrix q = p;
            q.left_multiply(family.matrices()[next]);
            descend(q);
            prefix.pop_back();
        }
    }
};

template <class T>
std::optional<T> merge_max(std::vector<std::optional<T>>& parts) {
    std::optional<T> best;
    for (auto& part : parts) {
        if (!part) continue;
        if (!best || part->log_value > best->log_value) best = std::move(part);
    }
    return best;
}

void require_positive_n(std::size_t n, const char* what) {
    if (n == 0) throw std::invalid_argument(std::string(what) + ": word length must be positive");
}

}  // namespace

std::optional<WordExtremum> max_periodic_log_radius(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts) {
    require_positive_n(n, "max_periodic_log_radius");
    auto parts = per_first_symbol<std::optional<WordExtremum>>(
        f.size(), opts.threads, [&](Symbol first) -> std::optional<WordExtremum> {
            std::optional<WordExtremum> best;
            enumerate_periodic_words_from(first, n, f.constraint(), opts.dedupe_rotations,
                                          [&](std::span<const Symbol> w) {
                                              const double lr = f.scaled_product(w).log_spectral_radius();
                                              if (!best || lr > best->log_value)
                                                  best = WordExtremum{lr, Word(w.begin(), w.end())};
                                          });
            return best;
        });
    return merge_max(parts);
}

WordExtremum max_word_log_norm(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts) {
    require_positive_n(n, "max_word_log_norm");
    const double letter_max = f.max_letter_norm(opts.norm);
    const double log_letter_max = letter_max == 0.0 ? kNegInf : std::log(letter_max);
    std::atomic<double> shared{kNegInf};
    auto parts = per_first_symbol<std::optional<WordExtremum>>(
        f.size(), opts.threads, [&](Symbol first) -> std::optional<WordExtremum> {
            UpperSearch search{f, n, opts.norm, opts.prune, log_letter_max, shared, std::nullopt, Word{first}};
            search.prefix.reserve(n);
            ScaledMatrix p = ScaledMatrix::identity(f.dim());
            p.left_multiply(f.matrix(first));
            search.descend(p);
            return search.local;
        });
    auto best = merge_max(parts);
    if (!best) throw std::logic_error("max_word_log_norm: trimmed constraint produced no words");
    return *best;
}

std::optional<double> lower_bound(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts) {
    const auto ext = max_periodic_log_radius(f, n, opts);
    if (!ext) return std::nullopt;
    return std::exp(ext->log_value / static_cast<double>(n));
}

double upper_bound(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts) {
    const auto ext = max_word_log_norm(f, n, opts);
    return std::exp(ext.log_value / static_cast<double>(n));
}

std::optional<double> BoundsTrace::gap() const {
    if (!lower_sup) return std::nullopt;
    return upper_inf - *lower_sup;
}

BoundsTrace estimate_jsr(const MatrixFamily& f, std::size_t max_n, const BoundsOptions& opts) {
    require_positive_n(max_n, "estimate_jsr");
    BoundsTrace trace;
    trace.norm = opts.norm;
    trace.upper_inf = std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= max_n; ++n) {
        const auto lo = lower_bound(f, n, opts);
        const double hi = upper_bound(f, n, opts);
        trace.n_values.push_back(n);
        trace.lower.push_back(lo);
        trace.upper.push_back(hi);
        if (lo) trace.lower_sup = trace.lower_sup ? std::max(*trace.lower_sup, *lo) : *lo;
        trace.upper_inf = std::min(trace.upper_inf, hi);
    }
    return trace;
}

PeriodicMargin complete_periodic_stability_margin(const MatrixFamily& f, std::size_t max_n,
                                                  const BoundsOptions& opts) {
    require_positive_n(max_n, "complete_periodic_stability_margin");
    PeriodicMargin out;
    double best = kNegInf;
    for (std::size_t n = 1; n <= max_n; ++n) {
        const auto ext = max_periodic_log_radius(f, n, opts);
        if (!ext) continue;
        if (!out.witness || ext->log_value > best) {
            best = ext->log_value;
            out.witness = ext->word;
        }
    }
    out.margin = best == kNegInf ? 0.0 : std::exp(best);
    return out;
}

DilationResult dilation_check(const MatrixFamily& f, double alpha, std::size_t max_n, const BoundsOptions& opts) {
    if (!(alpha >= 1.0)) throw std::invalid_argument("dilation_check: alpha must be >= 1");
    require_positive_n(max_n, "dilation_check");
    DilationResult out;
    double worst = kNegInf;
    const double log_alpha = std::log(alpha);
    for (std::size_t n = 1; n <= max_n; ++n) {
        const auto ext = max_periodic_log_radius(f, n, opts);
        if (!ext) continue;
        const double value = static_cast<double>(n) * log_alpha + ext->log_value;
        if (!out.worst_word || value > worst) {
            worst = value;
            out.worst_word = ext->word;
        }
        if (value >= 0.0 && out.stable) {
            out.stable = false;
            out.witness = ext->word;
        }
    }
    out.worst_value = worst == kNegInf ? 0.0 : std::exp(worst);
    return out;
}

RobustnessProbe robust_periodic_stability_probe(const MatrixFamily& f, double epsilon, std::size_t max_n,
                                                std::size_t samples, std::uint64_t seed,
                                                const BoundsOptions& opts) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("robust_periodic_stability_probe: epsilon must be positive");
    RobustnessProbe out;
    out.epsilon = epsilon;
    out.max_n = max_n;
    out.samples = samples;

    const MatrixFamily dilated = f.scaled(1.0 + epsilon / 2.0);
    out.dilation_margin = complete_periodic_stability_margin(dilated, max_n, opts).margin;
    out.worst_margin = out.dilation_margin;
    out.worst_perturbation = dilated.matrices();
    if (out.dilation_margin >= 1.0) {
        out.passed = false;
        ++out.failures;
    }

    Rng rng(seed);
    const std::size_t d = f.dim();
    for (std::size_t s = 0; s < samples; ++s) {
        std::vector<Matrix> perturbed;
        perturbed.reserve(f.size());
        for (const auto& a : f.matrices()) {
            Matrix e(d);
            for (double& v : e.entries()) v = rng.uniform(-1.0, 1.0);
            const double ne = operator_norm(e, opts.norm);
            const double radius = epsilon * rng.uniform01();
            if (ne > 0.0) e *= radius / ne;
            perturbed.push_back(a + e);
        }
        const MatrixFamily g = f.with_matrices(perturbed);
        const double margin = complete_periodic_stability_margin(g, max_n, opts).margin;
        if (margin >= 1.0) {
            out.passed = false;
            ++out.failures;
        }
        if (margin > out.worst_margin) {
            out.worst_margin = margin;
            out.worst_perturbation = std::move(perturbed);
        }
    }
    return out;
}

std::optional<DecayCertificate> stability_certificate(const MatrixFamily& f, std::size_t max_n,
                                                      const BoundsOptions& opts) {
    require_positive_n(max_n, "stability_certificate");
    std::vector<double> log_max_norm{0.0};  // length 0: the identity
    std::optional<std::size_t> witness;
    double log_gamma = 0.0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        const double lm = max_word_log_norm(f, n, opts).log_value;
        if (lm < 0.0) {
            witness = n;
            // All length-n products vanish: any rate works, take 1/2.
            log_gamma = lm == kNegInf ? std::log(0.5) : lm / static_cast<double>(n);
            break;
        }
        log_max_norm.push_back(lm);
    }
    if (!witness) return std::nullopt;

    const std::size_t n_star = *witness;
    double log_c = 0.0;
    for (std::size_t r = 0; r < n_star; ++r)
        log_c = std::max(log_c, log_max_norm[r] - static_cast<double>(r) * log_gamma);

    DecayCertificate cert;
    cert.c = std::exp(log_c);
    cert.gamma = std::exp(log_gamma);
    cert.witness_n = n_star;
    cert.norm = opts.norm;
    cert.verified_length = 2 * n_star;

    // Exhaustive check up to 2·n*. A prefix already below gamma^j covers its
    // whole subtree: the suffix is a shorter admissible word, checked by
    // induction on length.
    const Constraint& c = f.constraint();
    double worst_log_ratio = kNegInf;
    Word prefix;
    auto visit = [&](auto&& self, const ScaledMatrix& p) -> void {
        const std::size_t m = prefix.size();
        const double ln = p.log_norm(opts.norm);
        const double log_bound = log_c + static_cast<double>(m) * log_gamma;
        worst_log_ratio = std::max(worst_log_ratio, ln - log_bound);
        if (ln > kNegInf && std::exp(ln) > std::exp(log_bound) + 1e-9) {
            throw std::logic_error("stability_certificate: verification failed at length " + std::to_string(m));
        }
        if (m == cert.verified_length) return;
        if (ln <= static_cast<double>(m) * log_gamma + 1e-12) return;
        const auto last = static_cast<std::size_t>(prefix.back() - 1);
        for (std::size_t next = 0; next < c.size(); ++next) {
            if (!c.entry(last, next)) continue;
            prefix.push_back(static_cast<Symbol>(next + 1));
            ScaledMatrix q = p;
            q.left_multiply(f.matrices()[next]);
            self(self, q);
            prefix.pop_back();
        }
    };
    for (Symbol s = 1; s <= static_cast<Symbol>(f.size()); ++s) {
        prefix = {s};
        ScaledMatrix p = ScaledMatrix::identity(f.dim());
        p.left_multiply(f.matrix(s));
        visit(visit, p);
    }
    cert.worst_ratio = worst_log_ratio == kNegInf ? 0.0 : std::exp(worst_log_ratio);
    return cert;
}

std::vector<ContinuityRow> continuity_probe(const MatrixFamily& f, const std::vector<Matrix>& direction,
                                            const std::vector<double>& deltas, std::size_t max_n,
                                            const BoundsOptions& opts) {
    if (direction.size() != f.size()) {
        throw std::invalid_argument("continuity_probe: direction must have one matrix per family member");
    }
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] >= 0.0)) throw std::invalid_argument("continuity_probe: deltas must be nonnegative");
        if (i > 0 && !(deltas[i] < deltas[i - 1])) {
            throw std::invalid_argument("continuity_probe: deltas must be strictly decreasing");
        }
    }
    const BoundsTrace base = estimate_jsr(f, max_n, opts);
    std::vector<ContinuityRow> rows;
    rows.reserve(deltas.size());
    for (double delta : deltas) {
        std::vector<Matrix> moved = f.matrices();
        for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += delta * direction[k];
        const BoundsTrace t = estimate_jsr(f.with_matrices(std::move(moved)), max_n, opts);
        ContinuityRow row;
        row.delta = delta;
        row.lower_sup = t.lower_sup;
        row.upper_inf = t.upper_inf;
        if (t.lower_sup && base.lower_sup) row.lower_shift = std::abs(*t.lower_sup - *base.lower_sup);
        row.upper_shift = std::abs(t.upper_inf - base.upper_inf);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace cjsr
