#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cjsr/family.hpp"

namespace cjsr {

struct BoundsOptions {
    NormKind norm = NormKind::Spectral2;
    /// Branch-and-bound pruning in the upper bound. Off in oracle mode.
    bool prune = true;
    /// Visit one representative per cyclic-rotation class of periodic words.
    bool dedupe_rotations = true;
    /// Workers for the word walks; the search is split by first symbol.
    unsigned threads = 1;
};

/// An extremal word together with its value in log scale.
struct WordExtremum {
    double log_value = 0.0;
    Word word;
};

/// max over periodic words w of length n of log ρ(A_{w_n}⋯A_{w_1}).
/// Absent when there is no periodic word of that length.
std::optional<WordExtremum> max_periodic_log_radius(const MatrixFamily& f, std::size_t n,
                                                    const BoundsOptions& opts = {});

/// max over admissible words of length n of log ‖A_{w_n}⋯A_{w_1}‖.
WordExtremum max_word_log_norm(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts = {});

/// β_n = max over periodic words of ρ(product)^(1/n); absent when no
/// periodic word of length n exists.
std::optional<double> lower_bound(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts = {});

/// α_n = max over admissible words of ‖product‖^(1/n).
double upper_bound(const MatrixFamily& f, std::size_t n, const BoundsOptions& opts = {});

struct BoundsTrace {
    NormKind norm = NormKind::Spectral2;
    std::vector<std::size_t> n_values;
    std::vector<std::optional<double>> lower;
    std::vector<double> upper;
    /// sup of the lower bounds probed so far; absent while every β_n is absent.
    std::optional<double> lower_sup;
    double upper_inf = 0.0;

    /// upper_inf − lower_sup (absent with lower_sup).
    std::optional<double> gap() const;
};

/// Certified bracket [sup_{n≤max_n} β_n, inf_{n≤max_n} α_n] on the
/// constrained joint spectral radius.
BoundsTrace estimate_jsr(const MatrixFamily& f, std::size_t max_n, const BoundsOptions& opts = {});

struct PeriodicMargin {
    /// max ρ(product) over periodic words of length ≤ max_n (0 if none).
    double margin = 0.0;
    std::optional<Word> witness;
};

/// Largest raw spectral radius over periodic products up to max_n.
/// margin < 1 means complete periodic stability holds on the probed horizon.
PeriodicMargin complete_periodic_stability_margin(const MatrixFamily& f, std::size_t max_n,
                                                  const BoundsOptions& opts = {});

struct DilationResult {
    bool stable = true;
    /// First violating word (smallest length, then largest radius).
    std::optional<Word> witness;
    /// max over probed words of alpha^n · ρ(product).
    double worst_value = 0.0;
    std::optional<Word> worst_word;
};

/// Checks alpha^n ρ(A_{w_n}⋯A_{w_1}) < 1 for every periodic word of length ≤ max_n.
DilationResult dilation_check(const MatrixFamily& f, double alpha, std::size_t max_n, const BoundsOptions& opts = {});

inline constexpr const char* kSampledLabel = "sampled, not certified";

struct RobustnessProbe {
    /// Necessary condition only: true when no tested perturbation broke
    /// complete periodic stability.
    bool passed = true;
    std::string label = kSampledLabel;
    double epsilon = 0.0;
    std::size_t max_n = 0;
    /// Margin of the dilated family (1 + ε/2)·A.
    double dilation_margin = 0.0;
    std::size_t samples = 0;
    std::size_t failures = 0;
    /// Largest margin over every tested perturbation (dilation included).
    double worst_margin = 0.0;
    std::vector<Matrix> worst_perturbation;
};

/// Tests the dilation (1 + ε/2)A_k plus `samples` random perturbations with
/// ‖A_k − B_k‖ < ε; each must keep the periodic margin below 1.
RobustnessProbe robust_periodic_stability_probe(const MatrixFamily& f, double epsilon, std::size_t max_n,
                                                std::size_t samples, std::uint64_t seed,
                                                const BoundsOptions& opts = {});

/// ‖A_{σ(m)}⋯A_{σ(1)}‖ ≤ c · gamma^m for every admissible word.
struct DecayCertificate {
    double c = 1.0;
    double gamma = 0.0;
    std::size_t witness_n = 0;
    NormKind norm = NormKind::Spectral2;
    /// Every admissible word up to this length was checked at construction.
    std::size_t verified_length = 0;
    /// max ‖product‖ / (c·gamma^m) over the words checked directly.
    double worst_ratio = 0.0;
};

/// Smallest n* ≤ max_n with α_{n*} < 1 yields gamma = α_{n*} and
/// c = max_{r<n*} (max word norm of length r) / gamma^r. Absent when no such n*.
/// Throws std::logic_error if the exhaustive check up to 2·n* fails.
std::optional<DecayCertificate> stability_certificate(const MatrixFamily& f, std::size_t max_n,
                                                      const BoundsOptions& opts = {});

struct ContinuityRow {
    double delta = 0.0;
    std::optional<double> lower_sup;
    double upper_inf = 0.0;
    std::optional<double> lower_shift;
    double upper_shift = 0.0;
};

/// Bracket shifts of f + δ·direction relative to f for each δ. `deltas`
/// must be nonnegative and strictly decreasing.
std::vector<ContinuityRow> continuity_probe(const MatrixFamily& f, const std::vector<Matrix>& direction,
                                            const std::vector<double>& deltas, std::size_t max_n,
                                            const BoundsOptions& opts = {});

}  // namespace cjsr
