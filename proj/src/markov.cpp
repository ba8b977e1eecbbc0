#include "cjsr/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cjsr/random.hpp"

namespace cjsr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kRenormalizeEvery = 20;
constexpr std::size_t kBatches = 20;

void require_stochastic(const Matrix& p) {
    if (p.dim() == 0) throw std::invalid_argument("transition matrix is empty");
    for (std::size_t i = 0; i < p.dim(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p.dim(); ++j) {
            if (p(i, j) < 0.0) throw std::invalid_argument("transition matrix has a negative entry");
            row += p(i, j);
        }
        if (std::abs(row - 1.0) > 1e-12) {
            throw std::invalid_argument("transition matrix row " + std::to_string(i + 1) + " sums to " +
                                        std::to_string(row));
        }
    }
}

std::vector<double> lazy_step(const Matrix& p, const std::vector<double>& v) {
    const std::size_t k = p.dim();
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out[j] += v[i] * p(i, j);
    for (std::size_t j = 0; j < k; ++j) out[j] = 0.5 * (out[j] + v[j]);
    return out;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

std::pair<std::vector<double>, std::size_t> iterate_to_fixed_point(const Matrix& p, std::vector<double> v,
                                                                   bool& converged) {
    constexpr std::size_t kCap = 1'000'000;
    constexpr double kTolerance = 1e-13;
    converged = false;
    std::size_t it = 0;
    while (it < kCap) {
        auto next = lazy_step(p, v);
        ++it;
        const double change = l1_distance(next, v);
        v = std::move(next);
        if (change < kTolerance) {
            converged = true;
            break;
        }
    }
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= total;
    return {std::move(v), it};
}

double mean_of(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double standard_error_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

void require_compatible(const MatrixFamily& f, const MarkovModel& model) {
    if (f.size() != model.size() || f.was_trimmed()) {
        throw std::invalid_argument("Markov model has " + std::to_string(model.size()) +
                                    " states but the family has " + std::to_string(f.size()) +
                                    " untrimmed symbols");
    }
    const Constraint& c = f.constraint();
    for (std::size_t i = 0; i < model.size(); ++i)
        for (std::size_t j = 0; j < model.size(); ++j)
            if (model.transition()(i, j) > 0.0 && !c.entry(i, j)) {
                throw std::invalid_argument("Markov chain allows transition " + std::to_string(i + 1) + " -> " +
                                            std::to_string(j + 1) + " which the family constraint forbids");
            }
}

// log‖A_{σ(n)}⋯A_{σ(1)}‖ for one law, with cumulative log-norms at batch ends.
struct LogNormPath {
    double total = 0.0;
    std::vector<double> batch_increments;
};

LogNormPath log_norm_along(const MatrixFamily& f, const Word& law, NormKind norm) {
    const std::size_t d = f.dim();
    const std::size_t n = law.size();
    Matrix p = Matrix::identity(d);
    double log_scale = 0.0;
    LogNormPath out;
    const std::size_t batch_len = std::max<std::size_t>(1, n / kBatches);
    double previous = 0.0;
    auto current = [&]() {
        const double v = operator_norm(p, norm);
        return v == 0.0 ? kNegInf : log_scale + std::log(v);
    };
    for (std::size_t j = 0; j < n; ++j) {
        p = f.matrix(law[j]) * p;
        if ((j + 1) % kRenormalizeEvery == 0) {
            const double s = p.frobenius_norm();
            if (s == 0.0) {
                out.total = kNegInf;
                return out;
            }
            p *= 1.0 / s;
            log_scale += std::log(s);
        }
        if ((j + 1) % batch_len == 0 && out.batch_increments.size() < kBatches) {
            const double now = current();
            if (now == kNegInf) {
                out.total = kNegInf;
                return out;
            }
            out.batch_increments.push_back((now - previous) / static_cast<double>(batch_len));
            previous = now;
        }
    }
    out.total = current();
    return out;
}

}  // namespace

StationaryResult stationary_distribution(const Matrix& transition) {
    require_stochastic(transition);
    const std::size_t k = transition.dim();
    StationaryResult out;
    auto [p, iterations] = iterate_to_fixed_point(transition, std::vector<double>(k, 1.0 / static_cast<double>(k)),
                                                  out.converged);
    out.p = std::move(p);
    out.iterations = iterations;

    // A second start from a fixed pseudo-random vector exposes reducible chains.
    Rng rng(0x5eed5eedULL);
    std::vector<double> start(k);
    for (double& x : start) x = 0.05 + rng.uniform01();
    const double total = std::accumulate(start.begin(), start.end(), 0.0);
    for (double& x : start) x /= total;
    bool converged_again = false;
    const auto other = iterate_to_fixed_point(transition, std::move(start), converged_again).first;
    out.unique = l1_distance(other, out.p) <= 1e-8;
    return out;
}

MarkovModel::MarkovModel(Matrix transition, std::optional<std::vector<double>> stationary)
    : transition_(std::move(transition)) {
    require_stochastic(transition_);
    const std::size_t k = transition_.dim();
    if (stationary) {
        if (stationary->size() != k) throw std::invalid_argument("stationary vector has the wrong length");
        double total = 0.0;
        for (double x : *stationary) {
            if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("stationary vector must be nonnegative");
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("stationary vector must sum to 1");
        for (std::size_t j = 0; j < k; ++j) {
            double pj = 0.0;
            for (std::size_t i = 0; i < k; ++i) pj += (*stationary)[i] * transition_(i, j);
            if (std::abs(pj - (*stationary)[j]) > 1e-10) {
                throw std::invalid_argument("stationary vector is not invariant: (pP)_" + std::to_string(j + 1) +
                                            " differs from p_" + std::to_string(j + 1));
            }
        }
        stationary_ = std::move(*stationary);
        unique_ = stationary_distribution(transition_).unique;
    } else {
        auto s = stationary_distribution(transition_);
        stationary_ = std::move(s.p);
        unique_ = s.unique;
    }
}

double MarkovModel::probability(Symbol from, Symbol to) const {
    const auto k = static_cast<Symbol>(size());
    if (from < 1 || from > k || to < 1 || to > k) throw std::out_of_range("symbol outside the chain's state space");
    return transition_(static_cast<std::size_t>(from - 1), static_cast<std::size_t>(to - 1));
}

Constraint constraint_of(const MarkovModel& model) {
    const std::size_t k = model.size();
    std::vector<std::uint8_t> entries(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) entries[i * k + j] = model.transition()(i, j) > 0.0 ? 1 : 0;
    return Constraint(k, std::move(entries));
}

CylinderMeasure cylinder_measure(const MarkovModel& model, std::span<const Symbol> w) {
    if (w.empty()) throw std::invalid_argument("cylinder_measure: empty word");
    const auto k = static_cast<Symbol>(model.size());
    for (Symbol s : w)
        if (s < 1 || s > k) throw std::out_of_range("cylinder_measure: symbol outside the state space");
    CylinderMeasure out;
    out.probability = model.stationary()[static_cast<std::size_t>(w[0] - 1)];
    for (std::size_t j = 0; j + 1 < w.size(); ++j) {
        const double pij = model.probability(w[j], w[j + 1]);
        if (pij == 0.0) return {0.0, false};
        out.probability *= pij;
    }
    return out;
}

Word sample_switching_law(const MarkovModel& model, std::size_t length, std::uint64_t seed,
                          std::optional<std::vector<double>> initial) {
    if (length == 0) throw std::invalid_argument("sample_switching_law: length must be positive");
    const std::size_t k = model.size();
    if (initial && initial->size() != k) throw std::invalid_argument("initial distribution has the wrong length");
    const std::vector<double>& start = initial ? *initial : model.stationary();

    // Row views of P, reused for every step.
    std::vector<std::vector<double>> rows(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) rows[i][j] = model.transition()(i, j);

    Rng rng(seed);
    Word law;
    law.reserve(length);
    std::size_t state = rng.categorical(start);
    law.push_back(static_cast<Symbol>(state + 1));
    for (std::size_t t = 1; t < length; ++t) {
        state = rng.categorical(rows[state]);
        law.push_back(static_cast<Symbol>(state + 1));
    }
    return law;
}

ExponentEstimate max_lyapunov_mc(const MatrixFamily& f, const MarkovModel& model, std::size_t length,
                                 std::size_t trials, std::uint64_t seed, NormKind norm) {
    if (length == 0 || trials == 0) throw std::invalid_argument("max_lyapunov_mc: length and trials must be positive");
    require_compatible(f, model);
    ExponentEstimate out;
    out.length = length;
    out.trials = trials;
    std::vector<double> batch_means;
    for (std::size_t t = 0; t < trials; ++t) {
        const Word law = sample_switching_law(model, length, derive_seed(seed, t));
        LogNormPath path = log_norm_along(f, law, norm);
        if (path.total == kNegInf) {
            out.degenerate = true;
            out.per_trial.push_back(kNegInf);
            continue;
        }
        out.per_trial.push_back(path.total / static_cast<double>(length));
        if (trials == 1) batch_means = std::move(path.batch_increments);
    }
    if (out.degenerate) {
        out.mean = kNegInf;
        return out;
    }
    out.mean = mean_of(out.per_trial);
    out.standard_error = trials >= 2 ? standard_error_of(out.per_trial) : standard_error_of(batch_means);
    return out;
}

LyapunovSpectrum lyapunov_spectrum_qr(const MatrixFamily& f, const MarkovModel& model, std::size_t length,
                                      std::uint64_t seed) {
    if (length == 0) throw std::invalid_argument("lyapunov_spectrum_qr: length must be positive");
    require_compatible(f, model);
    const std::size_t d = f.dim();
    const Word law = sample_switching_law(model, length, seed);

    LyapunovSpectrum out;
    out.trajectory_length = length;
    std::vector<double> sums(d, 0.0);
    std::size_t valid = d;
    const std::size_t batch_len = std::max<std::size_t>(1, length / kBatches);
    std::vector<std::vector<double>> batches(d);
    std::vector<double> batch_acc(d, 0.0);
    std::vector<double> sum_batches;

    Matrix q = Matrix::identity(d);
    for (std::size_t j = 0; j < length; ++j) {
        auto [qn, r] = qr_decompose(f.matrix(law[j]) * q);
        q = std::move(qn);
        for (std::size_t i = 0; i < valid; ++i) {
            const double rii = std::abs(r(i, i));
            if (rii < 1e-300) {
                valid = i;
                out.truncated = true;
                break;
            }
            const double lr = std::log(rii);
            sums[i] += lr;
            batch_acc[i] += lr;
        }
        if ((j + 1) % batch_len == 0 && batches[0].size() < kBatches) {
            double total = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                batches[i].push_back(batch_acc[i] / static_cast<double>(batch_len));
                total += batch_acc[i];
                batch_acc[i] = 0.0;
            }
            sum_batches.push_back(total / static_cast<double>(batch_len));
        }
    }

    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < valid; ++i) {
        pairs.emplace_back(sums[i] / static_cast<double>(length), standard_error_of(batches[i]));
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [chi, se] : pairs) {
        out.exponents.push_back(chi);
        out.standard_errors.push_back(se);
    }
    out.sum_standard_error = out.truncated ? 0.0 : standard_error_of(sum_batches);
    return out;
}

MatrixFamily exterior_lift(const MatrixFamily& f, std::size_t l) {
    if (l < 1 || l > f.dim()) throw std::out_of_range("exterior_lift: l outside [1, d]");
    std::vector<Matrix> lifted;
    lifted.reserve(f.size());
    for (const auto& m : f.matrices()) lifted.push_back(exterior_power(m, l));
    return f.with_matrices(std::move(lifted));
}

double stationary_log_det_average(const MatrixFamily& f, const MarkovModel& model) {
    require_compatible(f, model);
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double pk = model.stationary()[k];
        if (pk == 0.0) continue;
        const double det = std::abs(determinant(f.matrices()[k]));
        if (det == 0.0) return kNegInf;
        acc += pk * std::log(det);
    }
    return acc;
}

PeriodicApproximation periodic_approximation(const MatrixFamily& f, const MarkovModel& model, std::uint64_t seed,
                                             std::size_t window, std::size_t max_length,
                                             const PeriodicApproximationOptions& opts) {
    if (window == 0) throw std::invalid_argument("periodic_approximation: window must be positive");
    if (max_length == 0) throw std::invalid_argument("periodic_approximation: max_length must be positive");
    require_compatible(f, model);

    PeriodicApproximation out;
    out.window = window;
    out.max_length = max_length;
    const Word law = sample_switching_law(model, max_length + window, seed);

    // The prefix product A_{σ(n)}⋯A_{σ(1)} is exactly the product of the
    // closed word σ(1..n), so one sweep serves every return time.
    ScaledMatrix prefix = ScaledMatrix::identity(f.dim());
    for (std::size_t n = 1; n <= max_length; ++n) {
        prefix.left_multiply(f.matrix(law[n - 1]));
        if (!std::equal(law.begin(), law.begin() + static_cast<std::ptrdiff_t>(window),
                        law.begin() + static_cast<std::ptrdiff_t>(n))) {
            continue;
        }
        PeriodicReturn ret;
        ret.n = n;
        ret.exponent = prefix.log_spectral_radius() / static_cast<double>(n);
        if (opts.keep_words) ret.word.assign(law.begin(), law.begin() + static_cast<std::ptrdiff_t>(n));
        out.returns.push_back(std::move(ret));
    }
    out.reference = max_lyapunov_mc(f, model, max_length, opts.reference_trials, derive_seed(seed, 0xabcdef));
    return out;
}

}  // namespace cjsr
