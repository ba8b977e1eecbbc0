#include "cjsr/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <tuple>

#include "cjsr/jsr_bounds.hpp"
#include "cjsr/markov.hpp"
#include "cjsr/ode_flow.hpp"
#include "cjsr/random.hpp"
#include "cjsr/rotation.hpp"

#ifndef CJSR_CONFIG_DIR
#define CJSR_CONFIG_DIR "configs"
#endif

namespace cjsr::app {

namespace {

// Typed view of one config node; every failure names the offending path.
class Node {
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

    const json& raw() const { return *j_; }
    const std::string& path() const { return path_; }

    void expect_object(std::initializer_list<const char*> allowed) const {
        if (!j_->is_object()) fail("expected an object");
        for (const auto& [key, _] : j_->items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail("unknown key '" + key + "'");
        }
    }

    bool has(const char* key) const { return j_->contains(key); }

    Node at(const char* key) const {
        if (!j_->contains(key)) fail(std::string("missing '") + key + "'");
        return Node(j_->at(key), path_ + "." + key);
    }

    std::optional<Node> opt(const char* key) const {
        if (!j_->contains(key)) return std::nullopt;
        return at(key);
    }

    std::vector<Node> items() const {
        if (!j_->is_array()) fail("expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back((*j_)[i], path_ + "[" + std::to_string(i) + "]");
        return out;
    }

    double number() const {
        if (!j_->is_number()) fail("expected a number");
        const double x = j_->get<double>();
        if (!std::isfinite(x)) fail("expected a finite number");
        return x;
    }

    double positive() const {
        const double x = number();
        if (x <= 0.0) fail("expected a positive number");
        return x;
    }

    std::size_t count(std::size_t min = 1) const {
        if (!j_->is_number_integer()) fail("expected an integer");
        if (j_->is_number_unsigned()) {
            const auto v = j_->get<std::uint64_t>();
            if (v < min) fail("expected an integer >= " + std::to_string(min));
            return static_cast<std::size_t>(v);
        }
        const auto v = j_->get<std::int64_t>();
        if (v < 0 || static_cast<std::uint64_t>(v) < min) fail("expected an integer >= " + std::to_string(min));
        return static_cast<std::size_t>(v);
    }

    std::uint64_t seed() const {
        if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
        if (j_->is_number_integer() && j_->get<std::int64_t>() >= 0) return j_->get<std::uint64_t>();
        fail("expected a nonnegative integer seed");
    }

    bool boolean() const {
        if (!j_->is_boolean()) fail("expected true or false");
        return j_->get<bool>();
    }

    std::string str() const {
        if (!j_->is_string()) fail("expected a string");
        return j_->get<std::string>();
    }

    Matrix matrix() const {
        const auto rows = items();
        if (rows.empty()) fail("matrix must not be empty");
        const std::size_t d = rows.size();
        std::vector<double> entries;
        for (const auto& r : rows) {
            const auto cols = r.items();
            if (cols.size() != d) r.fail("matrix must be square");
            for (const auto& c : cols) entries.push_back(c.number());
        }
        return Matrix(d, std::move(entries));
    }

    template <class T>
    T with_domain(T (*parse)(std::string_view)) const {
        try {
            return parse(str());
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }

private:
    const json* j_;
    std::string path_;
};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// Seeds live in one table so --seed-override and the echo stay in step.
class SeedTable {
public:
    explicit SeedTable(std::optional<std::uint64_t> override_) : override_(override_) {}

    std::uint64_t take(const Node& n) {
        const std::uint64_t v = override_ ? *override_ : n.seed();
        echo_[n.path()] = v;
        return v;
    }

    const json& echo() const { return echo_; }

private:
    std::optional<std::uint64_t> override_;
    json echo_ = json::object();
};

std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class Csv {
public:
    explicit Csv(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    Csv& cell(double x) { return raw(fmt17(x)); }
    Csv& cell(std::optional<double> x) { return raw(x ? fmt17(*x) : ""); }
    Csv& cell(std::size_t x) { return raw(std::to_string(x)); }
    Csv& cell(std::int64_t x) { return raw(std::to_string(x)); }
    Csv& cell(bool x) { return raw(x ? "1" : "0"); }

    void end_row() {
        out_ << '\n';
        fresh_ = true;
    }

    std::string str() const { return out_.str(); }

private:
    Csv& raw(const std::string& s) {
        if (!fresh_) out_ << ',';
        out_ << s;
        fresh_ = false;
        return *this;
    }

    std::ostringstream out_;
    bool fresh_ = true;
};

json opt_num(std::optional<double> x) { return x ? json(*x) : json(nullptr); }

json word_json(const std::optional<Word>& w) { return w ? json(*w) : json(nullptr); }

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Replaces non-finite numbers by null. NaN and +inf are numeric failures;
// -inf is a legitimate log 0 and passes silently.
void sanitize(json& j, const std::string& path, std::vector<std::string>& flags) {
    if (j.is_number_float()) {
        const double x = j.get<double>();
        if (!std::isfinite(x)) {
            if (!(std::isinf(x) && x < 0)) flags.push_back("non-finite value at " + path);
            j = nullptr;
        }
    } else if (j.is_object()) {
        for (auto& [k, v] : j.items()) sanitize(v, path + "." + k, flags);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) sanitize(j[i], path + "[" + std::to_string(i) + "]", flags);
    }
}

struct Payload {
    json results = json::object();
    json verdicts = json::object();
    std::vector<std::string> flags;
    std::vector<CsvTrace> traces;
};

Constraint parse_constraint(const Node& n, std::size_t k) {
    const auto rows = n.items();
    if (rows.size() != k) n.fail("constraint must be " + std::to_string(k) + "x" + std::to_string(k));
    std::vector<std::uint8_t> entries;
    for (const auto& r : rows) {
        const auto cols = r.items();
        if (cols.size() != k) r.fail("constraint row has wrong length");
        for (const auto& c : cols) {
            if (!c.raw().is_number_integer() || (c.raw() != 0 && c.raw() != 1)) c.fail("constraint entries must be 0 or 1");
            entries.push_back(static_cast<std::uint8_t>(c.raw().get<int>()));
        }
    }
    return Constraint(k, std::move(entries));
}

std::vector<Matrix> parse_matrices(const Node& n) {
    std::vector<Matrix> out;
    for (const auto& m : n.items()) out.push_back(m.matrix());
    if (out.empty()) n.fail("need at least one matrix");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].dim() != out[0].dim()) n.fail("matrices must share one dimension");
    return out;
}

MatrixFamily build_family(const Node& n) {
    n.expect_object({"matrices", "constraint"});
    auto mats = parse_matrices(n.at("matrices"));
    const std::size_t k = mats.size();
    Constraint c = n.has("constraint") ? parse_constraint(n.at("constraint"), k) : Constraint::full(k);
    try {
        return MatrixFamily(std::move(mats), std::move(c));
    } catch (const EmptyConstraintError& e) {
        n.fail(std::string("trim removed every symbol (") + e.what() + ")");
    }
}

json bounds_json(const BoundsTrace& t) {
    json lower = json::array();
    for (const auto& l : t.lower) lower.push_back(opt_num(l));
    return {{"norm", std::string(to_string(t.norm))},
            {"n", t.n_values},
            {"lower", lower},
            {"upper", t.upper},
            {"lower_sup", opt_num(t.lower_sup)},
            {"upper_inf", t.upper_inf},
            {"gap", opt_num(t.gap())}};
}

Payload run_jsr_suite(const Node& suite, std::size_t max_n, const BoundsOptions& bo, SeedTable& seeds) {
    suite.expect_object({"count", "max_symbols", "max_dim", "entry_range", "density", "seed"});
    const std::size_t count = suite.at("count").count();
    const std::size_t max_k = suite.at("max_symbols").count();
    const std::size_t max_d = suite.at("max_dim").count();
    const double range = suite.has("entry_range") ? suite.at("entry_range").positive() : 1.0;
    const double density = suite.has("density") ? suite.at("density").positive() : 0.6;
    if (density > 1.0) suite.at("density").fail("expected a value in (0, 1]");
    const std::uint64_t seed = seeds.take(suite.at("seed"));

    Payload p;
    Csv csv({"index", "symbols", "dim", "lower_sup", "upper_inf", "holds"});
    json cases = json::array();
    std::size_t violations = 0;
    double max_excess = -INFINITY;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, i));
        const std::size_t k = 1 + rng.below(max_k);
        const std::size_t d = 1 + rng.below(max_d);
        std::vector<Matrix> mats;
        for (std::size_t s = 0; s < k; ++s) {
            std::vector<double> e(d * d);
            for (auto& x : e) x = rng.uniform(-range, range);
            mats.emplace_back(d, std::move(e));
        }
        std::optional<MatrixFamily> fam;
        for (int attempt = 0; attempt < 1000 && !fam; ++attempt) {
            std::vector<std::uint8_t> e(k * k);
            for (auto& x : e) x = rng.uniform01() < density ? 1 : 0;
            try {
                fam.emplace(mats, Constraint(k, std::move(e)));
            } catch (const EmptyConstraintError&) {
            }
        }
        if (!fam) fam.emplace(mats);
        const auto t = estimate_jsr(*fam, max_n, bo);
        bool holds = true;
        if (t.lower_sup) {
            max_excess = std::max(max_excess, *t.lower_sup - t.upper_inf);
            holds = *t.lower_sup <= t.upper_inf + 1e-9;
        }
        violations += holds ? 0 : 1;
        cases.push_back({{"index", i},
                         {"symbols", fam->size()},
                         {"dim", d},
                         {"lower_sup", opt_num(t.lower_sup)},
                         {"upper_inf", t.upper_inf},
                         {"holds", holds}});
        csv.cell(i).cell(fam->size()).cell(d).cell(t.lower_sup).cell(t.upper_inf).cell(holds).end_row();
    }
    p.results["suite"] = {{"count", count},
                          {"max_n", max_n},
                          {"violations", violations},
                          {"max_excess", std::isfinite(max_excess) ? json(max_excess) : json(nullptr)},
                          {"cases", cases}};
    p.verdicts["sandwich"] = violations == 0 ? "lower sup <= upper inf on every family" : "sandwich violated";
    p.traces.push_back({"suite", csv.str()});
    return p;
}

Payload run_jsr(const Node& root, const RunOptions& opts, SeedTable& seeds) {
    const Node run = root.at("run");
    run.expect_object({"max_n", "norm", "dedupe_rotations", "certificate", "dilation", "robustness"});
    const std::size_t max_n = run.at("max_n").count();
    BoundsOptions bo;
    if (run.has("norm")) bo.norm = run.at("norm").with_domain(parse_norm_kind);
    if (run.has("dedupe_rotations")) bo.dedupe_rotations = run.at("dedupe_rotations").boolean();
    bo.prune = !opts.oracle_mode;
    bo.threads = opts.threads;

    const bool has_family = root.has("family"), has_suite = root.has("suite");
    if (has_family == has_suite) root.fail("exactly one of 'family' or 'suite' is required");
    if (has_suite) {
        for (const char* k : {"dilation", "robustness", "certificate"})
            if (run.has(k)) run.at(k).fail("not available for a suite");
        return run_jsr_suite(root.at("suite"), max_n, bo, seeds);
    }

    const auto fam = build_family(root.at("family"));
    std::optional<std::pair<double, std::size_t>> dil;
    if (auto d = run.opt("dilation")) {
        d->expect_object({"alpha", "max_n"});
        dil.emplace(d->at("alpha").positive(), d->at("max_n").count());
    }
    struct Robust {
        double eps;
        std::size_t max_n, samples;
        std::uint64_t seed;
    };
    std::optional<Robust> rob;
    if (auto r = run.opt("robustness")) {
        r->expect_object({"epsilon", "max_n", "samples", "seed"});
        rob = Robust{r->at("epsilon").positive(), r->at("max_n").count(), r->at("samples").count(0),
                     seeds.take(r->at("seed"))};
    }
    const bool want_cert = run.has("certificate") ? run.at("certificate").boolean() : true;

    Payload p;
    p.results["family"] = {{"symbols", fam.size()},
                           {"dim", fam.dim()},
                           {"trimmed", fam.was_trimmed()},
                           {"original_symbols", fam.original_symbols()}};
    const auto t = estimate_jsr(fam, max_n, bo);
    p.results["bounds"] = bounds_json(t);
    p.results["bracket"] = json::array({opt_num(t.lower_sup), t.upper_inf});
    p.verdicts["bracket"] = "certified over all words up to the probed length";

    Csv csv({"n", "lower", "upper", "lower_sup", "upper_inf"});
    std::optional<double> run_sup;
    double run_inf = INFINITY;
    for (std::size_t i = 0; i < t.n_values.size(); ++i) {
        if (t.lower[i]) run_sup = run_sup ? std::max(*run_sup, *t.lower[i]) : *t.lower[i];
        run_inf = std::min(run_inf, t.upper[i]);
        csv.cell(t.n_values[i]).cell(t.lower[i]).cell(t.upper[i]).cell(run_sup).cell(run_inf).end_row();
    }
    p.traces.push_back({"bounds", csv.str()});

    const auto margin = complete_periodic_stability_margin(fam, max_n, bo);
    p.results["periodic_margin"] = {{"max_n", max_n}, {"margin", margin.margin}, {"witness", word_json(margin.witness)}};

    if (want_cert) {
        try {
            const auto cert = stability_certificate(fam, max_n, bo);
            if (cert) {
                p.results["certificate"] = {{"c", cert->c},
                                            {"gamma", cert->gamma},
                                            {"witness_n", cert->witness_n},
                                            {"norm", std::string(to_string(cert->norm))},
                                            {"verified_length", cert->verified_length},
                                            {"worst_ratio", cert->worst_ratio}};
                p.verdicts["stability"] = "uniformly exponentially stable (certified)";
            } else {
                p.results["certificate"] = nullptr;
                p.verdicts["stability"] = "no certificate within the probed length";
            }
        } catch (const std::logic_error& e) {
            p.results["certificate"] = nullptr;
            p.flags.push_back(std::string("certificate self-check failed: ") + e.what());
        }
    }
    if (dil) {
        const auto r = dilation_check(fam, dil->first, dil->second, bo);
        p.results["dilation"] = {{"alpha", dil->first},   {"max_n", dil->second},
                                 {"stable", r.stable},    {"witness", word_json(r.witness)},
                                 {"worst_value", r.worst_value}, {"worst_word", word_json(r.worst_word)}};
    }
    if (rob) {
        const auto r = robust_periodic_stability_probe(fam, rob->eps, rob->max_n, rob->samples, rob->seed, bo);
        json worst = json::array();
        for (const auto& m : r.worst_perturbation) worst.push_back(matrix_json(m));
        p.results["robustness"] = {{"passed", r.passed},
                                   {"label", r.label},
                                   {"epsilon", r.epsilon},
                                   {"max_n", r.max_n},
                                   {"dilation_margin", r.dilation_margin},
                                   {"samples", r.samples},
                                   {"failures", r.failures},
                                   {"worst_margin", r.worst_margin},
                                   {"worst_perturbation", worst}};
        p.verdicts["robustness"] = std::string(r.passed ? "no counterexample found" : "counterexample found") +
                                   " (" + kSampledLabel + ")";
    }
    return p;
}

Payload run_markov(const Node& root, const RunOptions&, SeedTable& seeds) {
    const Node model_node = root.at("model");
    model_node.expect_object({"transition", "matrices", "stationary"});
    const Matrix transition = model_node.at("transition").matrix();
    std::optional<std::vector<double>> stationary;
    if (auto s = model_node.opt("stationary")) {
        stationary.emplace();
        for (const auto& x : s->items()) stationary->push_back(x.number());
    }
    std::optional<MarkovModel> model;
    try {
        model.emplace(transition, stationary);
    } catch (const std::invalid_argument& e) {
        model_node.fail(e.what());
    }
    auto mats = parse_matrices(model_node.at("matrices"));
    if (mats.size() != model->size()) model_node.at("matrices").fail("need one matrix per chain state");
    std::optional<MatrixFamily> fam;
    try {
        fam.emplace(std::move(mats), constraint_of(*model));
    } catch (const EmptyConstraintError& e) {
        model_node.fail(std::string("trim removed every symbol (") + e.what() + ")");
    }
    if (fam->was_trimmed()) model_node.at("transition").fail("some state is never entered; trim would drop it");

    const Node run = root.at("run");
    run.expect_object({"seed", "norm", "exponent", "spectrum", "exterior", "periodic_approximation", "cylinders"});
    const std::uint64_t seed = seeds.take(run.at("seed"));
    const NormKind norm = run.has("norm") ? run.at("norm").with_domain(parse_norm_kind) : NormKind::Spectral2;
    const Node ex = run.at("exponent");
    ex.expect_object({"length", "trials"});
    const std::size_t length = ex.at("length").count();
    const std::size_t trials = ex.has("trials") ? ex.at("trials").count() : 1;
    std::optional<std::size_t> spectrum_len, ext_len, ext_l;
    if (auto s = run.opt("spectrum")) {
        s->expect_object({"length"});
        spectrum_len = s->at("length").count();
    }
    if (auto e = run.opt("exterior")) {
        e->expect_object({"l", "length"});
        ext_l = e->at("l").count();
        ext_len = e->at("length").count();
        if (*ext_l > fam->dim()) e->at("l").fail("exceeds the matrix dimension");
    }
    struct Periodic {
        std::size_t window, max_length, min_return;
    };
    std::optional<Periodic> per;
    if (auto a = run.opt("periodic_approximation")) {
        a->expect_object({"window", "max_length", "min_return"});
        per = Periodic{a->at("window").count(), a->at("max_length").count(),
                       a->has("min_return") ? a->at("min_return").count(0) : 0};
    }
    std::vector<Word> cylinders;
    if (auto c = run.opt("cylinders")) {
        for (const auto& w : c->items()) {
            Word word;
            for (const auto& s : w.items()) {
                const std::size_t v = s.count();
                if (v > model->size()) s.fail("symbol out of range");
                word.push_back(static_cast<Symbol>(v));
            }
            if (word.empty()) w.fail("empty word");
            cylinders.push_back(std::move(word));
        }
    }

    Payload p;
    p.results["stationary"] = {{"p", model->stationary()}, {"unique", model->stationary_unique()}};
    if (!stationary) {
        const auto st = stationary_distribution(transition);
        p.results["stationary"]["converged"] = st.converged;
        p.results["stationary"]["iterations"] = st.iterations;
        if (!st.converged) p.flags.push_back("stationary distribution did not converge");
    }

    if (!cylinders.empty()) {
        json cyl = json::array();
        for (const auto& w : cylinders) {
            const auto m = cylinder_measure(*model, w);
            cyl.push_back({{"word", w}, {"measure", m.probability}, {"admissible", m.admissible}});
        }
        p.results["cylinders"] = cyl;
    }

    const auto est = max_lyapunov_mc(*fam, *model, length, trials, derive_seed(seed, 0), norm);
    p.results["exponent"] = {{"mean", est.mean},
                             {"standard_error", est.standard_error},
                             {"length", est.length},
                             {"trials", est.trials},
                             {"degenerate", est.degenerate},
                             {"norm", std::string(to_string(norm))},
                             {"label", kSampledLabel}};
    p.verdicts["exponent"] = kSampledLabel;
    Csv trial_csv({"trial", "exponent"});
    for (std::size_t i = 0; i < est.per_trial.size(); ++i) trial_csv.cell(i).cell(est.per_trial[i]).end_row();
    p.traces.push_back({"trials", trial_csv.str()});

    if (spectrum_len) {
        const auto sp = lyapunov_spectrum_qr(*fam, *model, *spectrum_len, derive_seed(seed, 1));
        double sum = 0.0;
        for (double x : sp.exponents) sum += x;
        p.results["spectrum"] = {{"exponents", sp.exponents},
                                 {"standard_errors", sp.standard_errors},
                                 {"sum", sum},
                                 {"sum_standard_error", sp.sum_standard_error},
                                 {"log_det_average", stationary_log_det_average(*fam, *model)},
                                 {"trajectory_length", sp.trajectory_length},
                                 {"truncated", sp.truncated},
                                 {"label", kSampledLabel}};
    }
    if (ext_l) {
        const auto lifted = exterior_lift(*fam, *ext_l);
        const auto sp = lyapunov_spectrum_qr(lifted, *model, *ext_len, derive_seed(seed, 1));
        p.results["exterior"] = {{"l", *ext_l},
                                 {"top_exponent", sp.exponents.empty() ? json(nullptr) : json(sp.exponents.front())},
                                 {"standard_error", sp.standard_errors.empty() ? json(nullptr)
                                                                               : json(sp.standard_errors.front())},
                                 {"trajectory_length", sp.trajectory_length},
                                 {"label", kSampledLabel}};
    }
    if (per) {
        const auto a = periodic_approximation(*fam, *model, derive_seed(seed, 2), per->window, per->max_length);
        json returns = json::array();
        Csv csv({"n", "exponent"});
        std::size_t beyond = 0;
        double max_dev = 0.0;
        for (const auto& r : a.returns) {
            returns.push_back({{"n", r.n}, {"exponent", r.exponent}});
            csv.cell(r.n).cell(r.exponent).end_row();
            if (r.n >= per->min_return) {
                ++beyond;
                max_dev = std::max(max_dev, std::abs(r.exponent - a.reference.mean));
            }
        }
        p.results["periodic_approximation"] = {{"window", a.window},
                                               {"max_length", a.max_length},
                                               {"min_return", per->min_return},
                                               {"returns", returns},
                                               {"reference", a.reference.mean},
                                               {"reference_standard_error", a.reference.standard_error},
                                               {"returns_beyond_min", beyond},
                                               {"max_deviation_beyond_min", beyond ? json(max_dev) : json(nullptr)},
                                               {"label", kSampledLabel}};
        p.traces.push_back({"periodic", csv.str()});
    }
    return p;
}

std::vector<std::int64_t> parse_omega(const Node& n) {
    if (n.raw().is_string()) {
        const auto s = n.str();
        if (s == "golden") return golden_coefficients();
        if (s == "silver") return silver_coefficients();
        n.fail("unknown rotation number '" + s + "' (golden, silver, or a coefficient list)");
    }
    std::vector<std::int64_t> cf;
    for (const auto& a : n.items()) {
        if (!a.raw().is_number_integer()) a.fail("expected an integer");
        cf.push_back(a.raw().get<std::int64_t>());
    }
    return cf;
}

Payload run_rotation(const Node& root, const RunOptions&, SeedTable&) {
    const Node rot = root.at("rotation");
    rot.expect_object({"omega", "side", "convergents"});
    const auto cf = parse_omega(rot.at("omega"));
    const auto side = rot.has("side") ? rot.at("side").with_domain(parse_convergent_side) : ConvergentSide::All;
    std::optional<RotationSystem> sys;
    try {
        sys = make_rotation_system(cf, rot.at("convergents").count(), side);
    } catch (const std::exception& e) {
        rot.fail(e.what());
    }

    const Node run = root.at("run");
    run.expect_object({"closing", "unipotent", "periodic_vs_uniform"});
    std::size_t angles = 16;
    double tol = 1.0;
    if (auto c = run.opt("closing")) {
        c->expect_object({"angles", "tolerance_factor"});
        if (c->has("angles")) angles = c->at("angles").count();
        if (c->has("tolerance_factor")) tol = c->at("tolerance_factor").positive();
    }
    std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> uni;
    if (auto u = run.opt("unipotent")) {
        u->expect_object({"dim", "n_max", "fiber_samples"});
        uni.emplace(u->at("dim").count(), u->at("n_max").count(),
                    u->has("fiber_samples") ? u->at("fiber_samples").count() : 16);
        if (side != ConvergentSide::Below) rot.fail("the unipotent cocycle needs side 'below'");
    }
    std::optional<std::pair<double, std::size_t>> pvu;
    if (auto v = run.opt("periodic_vs_uniform")) {
        v->expect_object({"gamma", "n_max"});
        const double g = v->at("gamma").positive();
        if (g >= 1.0) v->at("gamma").fail("expected a value in (0, 1)");
        pvu.emplace(g, v->at("n_max").count());
    }

    Payload p;
    p.results["omega"] = static_cast<double>(sys->omega);
    p.results["side"] = std::string(to_string(side));
    json table = json::array();
    Csv csv({"index", "p", "q", "max_deviation", "bound"});
    bool all_closed = true;
    for (std::size_t n = 0; n < sys->convergents.size(); ++n) {
        const auto& c = sys->convergents[n];
        double worst = 0.0;
        bool passed = true;
        for (std::size_t j = 0; j < angles; ++j) {
            const auto r = closing_check(*sys, n, static_cast<double>(j) / static_cast<double>(angles), tol);
            worst = std::max(worst, r.max_deviation);
            passed = passed && r.passed;
        }
        all_closed = all_closed && passed;
        const double bound = tol / static_cast<double>(c.q);
        table.push_back({{"index", c.index},
                         {"p", c.p},
                         {"q", c.q},
                         {"error", static_cast<double>(sys->omega - static_cast<long double>(c.p) / c.q)},
                         {"closing_max_deviation", worst},
                         {"closing_bound", bound},
                         {"closing_passed", passed}});
        csv.cell(static_cast<std::size_t>(c.index)).cell(c.p).cell(c.q).cell(worst).cell(bound).end_row();
    }
    p.results["convergents"] = table;
    p.results["closing"] = {{"angles", angles}, {"tolerance_factor", tol}, {"all_passed", all_closed}};
    p.traces.push_back({"convergents", csv.str()});

    if (uni) {
        const auto [dim, n_max, fibers] = *uni;
        const auto r = unipotent_bracket_report(UnipotentRotationCocycle(*sys, dim), n_max, fibers);
        json periodic = json::array();
        for (const auto& v : r.periodic)
            periodic.push_back({{"p", v.convergent.p},
                                {"q", v.convergent.q},
                                {"closed_form", v.closed_form},
                                {"numeric", v.numeric},
                                {"dirichlet_floor", 1.0 - 1.0 / (static_cast<double>(v.convergent.q) *
                                                                 static_cast<double>(v.convergent.q) *
                                                                 static_cast<double>(sys->omega))}});
        p.results["unipotent"] = {{"dim", dim},
                                  {"periodic", periodic},
                                  {"periodic_sup", r.periodic_sup},
                                  {"n", r.n_values},
                                  {"upper", r.upper},
                                  {"fibers", r.fibers},
                                  {"gap_at_max_n", r.gap_at_max_n},
                                  {"periodic_all_below_one", r.periodic_all_below_one},
                                  {"upper_all_at_least_one", r.upper_all_at_least_one},
                                  {"gap_positive_everywhere", r.gap_positive_everywhere},
                                  {"finiteness_fails", r.finiteness_fails}};
        p.verdicts["spectral_finiteness"] = r.finiteness_fails
                                                ? "no probed periodic value reaches the upper estimates"
                                                : "a periodic value meets an upper estimate";
        Csv up({"n", "upper"});
        for (std::size_t i = 0; i < r.n_values.size(); ++i) up.cell(r.n_values[i]).cell(r.upper[i]).end_row();
        p.traces.push_back({"upper", up.str()});
    }
    if (pvu) {
        const auto r = periodic_vs_uniform_report(FiberScalarCocycle(*sys, pvu->first), pvu->second);
        json fibers = json::array();
        for (const auto& f : r.fibers)
            fibers.push_back({{"p", f.convergent.p},
                              {"q", f.convergent.q},
                              {"fiber_value", f.fiber_value},
                              {"product", f.product},
                              {"margin", f.margin}});
        p.results["periodic_vs_uniform"] = {{"gamma", r.gamma},
                                            {"n_max", pvu->second},
                                            {"fibers", fibers},
                                            {"periodic_margin", r.periodic_margin},
                                            {"omega_fiber_log_norms", r.omega_fiber_log_norms},
                                            {"omega_fiber_exponent", r.omega_fiber_exponent},
                                            {"completely_periodically_stable", r.completely_periodically_stable},
                                            {"uniformly_stable", r.uniformly_stable}};
        p.verdicts["periodic_vs_uniform"] = r.verdict;
    }
    return p;
}

LinearFlow build_flow(const Node& n) {
    n.expect_object({"driving", "generator"});
    const Node dn = n.at("driving");
    dn.expect_object({"type", "speed", "period"});
    const auto type = dn.at("type").str();
    Driving driving;
    if (type == "rotation") {
        if (dn.has("period")) dn.at("period").fail("not used by a rotation");
        driving = CircleRotation{dn.at("speed").number()};
    } else if (type == "periodic") {
        if (dn.has("speed")) dn.at("speed").fail("not used by a periodic orbit");
        driving = PeriodicOrbit{dn.at("period").positive()};
    } else {
        dn.at("type").fail("expected 'rotation' or 'periodic'");
    }
    const Node gn = n.at("generator");
    gn.expect_object({"constant", "terms"});
    Generator g;
    g.constant = gn.at("constant").matrix();
    if (auto terms = gn.opt("terms")) {
        for (const auto& t : terms->items()) {
            t.expect_object({"harmonic", "cos", "sin"});
            TrigTerm term;
            term.harmonic = static_cast<int>(t.at("harmonic").count());
            term.cos_coeff = t.has("cos") ? t.at("cos").matrix() : Matrix(g.dim());
            term.sin_coeff = t.has("sin") ? t.at("sin").matrix() : Matrix(g.dim());
            g.terms.push_back(std::move(term));
        }
    }
    try {
        return LinearFlow(driving, std::move(g));
    } catch (const std::invalid_argument& e) {
        n.fail(e.what());
    }
}

Payload run_ode(const Node& root, const RunOptions&, SeedTable&) {
    const auto flow = build_flow(root.at("flow"));
    const Node run = root.at("run");
    run.expect_object({"step", "w", "kernel", "decay_fit", "quasi_contraction", "liao", "ergodic"});
    const double step = run.at("step").positive();
    const double w = run.has("w") ? run.at("w").number() : 0.0;

    Payload p;
    p.results["flow"] = {{"dim", flow.dim()},
                         {"speed", flow.speed()},
                         {"period", opt_num(flow.period())},
                         {"a_star", flow.a_star()},
                         {"constant_generator", flow.generator().is_constant()}};

    if (auto k = run.opt("kernel")) {
        k->expect_object({"t", "s", "halving"});
        const double t = k->at("t").positive();
        const double s = k->has("s") ? k->at("s").positive() : t / 3.0;
        if (s >= t) k->at("s").fail("expected s < t");
        json kern = {{"t", t}, {"s", s}, {"step", step}};
        if (flow.generator().is_constant()) {
            double worst = 0.0;
            for (int j = 1; j <= 4; ++j) {
                const double tj = t * j / 4.0;
                const Matrix phi = fundamental_matrix(flow, w, tj, step);
                const Matrix ref = matrix_exponential(tj * flow.generator().constant);
                worst = std::max(worst, operator_norm(phi - ref, NormKind::Spectral2) /
                                            operator_norm(ref, NormKind::Spectral2));
            }
            kern["expm_relative_error"] = worst;
        } else {
            kern["expm_relative_error"] = nullptr;
        }
        kern["cocycle_residual"] = cocycle_residual(flow, w, s, t - s, step);
        const auto lv = liouville_check(flow, w, t, step);
        kern["liouville"] = {{"determinant", lv.determinant},
                             {"predicted", lv.predicted},
                             {"relative_error", lv.relative_error}};
        if (auto h = k->opt("halving")) {
            h->expect_object({"s", "t", "step"});
            const double hs = h->at("s").positive(), ht = h->at("t").positive(), hstep = h->at("step").positive();
            const double coarse = cocycle_residual(flow, w, hs, ht, hstep);
            const double fine = cocycle_residual(flow, w, hs, ht, hstep / 2.0);
            kern["halving"] = {{"s", hs},
                               {"t", ht},
                               {"step", hstep},
                               {"coarse_residual", coarse},
                               {"fine_residual", fine},
                               {"ratio", fine > 0.0 ? json(coarse / fine) : json(nullptr)}};
        }
        p.results["kernel"] = kern;
    }

    if (auto d = run.opt("decay_fit")) {
        d->expect_object({"horizon", "points", "grid", "step"});
        const double horizon = d->at("horizon").positive();
        const double fstep = d->has("step") ? d->at("step").positive() : step;
        std::vector<double> points{0.0};
        if (auto pts = d->opt("points")) {
            points.clear();
            for (const auto& x : pts->items()) points.push_back(x.number());
            if (points.empty()) pts->fail("need at least one point");
        }
        const std::size_t grid = d->has("grid") ? d->at("grid").count() : 32;
        const auto fit = uniform_decay_fit(flow, points, horizon, fstep, grid);
        if (fit) {
            p.results["decay_fit"] = {{"c", fit->c},
                                      {"gamma", fit->gamma},
                                      {"slope", fit->slope},
                                      {"intercept", fit->intercept},
                                      {"max_residual", fit->max_residual},
                                      {"horizon", horizon},
                                      {"grid", grid}};
            p.verdicts["decay"] = std::string("decaying on the sampled points (") + kSampledLabel + ")";
        } else {
            p.results["decay_fit"] = nullptr;
            p.verdicts["decay"] = "no decay on the sampled points";
        }
        Csv csv({"t", "log_norm"});
        for (const auto& [t, v] : log_norm_series(flow, points.front(), horizon, grid, fstep))
            csv.cell(t).cell(v).end_row();
        p.traces.push_back({"log_norm", csv.str()});
    }

    if (auto q = run.opt("quasi_contraction")) {
        q->expect_object({"segments", "beta"});
        if (!flow.period()) q->fail("needs a periodic driving orbit");
        const double beta = q->at("beta").number();
        json rows = json::array();
        Csv csv({"segments", "spacing", "average", "period_log_radius_rate"});
        bool all_passed = true, all_sub = true;
        double worst = -INFINITY;
        for (const auto& s : q->at("segments").items()) {
            const std::size_t segs = s.count();
            const auto r = quasi_contraction_test(flow, uniform_subdivision(*flow.period(), segs), beta, step, w);
            const double spacing = *flow.period() / static_cast<double>(segs);
            all_passed = all_passed && r.passed;
            all_sub = all_sub && r.submultiplicative;
            worst = std::max(worst, r.average);
            rows.push_back({{"segments", segs},
                            {"spacing", spacing},
                            {"per_segment_log_norms", r.per_segment_log_norms},
                            {"average", r.average},
                            {"passed", r.passed},
                            {"period_log_radius_rate", r.period_log_radius_rate},
                            {"submultiplicative", r.submultiplicative}});
            csv.cell(segs).cell(spacing).cell(r.average).cell(r.period_log_radius_rate).end_row();
        }
        p.results["quasi_contraction"] = {{"beta", beta},
                                          {"subdivisions", rows},
                                          {"worst_average", worst},
                                          {"all_passed", all_passed},
                                          {"all_submultiplicative", all_sub}};
        p.verdicts["quasi_contraction"] =
            all_passed ? "quasi-contracting on every probed subdivision" : "not quasi-contracting";
        p.traces.push_back({"quasi_contraction", csv.str()});
    }

    if (auto l = run.opt("liao")) {
        l->expect_object({"epsilon"});
        const auto c = liao_constants(l->at("epsilon").positive(), flow.a_star());
        p.results["liao"] = {{"epsilon", c.epsilon},     {"a_star", c.a_star},   {"delta", c.delta},
                             {"rho_pert", c.rho_pert},   {"lambda", c.lambda},   {"lambda_star", c.lambda_star},
                             {"t_bar", c.t_bar},         {"big_t", c.big_t},     {"beta_bar", c.beta_bar},
                             {"identities_hold", liao_identities_hold(c)}};
    }

    if (auto e = run.opt("ergodic")) {
        e->expect_object({"horizon", "samples"});
        if (!flow.period()) e->fail("needs a periodic driving orbit");
        const auto r = ergodic_average_criterion(flow, e->at("horizon").positive(), e->at("samples").count(), step, w);
        p.results["ergodic"] = {{"estimate", r.estimate}, {"sample_times", r.sample_times}, {"values", r.values}};
    }
    return p;
}

std::string stem_of(const json& config) {
    if (config.is_object()) {
        if (auto it = config.find("output"); it != config.end() && it->is_object() && it->contains("stem") &&
                                             (*it)["stem"].is_string())
            return (*it)["stem"].get<std::string>();
        if (auto it = config.find("name"); it != config.end() && it->is_string()) return it->get<std::string>();
        if (auto it = config.find("kind"); it != config.end() && it->is_string()) return it->get<std::string>();
    }
    return "run";
}

RunResult config_failure(const std::string& msg) {
    RunResult r;
    r.exit_code = kExitConfig;
    r.diagnostic = "config error: " + msg;
    return r;
}

}  // namespace

json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

std::string config_hash(const json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

RunResult run_config(const json& config, std::string_view command, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const Node root(config, "config");
    SeedTable seeds(opts.seed_override);
    Payload payload;
    std::string kind;
    bool prepared = false;
    try {
        root.expect_object({"version", "kind", "name", "family", "suite", "model", "rotation", "flow", "run", "output"});
        const Node v = root.at("version");
        if (!v.raw().is_number_integer() || v.raw().get<std::int64_t>() != kConfigVersion)
            v.fail("unsupported version (expected " + std::to_string(kConfigVersion) + ")");
        kind = root.at("kind").str();
        if (!command.empty() && kind != command) root.at("kind").fail("is '" + kind + "' but the command is '" +
                                                                      std::string(command) + "'");
        if (auto n = root.opt("name")) n->str();
        if (auto o = root.opt("output")) {
            o->expect_object({"stem"});
            if (o->has("stem")) o->at("stem").str();
        }
        const std::vector<std::pair<std::string, std::vector<const char*>>> payload_keys{
            {"jsr", {"family", "suite"}}, {"markov", {"model"}}, {"rotation", {"rotation"}}, {"ode", {"flow"}}};
        bool known = false;
        for (const auto& [k, keys] : payload_keys) {
            if (k == kind) known = true;
            else
                for (const char* key : keys)
                    if (root.has(key)) root.at(key).fail("does not belong to kind '" + kind + "'");
        }
        if (!known) root.at("kind").fail("unknown kind '" + kind + "' (jsr, markov, rotation, ode)");
        prepared = true;
        if (kind == "jsr") payload = run_jsr(root, opts, seeds);
        else if (kind == "markov") payload = run_markov(root, opts, seeds);
        else if (kind == "rotation") payload = run_rotation(root, opts, seeds);
        else payload = run_ode(root, opts, seeds);
    } catch (const ConfigError& e) {
        return config_failure(e.what());
    } catch (const std::exception& e) {
        if (!prepared) return config_failure(e.what());
        payload.flags.push_back(std::string("exception: ") + e.what());
    }

    RunResult r;
    r.stem = stem_of(config);
    sanitize(payload.results, "results", payload.flags);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.report = {{"schema", kReportSchema},
                {"kind", kind},
                {"name", stem_of(config)},
                {"config_hash", config_hash(config)},
                {"seeds", seeds.echo()},
                {"options", {{"oracle_mode", opts.oracle_mode}, {"seed_override", opts.seed_override.has_value()}}},
                {"results", payload.results},
                {"verdicts", payload.verdicts},
                {"numeric_flags", payload.flags},
                {"timing", {{"wall_seconds", seconds}, {"threads", opts.threads}}}};
    r.traces = std::move(payload.traces);
    r.exit_code = payload.flags.empty() ? kExitOk : kExitNumeric;
    if (!payload.flags.empty()) r.diagnostic = "numeric flag: " + payload.flags.front();
    return r;
}

RunResult run_file(const std::filesystem::path& config_path, std::string_view command, const RunOptions& opts) {
    json config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        return config_failure(e.what());
    }
    auto r = run_config(config, command, opts);
    if (r.stem.empty()) r.stem = config_path.stem().string();
    return r;
}

const std::vector<std::string>& reproduce_set() {
    static const std::vector<std::string> names{"sandwich_suite.json", "fibonacci.json", "stochastic.json",
                                                "golden_unipotent.json", "periodic_vs_uniform.json",
                                                "quasi_contraction.json"};
    return names;
}

RunResult run_reproduce(const std::filesystem::path& config_dir, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    RunResult out;
    out.stem = "reproduce";
    json runs = json::array();
    for (const auto& name : reproduce_set()) {
        auto r = run_file(config_dir / name, "", opts);
        out.exit_code = std::max(out.exit_code, r.exit_code);
        if (!r.diagnostic.empty()) out.diagnostic += name + ": " + r.diagnostic + "\n";
        const std::string stem = std::filesystem::path(name).stem().string();
        for (auto& t : r.traces) out.traces.push_back({stem + "." + t.name, std::move(t.contents)});
        runs.push_back({{"config", name}, {"exit_code", r.exit_code}, {"report", r.report}});
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.report = {{"schema", kReportSchema},
                  {"kind", "reproduce"},
                  {"runs", runs},
                  {"timing", {{"wall_seconds", seconds}, {"threads", opts.threads}}}};
    return out;
}

std::filesystem::path default_config_dir() { return CJSR_CONFIG_DIR; }

std::optional<std::filesystem::path> resolve_out_dir(const std::optional<std::filesystem::path>& flag) {
    if (flag) return flag;
    if (const char* env = std::getenv("CJSR_OUT_DIR"); env && *env) return std::filesystem::path(env);
    return std::nullopt;
}

std::vector<std::filesystem::path> write_outputs(const RunResult& result, const std::filesystem::path& dir,
                                                 std::string_view stem) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!(f << text)) throw std::runtime_error("cannot write '" + p.string() + "'");
        written.push_back(p);
    };
    put(dir / (std::string(stem) + ".report.json"), dump_report(result.report));
    for (const auto& t : result.traces) put(dir / (std::string(stem) + "." + t.name + ".csv"), t.contents);
    return written;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

json strip_timing(json report) {
    if (report.is_object()) {
        report.erase("timing");
        for (auto& [_, v] : report.items()) v = strip_timing(std::move(v));
    } else if (report.is_array()) {
        for (auto& v : report) v = strip_timing(std::move(v));
    }
    return report;
}

std::vector<std::string> validate_report(const json& report) {
    std::vector<std::string> errs;
    auto need = [&](const json& obj, const char* key, bool (json::*pred)() const noexcept, const std::string& where) {
        if (!obj.is_object() || !obj.contains(key)) {
            errs.push_back(where + ": missing '" + key + "'");
            return false;
        }
        if (!(obj.at(key).*pred)()) {
            errs.push_back(where + "." + key + ": wrong type");
            return false;
        }
        return true;
    };
    if (!report.is_object()) return {"report: not an object"};
    if (need(report, "schema", &json::is_string, "report") && report["schema"] != kReportSchema)
        errs.push_back("report.schema: unexpected value");
    if (need(report, "timing", &json::is_object, "report")) {
        need(report["timing"], "wall_seconds", &json::is_number, "report.timing");
        need(report["timing"], "threads", &json::is_number_unsigned, "report.timing");
    }
    if (!need(report, "kind", &json::is_string, "report")) return errs;
    const auto kind = report["kind"].get<std::string>();
    if (kind == "reproduce") {
        if (need(report, "runs", &json::is_array, "report")) {
            for (std::size_t i = 0; i < report["runs"].size(); ++i) {
                const auto& run = report["runs"][i];
                const std::string where = "report.runs[" + std::to_string(i) + "]";
                need(run, "config", &json::is_string, where);
                need(run, "exit_code", &json::is_number_integer, where);
                if (run.is_object() && run.contains("report") && !run["report"].is_null())
                    for (auto& e : validate_report(run["report"])) errs.push_back(where + "." + e);
            }
        }
        return errs;
    }
    if (kind != "jsr" && kind != "markov" && kind != "rotation" && kind != "ode") errs.push_back("report.kind: unknown");
    need(report, "name", &json::is_string, "report");
    if (need(report, "config_hash", &json::is_string, "report") && report["config_hash"].get<std::string>().size() != 16)
        errs.push_back("report.config_hash: expected 16 hex digits");
    if (need(report, "seeds", &json::is_object, "report"))
        for (const auto& [k, v] : report["seeds"].items())
            if (!v.is_number_unsigned()) errs.push_back("report.seeds." + k + ": expected an unsigned integer");
    if (need(report, "options", &json::is_object, "report")) {
        need(report["options"], "oracle_mode", &json::is_boolean, "report.options");
        need(report["options"], "seed_override", &json::is_boolean, "report.options");
    }
    need(report, "results", &json::is_object, "report");
    if (need(report, "verdicts", &json::is_object, "report"))
        for (const auto& [k, v] : report["verdicts"].items())
            if (!v.is_string()) errs.push_back("report.verdicts." + k + ": expected a string");
    if (need(report, "numeric_flags", &json::is_array, "report"))
        for (const auto& f : report["numeric_flags"])
            if (!f.is_string()) errs.push_back("report.numeric_flags: expected strings");
    if (errs.empty()) {
        const auto& res = report["results"];
        static const std::vector<std::pair<std::string, std::vector<std::string>>> required{
            {"jsr", {}}, {"markov", {"stationary", "exponent"}}, {"rotation", {"omega", "convergents", "closing"}},
            {"ode", {"flow"}}};
        for (const auto& [k, keys] : required)
            if (k == kind)
                for (const auto& key : keys)
                    if (!res.contains(key)) errs.push_back("report.results: missing '" + key + "'");
        if (kind == "jsr" && !res.contains("suite") && !res.contains("bounds"))
            errs.push_back("report.results: missing 'bounds' or 'suite'");
        if (res.contains("bounds")) {
            const auto& b = res["bounds"];
            for (const char* key : {"n", "lower", "upper"})
                need(b, key, &json::is_array, "report.results.bounds");
            need(b, "upper_inf", &json::is_number, "report.results.bounds");
            if (b.contains("n") && b.contains("lower") && b.contains("upper") &&
                (b["n"].size() != b["lower"].size() || b["n"].size() != b["upper"].size()))
                errs.push_back("report.results.bounds: trace lengths differ");
        }
    }
    return errs;
}

}  // namespace cjsr::app
