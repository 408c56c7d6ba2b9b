#include "triage/harness.hpp"

#include "triage/error.hpp"
#include "triage/image_io.hpp"
#include "triage/parallel.hpp"
#include "triage/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace triage {

using json = nlohmann::json;
using Eigen::Index;

// --- split ---------------------------------------------------------------------

std::vector<Index> test_allocation(std::span<const Index> class_sizes, double test_fraction) {
    if (!(test_fraction > 0 && test_fraction < 1)) throw std::invalid_argument("test fraction must lie in (0, 1)");
    const auto n_classes = static_cast<Index>(class_sizes.size());
    const Index total = std::accumulate(class_sizes.begin(), class_sizes.end(), Index{0});
    const auto target = static_cast<Index>(std::ceil(test_fraction * static_cast<double>(total) - 1e-9));
    if (n_classes == 0) return {};

    // larger classes first, lower index on ties
    std::vector<Index> order(static_cast<std::size_t>(n_classes));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return class_sizes[static_cast<std::size_t>(a)] > class_sizes[static_cast<std::size_t>(b)]; });

    std::vector<Index> balanced(static_cast<std::size_t>(n_classes), target / n_classes);
    for (Index i = 0; i < target % n_classes; ++i) ++balanced[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    bool ok = true;
    for (Index c = 0; c < n_classes; ++c) {
        const auto n = class_sizes[static_cast<std::size_t>(c)];
        const auto a = balanced[static_cast<std::size_t>(c)];
        if (a >= n || std::abs(static_cast<double>(a) - test_fraction * static_cast<double>(n)) > 1.0 + 1e-9) ok = false;
    }
    if (ok) return balanced;

    std::vector<Index> alloc(static_cast<std::size_t>(n_classes));
    std::vector<double> remainder(static_cast<std::size_t>(n_classes));
    Index assigned = 0;
    for (Index c = 0; c < n_classes; ++c) {
        const double q = test_fraction * static_cast<double>(class_sizes[static_cast<std::size_t>(c)]);
        alloc[static_cast<std::size_t>(c)] = static_cast<Index>(std::floor(q));
        remainder[static_cast<std::size_t>(c)] = q - std::floor(q);
        assigned += alloc[static_cast<std::size_t>(c)];
    }
    std::vector<Index> by_rem(order);
    std::stable_sort(by_rem.begin(), by_rem.end(), [&](Index a, Index b) {
        return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
    });
    for (std::size_t i = 0; assigned < target && i < by_rem.size(); ++i) {
        auto& a = alloc[static_cast<std::size_t>(by_rem[i])];
        if (a < class_sizes[static_cast<std::size_t>(by_rem[i])]) {
            ++a;
            ++assigned;
        }
    }
    return alloc;
}

Split split_dataset(const LabeledFeatureMatrix& m, const SplitSpec& spec) {
    if (m.rows() < 2) throw DataError("need at least two rows to split");
    Rng rng(spec.seed);
    Split s;
    if (!spec.stratified) {
        std::vector<Index> rows(static_cast<std::size_t>(m.rows()));
        std::iota(rows.begin(), rows.end(), Index{0});
        std::shuffle(rows.begin(), rows.end(), rng);
        const std::array<Index, 1> sizes{m.rows()};
        const auto t = test_allocation(sizes, spec.test_fraction)[0];
        s.test.assign(rows.begin(), rows.begin() + t);
        s.train.assign(rows.begin() + t, rows.end());
    } else {
        const auto idx = m.class_indices();
        const auto n_classes = m.classes().size();
        std::vector<std::vector<Index>> members(n_classes);
        for (std::size_t r = 0; r < idx.size(); ++r) members[static_cast<std::size_t>(idx[r])].push_back(static_cast<Index>(r));
        std::vector<Index> sizes;
        for (const auto& v : members) sizes.push_back(static_cast<Index>(v.size()));
        const auto alloc = test_allocation(sizes, spec.test_fraction);
        for (std::size_t c = 0; c < n_classes; ++c) {
            auto& v = members[c];
            std::shuffle(v.begin(), v.end(), rng);
            s.test.insert(s.test.end(), v.begin(), v.begin() + alloc[c]);
            s.train.insert(s.train.end(), v.begin() + alloc[c], v.end());
        }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    if (s.train.empty() || s.test.empty()) throw DataError("split leaves an empty partition");
    return s;
}

// --- classifiers ---------------------------------------------------------------

std::string_view to_string(ClassifierKind kind) {
    return kind == ClassifierKind::mlp ? "MLP" : "SOM-LVQ";
}

ClassifierKind parse_classifier(std::string_view name) {
    if (name == "MLP" || name == "mlp") return ClassifierKind::mlp;
    if (name == "SOM-LVQ" || name == "som-lvq" || name == "som_lvq") return ClassifierKind::som_lvq;
    throw std::invalid_argument("unknown classifier: " + std::string(name));
}

Dataset make_dataset(const LabeledFeatureMatrix& m, const Split& split) {
    Dataset d;
    d.class_names = m.classes();
    d.n_classes = static_cast<int>(d.class_names.size());
    const auto idx = m.class_indices();
    d.train_x.resize(static_cast<Index>(split.train.size()), m.cols());
    d.test_x.resize(static_cast<Index>(split.test.size()), m.cols());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        d.train_x.row(static_cast<Index>(i)) = m.data.row(split.train[i]);
        d.train_y.push_back(idx[static_cast<std::size_t>(split.train[i])]);
    }
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        d.test_x.row(static_cast<Index>(i)) = m.data.row(split.test[i]);
        d.test_y.push_back(idx[static_cast<std::size_t>(split.test[i])]);
    }
    return d;
}

TrialOutcome train_and_score(const Dataset& data, ClassifierKind kind, int hidden, std::uint64_t seed,
                             const ClassifierConfig& cfg) {
    if (hidden < 1) throw std::invalid_argument("hidden size must be positive");
    TrialOutcome out;
    TrainedModel model;
    model.kind = kind;
    if (kind == ClassifierKind::mlp) {
        TrainConfig tc = cfg.mlp;
        tc.seed = seed;
        const std::array<int, 3> sizes{static_cast<int>(data.attributes()), hidden, data.n_classes};
        auto res = mlp_train(data.train_x, one_hot(data.train_y, data.n_classes), sizes, tc);
        model.mlp = std::move(res.model);
        out.accuracy = mlp_accuracy(model.mlp, data.test_x, data.test_y);
    } else {
        SOMTrainConfig sc;
        sc.max_epochs = cfg.som_epochs;
        sc.seed = derive_seed(seed, {1});
        auto schedule = default_schedule(1, hidden, cfg.som_epochs);
        if (cfg.som_eta0) schedule.eta0 = *cfg.som_eta0;
        auto som = som_train(data.train_x, som_init(1, hidden, data.train_x, schedule, derive_seed(seed, {0})), sc);
        model.classes = label_neurons(som.model, data.train_x, data.train_y, data.n_classes);
        LVQConfig lc = cfg.lvq;
        lc.seed = derive_seed(seed, {2});
        auto lvq = lvq_train(std::move(som.model), model.classes, data.train_x, data.train_y, lc);
        model.som = std::move(lvq.model);
        out.accuracy = som_lvq_accuracy(model.som, model.classes, data.test_x, data.test_y);
    }
    out.model = std::move(model);
    return out;
}

// --- sweep ----------------------------------------------------------------------

std::vector<int> hidden_range(int from, int to) {
    if (from < 1 || to < from) throw std::invalid_argument("invalid hidden-size range");
    std::vector<int> v(static_cast<std::size_t>(to - from + 1));
    std::iota(v.begin(), v.end(), from);
    return v;
}

std::uint64_t trial_seed(std::uint64_t master, int stage, ClassifierKind kind, int attributes, int hidden, int rep) {
    return derive_seed(master, {static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(kind),
                                static_cast<std::uint64_t>(attributes), static_cast<std::uint64_t>(hidden),
                                static_cast<std::uint64_t>(rep)});
}

namespace {

bool better(const TrialResult& a, const TrialResult& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.hidden != b.hidden) return a.hidden < b.hidden;
    return a.seed < b.seed;
}

std::vector<TrialResult> run_trials(const Dataset& data, ClassifierKind kind, std::span<const int> hidden_sizes,
                                    int reps, int stage, std::uint64_t master, unsigned workers, bool timing,
                                    const ClassifierConfig& cfg, const Trainer& trainer) {
    if (reps < 1) throw std::invalid_argument("repetitions must be positive");
    const auto attributes = static_cast<int>(data.attributes());
    std::vector<TrialResult> trials(hidden_sizes.size() * static_cast<std::size_t>(reps));
    for (std::size_t h = 0; h < hidden_sizes.size(); ++h)
        for (int r = 0; r < reps; ++r) {
            auto& t = trials[h * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
            t.kind = kind;
            t.attributes = attributes;
            t.hidden = hidden_sizes[h];
            t.rep = r;
            t.seed = trial_seed(master, stage, kind, attributes, t.hidden, r);
        }
    parallel_for(trials.size(), workers, [&](std::size_t i) {
        auto& t = trials[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            t.accuracy = trainer(data, kind, t.hidden, t.seed, cfg).accuracy;
        } catch (const std::exception& e) {
            t.failed = true;
            t.error = e.what();
        }
        if (timing) t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return trials;
}

}  // namespace

SweepResult run_sweep(const Dataset& data, const SweepConfig& cfg, const Trainer& trainer) {
    if (cfg.hidden_sizes.empty()) throw std::invalid_argument("no hidden sizes to sweep");
    SweepResult res;
    res.trials = run_trials(data, cfg.kind, cfg.hidden_sizes, cfg.reps, 0, cfg.master_seed, cfg.workers,
                            cfg.record_timing, cfg.classifier, trainer);

    const TrialResult* best = nullptr;
    if (cfg.selection == Selection::peak) {
        for (const auto& t : res.trials)
            if (!best || better(t, *best)) best = &t;
    } else {
        int chosen = -1;
        double chosen_mean = -1;
        for (int h : cfg.hidden_sizes) {
            double sum = 0;
            int n = 0;
            for (const auto& t : res.trials)
                if (t.hidden == h && !t.failed) sum += t.accuracy, ++n;
            if (n && sum / n > chosen_mean) chosen_mean = sum / n, chosen = h;
        }
        for (const auto& t : res.trials)
            if (t.hidden == chosen && (!best || better(t, *best))) best = &t;
        if (!best) best = &res.trials.front();
    }
    res.best = *best;
    if (!res.best.failed) {
        auto again = trainer(data, cfg.kind, res.best.hidden, res.best.seed, cfg.classifier);
        res.best_model = std::move(again.model);
    }
    return res;
}

Stats describe(std::span<const double> values) {
    Stats s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (n - 1));
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto mid = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return s;
}

SweepSummary summarize_sweep(const SweepResult& sweep) {
    if (sweep.best.failed) throw DataError("every trial failed: " + sweep.best.error);
    SweepSummary s;
    s.kind = sweep.best.kind;
    s.attributes = sweep.best.attributes;
    s.best_accuracy = sweep.best.accuracy;
    s.best_hidden = sweep.best.hidden;
    for (const auto& t : sweep.trials)
        if (!t.failed) s.accuracies.push_back(t.accuracy);
    s.stats = describe(s.accuracies);
    return s;
}

SweepSummary rerun_best(const Dataset& data, ClassifierKind kind, int hidden, int reps, std::uint64_t master_seed,
                        const ClassifierConfig& cfg, unsigned workers, const Trainer& trainer) {
    if (reps < 2) throw std::invalid_argument("reruns need at least two repetitions");
    const std::array<int, 1> sizes{hidden};
    const auto trials = run_trials(data, kind, sizes, reps, 1, master_seed, workers, false, cfg, trainer);
    SweepSummary s;
    s.kind = kind;
    s.attributes = static_cast<int>(data.attributes());
    s.best_hidden = hidden;
    for (const auto& t : trials)
        if (!t.failed) s.accuracies.push_back(t.accuracy);
    if (s.accuracies.empty()) throw DataError("every rerun failed: " + trials.front().error);
    s.best_accuracy = *std::max_element(s.accuracies.begin(), s.accuracies.end());
    s.stats = describe(s.accuracies);
    return s;
}

// --- report ----------------------------------------------------------------------

namespace {

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

const char* const kHeader[] = {"Network", "m", "eta_OTM (%)", "mean ± std (%)", "eta_MED (%)", "n_OTM"};

std::vector<std::string> cells(const SweepSummary& s) {
    return {std::string(to_string(s.kind)),
            std::to_string(s.attributes),
            percent(s.best_accuracy),
            percent(s.stats.mean) + " ± " + percent(s.stats.stddev),
            percent(s.stats.median),
            std::to_string(s.best_hidden)};
}

// display width; "±" is two bytes in UTF-8
std::size_t width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
}

std::string pad(const std::string& s, std::size_t w, bool left) {
    const auto fill = std::string(w > width(s) ? w - width(s) : 0, ' ');
    return left ? s + fill : fill + s;
}

}  // namespace

std::string render_row(const SweepSummary& s, ReportFormat format) {
    const auto c = cells(s);
    std::string out = format == ReportFormat::markdown ? "| " : "";
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) out += " | ";
        out += c[i];
    }
    if (format == ReportFormat::markdown) out += " |";
    return out;
}

std::string render_report(std::span<const SweepSummary> summaries, ReportFormat format, std::string_view title) {
    std::vector<SweepSummary> rows(summaries.begin(), summaries.end());
    std::stable_sort(rows.begin(), rows.end(), [](const SweepSummary& a, const SweepSummary& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.attributes < b.attributes;
    });
    std::ostringstream out;
    if (format == ReportFormat::markdown) {
        if (!title.empty()) out << "### " << title << "\n\n";
        out << "|";
        for (const char* h : kHeader) out << ' ' << h << " |";
        out << "\n|---|---:|---:|---:|---:|---:|\n";
        for (const auto& r : rows) out << render_row(r, format) << '\n';
        return out.str();
    }
    std::vector<std::vector<std::string>> table{{std::begin(kHeader), std::end(kHeader)}};
    for (const auto& r : rows) table.push_back(cells(r));
    std::vector<std::size_t> w(table.front().size(), 0);
    for (const auto& row : table)
        for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], width(row[i]));
    if (!title.empty()) out << title << '\n';
    for (std::size_t r = 0; r < table.size(); ++r) {
        std::string line;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) line += " | ";
            line += pad(table[r][i], w[i], i == 0);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
        if (r == 0) {
            std::string rule;
            for (std::size_t i = 0; i < w.size(); ++i) rule += (i ? "-+-" : "") + std::string(w[i], '-');
            out << rule << '\n';
        }
    }
    return out.str();
}

void save_summaries(std::span<const SweepSummary> summaries, const std::filesystem::path& path) {
    json rows = json::array();
    for (const auto& s : summaries)
        rows.push_back({{"classifier", std::string(to_string(s.kind))},
                        {"m", s.attributes},
                        {"best_accuracy", s.best_accuracy},
                        {"best_hidden", s.best_hidden},
                        {"mean", s.stats.mean},
                        {"stddev", s.stats.stddev},
                        {"median", s.stats.median},
                        {"accuracies", s.accuracies}});
    const json j = {{"schema_version", 1}, {"kind", "sweep_summaries"}, {"summaries", rows}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<SweepSummary> load_summaries(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "sweep_summaries")
            throw FormatError("unsupported summary schema in " + path.string());
        std::vector<SweepSummary> out;
        for (const auto& r : j.at("summaries")) {
            SweepSummary s;
            s.kind = parse_classifier(r.at("classifier").get<std::string>());
            s.attributes = r.at("m").get<int>();
            s.best_accuracy = r.at("best_accuracy").get<double>();
            s.best_hidden = r.at("best_hidden").get<int>();
            s.stats = {r.at("mean").get<double>(), r.at("stddev").get<double>(), r.at("median").get<double>()};
            s.accuracies = r.at("accuracies").get<std::vector<double>>();
            out.push_back(std::move(s));
        }
        return out;
    } catch (const json::exception& e) {
        throw FormatError("invalid summary file " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError("invalid summary file " + path.string() + ": " + e.what());
    }
}

// --- results CSV --------------------------------------------------------------

void write_results_csv(std::ostream& out, std::span<const TrialResult> trials) {
    out << "classifier,m,hidden,rep,seed,accuracy,seconds\n";
    for (const auto& t : trials) {
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.3f", t.seconds);
        out << to_string(t.kind) << ',' << t.attributes << ',' << t.hidden << ',' << t.rep << ',' << t.seed << ','
            << (t.failed ? std::string() : format_double(t.accuracy)) << ',' << secs << '\n';
    }
}

std::vector<TrialResult> read_results_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != "classifier,m,hidden,rep,seed,accuracy,seconds")
        throw FormatError("missing results header", 1);
    std::vector<TrialResult> trials;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 7) throw FormatError("expected 7 fields", lineno);
        try {
            TrialResult t;
            t.kind = parse_classifier(f[0]);
            t.attributes = std::stoi(f[1]);
            t.hidden = std::stoi(f[2]);
            t.rep = std::stoi(f[3]);
            t.seed = std::stoull(f[4]);
            t.failed = f[5].empty();
            if (!t.failed) t.accuracy = std::stod(f[5]);
            t.seconds = std::stod(f[6]);
            trials.push_back(std::move(t));
        } catch (const std::logic_error&) {
            throw FormatError("malformed results row", lineno);
        }
    }
    return trials;
}

double nearest_centroid_accuracy(const Dataset& data) {
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(data.n_classes, data.attributes());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(data.n_classes);
    for (Index r = 0; r < data.train_x.rows(); ++r) {
        means.row(data.train_y[static_cast<std::size_t>(r)]) += data.train_x.row(r);
        counts(data.train_y[static_cast<std::size_t>(r)]) += 1;
    }
    for (Index c = 0; c < means.rows(); ++c)
        if (counts(c) > 0) means.row(c) /= counts(c);
    int hits = 0;
    for (Index r = 0; r < data.test_x.rows(); ++r) {
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index c = 0; c < means.rows(); ++c) {
            if (counts(c) == 0) continue;
            const double d = (data.test_x.row(r) - means.row(c)).squaredNorm();
            if (d < best_d) best_d = d, best = c;
        }
        hits += best == data.test_y[static_cast<std::size_t>(r)];
    }
    return data.test_x.rows() ? static_cast<double>(hits) / static_cast<double>(data.test_x.rows()) : 0.0;
}

// --- experiment configuration ----------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw FormatError(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
            throw FormatError("unknown config key " + where + "." + k);
    }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
    ExperimentConfig c;
    try {
        const json j = json::parse(json_text);
        check_keys(j,
                   {"seed", "split", "hidden", "reps", "rerun_reps", "classifiers", "arms", "pca", "selection",
                    "workers", "record_timing", "mlp", "som", "lvq"},
                   "config");
        if (j.contains("seed")) {
            c.seed = j.at("seed").get<std::uint64_t>();
            c.has_seed = true;
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            check_keys(s, {"test_fraction", "stratified"}, "split");
            take(s, "test_fraction", c.split.test_fraction);
            take(s, "stratified", c.split.stratified);
        }
        if (j.contains("hidden")) {
            const auto& h = j.at("hidden");
            check_keys(h, {"from", "to"}, "hidden");
            take(h, "from", c.hidden_from);
            take(h, "to", c.hidden_to);
        }
        take(j, "reps", c.reps);
        take(j, "rerun_reps", c.rerun_reps);
        if (j.contains("classifiers")) {
            c.classifiers.clear();
            for (const auto& k : j.at("classifiers")) c.classifiers.push_back(parse_classifier(k.get<std::string>()));
        }
        if (j.contains("arms")) {
            const auto& a = j.at("arms");
            check_keys(a, {"raw", "pca"}, "arms");
            take(a, "raw", c.raw_arm);
            take(a, "pca", c.pca_arm);
        }
        if (j.contains("pca")) {
            const auto& p = j.at("pca");
            check_keys(p, {"components", "variance", "fit"}, "pca");
            take(p, "components", c.pca_components);
            if (p.contains("variance")) c.pca_variance = p.at("variance").get<double>();
            if (p.contains("fit")) {
                const auto f = p.at("fit").get<std::string>();
                if (f == "all") c.pca_fit = PcaFit::all_rows;
                else if (f == "train") c.pca_fit = PcaFit::train_rows;
                else throw FormatError("pca.fit must be \"all\" or \"train\"");
            }
        }
        if (j.contains("selection")) {
            const auto s = j.at("selection").get<std::string>();
            if (s == "peak") c.selection = Selection::peak;
            else if (s == "mean") c.selection = Selection::mean;
            else throw FormatError("selection must be \"peak\" or \"mean\"");
        }
        take(j, "workers", c.workers);
        take(j, "record_timing", c.record_timing);
        if (j.contains("mlp")) {
            const auto& m = j.at("mlp");
            check_keys(m, {"learning_rate", "max_epochs", "tolerance", "validation_fraction", "patience", "init_range", "bias"},
                       "mlp");
            auto& t = c.classifier.mlp;
            take(m, "learning_rate", t.learning_rate);
            take(m, "max_epochs", t.max_epochs);
            take(m, "tolerance", t.tolerance);
            take(m, "validation_fraction", t.validation_fraction);
            take(m, "patience", t.patience);
            take(m, "init_range", t.init_range);
            take(m, "bias", t.bias);
        }
        if (j.contains("som")) {
            const auto& s = j.at("som");
            check_keys(s, {"epochs", "eta0"}, "som");
            take(s, "epochs", c.classifier.som_epochs);
            if (s.contains("eta0")) c.classifier.som_eta0 = s.at("eta0").get<double>();
        }
        if (j.contains("lvq")) {
            const auto& l = j.at("lvq");
            check_keys(l, {"epochs", "eta_start", "error_threshold"}, "lvq");
            take(l, "epochs", c.classifier.lvq.epochs);
            take(l, "eta_start", c.classifier.lvq.eta_start);
            take(l, "error_threshold", c.classifier.lvq.error_threshold);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid config: ") + e.what());
    }
    if (c.reps < 1 || c.rerun_reps < 1 || c.hidden_from < 1 || c.hidden_to < c.hidden_from)
        throw FormatError("invalid sweep dimensions in config");
    if (!(c.split.test_fraction > 0 && c.split.test_fraction < 1)) throw FormatError("split.test_fraction must lie in (0, 1)");
    if (c.classifiers.empty() || (!c.raw_arm && !c.pca_arm)) throw FormatError("config selects no experiments");
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string dump_experiment_config(const ExperimentConfig& c) {
    json j;
    if (c.has_seed) j["seed"] = c.seed;
    j["split"] = {{"test_fraction", c.split.test_fraction}, {"stratified", c.split.stratified}};
    j["hidden"] = {{"from", c.hidden_from}, {"to", c.hidden_to}};
    j["reps"] = c.reps;
    j["rerun_reps"] = c.rerun_reps;
    json ks = json::array();
    for (auto k : c.classifiers) ks.push_back(std::string(to_string(k)));
    j["classifiers"] = ks;
    j["arms"] = {{"raw", c.raw_arm}, {"pca", c.pca_arm}};
    j["pca"] = {{"components", c.pca_components}, {"fit", c.pca_fit == PcaFit::all_rows ? "all" : "train"}};
    if (c.pca_variance) j["pca"]["variance"] = *c.pca_variance;
    j["selection"] = c.selection == Selection::peak ? "peak" : "mean";
    j["workers"] = c.workers;
    j["record_timing"] = c.record_timing;
    const auto& t = c.classifier.mlp;
    j["mlp"] = {{"learning_rate", t.learning_rate}, {"max_epochs", t.max_epochs}, {"tolerance", t.tolerance},
                {"validation_fraction", t.validation_fraction}, {"patience", t.patience},
                {"init_range", t.init_range}, {"bias", t.bias}};
    j["som"] = {{"epochs", c.classifier.som_epochs}};
    if (c.classifier.som_eta0) j["som"]["eta0"] = *c.classifier.som_eta0;
    j["lvq"] = {{"epochs", c.classifier.lvq.epochs}, {"eta_start", c.classifier.lvq.eta_start},
                {"error_threshold", c.classifier.lvq.error_threshold}};
    return j.dump(2) + "\n";
}

std::vector<Arm> prepare_arms(const LabeledFeatureMatrix& m, const ExperimentConfig& cfg) {
    SplitSpec spec = cfg.split;
    spec.seed = derive_seed(cfg.seed, {100});
    const auto split = split_dataset(m, spec);
    std::vector<Arm> arms;
    if (cfg.pca_arm) {
        const Eigen::MatrixXd fit_rows =
            cfg.pca_fit == PcaFit::all_rows ? m.data : m.select_rows(split.train).data;
        const Index n = cfg.pca_variance ? components_for_variance(fit_rows, *cfg.pca_variance)
                                         : static_cast<Index>(cfg.pca_components);
        Arm a;
        a.basis = pca_fit(fit_rows, n);
        a.data = make_dataset(pca_transform(*a.basis, m), split);
        a.attributes = static_cast<int>(n);
        arms.push_back(std::move(a));
    }
    if (cfg.raw_arm) {
        Arm a;
        a.data = make_dataset(m, split);
        a.attributes = static_cast<int>(m.cols());
        arms.push_back(std::move(a));
    }
    return arms;
}

}  // namespace triage
