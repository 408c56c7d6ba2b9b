// triage: feature extraction, PCA, network sweeps and reports from the command line.

#include "triage/error.hpp"
#include "triage/features.hpp"
#include "triage/harness.hpp"
#include "triage/image_io.hpp"
#include "triage/parallel.hpp"
#include "triage/synthetic.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace triage;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, internal = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::string se = "cross3";
    int spectrum_bins = 25;
    std::optional<int> pca_components;
    bool strict_paper = false;
    std::string config;
};

// --- extract ---------------------------------------------------------------------

struct Entry {
    fs::path path;
    std::string label;
};

bool is_image(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<Entry> scan_corpus(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
    std::vector<Entry> entries;
    for (const auto& cls : fs::directory_iterator(dir)) {
        if (!cls.is_directory()) continue;
        for (const auto& f : fs::directory_iterator(cls.path()))
            if (f.is_regular_file() && is_image(f.path()))
                entries.push_back({f.path(), cls.path().filename().string()});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.path < b.path; });
    return entries;
}

// "path,label" per line; relative paths resolve against the corpus directory.
std::vector<Entry> read_manifest(const fs::path& manifest, const fs::path& corpus) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot read manifest " + manifest.string());
    std::vector<Entry> entries;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 == line.size())
            throw FormatError("manifest line must be path,label", n);
        fs::path p = line.substr(0, comma);
        if (p.is_relative()) p = corpus / p;
        entries.push_back({p, line.substr(comma + 1)});
    }
    return entries;
}

int cmd_extract(const Globals& g, const fs::path& corpus, const fs::path& out, const std::string& manifest,
                int clusters) {
    auto entries = manifest.empty() ? scan_corpus(corpus) : read_manifest(manifest, corpus);
    if (entries.empty()) throw DataError("no images found under " + corpus.string());

    FeatureConfig fc;
    fc.clusters = clusters;
    fc.spectrum_bins = g.spectrum_bins;
    fc.se = parse_se_kind(g.se);
    fc.seed = g.seed.value_or(0);

    std::vector<FeatureVector> vectors(entries.size());
    parallel_for(entries.size(), g.workers, [&](std::size_t i) {
        try {
            vectors[i] = extract_feature_vector(load_image(entries[i].path), fc, entries[i].label);
        } catch (const DataError& e) {
            throw DataError(entries[i].path.string() + ": " + e.what());
        }
    });
    for (std::size_t i = 0; i < vectors.size(); ++i)
        for (const auto& w : vectors[i].warnings) std::cerr << "warning: " << entries[i].path.string() << ": " << w << '\n';

    save_feature_csv(assemble_matrix(vectors), out);
    std::cout << "wrote " << vectors.size() << " feature rows to " << out.string() << '\n';
    return ok;
}

// --- pca -------------------------------------------------------------------------

int cmd_pca(const Globals& g, const fs::path& features, const fs::path& out, const fs::path& basis_path) {
    const auto m = load_feature_csv(features);
    const auto basis = pca_fit(m, g.pca_components.value_or(50));
    save_feature_csv(pca_transform(basis, m), out);
    if (!basis_path.empty()) save_pca_basis(basis, basis_path);
    std::cout << "reduced " << m.cols() << " -> " << basis.n_components() << " attributes\n";
    return ok;
}

// --- train / evaluate / report -------------------------------------------------------

ExperimentConfig resolve_config(const Globals& g, const fs::path& fallback) {
    ExperimentConfig cfg;
    if (!g.config.empty()) cfg = load_experiment_config(g.config);
    else if (!fallback.empty() && fs::exists(fallback)) cfg = load_experiment_config(fallback);
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.has_seed = true;
    }
    if (!cfg.has_seed) throw UsageError("a master seed is required (--seed or \"seed\" in the config)");
    if (g.workers > 1) cfg.workers = g.workers;
    if (g.pca_components) cfg.pca_components = *g.pca_components;
    if (g.strict_paper) cfg.classifier.mlp.bias = false;
    return cfg;
}

std::string arm_tag(ClassifierKind kind, int m) {
    return std::string(kind == ClassifierKind::mlp ? "mlp" : "som_lvq") + "_m" + std::to_string(m);
}

int cmd_train(const Globals& g, const fs::path& features, const fs::path& out) {
    const auto cfg = resolve_config(g, {});
    const auto m = load_feature_csv(features);
    const auto arms = prepare_arms(m, cfg);

    fs::create_directories(out / "models");
    {
        std::ofstream f(out / "config.json", std::ios::binary);
        if (!f) throw IoError("cannot write " + (out / "config.json").string());
        f << dump_experiment_config(cfg);
    }

    std::vector<TrialResult> trials;
    std::vector<SweepSummary> summaries;
    for (const auto& arm : arms) {
        if (arm.basis) save_pca_basis(*arm.basis, out / ("pca_basis_m" + std::to_string(arm.attributes) + ".json"));
        std::cout << "m=" << arm.attributes << ": nearest-centroid test accuracy "
                  << nearest_centroid_accuracy(arm.data) << '\n';
        for (auto kind : cfg.classifiers) {
            SweepConfig sc;
            sc.kind = kind;
            sc.hidden_sizes = hidden_range(cfg.hidden_from, cfg.hidden_to);
            sc.reps = cfg.reps;
            sc.master_seed = cfg.seed;
            sc.workers = cfg.workers;
            sc.selection = cfg.selection;
            sc.record_timing = cfg.record_timing;
            sc.classifier = cfg.classifier;
            auto sweep = run_sweep(arm.data, sc);
            for (const auto& t : sweep.trials)
                if (t.failed)
                    std::cerr << "warning: trial " << to_string(kind) << " m=" << t.attributes << " n=" << t.hidden
                              << " rep=" << t.rep << " failed: " << t.error << '\n';
            const auto path = out / "models" / (arm_tag(kind, arm.attributes) + ".json");
            if (sweep.best_model) {
                if (kind == ClassifierKind::mlp) save_mlp(sweep.best_model->mlp, path);
                else save_som(sweep.best_model->som, sweep.best_model->classes, path);
            }
            summaries.push_back(summarize_sweep(sweep));
            std::cout << to_string(kind) << " m=" << arm.attributes << ": best " << sweep.best.accuracy << " with n="
                      << sweep.best.hidden << '\n';
            trials.insert(trials.end(), sweep.trials.begin(), sweep.trials.end());
        }
    }
    std::ofstream csv(out / "results.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write " + (out / "results.csv").string());
    write_results_csv(csv, trials);
    save_summaries(summaries, out / "summary_sweep.json");
    return ok;
}

int cmd_evaluate(const Globals& g, const fs::path& features, const fs::path& run) {
    const auto cfg = resolve_config(g, run / "config.json");
    const auto m = load_feature_csv(features);
    const auto arms = prepare_arms(m, cfg);
    const auto selected = load_summaries(run / "summary_sweep.json");
    std::vector<SweepSummary> reruns;
    for (const auto& s : selected) {
        const auto arm = std::find_if(arms.begin(), arms.end(), [&](const Arm& a) { return a.attributes == s.attributes; });
        if (arm == arms.end()) throw DataError("no attribute set with m=" + std::to_string(s.attributes) + " for this config");
        reruns.push_back(rerun_best(arm->data, s.kind, s.best_hidden, cfg.rerun_reps, cfg.seed, cfg.classifier, cfg.workers));
        std::cout << to_string(s.kind) << " m=" << s.attributes << " n=" << s.best_hidden << ": mean "
                  << reruns.back().stats.mean << '\n';
    }
    save_summaries(reruns, run / "summary_rerun.json");
    return ok;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
}

int cmd_report(const fs::path& run) {
    const auto sweep = load_summaries(run / "summary_sweep.json");
    std::optional<std::vector<SweepSummary>> rerun;
    if (fs::exists(run / "summary_rerun.json")) rerun = load_summaries(run / "summary_rerun.json");
    if (sweep.empty()) throw DataError("no summaries to report");

    std::string text = render_report(sweep, ReportFormat::text, "Sweep stage");
    std::string md = render_report(sweep, ReportFormat::markdown, "Sweep stage");
    if (rerun) {
        text += "\n" + render_report(*rerun, ReportFormat::text, "Best-network reruns");
        md += "\n" + render_report(*rerun, ReportFormat::markdown, "Best-network reruns");
    }
    write_text(run / "report.txt", text);
    write_text(run / "report.md", md);
    std::cout << text;
    return ok;
}

int cmd_gen_synthetic(const Globals& g, const fs::path& out, int per_class, int size) {
    SyntheticSpec spec;
    spec.per_class = per_class;
    spec.width = spec.height = size;
    spec.seed = g.seed.value_or(0);
    const auto files = write_synthetic_corpus(out, spec);
    std::cout << "wrote " << files.size() << " images to " << out.string() << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Morphological pattern-spectrum features and neural-network triage"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--se", g.se, "Structuring element")->check(CLI::IsMember({"cross3", "square3"}));
    app.add_option("--spectrum-bins", g.spectrum_bins, "Pattern-spectrum bins per band")->check(CLI::PositiveNumber);
    app.add_option("--pca-components", g.pca_components, "Principal components kept")->check(CLI::PositiveNumber);
    app.add_flag("--strict-paper", g.strict_paper, "MLP without bias inputs");
    app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.fallthrough();

    std::string corpus, out, manifest, features, basis, run;
    int clusters = 4, per_class = 100, size = 64;

    auto* extract = app.add_subcommand("extract", "Pattern-spectrum features of a labeled image corpus");
    extract->add_option("corpus", corpus, "Directory with one subdirectory per class")->required();
    extract->add_option("-o,--out", out, "Feature CSV")->required();
    extract->add_option("--manifest", manifest, "path,label file overriding directory labels")->check(CLI::ExistingFile);
    extract->add_option("--clusters", clusters, "k-means clusters per band")->check(CLI::Range(2, 255));

    auto* pca = app.add_subcommand("pca", "Project a feature CSV onto its principal components");
    pca->add_option("features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
    pca->add_option("-o,--out", out, "Reduced CSV")->required();
    pca->add_option("--basis", basis, "Basis JSON to write");

    auto* train = app.add_subcommand("train", "Hidden-size sweeps for every classifier and attribute set");
    train->add_option("features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
    train->add_option("-o,--out", out, "Run directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Rerun the selected networks with fresh seeds");
    evaluate->add_option("features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--run", run, "Run directory written by train")->required()->check(CLI::ExistingDirectory);

    auto* report = app.add_subcommand("report", "Render result tables (text and Markdown)");
    report->add_option("--run", run, "Run directory")->required()->check(CLI::ExistingDirectory);

    auto* gen = app.add_subcommand("gen-synthetic", "Write a two-class grain-size image corpus");
    gen->add_option("-o,--out", out, "Output directory")->required();
    gen->add_option("--per-class", per_class, "Images per class")->check(CLI::PositiveNumber);
    gen->add_option("--size", size, "Image width and height")->check(CLI::Range(16, 4096));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*extract) return cmd_extract(g, corpus, out, manifest, clusters);
        if (*pca) return cmd_pca(g, features, out, basis);
        if (*train) return cmd_train(g, features, out);
        if (*evaluate) return cmd_evaluate(g, features, run);
        if (*report) return cmd_report(run);
        if (*gen) return cmd_gen_synthetic(g, out, per_class, size);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return internal;
    }
    return internal;
}
