// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support/morphology_reference.hpp"
#include "support/random_bands.hpp"
#include "support/temp_dir.hpp"

#include "triage/features.hpp"
#include "triage/feedforward.hpp"
#include "triage/granulometry.hpp"
#include "triage/harness.hpp"
#include "triage/image_io.hpp"
#include "triage/kohonen.hpp"
#include "triage/morphology.hpp"
#include "triage/parallel.hpp"
#include "triage/synthetic.hpp"

#include <Eigen/Eigenvalues>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

using namespace triage;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kOracleSeconds = 10.0;
constexpr int kLawBands = 200;
constexpr int kAbsorptionBands = 100;
constexpr double kSpectrumSumTol = 1e-12;
constexpr double kGradientRelTol = 1e-4;
constexpr int kGradientNets = 50;
constexpr int kXorEpochs = 5000;
constexpr double kXorRate = 0.80;
constexpr double kOrderingRate = 0.90;
constexpr double kOrthoTol = 1e-10;
constexpr double kEigenTol = 1e-8;
constexpr double kEndToEndAccuracy = 0.90;
constexpr double kEndToEndSeconds = 600.0;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << name << " -- " << detail << std::endl;
    failures += !pass;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const SeKind kKinds[] = {SeKind::cross3, SeKind::square3};

// --- 1 ---------------------------------------------------------------------------

void morphology_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    long mismatches = 0, cases = 0;
    auto compare = [&](const Band& f, const StructuringElement& se) {
        const auto& v = f.values();
        mismatches += !(dilate(f, se).values() == ref::dilate(v, se)).all();
        mismatches += !(erode(f, se).values() == ref::erode(v, se)).all();
        mismatches += !(open(f, se).values() == ref::open(v, se)).all();
        mismatches += !(close(f, se).values() == ref::close(v, se)).all();
        cases += 4;
    };
    for (auto kind : kKinds) {
        const auto se = standard_se(kind);
        for (int code = 0; code < 512; ++code) compare(fixtures::binary3x3(code), se);
        Rng rng(derive_seed(1, {static_cast<std::uint64_t>(kind)}));
        for (int i = 0; i < 1000; ++i) compare(fixtures::uniform_band(rng, 8, 8), se);
    }
    const double secs = seconds_since(t0);
    report(1, "morphology oracle equivalence", mismatches == 0 && secs < kOracleSeconds,
           std::to_string(cases) + " comparisons, " + std::to_string(mismatches) + " mismatches, " +
               fmt("%.2f s (limit %.0f s)", secs, kOracleSeconds));
}

// --- 2 ---------------------------------------------------------------------------

void morphological_laws() {
    long violations = 0, checks = 0;
    for (auto kind : kKinds) {
        const auto se = standard_se(kind);
        Rng rng(derive_seed(2, {static_cast<std::uint64_t>(kind)}));
        for (int i = 0; i < kLawBands; ++i) {
            // dyadic values keep the complement exact for the duality check
            const auto f = fixtures::dyadic_band(rng, 12, 12);
            const auto g = unite(f, fixtures::dyadic_band(rng, 12, 12));
            const auto of = open(f, se);
            const auto cf = close(f, se);
            const bool ok[] = {
                open(of, se) == of,
                close(cf, se) == cf,
                pointwise_leq(of, f),
                pointwise_leq(f, cf),
                pointwise_leq(dilate(f, se), dilate(g, se)),
                pointwise_leq(erode(f, se), erode(g, se)),
                pointwise_leq(of, open(g, se)),
                pointwise_leq(cf, close(g, se)),
                dilate(f, se) == complement(erode(complement(f), se)),
                of == complement(close(complement(f), se)),
            };
            for (bool b : ok) violations += !b, ++checks;
        }
    }
    report(2, "morphological laws", violations == 0,
           std::to_string(kLawBands) + " bands per element, " + std::to_string(checks) + " law checks, " +
               std::to_string(violations) + " violations");
}

// --- 3 ---------------------------------------------------------------------------

void absorption() {
    long violations = 0, checks = 0;
    for (auto kind : kKinds) {
        const auto se = standard_se(kind);
        Rng rng(derive_seed(3, {static_cast<std::uint64_t>(kind)}));
        for (int i = 0; i < kAbsorptionBands; ++i) {
            const auto f = fixtures::binary_band(rng, 16, 16, 0.75);
            Band o[4];
            for (int k = 1; k <= 3; ++k) o[k] = open(f, se, k);
            for (int j = 1; j <= 3; ++j)
                for (int k = 1; k <= 3; ++k) {
                    violations += !(open(o[k], se, j) == o[std::max(j, k)]);
                    ++checks;
                }
        }
    }
    report(3, "granulometry absorption", violations == 0,
           std::to_string(checks) + " (j,k) checks on " + std::to_string(2 * kAbsorptionBands) +
               " binary 16x16 bands, " + std::to_string(violations) + " violations");
}

// --- 4 ---------------------------------------------------------------------------

void spectrum_contracts() {
    long violations = 0;
    double worst_sum = 0;
    Rng rng(4);
    for (auto kind : kKinds)
        for (int i = 0; i < 100; ++i) {
            const auto f = i % 2 ? fixtures::uniform_band(rng, 16, 16) : fixtures::binary_band(rng, 16, 16, 0.7);
            const auto curve = granulometric_curve(f, kind, 25);
            const auto cdf = size_distribution(curve);
            const auto xi = pattern_spectrum(curve).values;
            violations += cdf(0) != 0.0;
            for (int k = 0; k < 25; ++k) violations += cdf(k + 1) < cdf(k);
            violations += xi.minCoeff() < 0.0;
            const double err = std::abs(xi.sum() - cdf(25));
            worst_sum = std::max(worst_sum, err);
            violations += err > kSpectrumSumTol;
        }

    const auto cross = standard_se(SeKind::cross3);
    const auto small = dilate(fixtures::impulse(24, 24, 5, 5), cross, 1);
    const auto large = dilate(fixtures::impulse(24, 24, 14, 14), cross, 3);
    const auto xi = pattern_spectrum(unite(small, large), SeKind::cross3, 8).values;
    bool sieve = xi(1) > 0 && xi(3) > 0;
    for (int k = 0; k < 8; ++k)
        if (k != 1 && k != 3) sieve = sieve && xi(k) == 0.0;

    report(4, "pattern-spectrum contracts", violations == 0 && sieve,
           std::to_string(violations) + " contract violations on 200 bands, max |sum xi - Xi[K]| = " +
               fmt("%.2e", worst_sum) + "; two-disk sieve mass at bins 1 and 3 only: " + (sieve ? "yes" : "no") +
               fmt(" (xi[1]=%.4f, xi[3]=%.4f)", xi(1), xi(3)));
}

// --- 5 ---------------------------------------------------------------------------

double gradient_rel_error(MLPModel m, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
    const double h = 1e-6;
    const auto g = mlp_gradient(m, x, d);
    auto loss = [&] { return 0.5 * (d - mlp_forward(m, x).output()).squaredNorm(); };
    double diff = 0, norm = 0;
    for (std::size_t k = 0; k < m.layers(); ++k)
        for (long i = 0; i < m.weights[k].size(); ++i) {
            const double w0 = m.weights[k](i);
            m.weights[k](i) = w0 + h;
            const double up = loss();
            m.weights[k](i) = w0 - h;
            const double down = loss();
            m.weights[k](i) = w0;
            const double numeric = -(up - down) / (2 * h);
            diff += (numeric - g[k](i)) * (numeric - g[k](i));
            norm += numeric * numeric + g[k](i) * g[k](i);
        }
    return norm > 0 ? std::sqrt(diff) / std::sqrt(norm) : 0.0;
}

void gradient_and_perceptron() {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> width(1, 4);
    double worst = 0;
    for (int n = 0; n < kGradientNets; ++n) {
        std::vector<int> sizes{width(rng) + 1};
        const int hidden_layers = 1 + n % 2;
        for (int l = 0; l < hidden_layers; ++l) sizes.push_back(width(rng) + 1);
        sizes.push_back(width(rng));
        TrainConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(n);
        cfg.init_range = 2.0;
        cfg.bias = n % 3 != 0;
        const auto m = mlp_init(sizes, cfg);
        Eigen::VectorXd x(sizes.front()), d(sizes.back());
        for (long i = 0; i < x.size(); ++i) x(i) = u(rng);
        for (long i = 0; i < d.size(); ++i) d(i) = u(rng) > 0 ? 1.0 : 0.0;
        worst = std::max(worst, gradient_rel_error(m, x, d));
    }

    int converged = 0;
    for (int s = 0; s < 20; ++s) {
        const int dim = 2 + s % 4;
        Eigen::VectorXd w(dim);
        for (long i = 0; i < dim; ++i) w(i) = u(rng);
        const double b = 0.3 * u(rng);
        std::vector<Eigen::VectorXd> pts;
        std::vector<double> lab;
        while (pts.size() < 40) {
            Eigen::VectorXd p(dim);
            for (long i = 0; i < dim; ++i) p(i) = u(rng);
            const double a = (w.dot(p) + b) / w.norm();
            if (std::abs(a) < 0.1) continue;  // keep a margin
            pts.push_back(p);
            lab.push_back(a > 0 ? 1.0 : 0.0);
        }
        Eigen::MatrixXd x(40, dim), t(40, 1);
        for (int i = 0; i < 40; ++i) x.row(i) = pts[i].transpose(), t(i, 0) = lab[i];
        TrainConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(s);
        cfg.max_epochs = 10000;
        converged += perceptron_train(x, t, cfg).converged;
    }

    Eigen::MatrixXd xor_x(4, 2), xor_t(4, 1);
    xor_x << 0, 0, 0, 1, 1, 0, 1, 1;
    xor_t << 0, 1, 1, 0;
    TrainConfig xcfg;
    xcfg.max_epochs = 10000;
    const bool xor_fails = !perceptron_train(xor_x, xor_t, xcfg).converged;

    report(5, "MLP gradient check and perceptron convergence",
           worst < kGradientRelTol && converged == 20 && xor_fails,
           fmt("max relative gradient error %.2e over %g nets (limit %.0e); ", worst, kGradientNets, kGradientRelTol) +
               std::to_string(converged) + "/20 separable sets converged; XOR " +
               (xor_fails ? "did not converge" : "converged"));
}

// --- 6 ---------------------------------------------------------------------------

void mlp_xor() {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 1, 1, 0, 1, 1;
    const std::vector<int> cls{0, 1, 1, 0};
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.max_epochs = kXorEpochs;
    cfg.validation_fraction = 0.0;
    cfg.tolerance = 0.0;
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        const auto res = mlp_train(x, one_hot(cls, 2), std::vector<int>{2, 3, 2}, cfg);
        solved += mlp_accuracy(res.model, x, cls) == 1.0;
    }
    const double rate = solved / 20.0;
    report(6, "MLP solves XOR", rate >= kXorRate,
           std::to_string(solved) + "/20 seeds at 100% training accuracy within " + std::to_string(kXorEpochs) +
               fmt(" epochs (rate %.2f, required %.2f)", rate, kXorRate));
}

// --- 7 ---------------------------------------------------------------------------

void som_lvq() {
    Eigen::MatrixXd data(200, 1);
    for (int i = 0; i < 200; ++i) data(i, 0) = (i + 0.5) / 200.0;
    int ordered = 0, qe_ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SOMTrainConfig cfg;
        cfg.seed = seed;
        const auto init = som_init(1, 8, data, default_schedule(1, 8, cfg.max_epochs), seed);
        const auto res = som_train(data, init, cfg);
        const Eigen::VectorXd w = res.model.codebook.col(0);
        bool up = true, down = true;
        for (long i = 1; i < w.size(); ++i) up = up && w(i) > w(i - 1), down = down && w(i) < w(i - 1);
        ordered += up || down;
        qe_ok += quantization_error(res.model, data) <= quantization_error(init, data);
    }

    Rng rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0), eta(0.01, 0.9);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        SOMModel m;
        m.positions = Eigen::MatrixXd::Zero(1, 2);
        m.codebook = Eigen::MatrixXd(1, 3);
        for (long j = 0; j < 3; ++j) m.codebook(0, j) = u(rng);
        const Eigen::Vector3d x(u(rng), u(rng), u(rng));
        const double e = eta(rng);
        const double d0 = (x - m.codebook.row(0).transpose()).norm();
        const NeuronClassMap map{{0}, 2};
        SOMModel a = m, r = m;
        lvq_update(a, map, x, 0, e);
        lvq_update(r, map, x, 1, e);
        worst = std::max({worst, std::abs((x - a.codebook.row(0).transpose()).norm() - (1 - e) * d0),
                          std::abs((x - r.codebook.row(0).transpose()).norm() - (1 + e) * d0)});
    }
    const bool lvq_ok = worst < 1e-12;
    const double rate = ordered / 20.0;
    report(7, "SOM ordering, LVQ updates, quantization error", rate >= kOrderingRate && lvq_ok && qe_ok == 20,
           std::to_string(ordered) + fmt("/20 seeds ordered (rate %.2f, required %.2f); ", rate, kOrderingRate) +
               fmt("LVQ attract/repel distance error %.1e; ", worst) + std::to_string(qe_ok) +
               "/20 seeds with final quantization error <= initial");
}

// --- 8 ---------------------------------------------------------------------------

void pca() {
    Rng rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(113, 75);
    for (long i = 0; i < x.size(); ++i) x(i) = n(rng);
    const auto b = pca_fit(x, 50);
    const double ortho =
        (b.components.transpose() * b.components - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.transpose() * centered / 112.0);
    const double var_err = (b.explained_variance - eig.eigenvalues().reverse().head(50)).cwiseAbs().maxCoeff();
    const auto scores = pca_project(b, x);
    const double reduction = 100.0 * (x.cols() - scores.cols()) / static_cast<double>(x.cols());
    const bool shape = scores.rows() == 113 && scores.cols() == 50;
    const bool reduction_ok = std::abs(reduction - 33.33) < 0.005;
    report(8, "PCA", ortho < kOrthoTol && var_err < kEigenTol && shape && reduction_ok,
           fmt("orthonormality error %.1e (limit %.0e), ", ortho, kOrthoTol) +
               fmt("variance error vs covariance eigenvalues %.1e (limit %.0e), ", var_err, kEigenTol) +
               std::to_string(scores.rows()) + "x" + std::to_string(scores.cols()) + " scores, " +
               fmt("column reduction %.2f%%", reduction));
}

// --- 9 ---------------------------------------------------------------------------

void protocol() {
    LabeledFeatureMatrix m;
    m.data = Eigen::MatrixXd::Zero(113, 2);
    for (int i = 0; i < 113; ++i) {
        m.data(i, 0) = i;
        m.labels.push_back(i < 53 ? "NP" : "P");
    }
    m.column_names = default_column_names(2);
    const auto split = split_dataset(m, {0.19, true, 1});
    auto count = [&](const std::vector<Eigen::Index>& rows, const std::string& l) {
        return std::count_if(rows.begin(), rows.end(), [&](Eigen::Index r) { return m.labels[r] == l; });
    };
    const long t_np = count(split.test, "NP"), t_p = count(split.test, "P");
    const long r_np = count(split.train, "NP"), r_p = count(split.train, "P");
    const bool split_ok = split.test.size() == 22 && split.train.size() == 91 && t_np == 11 && t_p == 11 &&
                          r_np == 42 && r_p == 49;

    SweepConfig cfg;
    cfg.hidden_sizes = hidden_range(10, 30);
    cfg.reps = 20;
    const auto sweep = run_sweep(make_dataset(m, split), cfg,
                                 [](const Dataset&, ClassifierKind, int h, std::uint64_t, const ClassifierConfig&) {
                                     return TrialOutcome{h / 100.0, std::nullopt};
                                 });

    SweepSummary s;
    s.kind = ClassifierKind::mlp;
    s.attributes = 50;
    s.best_accuracy = 0.9523;
    s.best_hidden = 22;
    s.stats = {0.5705, 0.0048, 0.6818};
    const std::string row = render_row(s);
    const std::string expected = "MLP | 50 | 95.23 | 57.05 ± 0.48 | 68.18 | 22";

    report(9, "protocol fidelity", split_ok && sweep.trials.size() == 420 && row == expected,
           "test " + std::to_string(split.test.size()) + " (" + std::to_string(t_np) + "/" + std::to_string(t_p) +
               "), train " + std::to_string(split.train.size()) + " (" + std::to_string(r_np) + "/" +
               std::to_string(r_p) + "); " + std::to_string(sweep.trials.size()) + " trials; row \"" + row + "\"");
}

// --- 10 --------------------------------------------------------------------------

void end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    fixtures::TempDir dir("acceptance-e2e");
    SyntheticSpec spec;
    spec.per_class = 100;
    spec.seed = 10;
    write_synthetic_corpus(dir.path(), spec);

    std::vector<std::pair<fs::path, std::string>> files;
    for (const auto& cls : synthetic_class_names())
        for (const auto& f : fs::directory_iterator(dir.path() / cls)) files.emplace_back(f.path(), cls);
    std::sort(files.begin(), files.end());

    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    FeatureConfig fc;
    fc.seed = 10;
    std::vector<FeatureVector> vectors(files.size());
    parallel_for(files.size(), workers,
                 [&](std::size_t i) { vectors[i] = extract_feature_vector(load_image(files[i].first), fc, files[i].second); });
    const auto features = assemble_matrix(vectors);

    ExperimentConfig cfg;
    cfg.seed = 10;
    cfg.raw_arm = false;
    cfg.pca_components = 50;
    const auto arms = prepare_arms(features, cfg);
    const auto& data = arms.front().data;
    const double centroid = nearest_centroid_accuracy(data);

    SweepConfig sc;
    sc.kind = ClassifierKind::mlp;
    sc.hidden_sizes = hidden_range(10, 30);
    sc.reps = 20;
    sc.master_seed = cfg.seed;
    sc.workers = workers;
    const auto sweep = run_sweep(data, sc);
    const auto summary = summarize_sweep(sweep);
    const double secs = seconds_since(t0);

    report(10, "end-to-end synthetic triage",
           sweep.best.accuracy >= kEndToEndAccuracy && secs < kEndToEndSeconds && sweep.trials.size() == 420,
           std::to_string(features.rows()) + " images -> " + std::to_string(features.cols()) + " -> " +
               std::to_string(data.attributes()) + " attributes, " + std::to_string(data.test_x.rows()) +
               " test rows; best MLP " + fmt("%.4f (n=%g), mean %.4f, ", sweep.best.accuracy, sweep.best.hidden,
                                             summary.stats.mean) +
               fmt("nearest-centroid %.4f, required %.2f; %.1f s", centroid, kEndToEndAccuracy, secs));
}

// --- 11 --------------------------------------------------------------------------

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    fixtures::TempDir dir("acceptance-det");
    const std::string cli = std::string("'") + TRIAGE_CLI + "'";
    const std::string cfg = std::string("'") + TRIAGE_DEMO_CONFIG + "'";
    bool ran = true;
    for (const std::string run : {"a", "b"}) {
        const std::string base = "'" + (dir / run).string() + "'";
        // the second run uses more workers; outputs must not change
        const std::string workers = run == "a" ? "1" : "3";
        const std::string q = " >/dev/null 2>&1";
        ran = ran && shell(cli + " --seed 11 gen-synthetic -o " + base + "/corpus --per-class 30 --size 48" + q) == 0;
        ran = ran && shell(cli + " --seed 11 --workers " + workers + " extract " + base + "/corpus -o " + base +
                           "/features.csv" + q) == 0;
        ran = ran && shell(cli + " --config " + cfg + " --workers " + workers + " train " + base + "/features.csv -o " +
                           base + "/run" + q) == 0;
        ran = ran && shell(cli + " --workers " + workers + " evaluate " + base + "/features.csv --run " + base +
                           "/run" + q) == 0;
        ran = ran && shell(cli + " report --run " + base + "/run" + q) == 0;
    }
    int identical = 0, compared = 0;
    std::string differing;
    for (const char* f : {"features.csv", "run/results.csv", "run/report.txt", "run/report.md"}) {
        ++compared;
        const auto a = slurp(dir / "a" / f);
        if (!a.empty() && a == slurp(dir / "b" / f)) ++identical;
        else differing += std::string(" ") + f;
    }
    report(11, "determinism", ran && identical == compared,
           std::string(ran ? "both demo runs completed" : "a demo command failed") + "; " + std::to_string(identical) +
               "/" + std::to_string(compared) + " artifacts byte-identical" + (differing.empty() ? "" : " (differ:" + differing + ")"));
}

}  // namespace

int main() {
    const std::pair<int, std::function<void()>> criteria[] = {
        {1, morphology_oracle}, {2, morphological_laws}, {3, absorption},  {4, spectrum_contracts},
        {5, gradient_and_perceptron}, {6, mlp_xor}, {7, som_lvq}, {8, pca}, {9, protocol}, {10, end_to_end},
        {11, determinism},
    };
    for (const auto& [id, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(id, "exception", false, e.what());
        }
    }
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << '\n';
    return failures ? 1 : 0;
}
