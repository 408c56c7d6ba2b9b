#include "support/temp_dir.hpp"

#include "triage/features.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run triage_cli(const fixtures::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("cd '") + dir.path().string() + "' && '" + TRIAGE_CLI + "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

long count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_CASE("usage errors exit with 1") {
    fixtures::TempDir dir("cli-usage");
    CHECK(triage_cli(dir, "").code == 1);
    CHECK(triage_cli(dir, "frobnicate").code == 1);
    CHECK(triage_cli(dir, "--se disk extract . -o f.csv").code == 1);
    CHECK(triage_cli(dir, "--help").code == 0);
}

TEST_CASE("synthetic corpus, extraction and determinism") {
    fixtures::TempDir dir("cli-extract");
    REQUIRE(triage_cli(dir, "gen-synthetic -o corpus --per-class 6 --size 40 --seed 3").code == 0);
    CHECK(fs::is_directory(dir / "corpus/large"));
    CHECK(fs::is_directory(dir / "corpus/small"));

    REQUIRE(triage_cli(dir, "--seed 1 extract corpus -o a.csv").code == 0);
    REQUIRE(triage_cli(dir, "--seed 1 --workers 3 extract corpus -o b.csv").code == 0);
    const auto a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(count_lines(a) == 13);
    const auto m = triage::load_feature_csv(dir / "a.csv");
    CHECK(m.cols() == 75);
    CHECK(m.classes() == std::vector<std::string>{"large", "small"});

    REQUIRE(triage_cli(dir, "--spectrum-bins 10 --se square3 extract corpus -o c.csv").code == 0);
    CHECK(triage::load_feature_csv(dir / "c.csv").cols() == 30);
}

TEST_CASE("manifest overrides directory labels") {
    fixtures::TempDir dir("cli-manifest");
    REQUIRE(triage_cli(dir, "gen-synthetic -o corpus --per-class 2 --size 32").code == 0);
    std::ofstream(dir / "manifest.txt") << "large/img_000.png,P\nsmall/img_001.png,NP\n";
    REQUIRE(triage_cli(dir, "extract corpus -o f.csv --manifest manifest.txt").code == 0);
    const auto m = triage::load_feature_csv(dir / "f.csv");
    CHECK(m.labels == std::vector<std::string>{"P", "NP"});
}

TEST_CASE("extraction data errors exit with 2") {
    fixtures::TempDir dir("cli-empty");
    fs::create_directories(dir / "empty");
    const auto r = triage_cli(dir, "extract empty -o f.csv");
    CHECK(r.code == 2);
    CHECK(r.err.find("no images") != std::string::npos);
    CHECK(triage_cli(dir, "extract nowhere -o f.csv").code == 2);

    fs::create_directories(dir / "broken/x");
    std::ofstream(dir / "broken/x/bad.png") << "garbage";
    CHECK(triage_cli(dir, "extract broken -o f.csv").code == 2);
}

TEST_CASE("black images are extracted with warnings") {
    fixtures::TempDir dir("cli-black");
    fs::create_directories(dir / "c/dark");
    {
        std::ofstream out(dir / "c/dark/black.ppm", std::ios::binary);
        out << "P6\n8 8\n255\n" << std::string(8 * 8 * 3, '\0');
    }
    const auto r = triage_cli(dir, "extract c -o f.csv");
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    const auto m = triage::load_feature_csv(dir / "f.csv");
    CHECK((m.data.array() == 0).all());
}

TEST_CASE("pca command") {
    fixtures::TempDir dir("cli-pca");
    REQUIRE(triage_cli(dir, "gen-synthetic -o corpus --per-class 30 --size 40 --seed 5").code == 0);
    REQUIRE(triage_cli(dir, "extract corpus -o f.csv").code == 0);
    REQUIRE(triage_cli(dir, "--pca-components 50 pca f.csv -o r.csv --basis b.json").code == 0);
    const auto full = triage::load_feature_csv(dir / "f.csv");
    const auto reduced = triage::load_feature_csv(dir / "r.csv");
    CHECK(reduced.cols() == 50);
    CHECK(reduced.rows() == 60);
    CHECK(reduced.labels == full.labels);
    CHECK(triage::load_pca_basis(dir / "b.json").n_components() == 50);

    REQUIRE(triage_cli(dir, "--pca-components 30 pca f.csv -o s.csv --basis s.json").code == 0);
    CHECK(triage::load_feature_csv(dir / "s.csv").cols() == 30);

    CHECK(triage_cli(dir, "--pca-components 500 pca f.csv -o x.csv").code == 1);

    std::ofstream(dir / "bad.csv") << "label,f000,f001\na,0.1,0.2\nb,0.3,zzz\n";
    const auto r = triage_cli(dir, "pca bad.csv -o x.csv --pca-components 1");
    CHECK(r.code == 2);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("lossless PCA round trip through the CLI") {
    fixtures::TempDir dir("cli-lossless");
    std::ofstream csv(dir / "f.csv");
    csv << "label,f000,f001,f002\n";
    for (int i = 0; i < 8; ++i) csv << (i % 2 ? "a" : "b") << ',' << i * 0.1 << ',' << (i * i) % 5 << ',' << 1.0 / (i + 1) << '\n';
    csv.close();
    REQUIRE(triage_cli(dir, "--pca-components 3 pca f.csv -o r.csv --basis b.json").code == 0);
    const auto f = triage::load_feature_csv(dir / "f.csv");
    const auto b = triage::load_pca_basis(dir / "b.json");
    const auto back = triage::pca_reconstruct(b, triage::load_feature_csv(dir / "r.csv").data);
    CHECK((back - f.data).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("train requires a seed") {
    fixtures::TempDir dir("cli-seed");
    std::ofstream(dir / "f.csv") << "label,f000\na,0.1\nb,0.2\n";
    const auto r = triage_cli(dir, "train f.csv -o run");
    CHECK(r.code == 1);
    CHECK(r.err.find("seed") != std::string::npos);
    std::ofstream(dir / "bad.json") << "{\"seeds\": 1}";
    CHECK(triage_cli(dir, "--config bad.json train f.csv -o run").code == 2);
}

TEST_CASE("demo run: train, evaluate, report") {
    fixtures::TempDir dir("cli-demo");
    REQUIRE(triage_cli(dir, "gen-synthetic -o corpus --per-class 30 --size 48 --seed 1").code == 0);
    REQUIRE(triage_cli(dir, "--seed 1 extract corpus -o f.csv").code == 0);
    const std::string cfg = std::string("--config '") + TRIAGE_DEMO_CONFIG + "' ";
    REQUIRE(triage_cli(dir, cfg + "train f.csv -o run").code == 0);
    CHECK(fs::exists(dir / "run/results.csv"));
    CHECK(fs::exists(dir / "run/models/mlp_m50.json"));
    CHECK(fs::exists(dir / "run/models/som_lvq_m75.json"));
    CHECK(fs::exists(dir / "run/pca_basis_m50.json"));
    // 2 classifiers x 2 attribute sets x 3 sizes x 3 reps
    CHECK(count_lines(slurp(dir / "run/results.csv")) == 1 + 36);

    REQUIRE(triage_cli(dir, "evaluate f.csv --run run").code == 0);
    const auto r = triage_cli(dir, "report --run run");
    REQUIRE(r.code == 0);
    const auto md = slurp(dir / "run/report.md");
    for (const char* row : {"| MLP | 50 |", "| MLP | 75 |", "| SOM-LVQ | 50 |", "| SOM-LVQ | 75 |"}) {
        const auto first = md.find(row);
        CHECK(first != std::string::npos);
        CHECK(md.find(row, first + 1) != std::string::npos);  // sweep and rerun tables
    }
    CHECK(r.out == slurp(dir / "run/report.txt"));

    REQUIRE(triage_cli(dir, cfg + "--strict-paper train f.csv -o strict").code == 0);
    const auto strict = nlohmann::json::parse(slurp(dir / "strict/config.json"));
    CHECK(strict["mlp"]["bias"] == false);
    const auto model = nlohmann::json::parse(slurp(dir / "strict/models/mlp_m50.json"));
    CHECK(model["bias"] == false);

    CHECK(triage_cli(dir, "report --run strict").code == 0);
    CHECK(triage_cli(dir, "report --run nowhere").code == 1);
}
