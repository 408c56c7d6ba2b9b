#include "triage/features.hpp"

#include "triage/error.hpp"
#include "triage/granulometry.hpp"
#include "triage/image_io.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace triage {

using json = nlohmann::json;

FeatureVector extract_feature_vector(const NormalizedImage& img, const FeatureConfig& cfg, std::string label) {
    if (img.band_count() != 3)
        throw DataError("feature extraction needs a 3-band image, got " + std::to_string(img.band_count()));
    const int bins = cfg.spectrum_bins;
    FeatureVector fv{Eigen::VectorXd::Zero(3 * bins), std::move(label), false, {}};

    const KMeansConfig km{cfg.clusters, cfg.seed, cfg.kmeans_tol, cfg.kmeans_max_iter};
    static constexpr const char* band_names[] = {"R", "G", "B"};
    for (int j = 0; j < 3; ++j) {
        const Band& band = img.band(j);
        const Clustering c = kmeans(band, km);
        if (c.populated() < 2) {
            fv.degenerate = true;
            fv.warnings.push_back(std::string("band ") + band_names[j] + ": single populated cluster, zero spectrum");
            continue;
        }
        const Band foreground = remove_largest_cluster(band, c, cfg.background);
        try {
            fv.values.segment(j * bins, bins) = pattern_spectrum(foreground, cfg.se, bins).values;
        } catch (const EmptyImage&) {
            fv.degenerate = true;
            fv.warnings.push_back(std::string("band ") + band_names[j] + ": zero mass after segmentation, zero spectrum");
        }
    }
    return fv;
}

std::vector<std::string> LabeledFeatureMatrix::classes() const {
    std::vector<std::string> out(labels);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<int> LabeledFeatureMatrix::class_indices() const {
    const auto names = classes();
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels)
        out.push_back(static_cast<int>(std::lower_bound(names.begin(), names.end(), l) - names.begin()));
    return out;
}

LabeledFeatureMatrix LabeledFeatureMatrix::select_rows(std::span<const Eigen::Index> rows) const {
    LabeledFeatureMatrix out{Eigen::MatrixXd(rows.size(), cols()), {}, column_names};
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.data.row(static_cast<Eigen::Index>(i)) = data.row(rows[i]);
        out.labels.push_back(labels.at(rows[i]));
    }
    return out;
}

std::vector<std::string> default_column_names(Eigen::Index cols) {
    std::vector<std::string> names;
    names.reserve(cols);
    char buf[32];
    for (Eigen::Index i = 0; i < cols; ++i) {
        std::snprintf(buf, sizeof buf, "f%03ld", static_cast<long>(i));
        names.emplace_back(buf);
    }
    return names;
}

LabeledFeatureMatrix assemble_matrix(std::span<const FeatureVector> vectors) {
    if (vectors.empty()) throw DataError("no feature vectors to assemble");
    const Eigen::Index cols = vectors.front().values.size();
    LabeledFeatureMatrix m{Eigen::MatrixXd(vectors.size(), cols), {}, default_column_names(cols)};
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].values.size() != cols)
            throw DataError("feature vector " + std::to_string(i) + " has length " +
                            std::to_string(vectors[i].values.size()) + ", expected " + std::to_string(cols));
        if (!vectors[i].values.allFinite()) throw DataError("feature vector " + std::to_string(i) + " is not finite");
        m.data.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
        m.labels.push_back(vectors[i].label);
    }
    return m;
}

void write_feature_csv(std::ostream& out, const LabeledFeatureMatrix& m) {
    out << "label";
    for (const auto& name : m.column_names) out << ',' << name;
    out << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out << m.labels[r];
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << format_double(m.data(r, c));
        out << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

LabeledFeatureMatrix read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty feature CSV", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 2 || header.front() != "label") throw FormatError("feature CSV header must start with 'label'", 1);

    LabeledFeatureMatrix m;
    m.column_names.assign(header.begin() + 1, header.end());
    const std::size_t cols = m.column_names.size();
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != cols + 1)
            throw FormatError("expected " + std::to_string(cols + 1) + " fields, got " + std::to_string(fields.size()),
                              line_no);
        if (fields[0].empty()) throw FormatError("empty label", line_no);
        m.labels.push_back(fields[0]);
        for (std::size_t c = 1; c <= cols; ++c) {
            const double v = parse_double(fields[c], line_no);
            if (!std::isfinite(v)) throw FormatError("non-finite value", line_no);
            values.push_back(v);
        }
    }
    if (m.labels.empty()) throw FormatError("feature CSV has no data rows", line_no);
    m.data = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Eigen::Index>(m.labels.size()), static_cast<Eigen::Index>(cols));
    return m;
}

void save_feature_csv(const LabeledFeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_feature_csv(out, m);
}

LabeledFeatureMatrix load_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return read_feature_csv(in);
}

namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& data, const Eigen::RowVectorXd& mean) {
    return data.rowwise() - mean;
}

Eigen::VectorXd variance_spectrum(const Eigen::MatrixXd& data) {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered(data, mean));
    return svd.singularValues().array().square() / static_cast<double>(data.rows() - 1);
}

}  // namespace

PCABasis pca_fit(const Eigen::MatrixXd& data, Eigen::Index n_components) {
    const Eigen::Index limit = std::min(data.rows() - 1, data.cols());
    if (n_components < 1 || n_components > limit)
        throw std::invalid_argument("n_components must be in [1, " + std::to_string(limit) + "], got " +
                                    std::to_string(n_components));
    if (!data.allFinite()) throw DataError("PCA input has non-finite values");

    PCABasis b;
    b.mean = data.colwise().mean();
    // Right singular vectors of the centered data are the covariance eigenvectors.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered(data, b.mean), Eigen::ComputeThinV);
    b.components = svd.matrixV().leftCols(n_components);
    b.explained_variance =
        svd.singularValues().head(n_components).array().square() / static_cast<double>(data.rows() - 1);

    for (Eigen::Index j = 0; j < n_components; ++j) {
        Eigen::Index arg = 0;
        b.components.col(j).cwiseAbs().maxCoeff(&arg);
        if (b.components(arg, j) < 0) b.components.col(j) *= -1.0;
    }
    return b;
}

PCABasis pca_fit(const LabeledFeatureMatrix& m, Eigen::Index n_components) {
    return pca_fit(m.data, n_components);
}

Eigen::Index components_for_variance(const Eigen::MatrixXd& data, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("variance fraction must be in (0, 1]");
    const Eigen::VectorXd var = variance_spectrum(data);
    const Eigen::Index limit = std::min(data.rows() - 1, data.cols());
    const double total = var.sum();
    double acc = 0;
    for (Eigen::Index j = 0; j < limit; ++j) {
        acc += var[j];
        if (acc >= fraction * total) return j + 1;
    }
    return limit;
}

Eigen::MatrixXd pca_project(const PCABasis& b, const Eigen::MatrixXd& data) {
    if (data.cols() != b.input_dim())
        throw DataError("PCA basis expects " + std::to_string(b.input_dim()) + " columns, got " +
                        std::to_string(data.cols()));
    return centered(data, b.mean) * b.components;
}

Eigen::MatrixXd pca_reconstruct(const PCABasis& b, const Eigen::MatrixXd& scores) {
    if (scores.cols() != b.n_components()) throw DataError("score matrix does not match PCA basis");
    return (scores * b.components.transpose()).rowwise() + b.mean;
}

LabeledFeatureMatrix pca_transform(const PCABasis& b, const LabeledFeatureMatrix& m) {
    return {pca_project(b, m.data), m.labels, default_column_names(b.n_components())};
}

void save_pca_basis(const PCABasis& b, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "pca_basis";
    j["input_dim"] = b.input_dim();
    j["n_components"] = b.n_components();
    j["mean"] = std::vector<double>(b.mean.data(), b.mean.data() + b.mean.size());
    std::vector<double> comps;
    for (Eigen::Index r = 0; r < b.components.rows(); ++r)
        for (Eigen::Index c = 0; c < b.components.cols(); ++c) comps.push_back(b.components(r, c));
    j["components"] = comps;
    j["explained_variance"] =
        std::vector<double>(b.explained_variance.data(), b.explained_variance.data() + b.explained_variance.size());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

PCABasis load_pca_basis(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "pca_basis")
            throw FormatError("unsupported PCA basis schema in " + path.string());
        const auto dim = j.at("input_dim").get<Eigen::Index>();
        const auto n = j.at("n_components").get<Eigen::Index>();
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto comps = j.at("components").get<std::vector<double>>();
        const auto var = j.at("explained_variance").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(mean.size()) != dim || static_cast<Eigen::Index>(comps.size()) != dim * n ||
            static_cast<Eigen::Index>(var.size()) != n)
            throw FormatError("inconsistent PCA basis sizes in " + path.string());
        PCABasis b;
        b.mean = Eigen::Map<const Eigen::RowVectorXd>(mean.data(), dim);
        b.components = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            comps.data(), dim, n);
        b.explained_variance = Eigen::Map<const Eigen::VectorXd>(var.data(), n);
        return b;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed PCA basis: ") + e.what());
    }
}

}  // namespace triage
