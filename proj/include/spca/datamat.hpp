#pragma once

#include <spca/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spca {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * n x p sample matrix, one vectorized sample per row.
 * Construction rejects empty shapes and non-finite entries.
 */
class DataMatrix {
public:
    DataMatrix() = default;

    explicit DataMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() < 1 || values_.cols() < 1) {
            throw InvalidInput("DataMatrix: shape must be at least 1x1");
        }
        if (!values_.allFinite()) {
            throw NumericError("DataMatrix: non-finite entry");
        }
    }

    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }

    friend bool operator==(const DataMatrix& a, const DataMatrix& b) {
        return a.values_.rows() == b.values_.rows() &&
               a.values_.cols() == b.values_.cols() &&
               a.values_ == b.values_;
    }

private:
    Matrix values_;
};

// Class ids in [0, classes).
struct LabelVector {
    std::vector<int> labels;
    int classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    int operator[](std::size_t i) const { return labels[i]; }

    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

inline LabelVector make_labels(std::vector<int> labels, int classes) {
    if (classes < 1) throw InvalidInput("LabelVector: class count must be >= 1");
    for (int l : labels) {
        if (l < 0 || l >= classes) {
            throw InvalidInput("LabelVector: label " + std::to_string(l) +
                               " outside [0, " + std::to_string(classes) + ")");
        }
    }
    return {std::move(labels), classes};
}

struct CenteredDataset {
    DataMatrix data;
    Vector mean;  // training column means, length p
};

// Row-major flattening: entry (i, j) lands at i * w + j.
inline Eigen::RowVectorXd vectorize_image(const Matrix& grid) {
    if (grid.rows() < 1 || grid.cols() < 1) {
        throw InvalidInput("vectorize_image: empty grid");
    }
    if (!grid.allFinite()) throw NumericError("vectorize_image: non-finite pixel");
    Eigen::RowVectorXd out(grid.size());
    const auto w = grid.cols();
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (Eigen::Index j = 0; j < w; ++j) out(i * w + j) = grid(i, j);
    }
    return out;
}

inline Matrix reshape_image(const Eigen::RowVectorXd& row, Eigen::Index h, Eigen::Index w) {
    if (h < 1 || w < 1 || row.size() != h * w) {
        throw InvalidInput("reshape_image: length does not match h*w");
    }
    Matrix grid(h, w);
    for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = 0; j < w; ++j) grid(i, j) = row(i * w + j);
    }
    return grid;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Splits into lines, dropping trailing blank lines.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(ParseError::Kind::io, 0, "cannot open '" + path + "'");
    }
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) {
        throw ParseError(ParseError::Kind::empty_file, 0, "empty file '" + path + "'");
    }
    return lines;
}

inline bool parse_double(std::string_view cell, double& out) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return false;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

inline bool parse_label_int(std::string_view cell, int& out) {
    cell = trim(cell);
    if (cell.empty()) return false;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && out >= 0;
}

} // namespace detail

inline DataMatrix read_data_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<double> flat;
    std::size_t width = 0;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::string_view rest = lines[li];
        std::size_t count = 0;
        while (true) {
            const auto comma = rest.find(',');
            const auto cell = rest.substr(0, comma);
            double v = 0.0;
            if (!detail::parse_double(cell, v)) {
                throw ParseError(ParseError::Kind::non_numeric, li + 1,
                                 "non-numeric cell '" + std::string(detail::trim(cell)) +
                                 "' in '" + path + "'");
            }
            flat.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (li == 0) {
            width = count;
        } else if (count != width) {
            throw ParseError(ParseError::Kind::ragged_row, li + 1,
                             "ragged row: expected " + std::to_string(width) +
                             " cells, got " + std::to_string(count));
        }
    }
    const auto n = static_cast<Eigen::Index>(lines.size());
    const auto p = static_cast<Eigen::Index>(width);
    Matrix m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(flat.data(), n, p);
    return DataMatrix(std::move(m));
}

namespace detail {

inline std::vector<std::string> read_label_tokens(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<std::string> tokens;
    tokens.reserve(lines.size());
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto tok = trim(lines[li]);
        if (tok.empty()) {
            throw ParseError(ParseError::Kind::bad_label, li + 1, "blank label in '" + path + "'");
        }
        tokens.emplace_back(tok);
    }
    return tokens;
}

// If every token is a non-negative integer the values are the class ids and
// C = 1 + max; otherwise tokens are names numbered by first appearance.
inline std::vector<LabelVector> assign_labels(const std::vector<std::vector<std::string>>& files) {
    bool numeric = true;
    int max_id = -1;
    std::vector<std::vector<int>> ids(files.size());
    for (std::size_t f = 0; f < files.size() && numeric; ++f) {
        for (const auto& tok : files[f]) {
            int v = 0;
            if (!parse_label_int(tok, v)) {
                numeric = false;
                break;
            }
            ids[f].push_back(v);
            max_id = std::max(max_id, v);
        }
    }
    int classes = max_id + 1;
    if (!numeric) {
        std::unordered_map<std::string, int> index;
        for (std::size_t f = 0; f < files.size(); ++f) {
            ids[f].clear();
            for (const auto& tok : files[f]) {
                const auto [it, inserted] = index.try_emplace(tok, static_cast<int>(index.size()));
                ids[f].push_back(it->second);
            }
        }
        classes = static_cast<int>(index.size());
    }
    std::vector<LabelVector> out;
    for (auto& v : ids) out.push_back(LabelVector{std::move(v), classes});
    return out;
}

inline void check_aligned(const DataMatrix& data, const LabelVector& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != data.rows()) {
        throw ParseError(ParseError::Kind::row_count_mismatch,
                         std::min<std::size_t>(labels.size(), data.rows()) + 1,
                         "row count mismatch: " + std::to_string(data.rows()) +
                         " data rows vs " + std::to_string(labels.size()) + " labels");
    }
}

} // namespace detail

inline LabelVector read_labels(const std::string& path) {
    return std::move(detail::assign_labels({detail::read_label_tokens(path)}).front());
}

inline std::pair<DataMatrix, LabelVector> load_csv_dataset(const std::string& data_path,
                                                           const std::string& labels_path) {
    auto data = read_data_csv(data_path);
    auto labels = read_labels(labels_path);
    detail::check_aligned(data, labels);
    return {std::move(data), std::move(labels)};
}

struct DatasetSplit {
    DataMatrix train;
    LabelVector train_labels;
    DataMatrix test;
    LabelVector test_labels;
};

// Loads a pre-split dataset; both label files share one class numbering.
inline DatasetSplit load_csv_split(const std::string& train_path, const std::string& train_labels,
                                   const std::string& test_path, const std::string& test_labels) {
    auto train = read_data_csv(train_path);
    auto test = read_data_csv(test_path);
    auto labels = detail::assign_labels(
        {detail::read_label_tokens(train_labels), detail::read_label_tokens(test_labels)});
    detail::check_aligned(train, labels[0]);
    detail::check_aligned(test, labels[1]);
    return {std::move(train), std::move(labels[0]), std::move(test), std::move(labels[1])};
}

// 17 significant digits so a re-read reproduces every value bit for bit.
inline void write_data_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    char buf[40];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline void write_labels(const std::string& path, const LabelVector& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (int l : labels.labels) out << l << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

// Subtracts the training column means from both sets.
inline std::pair<CenteredDataset, CenteredDataset> center(const DataMatrix& train,
                                                          const DataMatrix& test) {
    if (train.cols() != test.cols()) {
        throw InvalidInput("center: train has " + std::to_string(train.cols()) +
                           " columns, test has " + std::to_string(test.cols()));
    }
    Vector mean = train.values().colwise().mean().transpose();
    Matrix tr = train.values().rowwise() - mean.transpose();
    Matrix te = test.values().rowwise() - mean.transpose();
    return {CenteredDataset{DataMatrix(std::move(tr)), mean},
            CenteredDataset{DataMatrix(std::move(te)), mean}};
}

// 1 / max |entry| of the training data (1 for an all-zero matrix).
inline double unit_scale_factor(const DataMatrix& train) {
    const double m = train.values().cwiseAbs().maxCoeff();
    return m > 0.0 ? 1.0 / m : 1.0;
}

inline DataMatrix scaled(const DataMatrix& x, double factor) {
    return DataMatrix(x.values() * factor);
}

namespace detail {

inline Matrix synthetic_means(int classes, int dims, double separation, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (separation == 0.0) return Matrix::Zero(dims, classes);
    Matrix g(dims, classes);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(dims, classes);
    return q * separation;
}

inline std::pair<DataMatrix, LabelVector> synthetic_draw(const Matrix& means, int per_class,
                                                         std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto classes = static_cast<int>(means.cols());
    const auto dims = means.rows();
    const Eigen::Index n = static_cast<Eigen::Index>(classes) * per_class;
    Matrix x(n, dims);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n));
    Eigen::Index row = 0;
    for (int c = 0; c < classes; ++c) {
        for (int k = 0; k < per_class; ++k, ++row) {
            for (Eigen::Index j = 0; j < dims; ++j) x(row, j) = means(j, c) + normal(rng);
            labels.push_back(c);
        }
    }
    return {DataMatrix(std::move(x)), LabelVector{std::move(labels), classes}};
}

inline void check_synthetic(int classes, int per_class, int dims, double separation) {
    if (classes < 1 || per_class < 1 || dims < 1) {
        throw InvalidInput("generate_synthetic: classes, per_class and dims must be >= 1");
    }
    if (!(separation >= 0.0) || !std::isfinite(separation)) {
        throw InvalidInput("generate_synthetic: separation must be finite and >= 0");
    }
    if (separation > 0.0 && classes > dims) {
        throw InvalidInput("generate_synthetic: cannot place " + std::to_string(classes) +
                           " orthogonal class means in " + std::to_string(dims) + " dimensions");
    }
}

} // namespace detail

/**
 * C * m Gaussian samples in R^p, rows grouped by class. Class c is an
 * isotropic unit-variance cloud around separation * q_c, where q_0..q_{C-1}
 * are orthonormal directions drawn from the seed.
 */
inline std::pair<DataMatrix, LabelVector> generate_synthetic(int classes, int per_class, int dims,
                                                             double separation,
                                                             std::uint64_t seed) {
    detail::check_synthetic(classes, per_class, dims, separation);
    std::mt19937_64 rng(seed);
    const Matrix means = detail::synthetic_means(classes, dims, separation, rng);
    return detail::synthetic_draw(means, per_class, rng);
}

// Train and test drawn around the same class means; the training half equals
// generate_synthetic(classes, train_per_class, dims, separation, seed).
inline DatasetSplit generate_synthetic_split(int classes, int train_per_class, int test_per_class,
                                             int dims, double separation, std::uint64_t seed) {
    detail::check_synthetic(classes, train_per_class, dims, separation);
    if (test_per_class < 1) throw InvalidInput("generate_synthetic: test_per_class must be >= 1");
    std::mt19937_64 rng(seed);
    const Matrix means = detail::synthetic_means(classes, dims, separation, rng);
    auto train = detail::synthetic_draw(means, train_per_class, rng);
    auto test = detail::synthetic_draw(means, test_per_class, rng);
    return {std::move(train.first), std::move(train.second), std::move(test.first),
            std::move(test.second)};
}

} // namespace spca
