#pragma once

#include <spca/datamat.hpp>
#include <spca/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace spca {

enum class KernelKind { linear, rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    double sigma = 1.0;  // rbf bandwidth

    void validate() const {
        if (kind == KernelKind::rbf && !(sigma > 0.0 && std::isfinite(sigma))) {
            throw InvalidInput("kernel: rbf sigma must be positive and finite");
        }
    }
};

namespace detail {

// Plain left-to-right sums: appending zero columns leaves every result bit-identical.
inline double dot_rows(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) s += a(i, c) * b(j, c);
    return s;
}

inline double sqdist_rows(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return s;
}

} // namespace detail

inline Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
    spec.validate();
    if (a.cols() != b.cols()) {
        throw InvalidInput("kernel_matrix: feature counts differ (" + std::to_string(a.cols()) +
                           " vs " + std::to_string(b.cols()) + ")");
    }
    Matrix k(a.rows(), b.rows());
    const double denom = 2.0 * spec.sigma * spec.sigma;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            k(i, j) = spec.kind == KernelKind::linear
                          ? detail::dot_rows(a, i, b, j)
                          : std::exp(-detail::sqdist_rows(a, i, b, j) / denom);
        }
    }
    return k;
}

struct KrrModel {
    Matrix alpha;  // n x C
    Matrix train_features;
    KernelSpec spec;
    double gamma = 0.0;
};

inline Matrix one_hot(const LabelVector& labels) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), labels.classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

/**
 * Solves (K + gamma I) alpha = Y for one-hot Y by Cholesky with a few rounds
 * of iterative refinement. Throws NumericError if the residual stays above
 * 1e-8 * ||Y||.
 */
inline KrrModel krr_fit(const DataMatrix& train, const LabelVector& labels, const KernelSpec& spec,
                        double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidInput("krr_fit: gamma must be positive and finite");
    }
    if (static_cast<Eigen::Index>(labels.size()) != train.rows()) {
        throw InvalidInput("krr_fit: label count != training rows");
    }
    const Matrix& x = train.values();
    Matrix a = kernel_matrix(x, x, spec);
    a.diagonal().array() += gamma;
    const Matrix y = one_hot(labels);

    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericError("krr_fit: K + gamma I is not positive definite");
    Matrix alpha = llt.solve(y);
    const double bound = 1e-8 * y.norm();
    double residual = (a * alpha - y).norm();
    for (int round = 0; round < 5 && residual > bound; ++round) {
        alpha += llt.solve(y - a * alpha);
        residual = (a * alpha - y).norm();
    }
    if (!alpha.allFinite() || residual > bound) {
        throw NumericError("krr_fit: solve residual " + std::to_string(residual) +
                           " exceeds tolerance");
    }
    return KrrModel{std::move(alpha), x, spec, gamma};
}

// argmax over classes of K(test, train) alpha; ties go to the smaller class id.
inline LabelVector krr_predict(const KrrModel& model, const DataMatrix& test) {
    if (test.cols() != model.train_features.cols()) {
        throw InvalidInput("krr_predict: test has " + std::to_string(test.cols()) +
                           " features, model expects " +
                           std::to_string(model.train_features.cols()));
    }
    const Matrix scores = kernel_matrix(test.values(), model.train_features, model.spec) * model.alpha;
    LabelVector out;
    out.classes = static_cast<int>(model.alpha.cols());
    out.labels.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c) {
            if (scores(i, c) > scores(i, best)) best = c;
        }
        out.labels.push_back(static_cast<int>(best));
    }
    return out;
}

/**
 * k-nearest-neighbor under the Euclidean metric. Neighbors are ranked by
 * (distance, training index). With k > 1 the majority class wins; among tied
 * classes the one owning the nearest ranked neighbor wins.
 */
inline LabelVector nn_classify(const DataMatrix& train, const LabelVector& labels,
                               const DataMatrix& test, int k = 1) {
    const auto n = train.rows();
    if (k < 1 || k > n) {
        throw InvalidInput("nn_classify: k must be in [1, " + std::to_string(n) + "]");
    }
    if (test.cols() != train.cols()) {
        throw InvalidInput("nn_classify: feature counts differ (" + std::to_string(train.cols()) +
                           " vs " + std::to_string(test.cols()) + ")");
    }
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw InvalidInput("nn_classify: label count != training rows");
    }
    const Matrix& tr = train.values();
    const Matrix& te = test.values();

    LabelVector out;
    out.classes = labels.classes;
    out.labels.reserve(static_cast<std::size_t>(te.rows()));
    std::vector<std::pair<double, Eigen::Index>> ranked(static_cast<std::size_t>(n));
    std::vector<int> votes(static_cast<std::size_t>(labels.classes));
    for (Eigen::Index i = 0; i < te.rows(); ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            ranked[static_cast<std::size_t>(j)] = {detail::sqdist_rows(te, i, tr, j), j};
        }
        std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
        if (k == 1) {
            out.labels.push_back(labels[static_cast<std::size_t>(ranked[0].second)]);
            continue;
        }
        std::fill(votes.begin(), votes.end(), 0);
        for (int r = 0; r < k; ++r) ++votes[static_cast<std::size_t>(labels[static_cast<std::size_t>(ranked[r].second)])];
        const int top = *std::max_element(votes.begin(), votes.end());
        for (int r = 0; r < k; ++r) {
            const int c = labels[static_cast<std::size_t>(ranked[r].second)];
            if (votes[static_cast<std::size_t>(c)] == top) {
                out.labels.push_back(c);
                break;
            }
        }
    }
    return out;
}

} // namespace spca
