#pragma once

#include <spca/datamat.hpp>
#include <spca/errors.hpp>
#include <spca/prox.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace spca {

enum class Reducer { pca, ista_spca, fista_spca };

inline const char* to_string(Reducer r) {
    switch (r) {
    case Reducer::pca: return "pca";
    case Reducer::ista_spca: return "ista-spca";
    case Reducer::fista_spca: return "fista-spca";
    }
    return "?";
}

enum class ComponentFlag { unit, zero };

// p x d loadings; zero-flagged columns are identically zero.
struct LoadingMatrix {
    Matrix columns;
    std::vector<ComponentFlag> flags;
    Reducer method = Reducer::pca;

    Eigen::Index rows() const noexcept { return columns.rows(); }
    Eigen::Index cols() const noexcept { return columns.cols(); }
    bool is_zero(Eigen::Index j) const { return flags[static_cast<std::size_t>(j)] == ComponentFlag::zero; }
    Eigen::Index active_count() const {
        Eigen::Index n = 0;
        for (auto f : flags) n += f == ComponentFlag::unit;
        return n;
    }
};

inline constexpr double nonzero_threshold = 1e-10;

inline int count_nonzeros(const Vector& v) {
    return static_cast<int>((v.array().abs() > nonzero_threshold).count());
}

struct SpcaReport {
    LoadingMatrix loadings;
    std::vector<SolverTrace> traces;  // one per requested component
    std::vector<int> nonzeros;
    double total_wall_seconds = 0.0;
    bool stopped_early = false;

    int total_iterations() const {
        int n = 0;
        for (const auto& t : traces) n += t.iterations;
        return n;
    }
    // Every extracted component met the tolerance.
    bool all_converged() const {
        for (std::size_t j = 0; j < traces.size(); ++j) {
            if (loadings.flags[j] == ComponentFlag::unit && !traces[j].converged) return false;
        }
        return true;
    }
};

/**
 * g(x) = -x^T D^T D x, h = ||.||_1. The forward step x - t * grad_g(x) is
 * (I + 2t D^T D) x.
 */
inline ProxProblem sparse_pca_problem(const Matrix& d, double lambda) {
    auto m = std::make_shared<const Matrix>(d);
    return l1_problem(
        d.cols(), [m](const Vector& x) -> Vector { return -2.0 * (m->transpose() * (*m * x)); },
        lambda, [m](const Vector& x) { return -(*m * x).squaredNorm(); });
}

// Smallest lambda for which the first pass is guaranteed to return zero from
// any unit start: lambda * step >= 1 + 2 * step * ||D||_F^2 >= ||(I + 2t D^T D) x||_2.
inline double total_shrinkage_lambda(const Matrix& d, double step) {
    if (!(step > 0.0)) throw InvalidInput("total_shrinkage_lambda: step must be > 0");
    return (1.0 + 2.0 * step * d.squaredNorm()) / step;
}

// D (I - v v^T); leaves D' v = 0.
inline Matrix deflate(const Matrix& d, const Vector& v) {
    if (v.size() != d.cols()) throw InvalidInput("deflate: vector length != column count");
    if (std::abs(v.norm() - 1.0) > 1e-12) throw InvalidInput("deflate: vector is not unit-norm");
    const Vector dv = d * v;
    return d - dv * v.transpose();
}

namespace detail {

inline double rank_tolerance(double top, Eigen::Index n, Eigen::Index p) {
    return std::max<double>(top, 0.0) * static_cast<double>(std::max(n, p)) *
           std::numeric_limits<double>::epsilon();
}

// Eigenvectors of the p x p Gram D^T D, descending.
inline std::pair<Matrix, Vector> pca_gram(const Matrix& d) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(d.transpose() * d);
    if (es.info() != Eigen::Success) throw NumericError("fit_pca: eigendecomposition failed");
    return {es.eigenvectors().rowwise().reverse(), es.eigenvalues().reverse()};
}

// Eigenvectors of D D^T mapped through D^T and normalized, descending.
// Columns whose eigenvalue is below the rank tolerance are left zero.
inline std::pair<Matrix, Vector> pca_dual(const Matrix& d) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(d * d.transpose());
    if (es.info() != Eigen::Success) throw NumericError("fit_pca: eigendecomposition failed");
    const Matrix u = es.eigenvectors().rowwise().reverse();
    const Vector mu = es.eigenvalues().reverse();
    const double tol = rank_tolerance(mu.size() ? mu(0) : 0.0, d.rows(), d.cols());
    Matrix v = Matrix::Zero(d.cols(), u.cols());
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        if (mu(j) <= tol) continue;
        Vector col = d.transpose() * u.col(j);
        v.col(j) = col / col.norm();
    }
    return {std::move(v), mu};
}

} // namespace detail

/**
 * Top-d principal directions of the centered training data. Directions past
 * the numerical rank are zero-flagged instead of failing.
 */
inline LoadingMatrix fit_pca(const CenteredDataset& train, Eigen::Index d) {
    if (d < 1) throw InvalidInput("fit_pca: d must be >= 1");
    const Matrix& x = train.data.values();
    auto [vecs, vals] = x.cols() <= x.rows() ? detail::pca_gram(x) : detail::pca_dual(x);
    const double tol = detail::rank_tolerance(vals.size() ? vals(0) : 0.0, x.rows(), x.cols());

    LoadingMatrix out;
    out.method = Reducer::pca;
    out.columns = Matrix::Zero(x.cols(), d);
    out.flags.assign(static_cast<std::size_t>(d), ComponentFlag::zero);
    for (Eigen::Index j = 0; j < d && j < vals.size(); ++j) {
        if (vals(j) <= tol) break;
        Vector v = vecs.col(j);
        canonicalize_sign(v);
        out.columns.col(j) = v;
        out.flags[static_cast<std::size_t>(j)] = ComponentFlag::unit;
    }
    return out;
}

/**
 * Sequential l1-penalized components with projection deflation.
 *
 * Each component starts from a seeded random unit vector (seed + index)
 * orthogonalized against the components already found. An automatic step is
 * re-estimated on every deflated matrix. A component shrunk to zero is
 * zero-flagged and ends extraction; the remaining columns are zero-flagged too.
 */
inline SpcaReport fit_sparse_pca(const CenteredDataset& train, Eigen::Index d, double lambda,
                                 Method method, SolverConfig config) {
    if (d < 1) throw InvalidInput("fit_sparse_pca: d must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidInput("fit_sparse_pca: lambda must be finite and >= 0");
    }
    config.normalize = true;
    config.validate();

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    Matrix work = train.data.values();
    const Eigen::Index p = work.cols();
    SpcaReport report;
    report.loadings.method = method == Method::ista ? Reducer::ista_spca : Reducer::fista_spca;
    report.loadings.columns = Matrix::Zero(p, d);
    report.loadings.flags.assign(static_cast<std::size_t>(d), ComponentFlag::zero);
    report.traces.assign(static_cast<std::size_t>(d), SolverTrace{});
    report.nonzeros.assign(static_cast<std::size_t>(d), 0);

    for (Eigen::Index k = 0; k < d; ++k) {
        SolverConfig cfg = config;
        if (!cfg.step) cfg.step = estimate_step(work).step;

        Vector x0 = random_unit_vector(p, config.seed + static_cast<std::uint64_t>(k));
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto v = report.loadings.columns.col(j);
            x0 -= v.dot(x0) * v;
        }
        if (x0.norm() > 0.0) x0 /= x0.norm();

        const ProxProblem problem = sparse_pca_problem(work, lambda);
        SolveResult res;
        try {
            res = solve(problem, cfg, method, x0);
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.iteration(),
                                  "component " + std::to_string(k) + ": " + e.what());
        }
        const auto ks = static_cast<std::size_t>(k);
        report.traces[ks] = res.trace;
        if (res.trace.collapsed_to_zero) {
            report.stopped_early = true;
            break;
        }
        report.loadings.columns.col(k) = res.x;
        report.loadings.flags[ks] = ComponentFlag::unit;
        report.nonzeros[ks] = count_nonzeros(res.x);
        work = deflate(work, res.x);
    }

    report.total_wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return report;
}

// n x d scores X V.
inline DataMatrix transform(const CenteredDataset& x, const LoadingMatrix& v) {
    if (x.data.cols() != v.rows()) {
        throw InvalidInput("transform: data has " + std::to_string(x.data.cols()) +
                           " columns, loadings have " + std::to_string(v.rows()) + " rows");
    }
    // column-at-a-time so each score column is independent of d
    Matrix scores(x.data.rows(), v.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        if (v.is_zero(j)) scores.col(j).setZero();
        else scores.col(j).noalias() = x.data.values() * v.columns.col(j);
    }
    return DataMatrix(std::move(scores));
}

/**
 * Writes the p x d loadings as CSV plus a sidecar with one line per column:
 * "<index> unit" or "<index> zero", preceded by "method <tag>".
 */
inline void export_loadings(const LoadingMatrix& v, const std::string& csv_path,
                            const std::string& flags_path) {
    write_data_csv(csv_path, v.columns);
    std::ofstream out(flags_path);
    if (!out) throw IoError("cannot write '" + flags_path + "'");
    out << "method " << to_string(v.method) << '\n';
    for (std::size_t j = 0; j < v.flags.size(); ++j) {
        out << j << (v.flags[j] == ComponentFlag::unit ? " unit" : " zero") << '\n';
    }
    if (!out) throw IoError("write failed for '" + flags_path + "'");
}

} // namespace spca
