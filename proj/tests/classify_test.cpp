#include <spca/classify.hpp>
#include <spca/datamat.hpp>
#include <spca/metrics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace spca;

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (auto row : r) {
        Eigen::Index j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

KernelSpec rbf(double sigma) { return {KernelKind::rbf, sigma}; }

TEST(KernelMatrix, RbfDiagonalIsOne) {
    const Matrix a = Matrix::Random(5, 3);
    const Matrix k = kernel_matrix(a, a, rbf(0.7));
    for (int i = 0; i < 5; ++i) EXPECT_EQ(k(i, i), 1.0);
}

TEST(KernelMatrix, LinearDot) {
    EXPECT_EQ(kernel_matrix(rows({{1, 2}}), rows({{3, 4}}), {})(0, 0), 11.0);
}

TEST(KernelMatrix, WideRbfTendsToOne) {
    const Matrix a = Matrix::Random(4, 3) * 10.0;
    const Matrix b = Matrix::Random(6, 3) * 10.0;
    EXPECT_LE((kernel_matrix(a, b, rbf(1e8)).array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(KernelMatrix, SymmetricPsd) {
    const Matrix a = Matrix::Random(12, 4);
    for (const auto& spec : {KernelSpec{}, rbf(0.5), rbf(3.0)}) {
        const Matrix k = kernel_matrix(a, a, spec);
        EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix> es(k);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
    }
}

TEST(KernelMatrix, Errors) {
    EXPECT_THROW(kernel_matrix(Matrix::Ones(2, 2), Matrix::Ones(2, 3), {}), InvalidInput);
    EXPECT_THROW(kernel_matrix(Matrix::Ones(2, 2), Matrix::Ones(2, 2), rbf(0.0)), InvalidInput);
}

TEST(Krr, ScalarSolve) {
    // (1 + 1) a = [1, 0]
    const auto m = krr_fit(DataMatrix(rows({{1}})), LabelVector{{0}, 2}, {}, 1.0);
    ASSERT_EQ(m.alpha.rows(), 1);
    ASSERT_EQ(m.alpha.cols(), 2);
    EXPECT_DOUBLE_EQ(m.alpha(0, 0), 0.5);
    EXPECT_EQ(m.alpha(0, 1), 0.0);
}

TEST(Krr, LargeRidgeApproachesScaledTargets) {
    const Matrix x = Matrix::Random(6, 3);
    const LabelVector y{{0, 1, 2, 0, 1, 2}, 3};
    const double gamma = 1e8;
    const auto m = krr_fit(DataMatrix(x), y, {}, gamma);
    EXPECT_LE((m.alpha * gamma - one_hot(y)).cwiseAbs().maxCoeff(), 1e-7);
    // decisions follow summed similarity to each class
    const Matrix test = Matrix::Random(5, 3);
    const Matrix sims = kernel_matrix(test, x, {}) * one_hot(y);
    const auto pred = krr_predict(m, DataMatrix(test));
    for (int i = 0; i < 5; ++i) {
        Eigen::Index best = 0;
        sims.row(i).maxCoeff(&best);
        EXPECT_EQ(pred[static_cast<std::size_t>(i)], best);
    }
}

TEST(Krr, NearInterpolation) {
    const Matrix x = Matrix::Random(5, 8);
    const LabelVector y{{0, 1, 1, 2, 0}, 3};
    const auto m = krr_fit(DataMatrix(x), y, {}, 1e-8);
    EXPECT_EQ(krr_predict(m, DataMatrix(x)), y);
    // identical test point
    EXPECT_EQ(krr_predict(m, DataMatrix(x.row(3)))[0], 2);
}

TEST(Krr, SingleClass) {
    const Matrix x = Matrix::Random(4, 2);
    const auto m = krr_fit(DataMatrix(x), LabelVector{{0, 0, 0, 0}, 1}, rbf(1.0), 0.1);
    const auto pred = krr_predict(m, DataMatrix(Matrix::Random(7, 2)));
    for (int l : pred.labels) EXPECT_EQ(l, 0);
}

TEST(Krr, SeparatedBlobs) {
    const auto s = generate_synthetic_split(2, 20, 10, 30, 50.0, 3);
    const auto m = krr_fit(s.train, s.train_labels, {}, 1.0);
    EXPECT_EQ(plain_accuracy(krr_predict(m, s.test), s.test_labels), 1.0);
}

TEST(Krr, ResidualBoundOnRandomProblems) {
    std::mt19937 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = Matrix::Random(15, 4);
        std::vector<int> l(15);
        for (auto& v : l) v = static_cast<int>(rng() % 3);
        const LabelVector y{l, 3};
        for (double gamma : {1e-6, 0.1, 10.0}) {
            const auto m = krr_fit(DataMatrix(x), y, rbf(0.8), gamma);
            Matrix a = kernel_matrix(x, x, rbf(0.8));
            a.diagonal().array() += gamma;
            EXPECT_LE((a * m.alpha - one_hot(y)).norm(), 1e-8 * one_hot(y).norm());
        }
    }
}

TEST(Krr, Errors) {
    const DataMatrix x(Matrix::Random(3, 2));
    const LabelVector y{{0, 1, 0}, 2};
    EXPECT_THROW(krr_fit(x, y, {}, 0.0), InvalidInput);
    const auto m = krr_fit(x, y, {}, 1.0);
    EXPECT_THROW(krr_predict(m, DataMatrix(Matrix::Random(1, 3))), InvalidInput);
}

TEST(Krr, ZeroColumnsChangeNothing) {
    const auto s = generate_synthetic_split(3, 6, 4, 10, 3.0, 8);
    auto pad = [](const DataMatrix& m) {
        Matrix out = Matrix::Zero(m.rows(), m.cols() + 7);
        out.leftCols(m.cols()) = m.values();
        return DataMatrix(out);
    };
    const auto a = krr_predict(krr_fit(s.train, s.train_labels, {}, 0.1), s.test);
    const auto b = krr_predict(krr_fit(pad(s.train), s.train_labels, {}, 0.1), pad(s.test));
    EXPECT_EQ(a, b);
}

TEST(Nn, ZeroDistanceMatch) {
    const Matrix x = Matrix::Random(6, 4);
    const LabelVector y{{3, 1, 4, 1, 5, 2}, 6};
    EXPECT_EQ(nn_classify(DataMatrix(x), y, DataMatrix(x.row(4)), 1)[0], 5);
}

TEST(Nn, NearerPrototype) {
    const auto p = nn_classify(DataMatrix(rows({{0}, {10}})), LabelVector{{0, 1}, 2},
                               DataMatrix(rows({{1}})), 1);
    EXPECT_EQ(p[0], 0);
}

TEST(Nn, DistanceTieGoesToLowerIndex) {
    const auto p = nn_classify(DataMatrix(rows({{0}, {2}})), LabelVector{{1, 0}, 2},
                               DataMatrix(rows({{1}})), 1);
    EXPECT_EQ(p[0], 1);
}

TEST(Nn, MajorityVoteAndTieBreak) {
    const DataMatrix train(rows({{0}, {1}, {2}, {10}}));
    const LabelVector y{{0, 1, 1, 0}, 2};
    EXPECT_EQ(nn_classify(train, y, DataMatrix(rows({{1.2}})), 3)[0], 1);
    // k = 2 around 0.4: neighbors 0 (class 0) and 1 (class 1) tie; nearest is class 0
    EXPECT_EQ(nn_classify(train, y, DataMatrix(rows({{0.4}})), 2)[0], 0);
}

TEST(Nn, Errors) {
    const DataMatrix train(Matrix::Random(3, 2));
    const LabelVector y{{0, 1, 0}, 2};
    EXPECT_THROW(nn_classify(train, y, DataMatrix(Matrix::Random(1, 2)), 4), InvalidInput);
    EXPECT_THROW(nn_classify(train, y, DataMatrix(Matrix::Random(1, 2)), 0), InvalidInput);
    EXPECT_THROW(nn_classify(train, y, DataMatrix(Matrix::Random(1, 3)), 1), InvalidInput);
}

TEST(Nn, InvariantUnderOrthogonalTransform) {
    const auto s = generate_synthetic_split(4, 10, 5, 12, 2.0, 9);
    const auto base = nn_classify(s.train, s.train_labels, s.test, 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix g(12, 12);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
        const auto rotated = nn_classify(DataMatrix(s.train.values() * q), s.train_labels,
                                         DataMatrix(s.test.values() * q), 1);
        EXPECT_EQ(rotated, base);
    }
}

TEST(Nn, ZeroColumnsChangeNothing) {
    const auto s = generate_synthetic_split(3, 6, 4, 10, 1.0, 10);
    auto pad = [](const DataMatrix& m) {
        Matrix out = Matrix::Zero(m.rows(), m.cols() + 5);
        out.leftCols(m.cols()) = m.values();
        return DataMatrix(out);
    };
    EXPECT_EQ(nn_classify(s.train, s.train_labels, s.test, 1),
              nn_classify(pad(s.train), s.train_labels, pad(s.test), 1));
}

} // namespace
