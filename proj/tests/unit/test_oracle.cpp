#include "msdybo/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msdybo;

namespace {

SparseMatrix tridiag(Index n, double d, double o)
{
    SparseMatrix a(n, n);
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
        t.emplace_back(i, i, d);
        if (i > 0) t.emplace_back(i, i - 1, o);
        if (i + 1 < n) t.emplace_back(i, i + 1, o);
    }
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

}  // namespace

TEST(Oracle, RelativeError)
{
    const SparseMatrix m = tridiag(5, 4.0, 1.0);
    const Vector ref = Vector::LinSpaced(5, 1.0, 2.0);
    EXPECT_EQ(error_l2(ref, ref, m), 0.0);
    EXPECT_NEAR(error_l2(ref, 1.1 * ref, m), 0.1, 1e-14);
    EXPECT_THROW((void)error_l2(Vector::Zero(5), ref, m), InvalidArgument);
}

TEST(Oracle, Variance)
{
    Matrix modes(2, 3);
    modes << 1, 2, 3, -1, 0, 2;
    const Vector v = variance_field(modes);
    EXPECT_DOUBLE_EQ(v[0], 14.0);
    EXPECT_DOUBLE_EQ(v[1], 5.0);
}

TEST(Oracle, AlignUndoesPermutationAndSign)
{
    const SparseMatrix m = tridiag(6, 4.0, 1.0);
    Matrix ref(6, 3);
    ref << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 0, 1;
    Matrix approx(6, 3);
    approx.col(0) = -ref.col(2);
    approx.col(1) = ref.col(0);
    approx.col(2) = -ref.col(1);
    const Matrix aligned = align_modes(ref, approx, m);
    EXPECT_LT((aligned - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Oracle, KLExtractRecoversKnownFactors)
{
    std::mt19937 rng(8);
    std::normal_distribution<double> n01;
    const Index n = 12, np = 5, m = 3;
    const SparseMatrix mass = tridiag(n, 4.0, 1.0);
    // M-orthogonal modes with norms 3, 2, 1 from a Cholesky-whitened random basis
    Matrix x(n, m);
    for (Index k = 0; k < x.size(); ++k) x(k) = n01(rng);
    const Matrix g = x.transpose() * (mass * x);
    const Matrix l = g.llt().matrixL();
    Matrix U = x * l.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(m, m));
    U *= Vector(Eigen::Vector3d(3, 2, 1)).asDiagonal();
    Matrix q(np, np);
    for (Index k = 0; k < q.size(); ++k) q(k) = n01(rng);
    const Matrix A = Eigen::HouseholderQR<Matrix>(q).householderQ() * Matrix::Identity(np, m);
    const Vector mean = Vector::LinSpaced(n, 0.0, 1.0);
    const Matrix blocks = galerkin_blocks(mean, U, A);
    ASSERT_EQ(blocks.cols(), np + 1);
    const KLFields kl = kl_extract(blocks, mass, m);
    EXPECT_LT((kl.mean - mean).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(kl.lambda[0], 9.0, 1e-10);
    EXPECT_NEAR(kl.lambda[1], 4.0, 1e-10);
    EXPECT_NEAR(kl.lambda[2], 1.0, 1e-10);
    EXPECT_LT((kl.modes * kl.A.transpose() - U * A.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    const FieldErrors e = compare_fields(kl, kl, mass);
    EXPECT_EQ(e.mean, 0.0);
    EXPECT_EQ(e.variance, 0.0);
    for (const double v : e.modes) EXPECT_EQ(v, 0.0);

    KLFields flipped = kl;
    flipped.modes.col(1) *= -1.0;
    const FieldErrors f = compare_fields(kl, flipped, mass);
    EXPECT_LT(f.modes[1], 1e-14);
}

TEST(Oracle, GalerkinWithoutFluctuationsIsDeterministicEuler)
{
    const Index n = 10;
    const GpcSpace gpc(1, 2);
    FineOperators fine;
    fine.mass = tridiag(n, 4.0 / 6, 1.0 / 6);
    fine.stiffness = tridiag(n, 2.0, -1.0);
    fine.fluctuation_stiffness = {SparseMatrix(n, n)};
    fine.load = Vector::Ones(n);
    Matrix init = Matrix::Random(n, 3);
    const double dt = 0.05;
    int calls = 0;
    const Matrix out = gpc_galerkin_solve(fine, gpc, init, dt, 4, [&](int k, double t, const Matrix&) {
        ++calls;
        EXPECT_NEAR(t, k * dt, 1e-14);
    });
    EXPECT_EQ(calls, 4);
    const Matrix sys = Matrix(fine.stiffness) + Matrix(fine.mass) / dt;
    Matrix x = init;
    for (int k = 0; k < 4; ++k) {
        Matrix rhs = Matrix(fine.mass) * x / dt;
        rhs.col(0) += fine.load;
        x = sys.ldlt().solve(rhs);
    }
    EXPECT_LT((out - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Oracle, GalerkinCouplingMatchesKroneckerSystem)
{
    const Index n = 6;
    const GpcSpace gpc(1, 2);
    FineOperators fine;
    fine.mass = tridiag(n, 4.0 / 6, 1.0 / 6);
    fine.stiffness = tridiag(n, 2.0, -1.0);
    fine.fluctuation_stiffness = {tridiag(n, 0.4, -0.2)};
    fine.load = Vector::Ones(n);
    const Matrix init = Matrix::Random(n, 3);
    const double dt = 0.1;
    const Matrix out = gpc_galerkin_solve(fine, gpc, init, dt, 1);
    // E over {1, H_1, H_2}: E[ξ·1·H_1] = 1/√3, E[ξ H_1 H_2] = 2/√15
    Matrix e = Matrix::Zero(3, 3);
    e(0, 1) = e(1, 0) = 1.0 / std::sqrt(3.0);
    e(1, 2) = e(2, 1) = 2.0 / std::sqrt(15.0);
    const Matrix K0 = Matrix(fine.stiffness) + Matrix(fine.mass) / dt;
    const Matrix K1 = Matrix(fine.fluctuation_stiffness[0]);
    Matrix big = Matrix::Zero(3 * n, 3 * n);
    Vector rhs(3 * n);
    for (Index a = 0; a < 3; ++a) {
        big.block(a * n, a * n, n, n) += K0;
        for (Index b = 0; b < 3; ++b) big.block(a * n, b * n, n, n) += e(a, b) * K1;
        rhs.segment(a * n, n) = Matrix(fine.mass) * init.col(a) / dt;
    }
    rhs.head(n) += fine.load;
    const Vector sol = big.lu().solve(rhs);
    for (Index a = 0; a < 3; ++a) EXPECT_LT((out.col(a) - sol.segment(a * n, n)).cwiseAbs().maxCoeff(), 1e-10);
}
