#include "msdybo/dybo.hpp"
#include "msdybo/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msdybo;

namespace {

// Solves the C/D conditions as one dense linear system in (vec C, vec D).
CDPair brute_force_cd(const Matrix& g, const Vector& lambda)
{
    const Index m = lambda.size();
    const Index n = 2 * m * m;
    const auto ci = [m](Index i, Index j) { return i + m * j; };
    const auto di = [m](Index i, Index j) { return m * m + i + m * j; };
    std::vector<std::pair<Eigen::RowVectorXd, double>> rows;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
            r[di(j, i)] = 1.0;  // Dᵀ + C = G
            r[ci(i, j)] = 1.0;
            rows.emplace_back(r, g(i, j));
            r.setZero();
            r[di(i, j)] = 1.0;  // D + Dᵀ = 0
            r[di(j, i)] += 1.0;
            rows.emplace_back(r, 0.0);
            if (i != j) {
                r.setZero();
                r[ci(i, j)] = lambda[i];  // ΛC + (ΛC)ᵀ = 0 off the diagonal
                r[ci(j, i)] = lambda[j];
                rows.emplace_back(r, 0.0);
            }
        }
    }
    Matrix a(static_cast<Index>(rows.size()), n);
    Vector b(a.rows());
    for (Index k = 0; k < a.rows(); ++k) {
        a.row(k) = rows[static_cast<std::size_t>(k)].first;
        b[k] = rows[static_cast<std::size_t>(k)].second;
    }
    const Vector x = a.colPivHouseholderQr().solve(b);
    CDPair out{Matrix(m, m), Matrix(m, m)};
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            out.C(i, j) = x[ci(i, j)];
            out.D(i, j) = x[di(i, j)];
        }
    }
    return out;
}

SparseMatrix laplacian_1d(Index n, double diag_shift)
{
    SparseMatrix a(n, n);
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
        t.emplace_back(i, i, 2.0 + diag_shift);
        if (i > 0) t.emplace_back(i, i - 1, -1.0);
        if (i + 1 < n) t.emplace_back(i, i + 1, -1.0);
    }
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

}  // namespace

TEST(Dybo, CDMatchesBruteForce)
{
    std::mt19937 rng(21);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        const Index m = 2 + trial % 3;
        Matrix g(m, m);
        for (Index k = 0; k < g.size(); ++k) g(k) = n01(rng);
        Vector lambda(m);
        for (Index k = 0; k < m; ++k) lambda[k] = 0.1 + static_cast<double>(m - k) + 0.3 * std::abs(n01(rng));
        const auto cd = solve_cd(g, lambda);
        ASSERT_TRUE(cd.has_value());
        const CDPair ref = brute_force_cd(g, lambda);
        EXPECT_LT((cd->C - ref.C).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((cd->D - ref.D).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ((cd->D + cd->D.transpose()).cwiseAbs().maxCoeff(), 0.0);
        const auto res = cd_residuals(*cd, g, lambda);
        for (const double r : res) EXPECT_LE(r, 1e-10);
    }
}

TEST(Dybo, CDRefusesNearlyEqualLambda)
{
    const Matrix g = Matrix::Ones(2, 2);
    EXPECT_FALSE(solve_cd(g, Vector(Eigen::Vector2d(1.0, 1.0 + 1e-9))).has_value());
    EXPECT_FALSE(solve_cd(g, Vector(Eigen::Vector2d(1.0, 0.0))).has_value());
    EXPECT_TRUE(solve_cd(g, Vector(Eigen::Vector2d(1.0, 0.5))).has_value());
}

TEST(Dybo, RecastProperties)
{
    std::mt19937 rng(2);
    std::normal_distribution<double> n01;
    const Index n = 30, np = 9, m = 4;
    const SparseMatrix mass = laplacian_1d(n, 4.0);
    DyboState s;
    s.u0 = Vector::Ones(n);
    s.U.resize(n, m);
    s.A.resize(np, m);
    for (Index k = 0; k < s.U.size(); ++k) s.U(k) = n01(rng);
    for (Index k = 0; k < s.A.size(); ++k) s.A(k) = n01(rng);
    const Matrix before = s.U * s.A.transpose();
    RecastInfo info;
    const DyboState r = recast(s, Operator(mass), &info);
    EXPECT_LT((r.A.transpose() * r.A - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix lam = r.U.transpose() * (mass * r.U);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            if (i != j) EXPECT_LT(std::abs(lam(i, j)), 1e-12 * lam.diagonal().maxCoeff());
        }
        if (i > 0) EXPECT_GE(lam(i - 1, i - 1), lam(i, i));
    }
    EXPECT_LT((r.U * r.A.transpose() - before).cwiseAbs().maxCoeff(), 1e-10 * before.cwiseAbs().maxCoeff());
    EXPECT_EQ(info.collapsed, 0);
    EXPECT_LT(orthonormality_drift(r.A), 1e-12);
    EXPECT_LT(lambda_matrix(r.U, Operator(mass)).drift, 1e-12);
}

TEST(Dybo, DriftMeasures)
{
    Matrix A = Matrix::Identity(3, 2);
    EXPECT_EQ(orthonormality_drift(A), 0.0);
    A(0, 1) = 0.1;
    EXPECT_GT(orthonormality_drift(A), 0.09);
    Matrix U(2, 2);
    U << 1, 1, 0, 1;
    const LambdaInfo li = lambda_matrix(U, Operator(Matrix(Matrix::Identity(2, 2))));
    EXPECT_NEAR(li.diag[0], 1.0, 1e-15);
    EXPECT_NEAR(li.diag[1], 2.0, 1e-15);
    EXPECT_NEAR(li.drift, 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Dybo, MeanFollowsDeterministicEulerWithoutFluctuations)
{
    // S_i = 0: the mean decouples and obeys (S0 + cM) u^n = cM u^{n-1} + f
    const Index n = 20;
    const GpcSpace gpc(2, 2);
    FineOperators fine;
    fine.mass = laplacian_1d(n, 8.0) / 100.0;
    fine.stiffness = laplacian_1d(n, 0.0) * 5.0;
    fine.fluctuation_stiffness = {SparseMatrix(n, n), SparseMatrix(n, n)};
    fine.load = Vector::LinSpaced(n, 0.0, 1.0);
    const AssembledOperators ops = assemble_operators(fine);
    const double dt = 1e-2;
    Matrix modes(n, 2);
    for (Index k = 0; k < n; ++k) {
        modes(k, 0) = std::sin(0.3 * static_cast<double>(k));
        modes(k, 1) = 0.3 * std::cos(0.7 * static_cast<double>(k));
    }
    DyboState s = init_state(Vector::Ones(n), modes, fine.mass, nullptr, gpc, 2);
    DyboStepper stepper(ops, gpc, dt);
    const SystemSolve solve = make_system_solver(ops, 1.0 / dt);
    const SpdSolver ref(SparseMatrix(fine.stiffness + fine.mass / dt));
    Vector mean = Vector::Ones(n);
    const Matrix field0 = s.U * s.A.transpose();
    Matrix field = field0;
    for (int k = 0; k < 10; ++k) {
        s = stepper.step(s, solve);
        mean = ref.solve(Vector(fine.mass * mean / dt + fine.load));
        field = ref.solve(Matrix(fine.mass * field / dt));
    }
    EXPECT_LT((s.u0 - mean).cwiseAbs().maxCoeff(), 1e-10 * mean.cwiseAbs().maxCoeff());
    EXPECT_EQ(s.n, 10);
    EXPECT_NEAR(s.t, 0.1, 1e-14);
    // the random part is a heat flow of U Aᵀ; DyBO reproduces it to first order in dt
    const Matrix dybo = s.U * s.A.transpose();
    EXPECT_LT((dybo - field).norm(), 20 * dt * field.norm());
}

TEST(Dybo, ZeroStateIsAFixedPointWithoutSource)
{
    const Index n = 12;
    const GpcSpace gpc(1, 2);
    FineOperators fine;
    fine.mass = laplacian_1d(n, 8.0);
    fine.stiffness = laplacian_1d(n, 0.0);
    fine.fluctuation_stiffness = {laplacian_1d(n, 0.0) * 0.1};
    fine.load = Vector::Zero(n);
    const AssembledOperators ops = assemble_operators(fine);
    DyboState s;
    s.u0 = Vector::Zero(n);
    s.U = Matrix::Zero(n, 1);
    s.A = Matrix::Identity(2, 1);
    DyboStepper stepper(ops, gpc, 1e-3);
    const SystemSolve solve = make_system_solver(ops, 1e3);
    for (int k = 0; k < 3; ++k) s = stepper.step(s, solve);
    EXPECT_EQ(s.u0.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.U.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(s.A.allFinite());
}

TEST(Dybo, CheckFiniteThrows)
{
    DyboState s;
    s.u0 = Vector::Zero(2);
    s.U = Matrix::Zero(2, 1);
    s.A = Matrix::Identity(2, 1);
    EXPECT_NO_THROW(check_finite(s));
    s.U(1, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(check_finite(s), NumericalError);
}

TEST(Dybo, InitStateProjectsAndOrders)
{
    const Index n = 15;
    const GpcSpace gpc(3, 2);
    const SparseMatrix mass = laplacian_1d(n, 6.0);
    Matrix modes(n, 4);
    for (Index k = 0; k < n; ++k) {
        for (Index j = 0; j < 4; ++j) modes(k, j) = std::pow(0.5, static_cast<double>(j)) * std::sin(0.2 * (j + 1) * k);
    }
    const DyboState s = init_state(Vector::Ones(n), modes, mass, nullptr, gpc, 4);
    ASSERT_EQ(s.A.rows(), 9);
    ASSERT_EQ(s.A.cols(), 4);
    EXPECT_LT((s.A.transpose() * s.A - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
    Matrix initial = Matrix::Zero(9, 4);
    initial.topLeftCorner(4, 4).setIdentity();
    EXPECT_LT((s.U * s.A.transpose() - modes * initial.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE((s.u0 - Vector::Ones(n)).cwiseAbs().maxCoeff() < 1e-12);
}
