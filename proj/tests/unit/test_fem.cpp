#include "msdybo/fem.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace msdybo;

TEST(Fem, ElementStiffness)
{
    const Eigen::Matrix4d& k = element_stiffness();
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(k(i, i), 2.0 / 3.0, 1e-15);
        EXPECT_NEAR(k.row(i).sum(), 0.0, 1e-15);
    }
    EXPECT_NEAR(k(0, 2), -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(k(1, 3), -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(k(0, 1), -1.0 / 6.0, 1e-15);
    EXPECT_NEAR((k - k.transpose()).norm(), 0.0, 0.0);
}

TEST(Fem, ElementMass)
{
    const double h = 0.125;
    const Eigen::Matrix4d m = element_mass(h);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(m(i, i), h * h / 9.0, 1e-16);
    EXPECT_NEAR(m(0, 2), h * h / 36.0, 1e-16);
    EXPECT_NEAR(m.sum(), h * h, 1e-15);
}

TEST(Fem, GlobalMassIntegratesOne)
{
    const GridPair g(3, 4);
    std::vector<Index> all(static_cast<std::size_t>(g.num_fine_nodes()));
    for (Index k = 0; k < g.num_fine_nodes(); ++k) all[static_cast<std::size_t>(k)] = k;
    const SparseOperator m = assemble_mass(g, DofMap(all));
    const Vector ones = Vector::Ones(m.dimension());
    EXPECT_NEAR(ones.dot(m.matrix * ones), 1.0, 1e-13);
}

TEST(Fem, StiffnessAnnihilatesConstantsWithoutDirichlet)
{
    const GridPair g(2, 5);
    std::vector<Index> all(static_cast<std::size_t>(g.num_fine_nodes()));
    for (Index k = 0; k < g.num_fine_nodes(); ++k) all[static_cast<std::size_t>(k)] = k;
    Vector vals(g.num_fine_cells());
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(1.0, 50.0);
    for (Index c = 0; c < vals.size(); ++c) vals[c] = u(rng);
    const SparseOperator k = assemble_stiffness(g, CellField(vals), DofMap(all));
    EXPECT_LT((k.matrix * Vector::Ones(k.dimension())).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Fem, PoissonConvergesToSmoothSolution)
{
    // -Δu = 2π² sin(πx) sin(πy), u = sin(πx) sin(πy)
    const double pi = std::numbers::pi;
    double prev = 0.0;
    for (Index n : {4, 8}) {
        const GridPair g(4, n);
        const auto& dofs = g.interior_dofs();
        const SparseOperator k = assemble_stiffness(g, CellField::constant(g, 1.0), dofs);
        const Vector f = interpolate(g, [&](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
        const Vector u = solve_spd(k, assemble_load(g, f, dofs));
        const Vector exact = restrict_to(interpolate(g, [&](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }), dofs);
        const double err = (u - exact).cwiseAbs().maxCoeff();
        if (prev > 0.0) EXPECT_LT(err, prev / 3.0);
        prev = err;
    }
    EXPECT_LT(prev, 5e-3);
}

TEST(Fem, RestrictExtendRoundTrip)
{
    const GridPair g(2, 3);
    const Vector v = interpolate(g, [](double x, double y) { return x + 10 * y; });
    const Vector r = restrict_to(v, g.interior_dofs());
    const Vector e = extend_from(r, g.interior_dofs(), g.num_fine_nodes());
    for (Index k = 0; k < g.num_fine_nodes(); ++k) {
        EXPECT_DOUBLE_EQ(e[k], g.on_domain_boundary(k) ? 0.0 : v[k]);
    }
}

TEST(Fem, SolverResidual)
{
    const GridPair g(3, 6);
    const SparseOperator k = assemble_stiffness(g, CellField::constant(g, 1.0), g.interior_dofs());
    const SpdSolver solver(k.matrix);
    const Vector b = Vector::LinSpaced(k.dimension(), -1.0, 2.0);
    const Vector x = solver.solve(b);
    EXPECT_LE((k.matrix * x - b).norm(), 1e-10 * b.norm());
    const Matrix bb = Matrix::Random(k.dimension(), 3);
    const Matrix xx = solver.solve_unchecked(bb);
    EXPECT_LE((k.matrix * xx - bb).norm(), 1e-10 * bb.norm());
}

TEST(Fem, SolverRejectsIndefinite)
{
    SparseMatrix a(2, 2);
    a.insert(0, 0) = 1.0;
    a.insert(1, 1) = -1.0;
    EXPECT_THROW(SpdSolver{a}, NumericalError);
}

TEST(Fem, GeneralizedEigenDiagonal)
{
    Matrix a = Vector(Eigen::Vector4d(4, 1, 9, 2)).asDiagonal();
    Matrix b = Vector(Eigen::Vector4d(2, 1, 3, 1)).asDiagonal();
    const EigenPairs e = generalized_eig_smallest(a, b, 3);
    ASSERT_EQ(e.values.size(), 3);
    EXPECT_NEAR(e.values[0], 1.0, 1e-12);
    EXPECT_NEAR(e.values[1], 2.0, 1e-12);
    EXPECT_NEAR(e.values[2], 2.0, 1e-12);
    EXPECT_NEAR((e.vectors.transpose() * b * e.vectors - Matrix::Identity(3, 3)).norm(), 0.0, 1e-12);
}

TEST(Fem, GeneralizedEigenRandomSpd)
{
    std::mt19937 rng(11);
    std::normal_distribution<double> n01;
    Matrix x(6, 6), y(6, 6);
    for (Index i = 0; i < 36; ++i) {
        x(i) = n01(rng);
        y(i) = n01(rng);
    }
    const Matrix a = x * x.transpose();
    const Matrix b = y * y.transpose() + Matrix::Identity(6, 6);
    const EigenPairs e = generalized_eig_smallest(a, b, 6);
    for (Index k = 0; k < 6; ++k) {
        EXPECT_LT((a * e.vectors.col(k) - e.values[k] * b * e.vectors.col(k)).norm(), 1e-9);
        if (k > 0) {
            EXPECT_LE(e.values[k - 1], e.values[k]);
        }
        Index big;
        e.vectors.col(k).cwiseAbs().maxCoeff(&big);
        EXPECT_GT(e.vectors(big, k), 0.0);
    }
}
