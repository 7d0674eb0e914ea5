#include "msdybo/matrix_io.hpp"
#include "msdybo/media.hpp"
#include "msdybo/msbasis.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace msdybo;

namespace {

struct Medium {
    GridPair g{4, 6};
    CellField abar = high_contrast_mean(g, 4, 1.0, 200.0, 9);
};

}  // namespace

TEST(MsBasis, PartitionOfUnitySumsToOne)
{
    const Medium m;
    const PartitionOfUnity pou = partition_of_unity(m.g, m.abar);
    const Vector sum = pou.values * Vector::Ones(pou.values.cols());
    EXPECT_LT((sum - Vector::Ones(sum.size())).cwiseAbs().maxCoeff(), 1e-10);
    for (Index k = 0; k < pou.values.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(pou.values, k); it; ++it) {
            EXPECT_GE(it.value(), -1e-12);
            EXPECT_LE(it.value(), 1.0 + 1e-12);
        }
    }
}

TEST(MsBasis, HatIsOneAtItsNodeAndVanishesOutsideThePatch)
{
    const Medium m;
    const PartitionOfUnity pou = partition_of_unity(m.g, m.abar);
    const Index per = m.g.n_fine_per_coarse();
    for (const Neighborhood& nb : m.g.neighborhoods()) {
        const Vector chi = pou.interior(m.g, nb.index);
        EXPECT_NEAR(chi[m.g.fine_node(nb.node_x * per, nb.node_y * per)], 1.0, 1e-12);
        for (const Index k : nb.boundary_nodes) EXPECT_NEAR(chi[k], 0.0, 1e-12);
        double outside = 0.0;
        std::vector<bool> in(static_cast<std::size_t>(m.g.num_fine_nodes()), false);
        for (const Index k : nb.nodes) in[static_cast<std::size_t>(k)] = true;
        for (Index k = 0; k < chi.size(); ++k) {
            if (!in[static_cast<std::size_t>(k)]) outside = std::max(outside, std::abs(chi[k]));
        }
        EXPECT_EQ(outside, 0.0);
    }
}

TEST(MsBasis, ConstantCoefficientGivesBilinearHats)
{
    const GridPair g(3, 4);
    const PartitionOfUnity pou = partition_of_unity(g, CellField::constant(g, 2.5));
    const Vector chi = pou.interior(g, 0);  // coarse node (1, 1) at (1/3, 1/3)
    for (Index k = 0; k < g.num_fine_nodes(); ++k) {
        const auto x = g.node_coords(k);
        const double hx = std::max(0.0, 1.0 - std::abs(x[0] - 1.0 / 3) * 3);
        const double hy = std::max(0.0, 1.0 - std::abs(x[1] - 1.0 / 3) * 3);
        EXPECT_NEAR(chi[k], hx * hy, 1e-12);
    }
}

TEST(MsBasis, SnapshotsSumToOne)
{
    const Medium m;
    for (Index i = 0; i < m.g.num_interior_coarse_nodes(); ++i) {
        const SnapshotSpace s = snapshots(m.g, m.abar, i);
        EXPECT_EQ(s.psi.cols(), static_cast<Index>(m.g.neighborhood(i).boundary_nodes.size()));
        const Vector sum = s.psi.rowwise().sum();
        EXPECT_LT((sum - Vector::Ones(sum.size())).cwiseAbs().maxCoeff(), 1e-10) << i;
    }
}

TEST(MsBasis, SpectralProblemProperties)
{
    const Medium m;
    const PartitionOfUnity pou = partition_of_unity(m.g, m.abar);
    const CellField w = multiscale_weight(m.g, m.abar, pou);
    EXPECT_GT(w.min(), 0.0);
    for (Index i = 0; i < m.g.num_interior_coarse_nodes(); ++i) {
        const SnapshotSpace s = snapshots(m.g, m.abar, i);
        const SpectralBasis b = spectral_basis(m.g, m.abar, w, s, 4);
        ASSERT_EQ(b.eigenvalues.size(), 5);
        EXPECT_LE(std::abs(b.eigenvalues[0]), 1e-10);
        for (Index k = 1; k < b.eigenvalues.size(); ++k) EXPECT_LE(b.eigenvalues[k - 1], b.eigenvalues[k]);
        const Matrix wm = Matrix(assemble_weighted_mass(m.g, w, s.patch, m.g.neighborhood(i).fine_cells).matrix);
        const Matrix gram = b.functions.transpose() * wm * b.functions;
        EXPECT_LT((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((s.psi * b.coefficients - b.functions).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(MsBasis, OfflineSpaceDimension)
{
    const GridPair g(10, 4);
    const CellField abar = high_contrast_mean(g, 12, 4.0, 1000.0, 7);
    const OfflineSpace s = build_offline_space(g, abar, 4);
    EXPECT_EQ(s.dimension(), 324);
    EXPECT_EQ(s.prolongation.rows(), g.interior_dofs().size());
    EXPECT_EQ(s.basis_counts.size(), 81u);
    EXPECT_EQ(s.column_owner.size(), 324u);
    for (Index i = 0; i < 81; ++i) EXPECT_GE(s.next_eigenvalue(i), s.eigenvalues[static_cast<std::size_t>(i)][3]);
    const SparseMatrix mass = assemble_mass(g, g.interior_dofs()).matrix;
    EXPECT_GT(gram_conditioning(s.prolongation, mass), 1e-8);
}

TEST(MsBasis, OfflineSpaceContainsTheCoarseHats)
{
    // χ_i φ_1 with φ_1 constant spans χ_i
    const GridPair g(3, 4);
    const CellField abar = high_contrast_mean(g, 2, 1.0, 30.0, 2);
    const OfflineSpace s = build_offline_space(g, abar, 1);
    const PartitionOfUnity pou = partition_of_unity(g, abar);
    for (Index i = 0; i < g.num_interior_coarse_nodes(); ++i) {
        const Vector chi = restrict_to(pou.interior(g, i), g.interior_dofs());
        const Vector col = Vector(s.prolongation.col(i));
        const double scale = chi.dot(col) / col.squaredNorm();
        EXPECT_LT((scale * col - chi).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(MsBasis, CacheRoundTrip)
{
    const GridPair g(3, 4);
    const OfflineSpace s = build_offline_space(g, high_contrast_mean(g, 2, 1.0, 30.0, 2), 3);
    const auto path = std::filesystem::temp_directory_path() / "msdybo_cache_roundtrip.offline";
    write_offline_cache(path, s, 0xabcdef);
    const OfflineSpace t = read_offline_cache(path, 0xabcdef);
    EXPECT_EQ(t.dimension(), s.dimension());
    EXPECT_EQ(Matrix(t.prolongation - s.prolongation).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.basis_counts, s.basis_counts);
    EXPECT_THROW((void)read_offline_cache(path, 0x1234), InvalidArgument);
    std::filesystem::remove(path);
    EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
    EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}
