#pragma once

#include "msdybo/fem.hpp"
#include "msdybo/grid.hpp"

#include <span>
#include <vector>

namespace msdybo {

/// Multiscale partition of unity: one ā-harmonic coarse hat per coarse node.
///
/// Column `k` of `values` holds χ for coarse node k = Iy·(n_coarse+1) + Ix on
/// all fine nodes. Hats are kept for boundary coarse nodes too, so the
/// columns sum to one at every fine node; the offline space only uses the
/// interior ones.
struct PartitionOfUnity {
    SparseMatrix values;  ///< num_fine_nodes × (n_coarse+1)²
    Index n_coarse = 0;

    [[nodiscard]] Index coarse_node(Index ix, Index iy) const { return iy * (n_coarse + 1) + ix; }
    /// χ_i of interior coarse node i as a dense nodal vector over all fine nodes.
    [[nodiscard]] Vector interior(const GridPair& g, Index i) const;
};

/// Solves the cellwise ā-harmonic problems with bilinear boundary data on each coarse cell.
[[nodiscard]] PartitionOfUnity partition_of_unity(const GridPair& g, const CellField& abar);

/// Spectral weight â = ā H² Σ_k |∇χ_k|², averaged exactly over each fine cell.
[[nodiscard]] CellField multiscale_weight(const GridPair& g, const CellField& abar, const PartitionOfUnity& pou);

/// Local snapshot space of D_i, in patch-node coordinates (Neighborhood::nodes order).
struct SnapshotSpace {
    Index neighborhood = 0;
    DofMap patch;  ///< all fine nodes of the closed patch
    Matrix psi;    ///< patch nodes × L_i; column j has δ_j data on ∂D_i
};

/// ā-harmonic extensions of the fine boundary deltas of D_i.
[[nodiscard]] SnapshotSpace snapshots(const GridPair& g, const CellField& abar, Index i);

/// Leading eigenfunctions of the local spectral problem on one neighborhood.
struct SpectralBasis {
    Vector eigenvalues;  ///< λ_1 ≤ … ≤ λ_{l+1}
    Matrix functions;    ///< patch nodes × l, â-orthonormal, in snapshot-space span
    Matrix coefficients; ///< L_i × l snapshot coefficients of `functions`
};

/// Solves ∫ ā∇φ·∇v = λ ∫ â φ v over the snapshot space of D_i and keeps l functions.
[[nodiscard]] SpectralBasis spectral_basis(const GridPair& g, const CellField& abar, const CellField& weight,
                                           const SnapshotSpace& snap, Index l);

/// GMsFEM offline space assembled into a fine-to-coarse prolongation.
struct OfflineSpace {
    SparseMatrix prolongation;           ///< interior fine dofs × N_d, columns χ_i φ_j in (i, j) order
    std::vector<Index> basis_counts;     ///< l_i per neighborhood
    std::vector<Vector> eigenvalues;     ///< λ_1..λ_{l_i+1} per neighborhood
    std::vector<Index> column_owner;     ///< neighborhood of each column

    [[nodiscard]] Index dimension() const { return prolongation.cols(); }
    /// λ_{l_i+1}^{(i)}, the first discarded eigenvalue.
    [[nodiscard]] double next_eigenvalue(Index i) const;
};

/// Builds the offline space with l_i functions per interior coarse node.
/// Throws NumericalError when the columns are linearly dependent.
[[nodiscard]] OfflineSpace build_offline_space(const GridPair& g, const CellField& abar,
                                               std::span<const Index> counts);
[[nodiscard]] OfflineSpace build_offline_space(const GridPair& g, const CellField& abar, Index uniform_count);

/// Smallest eigenvalue of the scaled Gram matrix RᵀMR (1 on the diagonal); ≈ 0 signals dependence.
[[nodiscard]] double gram_conditioning(const SparseMatrix& prolongation, const SparseMatrix& mass);

}  // namespace msdybo
