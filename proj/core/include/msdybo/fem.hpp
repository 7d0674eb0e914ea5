#pragma once

#include "msdybo/common.hpp"
#include "msdybo/grid.hpp"


#include <memory>
#include <span>

namespace msdybo {

/// Piecewise-constant coefficient sampled at fine-cell centres.
class CellField {
public:
    CellField() = default;
    explicit CellField(Vector values) : values_(std::move(values)) {}
    static CellField constant(const GridPair& g, double value);

    [[nodiscard]] Index size() const { return values_.size(); }
    [[nodiscard]] double operator[](Index cell) const { return values_[cell]; }
    [[nodiscard]] const Vector& values() const { return values_; }
    [[nodiscard]] double min() const { return values_.minCoeff(); }
    [[nodiscard]] double max() const { return values_.maxCoeff(); }

private:
    Vector values_;
};

/// Assembled matrix over an ordered set of fine nodes.
struct SparseOperator {
    SparseMatrix matrix;
    DofMap dofs;
    bool symmetric = true;

    [[nodiscard]] Index dimension() const { return matrix.rows(); }
};

/// Q1 stiffness of a square cell with unit coefficient; independent of the cell size in 2D.
/// Local node order (0,0), (1,0), (1,1), (0,1).
[[nodiscard]] const Eigen::Matrix4d& element_stiffness();
/// Q1 consistent mass matrix of a square cell of side h.
[[nodiscard]] Eigen::Matrix4d element_mass(double h);

/// Stiffness over all fine cells. Nodes missing from `dofs` are eliminated symmetrically.
[[nodiscard]] SparseOperator assemble_stiffness(const GridPair& g, const CellField& field, const DofMap& dofs);
/// Stiffness restricted to a set of fine cells (e.g. a coarse neighborhood).
[[nodiscard]] SparseOperator assemble_stiffness(const GridPair& g, const CellField& field, const DofMap& dofs,
                                                std::span<const Index> cells);

[[nodiscard]] SparseOperator assemble_mass(const GridPair& g, const DofMap& dofs);
[[nodiscard]] SparseOperator assemble_mass(const GridPair& g, const DofMap& dofs, std::span<const Index> cells);
/// Mass matrix with a per-cell weight, ∫ w φ_j φ_k.
[[nodiscard]] SparseOperator assemble_weighted_mass(const GridPair& g, const CellField& weight, const DofMap& dofs,
                                                    std::span<const Index> cells);

/// Consistent load vector ∫ f φ_k for f given by its nodal interpolant (all fine nodes).
[[nodiscard]] Vector assemble_load(const GridPair& g, const Vector& nodal_f, const DofMap& dofs);

/// Nodal interpolant of f(x, y) on all fine nodes.
template <class F>
[[nodiscard]] Vector interpolate(const GridPair& g, F&& f)
{
    Vector v(g.num_fine_nodes());
    for (Index k = 0; k < g.num_fine_nodes(); ++k) {
        const Eigen::Vector2d x = g.node_coords(k);
        v[k] = f(x[0], x[1]);
    }
    return v;
}

/// Restrict an all-node vector to the nodes of `dofs`, in local order.
[[nodiscard]] Vector restrict_to(const Vector& all_nodes, const DofMap& dofs);
/// Scatter a local vector back to all fine nodes, zero elsewhere.
[[nodiscard]] Vector extend_from(const Vector& local, const DofMap& dofs, Index num_nodes);

/// Rows/columns of `a` selected by local index lists, in the given order.
[[nodiscard]] SparseMatrix submatrix(const SparseMatrix& a, std::span<const Index> rows, std::span<const Index> cols);

/// Sparse Cholesky factorization of an SPD operator.
///
/// Solves satisfy ‖A x − b‖₂ ≤ 1e-10 ‖b‖₂; one refinement sweep is applied
/// when the first solve misses the bound. Immutable after construction.
class SpdSolver {
public:
    SpdSolver() = default;
    explicit SpdSolver(const SparseMatrix& a);

    [[nodiscard]] Index dimension() const { return a_.rows(); }
    [[nodiscard]] Vector solve(const Vector& b) const;
    [[nodiscard]] Matrix solve(const Matrix& b) const;
    /// Plain forward/back substitution without the residual check.
    [[nodiscard]] Matrix solve_unchecked(const Matrix& b) const;

private:
    SparseMatrix a_;
    struct Factor;
    std::shared_ptr<const Factor> llt_;
};

[[nodiscard]] Vector solve_spd(const SparseOperator& op, const Vector& b);

/// Generalized symmetric eigenpairs, ascending, with B-orthonormal eigenvectors.
struct EigenPairs {
    Vector values;   ///< ascending
    Matrix vectors;  ///< one column per eigenvalue; largest-magnitude entry positive
};

/// k smallest eigenpairs of A φ = λ B φ with dense symmetric A and SPD B.
[[nodiscard]] EigenPairs generalized_eig_smallest(const Matrix& a, const Matrix& b, Index k);
[[nodiscard]] EigenPairs generalized_eig_smallest(const SparseOperator& a, const SparseOperator& b, Index k);

/// Flip `v` so that its largest-magnitude entry is positive.
void fix_sign(Eigen::Ref<Vector> v);

}  // namespace msdybo
