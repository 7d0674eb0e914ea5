#pragma once

#include "msdybo/dybo.hpp"
#include "msdybo/gpc.hpp"

#include <functional>
#include <vector>

namespace msdybo {

/// Called after every step with the fine gPC coefficient block (N_f × (N_p+1)); column 0 is the mean.
using GalerkinObserver = std::function<void(int n, double t, const Matrix& blocks)>;

/// Implicit-Euler stochastic Galerkin solve on the fine grid, no low-rank truncation.
///
/// Solves kron(I, K₀ + cM) + Σᵢ kron(Eᵢ, Kᵢ) with Eᵢ = E[ξᵢ H_α H_β] over {1, H_α}.
/// Refuses systems with more than 5·10⁶ unknowns. Returns the final block.
Matrix gpc_galerkin_solve(const FineOperators& fine, const GpcSpace& gpc, const Matrix& initial, double dt, int steps,
                          const GalerkinObserver& observer = {});

/// Initial block ū ⊕ U Aᵀ of a DyBO state given in fine coordinates.
[[nodiscard]] Matrix galerkin_blocks(const Vector& mean, const Matrix& U, const Matrix& A);

/// Mean plus M-orthogonal modes with decreasing norms and orthonormal stochastic columns.
struct KLFields {
    Vector mean;
    Matrix modes;   ///< N_f × m
    Matrix A;       ///< N_p × m
    Vector lambda;  ///< ‖u_i‖² descending
    Index flagged = 0;  ///< trailing modes zeroed for rank deficiency
};

[[nodiscard]] KLFields kl_extract(const Matrix& blocks, const SparseMatrix& mass, Index m);
/// KL fields of a DyBO state in fine coordinates (recast, so the modes are bi-orthogonal).
[[nodiscard]] KLFields kl_from_state(const DyboState& s, const SparseMatrix& mass);

/// ‖ref − approx‖_M / ‖ref‖_M. Throws InvalidArgument for a zero reference.
[[nodiscard]] double error_l2(const Vector& reference, const Vector& approx, const SparseMatrix& mass);

/// var(u) = Σᵢ uᵢ² at every node.
[[nodiscard]] Vector variance_field(const Matrix& modes);

/// Reorders and re-signs the columns of `approx` to match `reference` greedily by |M-correlation|.
[[nodiscard]] Matrix align_modes(const Matrix& reference, const Matrix& approx, const SparseMatrix& mass);

struct FieldErrors {
    double mean = 0.0;
    std::vector<double> modes;
    double variance = 0.0;
};

/// Relative L² errors of mean, aligned modes (first min(m_ref, m_approx)) and variance.
[[nodiscard]] FieldErrors compare_fields(const KLFields& reference, const KLFields& approx, const SparseMatrix& mass);

}  // namespace msdybo
