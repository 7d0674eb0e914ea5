#pragma once

#include "msdybo/dybo.hpp"
#include "msdybo/fem.hpp"
#include "msdybo/grid.hpp"

#include <Eigen/SparseCore>

#include <limits>
#include <vector>

namespace msdybo {

/// V_i: fine Q1 functions supported in D_i, zero on ∂D_i, with the ā-energy inner product.
struct LocalSpace {
    Index neighborhood = 0;
    std::vector<Index> dofs;  ///< positions in the global interior-dof numbering
    SpdSolver solver;         ///< ∫_{D_i} ā ∇φ·∇v on V_i
    SparseMatrix stiffness;
};

/// Local spaces and factorizations for all neighborhoods; built once per run.
class OnlineContext {
public:
    OnlineContext(const GridPair& g, const CellField& abar);

    [[nodiscard]] const GridPair& grid() const { return *grid_; }
    [[nodiscard]] Index size() const { return static_cast<Index>(locals_.size()); }
    [[nodiscard]] const LocalSpace& local(Index i) const { return locals_.at(static_cast<std::size_t>(i)); }

private:
    const GridPair* grid_;
    std::vector<LocalSpace> locals_;
};

/// Global residual functional as a fine dual vector:
/// (c M u_prev + source) − (K + c M) u_off, on the interior fine dofs.
[[nodiscard]] Vector residual_functional(const SparseMatrix& stiffness, const SparseMatrix& mass, double c,
                                         const Vector& u_off, const Vector& u_prev, const Vector& source);

/// ℛ_i restricted to V_i, its Riesz representative φ and the dual norm sqrt(ℛ_i(φ)).
struct LocalResidual {
    Vector functional;  ///< on LocalSpace::dofs
    Vector riesz;       ///< on LocalSpace::dofs
    double norm = 0.0;
};

[[nodiscard]] LocalResidual local_residual(const OnlineContext& ctx, Index i, const Vector& functional);

/// Online basis of D_i as a vector on all interior fine dofs (zero outside D_i).
[[nodiscard]] Vector online_basis(const OnlineContext& ctx, Index i, const Vector& functional);

/// Greedy pick of pairwise non-overlapping neighborhoods by decreasing norm (ties: lower index).
[[nodiscard]] std::vector<Index> select_neighborhoods(const GridPair& g, const std::vector<double>& norms);

/// Galerkin space span(R_off) ⊕ span(online columns) with an incrementally extended
/// Cholesky factor of Rᵀ 𝒜_c R, where 𝒜_c is the fine system matrix.
class EnrichedSpace {
public:
    EnrichedSpace(SparseMatrix offline, SparseMatrix system, double drop_tolerance = 1e-10);

    /// Back to the offline space.
    void reset();
    [[nodiscard]] Index dimension() const { return n_; }
    [[nodiscard]] Index offline_dimension() const { return offline_.cols(); }
    [[nodiscard]] Index online_columns() const { return extra_.cols(); }
    [[nodiscard]] const SparseMatrix& online() const { return extra_; }

    /// Adds one column; returns false (and leaves the space unchanged) when it is numerically dependent.
    bool add(const Eigen::SparseVector<double>& column);
    /// Adds columns in order, skipping numerically dependent ones; returns how many were kept.
    Index add(const SparseMatrix& columns);

    /// Galerkin solution for fine dual right-hand sides, returned as fine vectors.
    [[nodiscard]] Matrix solve(const Matrix& rhs) const;
    /// Fine vectors of given coefficients.
    [[nodiscard]] Matrix prolong(const Matrix& coefficients) const;
    [[nodiscard]] Matrix restrict_dual(const Matrix& rhs) const;
    /// Galerkin coefficients for right-hand sides already tested against the current basis.
    [[nodiscard]] Matrix solve_coefficients(Matrix dual) const;
    /// Same in the offline space alone; `dual` has offline_dimension() rows.
    [[nodiscard]] Matrix solve_offline_coefficients(Matrix dual) const;

private:
    SparseMatrix offline_;
    SparseMatrix offline_t_;
    SparseMatrix system_;
    double drop_tolerance_;
    Matrix base_factor_;
    Matrix factor_;  // lower triangular, capacity ≥ n_
    Index n_ = 0;
    SparseMatrix extra_;  // online columns, N_f × n_extra
};

/// Dense Galerkin blocks ΨᵀXΨ of the fine operators for Ψ = [R | E], E sparse online columns.
class ProjectedOperators {
public:
    ProjectedOperators(SparseMatrix offline, const FineOperators& fine);

    [[nodiscard]] const AssembledOperators& operators() const { return ops_; }
    [[nodiscard]] Index dimension() const { return ops_.dimension(); }
    [[nodiscard]] Index offline_dimension() const { return offline_.cols(); }
    [[nodiscard]] Index online_columns() const { return extra_.cols(); }

    /// Appends columns to E and borders every block.
    void append(const SparseMatrix& columns);
    /// Removes the first `count` online columns.
    void drop_leading(Index count);
    [[nodiscard]] Matrix prolong(const Matrix& coefficients) const;

private:
    SparseMatrix offline_;
    SparseMatrix offline_t_;
    const FineOperators* fine_;
    SparseMatrix extra_;
    AssembledOperators ops_;
};

enum class EnrichComponents { All, Mean };

struct EnrichmentOptions {
    double theta = 0.05;
    int max_rounds = 5;
    EnrichComponents components = EnrichComponents::All;
    double drop_tolerance = 1e-10;
};

/// One enrichment level τ of one time step.
struct ResidualReport {
    int level = 0;
    std::vector<double> norms;    ///< combined ‖ℛ_i‖ per neighborhood
    std::vector<double> weights;  ///< 1/λ_{l_i+1}
    std::vector<Index> selected;  ///< neighborhoods enriched after this level (empty at the last one)
    double residual_sum = 0.0;
    double energy_error = std::numeric_limits<double>::quiet_NaN();
    Index dimension = 0;
    Index dropped = 0;
};

struct EnrichmentResult {
    Matrix solution;  ///< fine vectors, one column per right-hand side
    Matrix initial;   ///< solution in the offline space (level 0)
    std::vector<ResidualReport> history;
    bool residual_increase = false;  ///< diagnostic: Σ‖ℛ_i‖ did not decrease over a round
    bool energy_increase = false;    ///< Galerkin nesting violated (should never happen)
};

/// Adaptive enrichment for Galerkin problems 𝒜_c u = rhs in `space`, starting from its current state.
///
/// `residual_shift` (optional, fine dual vectors) is added to the residual only, e.g. c M (u_f^{n−1} − u^{n−1}).
/// `reference` (optional, fine vectors) enables the energy-error monitor.
/// `initial` (optional) is the already computed solution in the current space.
/// `baseline` (optional) replaces the level-0 sum in the θ test, e.g. when online bases are carried over.
[[nodiscard]] EnrichmentResult enrich(EnrichedSpace& space, const OnlineContext& ctx, const SparseMatrix& system,
                                      const Matrix& rhs, const EnrichmentOptions& options,
                                      const std::vector<double>& weights = {}, const Matrix* residual_shift = nullptr,
                                      const Matrix* reference = nullptr, const Matrix* initial = nullptr,
                                      const double* baseline = nullptr);

/// Σ_k (x_k − y_k)ᵀ 𝒜_c (x_k − y_k), square-rooted.
[[nodiscard]] double energy_error(const SparseMatrix& system, const Matrix& x, const Matrix& reference);

}  // namespace msdybo
