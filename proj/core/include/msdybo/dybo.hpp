#pragma once

#include "msdybo/common.hpp"
#include "msdybo/fem.hpp"
#include "msdybo/gpc.hpp"
#include "msdybo/grid.hpp"
#include "msdybo/media.hpp"

#include <array>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace msdybo {

/// Dense (projected) or sparse (fine) symmetric matrix.
class Operator {
public:
    Operator() = default;
    Operator(Matrix m) : op_(std::move(m)) {}
    Operator(SparseMatrix m) : op_(std::move(m)) {}

    [[nodiscard]] Index rows() const;
    [[nodiscard]] bool is_sparse() const { return std::holds_alternative<SparseMatrix>(op_); }
    [[nodiscard]] Matrix apply(const Matrix& x) const;
    [[nodiscard]] Vector apply(const Vector& x) const;
    [[nodiscard]] Matrix dense() const;
    [[nodiscard]] const SparseMatrix& sparse() const { return std::get<SparseMatrix>(op_); }

private:
    std::variant<Matrix, SparseMatrix> op_;
};

/// Fine-grid matrices on the interior dofs: M_f, K_f(ā), K_f(a_i), load.
struct FineOperators {
    SparseMatrix mass;
    SparseMatrix stiffness;
    std::vector<SparseMatrix> fluctuation_stiffness;
    Vector load;

    [[nodiscard]] Index size() const { return mass.rows(); }
};

[[nodiscard]] FineOperators fine_operators(const GridPair& g, const CoefficientModel& model, const Vector& f_nodal);

/// M, S₀, S_i and f̂ in the space spanned by the columns of R.
struct AssembledOperators {
    Operator M;
    Operator S0;
    std::vector<Operator> S;
    Vector fhat;

    [[nodiscard]] Index dimension() const { return M.rows(); }
    [[nodiscard]] int r() const { return static_cast<int>(S.size()); }
};

/// Galerkin projection RᵀXR of every fine operator.
[[nodiscard]] AssembledOperators assemble_operators(const SparseMatrix& prolongation, const FineOperators& fine);
/// The fine operators themselves (identity prolongation).
[[nodiscard]] AssembledOperators assemble_operators(const FineOperators& fine);

/// ū = û₀, U = Û, Y = H A.
struct DyboState {
    Vector u0;
    Matrix U;  ///< N_d × m
    Matrix A;  ///< N_p × m
    int n = 0;
    double t = 0.0;

    [[nodiscard]] Index modes() const { return U.cols(); }
};

struct LambdaInfo {
    Vector diag;          ///< Λ_ii = ûᵢᵀMûᵢ
    double drift = 0.0;   ///< max_{i≠j} |G_ij| / sqrt(G_ii G_jj)
    bool degenerate = false;
};

[[nodiscard]] LambdaInfo lambda_matrix(const Matrix& U, const Operator& M, double eps_lambda = 1e-12);
[[nodiscard]] double orthonormality_drift(const Matrix& A);

/// G* = −Λ⁻¹ (Σᵢ ÛᵀSᵢû₀ E[ξᵢH] + ÛᵀS₀Û AᵀA + Σᵢ ÛᵀSᵢÛ Aᵀ E[ξᵢHᵀH]) A.
[[nodiscard]] Matrix compute_gstar(const DyboState& s, const AssembledOperators& ops, const GpcSpace& gpc);

struct CDPair {
    Matrix C;
    Matrix D;
};

/// Unique (C, D) with D antisymmetric, ΛC antisymmetric off the diagonal, Dᵀ + C = G*.
/// Returns nullopt when two entries of Λ are closer than eps_sep · max Λ.
[[nodiscard]] std::optional<CDPair> solve_cd(const Matrix& gstar, const Vector& lambda, double eps_sep = 1e-6);

/// Max-norm residuals of C − Λ⁻¹Q̃(ΛC), D − Q(D) and Dᵀ + C − G*.
[[nodiscard]] std::array<double, 3> cd_residuals(const CDPair& cd, const Matrix& gstar, const Vector& lambda);

struct DyboOptions {
    double eps_sep = 1e-6;
    double eps_lambda = 1e-12;
    int recast_stride = 20;   ///< 0 disables scheduled recasts
    int check_stride = 100;   ///< C/D substitution check frequency in release builds
    double rotation_limit = 0.5;  ///< freeze when Δt·max|D| exceeds this
    double drift_tolerance = 1e-6;  ///< unscheduled recast when either drift exceeds this
    int a_substeps = 1;             ///< linearly implicit sub-steps of the A equation per time step
};

/// Right-hand sides of one implicit-Euler step and the explicit update of A.
struct StepPlan {
    Vector g1;     ///< dual vector for the mean solve
    Matrix g2;     ///< dual vectors for the mode solves
    Matrix a_next;
    Matrix D;             ///< rotation used in g2 (zero when frozen)
    bool frozen = false;  ///< D = 0 (and C = G*) was used for the U solve or an A sub-step
    int substeps = 1;
    LambdaInfo lambda;
};

/// Builds G₁, G₂ and A_{n} from the state at t_{n−1}.
[[nodiscard]] StepPlan plan_step(const DyboState& s, const AssembledOperators& ops, const GpcSpace& gpc, double dt,
                                 const DyboOptions& options = {});

/// Solver of (S₀ + cM) X = B in the coordinates of the state.
using SystemSolve = std::function<Matrix(const Matrix&)>;

/// Cached factorization of S₀ + cM (dense LLT or sparse Cholesky).
[[nodiscard]] SystemSolve make_system_solver(const AssembledOperators& ops, double c);

struct StepDiagnostics {
    bool frozen = false;
    bool recast = false;
    bool degenerate = false;
    double orth_drift = 0.0;    ///< before any recast of this step
    double biorth_drift = 0.0;
};

struct RecastInfo {
    Index collapsed = 0;  ///< modes with Λ below the floor
};

/// Re-factor U Aᵀ into M-orthogonal Û with decreasing norms and orthonormal A.
[[nodiscard]] DyboState recast(const DyboState& s, const Operator& M, RecastInfo* info = nullptr,
                               double eps_lambda = 1e-12);

/// Projects the initial fields (interior fine dofs) onto span(R) in the M_f inner product,
/// sets A(0) to the first m canonical unit vectors and recasts once.
[[nodiscard]] DyboState init_state(const Vector& mean, const Matrix& modes, const SparseMatrix& fine_mass,
                                   const SparseMatrix* prolongation, const GpcSpace& gpc, Index m);

/// Stateful stepper: owns the C/D check counter and the recast schedule.
class DyboStepper {
public:
    DyboStepper(const AssembledOperators& ops, const GpcSpace& gpc, double dt, DyboOptions options = {});

    /// Advances one step using the given solver for (S₀ + cM).
    DyboState step(const DyboState& s, const SystemSolve& solve, StepDiagnostics* diag = nullptr);
    /// Applies the freeze/stride recast policy to a freshly computed state.
    DyboState finish(DyboState s, bool frozen, StepDiagnostics* diag = nullptr);

    [[nodiscard]] const AssembledOperators& operators() const { return *ops_; }
    /// Swaps the operators, e.g. after the space of the state has changed. `ops` must outlive the stepper.
    void set_operators(const AssembledOperators& ops) { ops_ = &ops; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] const DyboOptions& options() const { return options_; }
    [[nodiscard]] StepPlan plan(const DyboState& s);

private:
    const AssembledOperators* ops_;
    const GpcSpace* gpc_;
    double dt_;
    DyboOptions options_;
    long calls_ = 0;
};

/// Throws NumericalError when any entry of the state is NaN or infinite.
void check_finite(const DyboState& s);

}  // namespace msdybo
