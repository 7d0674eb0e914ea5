#include "msdybo/dybo.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msdybo {

Index Operator::rows() const
{
    return std::visit([](const auto& m) { return static_cast<Index>(m.rows()); }, op_);
}

Matrix Operator::apply(const Matrix& x) const
{
    return std::visit([&](const auto& m) -> Matrix { return m * x; }, op_);
}

Vector Operator::apply(const Vector& x) const
{
    return std::visit([&](const auto& m) -> Vector { return m * x; }, op_);
}

Matrix Operator::dense() const
{
    return std::visit([](const auto& m) -> Matrix { return Matrix(m); }, op_);
}

FineOperators fine_operators(const GridPair& g, const CoefficientModel& model, const Vector& f_nodal)
{
    const DofMap& dofs = g.interior_dofs();
    FineOperators f;
    f.mass = assemble_mass(g, dofs).matrix;
    f.stiffness = assemble_stiffness(g, model.mean(), dofs).matrix;
    for (const auto& a : model.fluctuations()) f.fluctuation_stiffness.push_back(assemble_stiffness(g, a, dofs).matrix);
    f.load = assemble_load(g, f_nodal, dofs);
    return f;
}

namespace {

Matrix project(const SparseMatrix& r, const SparseMatrix& x)
{
    Matrix p = Matrix(r.transpose() * (x * r));
    return 0.5 * (p + p.transpose());
}

}  // namespace

AssembledOperators assemble_operators(const SparseMatrix& prolongation, const FineOperators& fine)
{
    require(prolongation.rows() == fine.size(), "assemble_operators: prolongation has " +
                                                    std::to_string(prolongation.rows()) + " rows, fine space has " +
                                                    std::to_string(fine.size()));
    AssembledOperators ops;
    ops.M = project(prolongation, fine.mass);
    ops.S0 = project(prolongation, fine.stiffness);
    for (const auto& k : fine.fluctuation_stiffness) ops.S.emplace_back(project(prolongation, k));
    ops.fhat = prolongation.transpose() * fine.load;
    return ops;
}

AssembledOperators assemble_operators(const FineOperators& fine)
{
    AssembledOperators ops;
    ops.M = fine.mass;
    ops.S0 = fine.stiffness;
    for (const auto& k : fine.fluctuation_stiffness) ops.S.emplace_back(k);
    ops.fhat = fine.load;
    return ops;
}

LambdaInfo lambda_matrix(const Matrix& U, const Operator& M, double eps_lambda)
{
    const Matrix gram = U.transpose() * M.apply(U);
    LambdaInfo info;
    info.diag = gram.diagonal();
    const Index m = gram.rows();
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            if (i == j) continue;
            const double denom = std::sqrt(std::abs(gram(i, i) * gram(j, j)));
            if (denom > 0) info.drift = std::max(info.drift, std::abs(gram(i, j)) / denom);
        }
    }
    const double floor = eps_lambda * (m > 0 ? info.diag.maxCoeff() : 0.0);
    info.degenerate = m == 0 || !(info.diag.minCoeff() > floor);
    return info;
}

double orthonormality_drift(const Matrix& A)
{
    const Index m = A.cols();
    return (A.transpose() * A - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
}

namespace {

// Contractions shared by G*, G₂ and G₃; none of them depends on A.
struct Coupling {
    std::vector<Matrix> SU;    // S_i Û
    std::vector<Vector> Su0;   // S_i û₀
    std::vector<Matrix> UtSU;  // Ûᵀ S_i Û
    std::vector<Vector> UtSu0; // Ûᵀ S_i û₀
    Matrix UtS0U;
};

Coupling coupling(const DyboState& s, const AssembledOperators& ops)
{
    Coupling c;
    for (int i = 0; i < ops.r(); ++i) {
        const Operator& S = ops.S[static_cast<std::size_t>(i)];
        c.SU.push_back(S.apply(s.U));
        c.Su0.push_back(S.apply(s.u0));
        Matrix b = s.U.transpose() * c.SU.back();
        c.UtSU.push_back(0.5 * (b + b.transpose()));
        c.UtSu0.push_back(s.U.transpose() * c.Su0.back());
    }
    const Matrix k = s.U.transpose() * ops.S0.apply(s.U);
    c.UtS0U = 0.5 * (k + k.transpose());
    return c;
}

Matrix gstar_from(const Matrix& A, const Coupling& k, const GpcSpace& gpc, const Vector& lambda)
{
    Matrix term = k.UtS0U * (A.transpose() * A);
    for (int i = 0; i < gpc.r() && i < static_cast<int>(k.SU.size()); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        term += k.UtSu0[ii] * (gpc.first_moment(i) * A);
        term += k.UtSU[ii] * (A.transpose() * gpc.second_moment(i) * A);
    }
    return -(lambda.cwiseInverse().asDiagonal() * term);
}

// W(A) Λ⁻¹ = (Σ E[ξ_i Hᵀ] û₀ᵀS_iÛ + Σ E[ξ_i HᵀH] A ÛᵀS_iÛ) Λ⁻¹, the stochastic part of G₃.
Matrix w_from(const Matrix& A, const Coupling& k, const GpcSpace& gpc, const Vector& lambda)
{
    Matrix w = Matrix::Zero(A.rows(), A.cols());
    for (int i = 0; i < gpc.r(); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        w += gpc.first_moment(i).transpose() * k.UtSu0[ii].transpose();
        w += gpc.second_moment(i) * A * k.UtSU[ii];
    }
    return w * lambda.cwiseInverse().asDiagonal();
}

// Σ_i E[ξ_i HᵀH] E ÛᵀS_iÛ Λ⁻¹, the part of W Λ⁻¹ that is linear in A.
Matrix w_linear(const Matrix& e, const Coupling& k, const GpcSpace& gpc, const Vector& lambda)
{
    Matrix w = Matrix::Zero(e.rows(), e.cols());
    for (int i = 0; i < gpc.r(); ++i) w += gpc.second_moment(i) * e * k.UtSU[static_cast<std::size_t>(i)];
    return w * lambda.cwiseInverse().asDiagonal();
}

// Q factor of a thin QR with a nonnegative diagonal of R.
Matrix orthonormalize(const Matrix& A)
{
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix q = qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
    for (Index j = 0; j < A.cols(); ++j) {
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

void check_dimensions(const DyboState& s, const AssembledOperators& ops, const GpcSpace& gpc)
{
    require(s.u0.size() == ops.dimension() && s.U.rows() == ops.dimension(),
            "dybo: state dimension " + std::to_string(s.u0.size()) + " differs from space dimension " +
                std::to_string(ops.dimension()));
    require(s.A.rows() == gpc.size() && s.A.cols() == s.U.cols(), "dybo: A must be N_p × m");
    require(ops.r() == gpc.r(), "dybo: coefficient model and gPC space disagree on r");
}

double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

Matrix compute_gstar(const DyboState& s, const AssembledOperators& ops, const GpcSpace& gpc)
{
    check_dimensions(s, ops, gpc);
    const LambdaInfo lam = lambda_matrix(s.U, ops.M);
    if (lam.degenerate) throw NumericalError("compute_gstar: degenerate Λ");
    return gstar_from(s.A, coupling(s, ops), gpc, lam.diag);
}

std::optional<CDPair> solve_cd(const Matrix& gstar, const Vector& lambda, double eps_sep)
{
    const Index m = lambda.size();
    require(gstar.rows() == m && gstar.cols() == m, "solve_cd: G* must be m × m");
    if (m == 0) return CDPair{Matrix(0, 0), Matrix(0, 0)};
    const double lmax = lambda.cwiseAbs().maxCoeff();
    if (!(lambda.minCoeff() > 0.0)) return std::nullopt;
    for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
            if (std::abs(lambda[i] - lambda[j]) < eps_sep * lmax) return std::nullopt;
        }
    }
    CDPair cd{Matrix::Zero(m, m), Matrix::Zero(m, m)};
    for (Index i = 0; i < m; ++i) {
        cd.C(i, i) = gstar(i, i);
        for (Index j = 0; j < m; ++j) {
            if (i == j) continue;
            cd.C(i, j) = lambda[j] * (gstar(i, j) + gstar(j, i)) / (lambda[j] - lambda[i]);
            cd.D(i, j) = cd.C(i, j) - gstar(i, j);
        }
    }
    // exact antisymmetry
    cd.D = 0.5 * (cd.D - cd.D.transpose()).eval();
    return cd;
}

std::array<double, 3> cd_residuals(const CDPair& cd, const Matrix& gstar, const Vector& lambda)
{
    const auto Q = [](const Matrix& x) -> Matrix { return 0.5 * (x - x.transpose()); };
    const Matrix LC = lambda.asDiagonal() * cd.C;
    Matrix qt = Q(LC);
    qt.diagonal() = LC.diagonal();
    const Matrix r1 = cd.C - lambda.cwiseInverse().asDiagonal() * qt;
    const Matrix r2 = cd.D - Q(cd.D);
    const Matrix r3 = cd.D.transpose() + cd.C - gstar;
    return {max_abs(r1), max_abs(r2), max_abs(r3)};
}

namespace {

StepPlan plan_impl(const DyboState& s, const AssembledOperators& ops, const GpcSpace& gpc, double dt,
                   const DyboOptions& options, bool verify)
{
    require(dt > 0.0, "dybo: dt must be positive");
    check_dimensions(s, ops, gpc);
    const double c = 1.0 / dt;
    const Matrix& A = s.A;
    const Coupling k = coupling(s, ops);

    StepPlan plan;
    plan.lambda = lambda_matrix(s.U, ops.M, options.eps_lambda);
    const Vector& lam = plan.lambda.diag;

    std::optional<CDPair> cd;
    if (!plan.lambda.degenerate) {
        const Matrix gstar = gstar_from(A, k, gpc, lam);
        cd = solve_cd(gstar, lam, options.eps_sep);
        if (cd && verify) {
            const auto res = cd_residuals(*cd, gstar, lam);
            const double scale = std::max(1.0, max_abs(gstar));
            if (std::max({res[0], res[1], res[2]}) > 1e-10 * scale) {
                throw NumericalError("solve_cd: substitution residual " +
                                     std::to_string(std::max({res[0], res[1], res[2]})) + " exceeds bound");
            }
        }
        if (cd && dt * max_abs(cd->D) > options.rotation_limit) cd.reset();
        plan.frozen = !cd.has_value();
    }

    const Matrix MU = ops.M.apply(s.U);
    plan.g1 = c * ops.M.apply(s.u0) + ops.fhat;
    plan.g2 = c * MU;
    plan.D = cd ? cd->D : Matrix::Zero(A.cols(), A.cols());
    if (cd) plan.g2 -= MU * cd->D.transpose();
    for (int i = 0; i < gpc.r(); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const RowVector& t0 = gpc.first_moment(i);
        const Matrix& t1 = gpc.second_moment(i);
        plan.g1 -= k.SU[ii] * (A.transpose() * t0.transpose());
        plan.g2 -= k.Su0[ii] * (t0 * A);
        plan.g2 -= k.SU[ii] * (A.transpose() * t1 * A);
    }

    plan.a_next = A;
    if (plan.lambda.degenerate) {
        plan.frozen = true;
        return plan;
    }
    // On AᵀA = I the A equation reads A' = A D − (I − AAᵀ) W(A) Λ⁻¹ =: F(A). Its normal part is stiff
    // for fixed Û, so each sub-step is linearly implicit, (I − hJ) δ = h F(A), with the in-span
    // motion pinned to h A D and a QR retraction afterwards.
    const Matrix D = cd ? cd->D : Matrix::Zero(A.cols(), A.cols());
    const Index np = A.rows();
    const Index m = A.cols();
    plan.substeps = options.a_substeps;
    const double h = dt / plan.substeps;
    Matrix jac(np * m, np * m);
    for (int j = 0; j < plan.substeps; ++j) {
        const Matrix& a = plan.a_next;
        const Matrix w = w_from(a, k, gpc, lam);
        const Matrix atw = a.transpose() * w;
        const Matrix f = a * D - (w - a * atw);
        Matrix e = Matrix::Zero(np, m);
        for (Index col = 0; col < np * m; ++col) {
            e.setZero();
            e(col % np, col / np) = 1.0;
            const Matrix we = w_linear(e, k, gpc, lam);
            const Matrix df = e * D - we + a * (a.transpose() * we) + e * atw + a * (e.transpose() * w);
            jac.col(col) = df.reshaped();
        }
        const Matrix sys = Matrix::Identity(np * m, np * m) - h * jac;
        const Vector rhs = h * f.reshaped();
        Matrix delta = Vector(Eigen::PartialPivLU<Matrix>(sys).solve(rhs)).reshaped(np, m);
        delta += a * (h * D - a.transpose() * delta);
        plan.a_next = orthonormalize(a + delta);
    }
    return plan;
}

#ifdef NDEBUG
constexpr bool kDebug = false;
#else
constexpr bool kDebug = true;
#endif

}  // namespace

StepPlan plan_step(const DyboState& s, const AssembledOperators& ops, const GpcSpace& gpc, double dt,
                   const DyboOptions& options)
{
    return plan_impl(s, ops, gpc, dt, options, kDebug);
}

SystemSolve make_system_solver(const AssembledOperators& ops, double c)
{
    require(c > 0.0, "make_system_solver: c must be positive");
    if (ops.S0.is_sparse() && ops.M.is_sparse()) {
        const SparseMatrix sys = ops.S0.sparse() + c * ops.M.sparse();
        auto solver = std::make_shared<SpdSolver>(sys);
        return [solver](const Matrix& b) { return solver->solve(b); };
    }
    const Matrix sys = ops.S0.dense() + c * ops.M.dense();
    auto llt = std::make_shared<Eigen::LLT<Matrix>>(sys);
    if (llt->info() != Eigen::Success) throw NumericalError("make_system_solver: S0 + cM is not positive definite");
    return [llt](const Matrix& b) -> Matrix {
        Matrix x = llt->solve(b);
        if (!x.allFinite()) throw NumericalError("system solve produced non-finite values");
        return x;
    };
}

DyboState recast(const DyboState& s, const Operator& M, RecastInfo* info, double eps_lambda)
{
    const Index m = s.modes();
    DyboState out = s;
    if (m == 0) return out;

    Eigen::HouseholderQR<Matrix> qr(s.A);
    const Matrix q_a = qr.householderQ() * Matrix::Identity(s.A.rows(), m);
    const Matrix r_a = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Matrix U = s.U * r_a.transpose();
    Matrix A = q_a;

    // two sweeps: the second removes rounding left by the first
    for (int sweep = 0; sweep < 2; ++sweep) {
        Matrix gram = U.transpose() * M.apply(U);
        gram = 0.5 * (gram + gram.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
        const Matrix q = es.eigenvectors().rowwise().reverse();
        U = U * q;
        A = A * q;
    }
    Index collapsed = 0;
    const Vector lam = (U.transpose() * M.apply(U)).diagonal();
    const double floor = eps_lambda * lam.maxCoeff();
    for (Index j = 0; j < m; ++j) {
        Index imax = 0;
        A.col(j).cwiseAbs().maxCoeff(&imax);
        if (A(imax, j) < 0) {
            A.col(j) *= -1.0;
            U.col(j) *= -1.0;
        }
        if (!(lam[j] > floor)) {
            ++collapsed;
            U.col(j).setZero();
        }
    }
    out.U = std::move(U);
    out.A = std::move(A);
    if (info) info->collapsed = collapsed;
    return out;
}

DyboState init_state(const Vector& mean, const Matrix& modes, const SparseMatrix& fine_mass,
                     const SparseMatrix* prolongation, const GpcSpace& gpc, Index m)
{
    require(m >= 1, "init_state: m must be at least 1");
    require(m <= gpc.size(), "init_state: m=" + std::to_string(m) + " exceeds N_p=" + std::to_string(gpc.size()));
    require(modes.cols() >= m, "init_state: " + std::to_string(modes.cols()) + " initial modes given, m=" +
                                   std::to_string(m));
    require(mean.size() == fine_mass.rows() && modes.rows() == fine_mass.rows(),
            "init_state: initial fields must live on the interior fine dofs");

    DyboState s;
    if (prolongation == nullptr) {
        s.u0 = mean;
        s.U = modes.leftCols(m);
    } else {
        const SparseMatrix& R = *prolongation;
        const Matrix gram = Matrix(R.transpose() * (fine_mass * R));
        Eigen::LLT<Matrix> llt(gram);
        if (llt.info() != Eigen::Success) throw NumericalError("init_state: Gram matrix of the space is singular");
        s.u0 = llt.solve(Vector(R.transpose() * (fine_mass * mean)));
        s.U = llt.solve(Matrix(R.transpose() * (fine_mass * modes.leftCols(m))));
    }
    s.A = Matrix::Identity(gpc.size(), m);
    const Operator M = prolongation ? Operator(project(*prolongation, fine_mass)) : Operator(fine_mass);
    return recast(s, M);
}

DyboStepper::DyboStepper(const AssembledOperators& ops, const GpcSpace& gpc, double dt, DyboOptions options)
    : ops_(&ops), gpc_(&gpc), dt_(dt), options_(options)
{
    require(dt > 0.0, "DyboStepper: dt must be positive");
    require(options.recast_stride >= 0, "DyboStepper: recast stride must be nonnegative");
    require(options.check_stride >= 1, "DyboStepper: check stride must be positive");
    require(options.rotation_limit >= 0.0, "DyboStepper: rotation limit must be nonnegative");
    require(options.drift_tolerance > 0.0, "DyboStepper: drift tolerance must be positive");
    require(options.a_substeps >= 1, "DyboStepper: at least one A sub-step is required");
}

StepPlan DyboStepper::plan(const DyboState& s)
{
    const bool verify = kDebug || (calls_ % options_.check_stride == 0);
    ++calls_;
    return plan_impl(s, *ops_, *gpc_, dt_, options_, verify);
}

DyboState DyboStepper::finish(DyboState s, bool frozen, StepDiagnostics* diag)
{
    StepDiagnostics d;
    d.frozen = frozen;
    d.orth_drift = orthonormality_drift(s.A);
    const LambdaInfo lam = lambda_matrix(s.U, ops_->M, options_.eps_lambda);
    d.biorth_drift = lam.drift;
    d.degenerate = lam.degenerate;
    const bool scheduled = options_.recast_stride > 0 && s.n % options_.recast_stride == 0;
    const bool drifted = std::max(d.orth_drift, d.biorth_drift) > options_.drift_tolerance;
    if (frozen || scheduled || drifted) {
        s = recast(s, ops_->M, nullptr, options_.eps_lambda);
        d.recast = true;
    }
    if (diag) *diag = d;
    return s;
}

DyboState DyboStepper::step(const DyboState& s, const SystemSolve& solve, StepDiagnostics* diag)
{
    const StepPlan p = plan(s);
    DyboState next;
    Matrix rhs(p.g1.size(), 1 + p.g2.cols());
    rhs.col(0) = p.g1;
    rhs.rightCols(p.g2.cols()) = p.g2;
    const Matrix x = solve(rhs);
    next.u0 = x.col(0);
    next.U = x.rightCols(p.g2.cols());
    next.A = p.a_next;
    next.n = s.n + 1;
    next.t = s.t + dt_;
    check_finite(next);
    return finish(std::move(next), p.frozen, diag);
}

void check_finite(const DyboState& s)
{
    if (s.u0.allFinite() && s.U.allFinite() && s.A.allFinite()) return;
    std::ostringstream os;
    os << "non-finite state at step " << s.n << " (t=" << s.t << "): |u0|=" << s.u0.norm() << " |U|=" << s.U.norm()
       << " |A|=" << s.A.norm();
    throw NumericalError(os.str());
}

}  // namespace msdybo
