#include "msdybo/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace msdybo {

namespace {

constexpr double kMaxUnknowns = 5e6;

// Coupling E_i = E[ξ_i H_α H_β] over the basis {1, H_α}.
Matrix extended_moment(const GpcSpace& gpc, int i)
{
    const Index np = gpc.size();
    Matrix e = Matrix::Zero(np + 1, np + 1);
    e.block(0, 1, 1, np) = gpc.first_moment(i);
    e.block(1, 0, np, 1) = gpc.first_moment(i).transpose();
    e.block(1, 1, np, np) = gpc.second_moment(i);
    return e;
}

void add_kron(std::vector<Triplet>& t, const Matrix& e, const SparseMatrix& k, double tol = 0.0)
{
    const Index n = k.rows();
    for (Index a = 0; a < e.rows(); ++a) {
        for (Index b = 0; b < e.cols(); ++b) {
            const double w = e(a, b);
            if (std::abs(w) <= tol) continue;
            for (Index col = 0; col < k.outerSize(); ++col) {
                for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
                    t.emplace_back(a * n + it.row(), b * n + it.col(), w * it.value());
                }
            }
        }
    }
}

}  // namespace

Matrix gpc_galerkin_solve(const FineOperators& fine, const GpcSpace& gpc, const Matrix& initial, double dt, int steps,
                          const GalerkinObserver& observer)
{
    require(dt > 0.0, "gpc_galerkin_solve: dt must be positive");
    require(steps >= 0, "gpc_galerkin_solve: negative step count");
    require(static_cast<int>(fine.fluctuation_stiffness.size()) == gpc.r(),
            "gpc_galerkin_solve: model and gPC space disagree on r");
    const Index n = fine.size();
    const Index blocks = gpc.size() + 1;
    require(initial.rows() == n && initial.cols() == blocks, "gpc_galerkin_solve: initial block must be N_f × (N_p+1)");
    const double unknowns = static_cast<double>(n) * static_cast<double>(blocks);
    if (unknowns > kMaxUnknowns) {
        throw InvalidArgument("gpc_galerkin_solve: " + std::to_string(static_cast<long long>(unknowns)) +
                              " unknowns exceed the 5e6 limit");
    }

    const double c = 1.0 / dt;
    const SparseMatrix diag_block = fine.stiffness + c * fine.mass;
    std::vector<Triplet> t;
    add_kron(t, Matrix::Identity(blocks, blocks), diag_block);
    // parity-forbidden moments are exactly zero up to rounding
    for (int i = 0; i < gpc.r(); ++i) {
        add_kron(t, extended_moment(gpc, i), fine.fluctuation_stiffness[static_cast<std::size_t>(i)], 1e-14);
    }
    SparseMatrix system(n * blocks, n * blocks);
    system.setFromTriplets(t.begin(), t.end());
    const SpdSolver solver(system);

    Matrix u = initial;
    for (int step = 1; step <= steps; ++step) {
        Matrix rhs = c * (fine.mass * u);
        rhs.col(0) += fine.load;
        const Vector x = solver.solve(Vector(Eigen::Map<const Vector>(rhs.data(), rhs.size())));
        u = Eigen::Map<const Matrix>(x.data(), n, blocks);
        if (observer) observer(step, step * dt, u);
    }
    return u;
}

Matrix galerkin_blocks(const Vector& mean, const Matrix& U, const Matrix& A)
{
    require(U.rows() == mean.size() && U.cols() == A.cols(), "galerkin_blocks: shape mismatch");
    Matrix b(mean.size(), A.rows() + 1);
    b.col(0) = mean;
    b.rightCols(A.rows()) = U * A.transpose();
    return b;
}

KLFields kl_extract(const Matrix& blocks, const SparseMatrix& mass, Index m)
{
    require(blocks.rows() == mass.rows() && blocks.cols() >= 2, "kl_extract: block shape mismatch");
    const Index np = blocks.cols() - 1;
    require(m >= 1 && m <= np, "kl_extract: m=" + std::to_string(m) + " outside [1, " + std::to_string(np) + "]");

    const Matrix F = blocks.rightCols(np);
    Matrix gram = F.transpose() * (mass * F);
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Matrix v = es.eigenvectors().rowwise().reverse().leftCols(m);
    const Vector ev = es.eigenvalues().reverse().head(m);

    KLFields kl;
    kl.mean = blocks.col(0);
    kl.A = v;
    kl.modes = F * v;
    kl.lambda = ev.cwiseMax(0.0);
    const double floor = 1e-12 * std::max(0.0, es.eigenvalues().maxCoeff());
    for (Index j = 0; j < m; ++j) {
        Index imax = 0;
        kl.A.col(j).cwiseAbs().maxCoeff(&imax);
        if (kl.A(imax, j) < 0) {
            kl.A.col(j) *= -1.0;
            kl.modes.col(j) *= -1.0;
        }
        if (!(ev[j] > floor)) {
            kl.modes.col(j).setZero();
            kl.lambda[j] = 0.0;
            ++kl.flagged;
        }
    }
    return kl;
}

KLFields kl_from_state(const DyboState& s, const SparseMatrix& mass)
{
    const DyboState r = recast(s, Operator(mass));
    KLFields kl;
    kl.mean = r.u0;
    kl.modes = r.U;
    kl.A = r.A;
    kl.lambda = (r.U.transpose() * (mass * r.U)).diagonal();
    return kl;
}

double error_l2(const Vector& reference, const Vector& approx, const SparseMatrix& mass)
{
    require(reference.size() == approx.size() && reference.size() == mass.rows(), "error_l2: size mismatch");
    const double ref = reference.dot(mass * reference);
    require(ref > 0.0, "error_l2: reference field has zero norm");
    const Vector d = reference - approx;
    return std::sqrt(std::max(0.0, d.dot(mass * d)) / ref);
}

Vector variance_field(const Matrix& modes)
{
    return modes.rowwise().squaredNorm();
}

Matrix align_modes(const Matrix& reference, const Matrix& approx, const SparseMatrix& mass)
{
    require(reference.rows() == approx.rows(), "align_modes: size mismatch");
    const Index k = std::min(reference.cols(), approx.cols());
    const Matrix cross = reference.transpose() * (mass * approx);
    const Vector nr = (reference.transpose() * (mass * reference)).diagonal().cwiseSqrt();
    const Vector na = (approx.transpose() * (mass * approx)).diagonal().cwiseSqrt();
    std::vector<bool> used(static_cast<std::size_t>(approx.cols()), false);
    Matrix out = Matrix::Zero(approx.rows(), k);
    for (Index i = 0; i < k; ++i) {
        Index best = -1;
        double best_corr = -1.0;
        for (Index j = 0; j < approx.cols(); ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double denom = nr[i] * na[j];
            const double corr = denom > 0 ? std::abs(cross(i, j)) / denom : 0.0;
            if (corr > best_corr) {
                best_corr = corr;
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        out.col(i) = cross(i, best) < 0 ? Vector(-approx.col(best)) : Vector(approx.col(best));
    }
    return out;
}

FieldErrors compare_fields(const KLFields& reference, const KLFields& approx, const SparseMatrix& mass)
{
    FieldErrors e;
    e.mean = error_l2(reference.mean, approx.mean, mass);
    const Matrix aligned = align_modes(reference.modes, approx.modes, mass);
    for (Index i = 0; i < aligned.cols(); ++i) e.modes.push_back(error_l2(reference.modes.col(i), aligned.col(i), mass));
    e.variance = error_l2(variance_field(reference.modes), variance_field(approx.modes), mass);
    return e;
}

}  // namespace msdybo
