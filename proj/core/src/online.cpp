#include "msdybo/online.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msdybo {

OnlineContext::OnlineContext(const GridPair& g, const CellField& abar) : grid_(&g)
{
    require(abar.size() == g.num_fine_cells(), "OnlineContext: field/grid size mismatch");
    const DofMap& interior = g.interior_dofs();
    locals_.reserve(static_cast<std::size_t>(g.num_interior_coarse_nodes()));
    for (const Neighborhood& nb : g.neighborhoods()) {
        LocalSpace ls;
        ls.neighborhood = nb.index;
        for (const Index node : nb.interior_nodes) {
            const Index d = interior.local(node);
            require(d >= 0, "OnlineContext: neighborhood interior node on the domain boundary");
            ls.dofs.push_back(d);
        }
        ls.stiffness = assemble_stiffness(g, abar, DofMap(nb.interior_nodes), nb.fine_cells).matrix;
        ls.solver = SpdSolver(ls.stiffness);
        locals_.push_back(std::move(ls));
    }
}

Vector residual_functional(const SparseMatrix& stiffness, const SparseMatrix& mass, double c, const Vector& u_off,
                           const Vector& u_prev, const Vector& source)
{
    const Index n = stiffness.rows();
    require(mass.rows() == n && u_off.size() == n && u_prev.size() == n && source.size() == n,
            "residual_functional: inconsistent dimensions");
    return c * (mass * u_prev) + source - stiffness * u_off - c * (mass * u_off);
}

LocalResidual local_residual(const OnlineContext& ctx, Index i, const Vector& functional)
{
    const LocalSpace& ls = ctx.local(i);
    require(functional.size() == ctx.grid().interior_dofs().size(), "local_residual: functional size mismatch");
    LocalResidual out;
    out.functional.resize(static_cast<Index>(ls.dofs.size()));
    for (std::size_t a = 0; a < ls.dofs.size(); ++a) out.functional[static_cast<Index>(a)] = functional[ls.dofs[a]];
    if (out.functional.squaredNorm() == 0.0) {
        out.riesz = Vector::Zero(out.functional.size());
        return out;
    }
    out.riesz = ls.solver.solve(out.functional);
    out.norm = std::sqrt(std::max(0.0, out.functional.dot(out.riesz)));
    return out;
}

Vector online_basis(const OnlineContext& ctx, Index i, const Vector& functional)
{
    const LocalResidual lr = local_residual(ctx, i, functional);
    const LocalSpace& ls = ctx.local(i);
    Vector phi = Vector::Zero(functional.size());
    for (std::size_t a = 0; a < ls.dofs.size(); ++a) phi[ls.dofs[a]] = lr.riesz[static_cast<Index>(a)];
    return phi;
}

std::vector<Index> select_neighborhoods(const GridPair& g, const std::vector<double>& norms)
{
    require(static_cast<Index>(norms.size()) == g.num_interior_coarse_nodes(),
            "select_neighborhoods: one norm per neighborhood expected");
    std::vector<Index> order(norms.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return norms[static_cast<std::size_t>(a)] > norms[static_cast<std::size_t>(b)];
    });
    std::vector<Index> chosen;
    for (const Index i : order) {
        if (!(norms[static_cast<std::size_t>(i)] > 0.0)) break;
        const bool clash = std::any_of(chosen.begin(), chosen.end(),
                                       [&](Index j) { return g.neighborhoods_overlap(i, j); });
        if (!clash) chosen.push_back(i);
    }
    return chosen;
}

EnrichedSpace::EnrichedSpace(SparseMatrix offline, SparseMatrix system, double drop_tolerance)
    : offline_(std::move(offline)), system_(std::move(system)), drop_tolerance_(drop_tolerance)
{
    require(offline_.rows() == system_.rows(), "EnrichedSpace: prolongation and system sizes differ");
    offline_t_ = offline_.transpose();
    Matrix a0 = Matrix(offline_t_ * (system_ * offline_));
    a0 = 0.5 * (a0 + a0.transpose()).eval();
    Eigen::LLT<Matrix> llt(a0);
    if (llt.info() != Eigen::Success) throw NumericalError("EnrichedSpace: offline Galerkin matrix is not SPD");
    base_factor_ = llt.matrixL();
    reset();
}

void EnrichedSpace::reset()
{
    n_ = offline_.cols();
    extra_.resize(system_.rows(), 0);
    if (factor_.rows() < n_) factor_.resize(n_, n_);
    factor_.topLeftCorner(n_, n_) = base_factor_;
}

bool EnrichedSpace::add(const Eigen::SparseVector<double>& column)
{
    require(column.size() == system_.rows(), "EnrichedSpace::add: column size mismatch");
    std::vector<Triplet> t;
    for (Eigen::SparseVector<double>::InnerIterator it(column); it; ++it) t.emplace_back(it.index(), 0, it.value());
    SparseMatrix c(column.size(), 1);
    c.setFromTriplets(t.begin(), t.end());
    return add(c) == 1;
}

Index EnrichedSpace::add(const SparseMatrix& columns)
{
    require(columns.rows() == system_.rows(), "EnrichedSpace::add: column size mismatch");
    const Index k = columns.cols();
    if (k == 0) return 0;
    const Index n_off = offline_.cols();
    const SparseMatrix y = system_ * columns;
    Matrix b(n_, k);
    b.topRows(n_off) = Matrix(offline_t_ * y);
    if (extra_.cols() > 0) b.bottomRows(extra_.cols()) = Matrix(SparseMatrix(extra_.transpose()) * y);
    const Matrix w = factor_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(b);
    const Matrix gram = Matrix(SparseMatrix(columns.transpose()) * y);
    const Matrix schur = gram - w.transpose() * w;

    // pivoted extension over the new columns: z_j = L_s⁻¹ S(kept, j)
    std::vector<Index> kept;
    Matrix ls = Matrix::Zero(k, k);
    std::vector<Vector> rows_z;
    for (Index j = 0; j < k; ++j) {
        const double diag = gram(j, j);
        if (!(diag > 0.0)) continue;
        const auto nk = static_cast<Index>(kept.size());
        Vector s_col(nk);
        for (Index a = 0; a < nk; ++a) s_col[a] = schur(kept[static_cast<std::size_t>(a)], j);
        const Vector z = ls.topLeftCorner(nk, nk).triangularView<Eigen::Lower>().solve(s_col);
        const double pivot = schur(j, j) - z.squaredNorm();
        if (!(pivot > drop_tolerance_ * diag)) continue;
        ls.row(nk).head(nk) = z.transpose();
        ls(nk, nk) = std::sqrt(pivot);
        kept.push_back(j);
    }
    const auto nk = static_cast<Index>(kept.size());
    if (nk == 0) return 0;

    if (factor_.rows() < n_ + nk) {
        const Index cap = std::max<Index>(2 * n_, n_ + nk + 16);
        Matrix grown = Matrix::Zero(cap, cap);
        grown.topLeftCorner(n_, n_) = factor_.topLeftCorner(n_, n_);
        factor_ = std::move(grown);
    }
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(extra_.nonZeros() + columns.nonZeros()));
    for (Index col = 0; col < extra_.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(extra_, col); it; ++it) t.emplace_back(it.row(), col, it.value());
    }
    for (Index a = 0; a < nk; ++a) {
        const Index j = kept[static_cast<std::size_t>(a)];
        const Index row = n_ + a;
        factor_.row(row).setZero();
        factor_.row(row).head(n_) = w.col(j).transpose();
        factor_.row(row).segment(n_, a + 1) = ls.row(a).head(a + 1);
        for (SparseMatrix::InnerIterator it(columns, j); it; ++it) t.emplace_back(it.row(), extra_.cols() + a, it.value());
    }
    SparseMatrix grown(system_.rows(), extra_.cols() + nk);
    grown.setFromTriplets(t.begin(), t.end());
    extra_ = std::move(grown);
    n_ += nk;
    return nk;
}

Matrix EnrichedSpace::restrict_dual(const Matrix& rhs) const
{
    require(rhs.rows() == system_.rows(), "EnrichedSpace: right-hand side size mismatch");
    Matrix b(n_, rhs.cols());
    b.topRows(offline_.cols()) = offline_t_ * rhs;
    if (extra_.cols() > 0) b.bottomRows(extra_.cols()) = extra_.transpose() * rhs;
    return b;
}

Matrix EnrichedSpace::prolong(const Matrix& coefficients) const
{
    require(coefficients.rows() == n_, "EnrichedSpace::prolong: coefficient size mismatch");
    Matrix x = offline_ * coefficients.topRows(offline_.cols());
    if (extra_.cols() > 0) x += extra_ * coefficients.bottomRows(extra_.cols());
    return x;
}

Matrix EnrichedSpace::solve_coefficients(Matrix dual) const
{
    require(dual.rows() == n_, "EnrichedSpace::solve_coefficients: size mismatch");
    const auto L = factor_.topLeftCorner(n_, n_);
    L.triangularView<Eigen::Lower>().solveInPlace(dual);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(dual);
    if (!dual.allFinite()) throw NumericalError("EnrichedSpace: non-finite Galerkin solution");
    return dual;
}

Matrix EnrichedSpace::solve_offline_coefficients(Matrix dual) const
{
    require(dual.rows() == offline_.cols(), "EnrichedSpace::solve_offline_coefficients: size mismatch");
    base_factor_.triangularView<Eigen::Lower>().solveInPlace(dual);
    base_factor_.transpose().triangularView<Eigen::Upper>().solveInPlace(dual);
    if (!dual.allFinite()) throw NumericalError("EnrichedSpace: non-finite Galerkin solution");
    return dual;
}

Matrix EnrichedSpace::solve(const Matrix& rhs) const
{
    return prolong(solve_coefficients(restrict_dual(rhs)));
}

ProjectedOperators::ProjectedOperators(SparseMatrix offline, const FineOperators& fine)
    : offline_(std::move(offline)), fine_(&fine)
{
    require(offline_.rows() == fine.size(), "ProjectedOperators: prolongation and fine sizes differ");
    offline_t_ = offline_.transpose();
    extra_.resize(offline_.rows(), 0);
    ops_ = assemble_operators(offline_, fine);
}

void ProjectedOperators::append(const SparseMatrix& columns)
{
    require(columns.rows() == offline_.rows(), "ProjectedOperators::append: column size mismatch");
    const Index k = columns.cols();
    if (k == 0) return;
    const Index n = dimension();
    const Index n_off = offline_.cols();
    const Index e = extra_.cols();
    const SparseMatrix cols_t = columns.transpose();
    const SparseMatrix extra_t = extra_.transpose();
    const auto border = [&](const Operator& op, const SparseMatrix& x) {
        const SparseMatrix xc = x * columns;
        Matrix out(n + k, n + k);
        out.topLeftCorner(n, n) = op.dense();
        Matrix side(n, k);
        side.topRows(n_off) = Matrix(offline_t_ * xc);
        if (e > 0) side.bottomRows(e) = Matrix(extra_t * xc);
        const Matrix corner = Matrix(cols_t * xc);
        out.topRightCorner(n, k) = side;
        out.bottomLeftCorner(k, n) = side.transpose();
        out.bottomRightCorner(k, k) = 0.5 * (corner + corner.transpose());
        return Operator(std::move(out));
    };
    ops_.M = border(ops_.M, fine_->mass);
    ops_.S0 = border(ops_.S0, fine_->stiffness);
    for (std::size_t i = 0; i < ops_.S.size(); ++i) ops_.S[i] = border(ops_.S[i], fine_->fluctuation_stiffness[i]);
    Vector f(n + k);
    f.head(n) = ops_.fhat;
    f.tail(k) = cols_t * fine_->load;
    ops_.fhat = std::move(f);

    SparseMatrix grown(extra_.rows(), e + k);
    grown.leftCols(e) = extra_;
    grown.rightCols(k) = columns;
    extra_ = std::move(grown);
}

void ProjectedOperators::drop_leading(Index count)
{
    require(count >= 0 && count <= extra_.cols(), "ProjectedOperators::drop_leading: count out of range");
    if (count == 0) return;
    const Index n_off = offline_.cols();
    std::vector<Index> keep(static_cast<std::size_t>(dimension() - count));
    std::iota(keep.begin(), keep.begin() + n_off, Index{0});
    std::iota(keep.begin() + n_off, keep.end(), n_off + count);
    const auto pick = [&](const Operator& op) { return Operator(Matrix(op.dense()(keep, keep))); };
    ops_.M = pick(ops_.M);
    ops_.S0 = pick(ops_.S0);
    for (auto& s : ops_.S) s = pick(s);
    ops_.fhat = Vector(ops_.fhat(keep));
    extra_ = SparseMatrix(extra_.rightCols(extra_.cols() - count));
}

Matrix ProjectedOperators::prolong(const Matrix& coefficients) const
{
    require(coefficients.rows() == dimension(), "ProjectedOperators::prolong: coefficient size mismatch");
    Matrix x = offline_ * coefficients.topRows(offline_.cols());
    if (extra_.cols() > 0) x += extra_ * coefficients.bottomRows(extra_.cols());
    return x;
}

double energy_error(const SparseMatrix& system, const Matrix& x, const Matrix& reference)
{
    require(x.rows() == reference.rows() && x.cols() == reference.cols(), "energy_error: shape mismatch");
    const Matrix e = x - reference;
    return std::sqrt(std::max(0.0, (e.transpose() * (system * e)).trace()));
}

EnrichmentResult enrich(EnrichedSpace& space, const OnlineContext& ctx, const SparseMatrix& system, const Matrix& rhs,
                        const EnrichmentOptions& options, const std::vector<double>& weights,
                        const Matrix* residual_shift, const Matrix* reference, const Matrix* initial,
                        const double* baseline)
{
    require(options.theta >= 0.0, "enrich: theta must be nonnegative");
    require(options.max_rounds >= 0, "enrich: max_rounds must be nonnegative");
    require(rhs.rows() == system.rows(), "enrich: right-hand side size mismatch");
    if (residual_shift) require(residual_shift->rows() == rhs.rows() && residual_shift->cols() == rhs.cols(),
                                "enrich: residual shift shape mismatch");

    const GridPair& g = ctx.grid();
    const Index n_in = ctx.size();
    const Index n_comp = options.components == EnrichComponents::All ? rhs.cols() : std::min<Index>(1, rhs.cols());
    const double scale = (reference && reference->size() > 0) ? energy_error(system, *reference, Matrix::Zero(
                                                                                  reference->rows(), reference->cols()))
                                                              : 0.0;

    EnrichmentResult result;
    if (initial) {
        require(initial->rows() == rhs.rows() && initial->cols() == rhs.cols(), "enrich: initial solution shape mismatch");
        result.solution = *initial;
    } else {
        result.solution = space.solve(rhs);
    }
    result.initial = result.solution;
    double initial_sum = 0.0;
    double previous_sum = 0.0;
    double previous_energy = std::numeric_limits<double>::infinity();

    for (int level = 0;; ++level) {
        Matrix functional = rhs - system * result.solution;
        if (residual_shift) functional += *residual_shift;

        ResidualReport report;
        report.level = level;
        report.dimension = space.dimension();
        report.weights = weights;
        report.norms.assign(static_cast<std::size_t>(n_in), 0.0);
        std::vector<Matrix> riesz(static_cast<std::size_t>(n_in));
        std::vector<Vector> comp_norms(static_cast<std::size_t>(n_in));
        for (Index i = 0; i < n_in; ++i) {
            const LocalSpace& ls = ctx.local(i);
            const auto nd = static_cast<Index>(ls.dofs.size());
            Matrix f(nd, n_comp);
            for (Index a = 0; a < nd; ++a) f.row(a) = functional.row(ls.dofs[static_cast<std::size_t>(a)]).head(n_comp);
            Matrix& phi = riesz[static_cast<std::size_t>(i)];
            phi = ls.solver.solve_unchecked(f);
            Vector& cn = comp_norms[static_cast<std::size_t>(i)];
            cn = f.cwiseProduct(phi).colwise().sum().transpose().cwiseMax(0.0).cwiseSqrt();
            report.norms[static_cast<std::size_t>(i)] = cn.sum();
            report.residual_sum += cn.sum();
        }
        if (reference) {
            report.energy_error = energy_error(system, result.solution, *reference);
            if (report.energy_error > previous_energy * (1.0 + 1e-10) + 1e-14 * scale) result.energy_increase = true;
            previous_energy = report.energy_error;
        }
        if (level == 0) {
            initial_sum = baseline ? *baseline : report.residual_sum;
        } else if (report.residual_sum >= previous_sum) {
            result.residual_increase = true;
        }
        previous_sum = report.residual_sum;

        const bool converged = report.residual_sum <= options.theta * initial_sum;
        if (converged || level >= options.max_rounds) {
            result.history.push_back(std::move(report));
            break;
        }

        report.selected = select_neighborhoods(g, report.norms);
        std::vector<Triplet> t;
        Index ncol = 0;
        for (const Index i : report.selected) {
            const LocalSpace& ls = ctx.local(i);
            const Matrix& phi = riesz[static_cast<std::size_t>(i)];
            for (Index k = 0; k < n_comp; ++k) {
                if (comp_norms[static_cast<std::size_t>(i)][k] == 0.0) continue;
                for (std::size_t a = 0; a < ls.dofs.size(); ++a) t.emplace_back(ls.dofs[a], ncol, phi(static_cast<Index>(a), k));
                ++ncol;
            }
        }
        SparseMatrix cols(rhs.rows(), ncol);
        cols.setFromTriplets(t.begin(), t.end());
        report.dropped = ncol - space.add(cols);
        result.history.push_back(std::move(report));
        result.solution = space.solve(rhs);
    }
    return result;
}

}  // namespace msdybo
