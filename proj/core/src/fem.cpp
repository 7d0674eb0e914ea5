#include "msdybo/fem.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

namespace msdybo {

namespace {

constexpr double kResidualBound = 1e-10;

std::vector<Index> all_cells(const GridPair& g)
{
    std::vector<Index> cells(static_cast<std::size_t>(g.num_fine_cells()));
    std::iota(cells.begin(), cells.end(), Index{0});
    return cells;
}

template <class ElementFn>
SparseOperator assemble(const GridPair& g, const DofMap& dofs, std::span<const Index> cells, ElementFn&& element)
{
    require(!cells.empty(), "assembly over an empty set of cells");
    std::vector<Triplet> triplets;
    triplets.reserve(cells.size() * 16);
    for (const Index cell : cells) {
        require(cell >= 0 && cell < g.num_fine_cells(), "assembly: cell index out of range");
        const auto nodes = g.cell_nodes(cell);
        std::array<Index, 4> local{};
        for (int a = 0; a < 4; ++a) {
            local[static_cast<std::size_t>(a)] = dofs.local(nodes[static_cast<std::size_t>(a)]);
        }
        const Eigen::Matrix4d ke = element(cell);
        for (int a = 0; a < 4; ++a) {
            const Index ra = local[static_cast<std::size_t>(a)];
            if (ra < 0) continue;
            for (int b = 0; b < 4; ++b) {
                const Index cb = local[static_cast<std::size_t>(b)];
                if (cb < 0) continue;
                triplets.emplace_back(ra, cb, ke(a, b));
            }
        }
    }
    SparseOperator op;
    op.matrix.resize(dofs.size(), dofs.size());
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    op.matrix.makeCompressed();
    op.dofs = dofs;
    op.symmetric = true;
    return op;
}

void check_field(const GridPair& g, const CellField& field)
{
    require(field.size() == g.num_fine_cells(),
            "cell field has " + std::to_string(field.size()) + " values, grid has " +
                std::to_string(g.num_fine_cells()) + " fine cells");
}

}  // namespace

CellField CellField::constant(const GridPair& g, double value)
{
    return CellField(Vector::Constant(g.num_fine_cells(), value));
}

const Eigen::Matrix4d& element_stiffness()
{
    static const Eigen::Matrix4d k = [] {
        Eigen::Matrix4d m;
        m << 4, -1, -2, -1,
            -1, 4, -1, -2,
            -2, -1, 4, -1,
            -1, -2, -1, 4;
        return Eigen::Matrix4d(m / 6.0);
    }();
    return k;
}

Eigen::Matrix4d element_mass(double h)
{
    Eigen::Matrix4d m;
    m << 4, 2, 1, 2,
        2, 4, 2, 1,
        1, 2, 4, 2,
        2, 1, 2, 4;
    return m * (h * h / 36.0);
}

SparseOperator assemble_stiffness(const GridPair& g, const CellField& field, const DofMap& dofs)
{
    const auto cells = all_cells(g);
    return assemble_stiffness(g, field, dofs, cells);
}

SparseOperator assemble_stiffness(const GridPair& g, const CellField& field, const DofMap& dofs,
                                  std::span<const Index> cells)
{
    check_field(g, field);
    const Eigen::Matrix4d& ke = element_stiffness();
    return assemble(g, dofs, cells, [&](Index cell) -> Eigen::Matrix4d { return field[cell] * ke; });
}

SparseOperator assemble_mass(const GridPair& g, const DofMap& dofs)
{
    const auto cells = all_cells(g);
    return assemble_mass(g, dofs, cells);
}

SparseOperator assemble_mass(const GridPair& g, const DofMap& dofs, std::span<const Index> cells)
{
    const Eigen::Matrix4d me = element_mass(g.fine_size());
    return assemble(g, dofs, cells, [&](Index) -> Eigen::Matrix4d { return me; });
}

SparseOperator assemble_weighted_mass(const GridPair& g, const CellField& weight, const DofMap& dofs,
                                      std::span<const Index> cells)
{
    check_field(g, weight);
    const Eigen::Matrix4d me = element_mass(g.fine_size());
    return assemble(g, dofs, cells, [&](Index cell) -> Eigen::Matrix4d { return weight[cell] * me; });
}

Vector assemble_load(const GridPair& g, const Vector& nodal_f, const DofMap& dofs)
{
    require(nodal_f.size() == g.num_fine_nodes(), "assemble_load: nodal vector size mismatch");
    const Eigen::Matrix4d me = element_mass(g.fine_size());
    Vector load = Vector::Zero(dofs.size());
    for (Index cell = 0; cell < g.num_fine_cells(); ++cell) {
        const auto nodes = g.cell_nodes(cell);
        Eigen::Vector4d fl;
        for (int a = 0; a < 4; ++a) fl[a] = nodal_f[nodes[static_cast<std::size_t>(a)]];
        const Eigen::Vector4d contrib = me * fl;
        for (int a = 0; a < 4; ++a) {
            const Index r = dofs.local(nodes[static_cast<std::size_t>(a)]);
            if (r >= 0) load[r] += contrib[a];
        }
    }
    return load;
}

Vector restrict_to(const Vector& all_nodes, const DofMap& dofs)
{
    Vector out(dofs.size());
    for (Index k = 0; k < dofs.size(); ++k) out[k] = all_nodes[dofs.global(k)];
    return out;
}

Vector extend_from(const Vector& local, const DofMap& dofs, Index num_nodes)
{
    require(local.size() == dofs.size(), "extend_from: size mismatch");
    Vector out = Vector::Zero(num_nodes);
    for (Index k = 0; k < dofs.size(); ++k) out[dofs.global(k)] = local[k];
    return out;
}

SparseMatrix submatrix(const SparseMatrix& a, std::span<const Index> rows, std::span<const Index> cols)
{
    std::vector<Index> row_map(static_cast<std::size_t>(a.rows()), -1);
    for (std::size_t k = 0; k < rows.size(); ++k) row_map[static_cast<std::size_t>(rows[k])] = static_cast<Index>(k);
    std::vector<Triplet> triplets;
    for (std::size_t kc = 0; kc < cols.size(); ++kc) {
        for (SparseMatrix::InnerIterator it(a, cols[kc]); it; ++it) {
            const Index r = row_map[static_cast<std::size_t>(it.row())];
            if (r >= 0) triplets.emplace_back(r, static_cast<Index>(kc), it.value());
        }
    }
    SparseMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

struct SpdSolver::Factor {
    Eigen::CholmodSimplicialLLT<SparseMatrix, Eigen::Lower> llt;
};

SpdSolver::SpdSolver(const SparseMatrix& a) : a_(a)
{
    require(a.rows() == a.cols(), "SpdSolver: matrix is not square");
    auto f = std::make_shared<Factor>();
    f->llt.compute(a_);
    if (f->llt.info() != Eigen::Success) {
        throw NumericalError("SpdSolver: Cholesky factorization failed (operator singular or indefinite)");
    }
    llt_ = std::move(f);
}

Vector SpdSolver::solve(const Vector& b) const
{
    require(llt_ != nullptr, "SpdSolver: not initialized");
    require(b.size() == a_.rows(), "SpdSolver: right-hand side size mismatch");
    Vector x = llt_->llt.solve(b);
    const double bnorm = b.norm();
    Vector r = b - a_ * x;
    if (r.norm() > kResidualBound * bnorm) {
        x += llt_->llt.solve(r);
        r = b - a_ * x;
        if (r.norm() > kResidualBound * bnorm) {
            throw NumericalError("SpdSolver: residual " + std::to_string(r.norm() / bnorm) +
                                 " exceeds bound (ill-conditioned operator)");
        }
    }
    if (!x.allFinite()) throw NumericalError("SpdSolver: non-finite solution");
    return x;
}

Matrix SpdSolver::solve(const Matrix& b) const
{
    Matrix x(b.rows(), b.cols());
    for (Index j = 0; j < b.cols(); ++j) x.col(j) = solve(Vector(b.col(j)));
    return x;
}

Matrix SpdSolver::solve_unchecked(const Matrix& b) const
{
    require(llt_ != nullptr, "SpdSolver: not initialized");
    require(b.rows() == a_.rows(), "SpdSolver: right-hand side size mismatch");
    Matrix x = llt_->llt.solve(b);
    if (!x.allFinite()) throw NumericalError("SpdSolver: non-finite solution");
    return x;
}

Vector solve_spd(const SparseOperator& op, const Vector& b)
{
    return SpdSolver(op.matrix).solve(b);
}

void fix_sign(Eigen::Ref<Vector> v)
{
    if (v.size() == 0) return;
    Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
}

EigenPairs generalized_eig_smallest(const Matrix& a, const Matrix& b, Index k)
{
    require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
            "generalized_eig_smallest: dimension mismatch");
    require(k >= 1 && k <= a.rows(), "generalized_eig_smallest: k=" + std::to_string(k) +
                                         " outside [1, " + std::to_string(a.rows()) + "]");
    const double tol = 1e-12;
    require((a - a.transpose()).norm() <= tol * std::max(1.0, a.norm()),
            "generalized_eig_smallest: A is not symmetric");
    require((b - b.transpose()).norm() <= tol * std::max(1.0, b.norm()),
            "generalized_eig_smallest: B is not symmetric");

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) {
        throw NumericalError("generalized_eig_smallest: B is not positive definite");
    }
    EigenPairs out;
    out.values = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
    for (Index j = 0; j < k; ++j) fix_sign(out.vectors.col(j));
    return out;
}

EigenPairs generalized_eig_smallest(const SparseOperator& a, const SparseOperator& b, Index k)
{
    return generalized_eig_smallest(Matrix(a.matrix), Matrix(b.matrix), k);
}

}  // namespace msdybo
