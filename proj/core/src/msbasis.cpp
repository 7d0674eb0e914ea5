#include "msdybo/msbasis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace msdybo {

namespace {

constexpr double kDependenceBound = 1e-13;

// Split patch-local indices into interior and boundary lists.
struct Split {
    std::vector<Index> interior;
    std::vector<Index> boundary;
};

Split split_patch(const DofMap& patch, std::span<const Index> interior_nodes, std::span<const Index> boundary_nodes)
{
    Split s;
    s.interior.reserve(interior_nodes.size());
    s.boundary.reserve(boundary_nodes.size());
    for (const Index n : interior_nodes) s.interior.push_back(patch.local(n));
    for (const Index n : boundary_nodes) s.boundary.push_back(patch.local(n));
    return s;
}

// Harmonic extension of boundary data: returns patch-sized columns.
Matrix harmonic_extension(const SparseMatrix& k, const Split& s, const Matrix& boundary_data)
{
    const SparseMatrix k_ii = submatrix(k, s.interior, s.interior);
    const SparseMatrix k_ib = submatrix(k, s.interior, s.boundary);
    const Matrix rhs = -(k_ib * boundary_data);
    Matrix out = Matrix::Zero(k.rows(), boundary_data.cols());
    Matrix interior_values;
    if (!s.interior.empty()) interior_values = SpdSolver(k_ii).solve(rhs);
    for (std::size_t a = 0; a < s.interior.size(); ++a) out.row(s.interior[a]) = interior_values.row(static_cast<Index>(a));
    for (std::size_t a = 0; a < s.boundary.size(); ++a) out.row(s.boundary[a]) = boundary_data.row(static_cast<Index>(a));
    return out;
}

}  // namespace

Vector PartitionOfUnity::interior(const GridPair& g, Index i) const
{
    const Neighborhood& nb = g.neighborhood(i);
    return Vector(values.col(coarse_node(nb.node_x, nb.node_y)));
}

PartitionOfUnity partition_of_unity(const GridPair& g, const CellField& abar)
{
    const Index nc = g.n_coarse();
    const Index m = g.n_fine_per_coarse();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(g.num_fine_nodes()) * 4);

    for (Index ky = 0; ky < nc; ++ky) {
        for (Index kx = 0; kx < nc; ++kx) {
            const DofMap patch(g.coarse_cell_nodes(kx, ky));
            const auto cells = g.coarse_cell_fine_cells(kx, ky);
            const SparseOperator k = assemble_stiffness(g, abar, patch, cells);

            Split s;
            std::vector<std::array<double, 2>> boundary_st;
            for (Index b = 0; b <= m; ++b) {
                for (Index a = 0; a <= m; ++a) {
                    const Index local = b * (m + 1) + a;
                    if (a == 0 || a == m || b == 0 || b == m) {
                        s.boundary.push_back(local);
                        boundary_st.push_back({static_cast<double>(a) / m, static_cast<double>(b) / m});
                    } else {
                        s.interior.push_back(local);
                    }
                }
            }
            // corners (0,0), (1,0), (0,1), (1,1) of the coarse cell
            Matrix data(static_cast<Index>(s.boundary.size()), 4);
            for (std::size_t q = 0; q < boundary_st.size(); ++q) {
                const double x = boundary_st[q][0];
                const double y = boundary_st[q][1];
                data.row(static_cast<Index>(q)) << (1 - x) * (1 - y), x * (1 - y), (1 - x) * y, x * y;
            }
            const Matrix chi = harmonic_extension(k.matrix, s, data);

            for (Index b = 0; b <= m; ++b) {
                for (Index a = 0; a <= m; ++a) {
                    const Index ix = kx * m + a;
                    const Index iy = ky * m + b;
                    // each fine node is written by exactly one coarse cell
                    if (std::min(ix / m, nc - 1) != kx || std::min(iy / m, nc - 1) != ky) continue;
                    const Index row = g.fine_node(ix, iy);
                    const Index local = b * (m + 1) + a;
                    for (int c = 0; c < 4; ++c) {
                        const double v = chi(local, c);
                        if (v == 0.0) continue;
                        const Index node = (ky + c / 2) * (nc + 1) + (kx + c % 2);
                        triplets.emplace_back(row, node, v);
                    }
                }
            }
        }
    }

    PartitionOfUnity pou;
    pou.n_coarse = nc;
    pou.values.resize(g.num_fine_nodes(), (nc + 1) * (nc + 1));
    pou.values.setFromTriplets(triplets.begin(), triplets.end());
    pou.values.makeCompressed();
    return pou;
}

CellField multiscale_weight(const GridPair& g, const CellField& abar, const PartitionOfUnity& pou)
{
    require(abar.size() == g.num_fine_cells(), "multiscale_weight: field/grid size mismatch");
    const Index nc = g.n_coarse();
    const double H = g.coarse_size();
    const double h = g.fine_size();
    const Eigen::Matrix4d& ke = element_stiffness();

    Vector grad_sq = Vector::Zero(g.num_fine_cells());
    for (Index iy = 0; iy <= nc; ++iy) {
        for (Index ix = 0; ix <= nc; ++ix) {
            const Vector chi(pou.values.col(pou.coarse_node(ix, iy)));
            for (Index ky = std::max<Index>(iy - 1, 0); ky <= std::min(iy, nc - 1); ++ky) {
                for (Index kx = std::max<Index>(ix - 1, 0); kx <= std::min(ix, nc - 1); ++kx) {
                    for (const Index cell : g.coarse_cell_fine_cells(kx, ky)) {
                        const auto nodes = g.cell_nodes(cell);
                        Eigen::Vector4d ce;
                        for (int a = 0; a < 4; ++a) ce[a] = chi[nodes[static_cast<std::size_t>(a)]];
                        grad_sq[cell] += ce.dot(ke * ce);
                    }
                }
            }
        }
    }
    // ∫_e |∇χ|² / |e|
    return CellField(abar.values().cwiseProduct(grad_sq) * (H * H / (h * h)));
}

SnapshotSpace snapshots(const GridPair& g, const CellField& abar, Index i)
{
    const Neighborhood& nb = g.neighborhood(i);
    SnapshotSpace snap;
    snap.neighborhood = i;
    snap.patch = DofMap(nb.nodes);
    const SparseOperator k = assemble_stiffness(g, abar, snap.patch, nb.fine_cells);
    const Split s = split_patch(snap.patch, nb.interior_nodes, nb.boundary_nodes);
    const auto L = static_cast<Index>(s.boundary.size());
    snap.psi = harmonic_extension(k.matrix, s, Matrix::Identity(L, L));
    return snap;
}

SpectralBasis spectral_basis(const GridPair& g, const CellField& abar, const CellField& weight,
                             const SnapshotSpace& snap, Index l)
{
    const Neighborhood& nb = g.neighborhood(snap.neighborhood);
    const Index L = snap.psi.cols();
    require(l >= 1 && l <= L, "spectral_basis: l=" + std::to_string(l) + " outside [1, " + std::to_string(L) + "]");

    double weight_sum = 0.0;
    for (const Index c : nb.fine_cells) weight_sum += std::abs(weight[c]);
    if (!(weight_sum > 0.0)) {
        throw NumericalError("spectral_basis: weight vanishes on neighborhood " + std::to_string(snap.neighborhood));
    }

    const SparseOperator k = assemble_stiffness(g, abar, snap.patch, nb.fine_cells);
    const SparseOperator w = assemble_weighted_mass(g, weight, snap.patch, nb.fine_cells);
    Matrix a_s = snap.psi.transpose() * (k.matrix * snap.psi);
    Matrix b_s = snap.psi.transpose() * (w.matrix * snap.psi);
    a_s = 0.5 * (a_s + a_s.transpose()).eval();
    b_s = 0.5 * (b_s + b_s.transpose()).eval();

    const EigenPairs eig = generalized_eig_smallest(a_s, b_s, std::min(l + 1, L));
    SpectralBasis out;
    out.eigenvalues = eig.values;
    out.coefficients = eig.vectors.leftCols(l);
    out.functions = snap.psi * out.coefficients;
    for (Index j = 0; j < l; ++j) {
        Index imax = 0;
        out.functions.col(j).cwiseAbs().maxCoeff(&imax);
        if (out.functions(imax, j) < 0) {
            out.functions.col(j) *= -1.0;
            out.coefficients.col(j) *= -1.0;
        }
    }
    return out;
}

double OfflineSpace::next_eigenvalue(Index i) const
{
    const Vector& ev = eigenvalues.at(static_cast<std::size_t>(i));
    const Index l = basis_counts.at(static_cast<std::size_t>(i));
    return l < ev.size() ? ev[l] : std::numeric_limits<double>::infinity();
}

OfflineSpace build_offline_space(const GridPair& g, const CellField& abar, std::span<const Index> counts)
{
    const Index n_in = g.num_interior_coarse_nodes();
    require(static_cast<Index>(counts.size()) == n_in, "build_offline_space: expected " + std::to_string(n_in) +
                                                           " basis counts, got " + std::to_string(counts.size()));
    const PartitionOfUnity pou = partition_of_unity(g, abar);
    const CellField weight = multiscale_weight(g, abar, pou);
    const DofMap& dofs = g.interior_dofs();

    OfflineSpace space;
    std::vector<Triplet> triplets;
    Index column = 0;
    for (Index i = 0; i < n_in; ++i) {
        const SnapshotSpace snap = snapshots(g, abar, i);
        const SpectralBasis basis = spectral_basis(g, abar, weight, snap, counts[static_cast<std::size_t>(i)]);
        const Vector chi = pou.interior(g, i);
        for (Index j = 0; j < basis.functions.cols(); ++j, ++column) {
            for (Index a = 0; a < snap.patch.size(); ++a) {
                const Index node = snap.patch.global(a);
                const Index row = dofs.local(node);
                const double v = chi[node] * basis.functions(a, j);
                if (row >= 0 && v != 0.0) triplets.emplace_back(row, column, v);
            }
            space.column_owner.push_back(i);
        }
        space.basis_counts.push_back(basis.functions.cols());
        space.eigenvalues.push_back(basis.eigenvalues);
    }
    space.prolongation.resize(dofs.size(), column);
    space.prolongation.setFromTriplets(triplets.begin(), triplets.end());
    space.prolongation.makeCompressed();

    const SparseOperator mass = assemble_mass(g, dofs);
    const double cond = gram_conditioning(space.prolongation, mass.matrix);
    if (cond < kDependenceBound) {
        throw NumericalError("build_offline_space: basis columns are linearly dependent (scaled Gram eigenvalue " +
                             std::to_string(cond) + ")");
    }
    return space;
}

OfflineSpace build_offline_space(const GridPair& g, const CellField& abar, Index uniform_count)
{
    const std::vector<Index> counts(static_cast<std::size_t>(g.num_interior_coarse_nodes()), uniform_count);
    return build_offline_space(g, abar, counts);
}

double gram_conditioning(const SparseMatrix& prolongation, const SparseMatrix& mass)
{
    require(prolongation.rows() == mass.rows(), "gram_conditioning: size mismatch");
    const Matrix gram = Matrix(prolongation.transpose() * (mass * prolongation));
    const Vector d = gram.diagonal();
    if (d.size() == 0) return 0.0;
    if (!(d.minCoeff() > 0.0)) return 0.0;
    const Vector s = d.cwiseSqrt().cwiseInverse();
    const Matrix scaled = s.asDiagonal() * gram * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(scaled, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace msdybo
