#pragma once

#include "msdybo/common.hpp"

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace msdybo {

/// Ordered subset of fine-grid nodes with a global -> local lookup.
///
/// Local numbering follows the order the nodes were given in. Nodes absent
/// from the map are treated as eliminated (Dirichlet) by the assembly routines.
class DofMap {
public:
    DofMap() = default;
    explicit DofMap(std::vector<Index> nodes);

    [[nodiscard]] Index size() const { return static_cast<Index>(nodes_.size()); }
    [[nodiscard]] std::span<const Index> nodes() const { return nodes_; }
    [[nodiscard]] Index global(Index local) const { return nodes_[static_cast<std::size_t>(local)]; }
    /// Local index of a global node, or -1 when the node is not part of the map.
    [[nodiscard]] Index local(Index global) const;
    [[nodiscard]] bool contains(Index global) const { return local(global) >= 0; }

private:
    std::vector<Index> nodes_;
    std::vector<std::pair<Index, Index>> sorted_;  // (global, local)
};

/// Fine-grid description of one coarse neighborhood D_i.
struct Neighborhood {
    Index index = 0;       ///< interior coarse node number (0-based)
    Index node_x = 0;      ///< coarse node column, 1..n_coarse-1
    Index node_y = 0;      ///< coarse node row, 1..n_coarse-1
    std::vector<Index> coarse_cells;    ///< coarse cells touching the node
    std::vector<Index> fine_cells;      ///< fine cells of D_i, ascending
    std::vector<Index> nodes;           ///< all fine nodes of the closed patch, row-major
    std::vector<Index> boundary_nodes;  ///< J_h(D_i), counter-clockwise from the lower-left corner
    std::vector<Index> interior_nodes;  ///< fine nodes strictly inside D_i, row-major
};

/// Nested uniform coarse/fine quadrilateral meshes on the unit square.
///
/// Fine nodes are numbered row-major, `iy * (n_fine + 1) + ix`; fine cells
/// `cy * n_fine + cx`; coarse cells `Ky * n_coarse + Kx`. Interior coarse
/// nodes are numbered row-major from 0. Mesh sizes are side lengths 1/n; the
/// cell diagonal is sqrt(2)/n.
class GridPair {
public:
    GridPair(Index n_coarse, Index n_fine_per_coarse);

    [[nodiscard]] Index n_coarse() const { return n_coarse_; }
    [[nodiscard]] Index n_fine_per_coarse() const { return n_fine_per_coarse_; }
    [[nodiscard]] Index n_fine() const { return n_coarse_ * n_fine_per_coarse_; }
    [[nodiscard]] double coarse_size() const { return 1.0 / static_cast<double>(n_coarse_); }
    [[nodiscard]] double fine_size() const { return 1.0 / static_cast<double>(n_fine()); }
    [[nodiscard]] double coarse_diagonal() const;
    [[nodiscard]] double fine_diagonal() const;

    [[nodiscard]] Index num_fine_nodes() const { return (n_fine() + 1) * (n_fine() + 1); }
    [[nodiscard]] Index num_fine_cells() const { return n_fine() * n_fine(); }
    [[nodiscard]] Index num_coarse_cells() const { return n_coarse_ * n_coarse_; }
    [[nodiscard]] Index num_interior_coarse_nodes() const { return (n_coarse_ - 1) * (n_coarse_ - 1); }

    [[nodiscard]] Index fine_node(Index ix, Index iy) const { return iy * (n_fine() + 1) + ix; }
    [[nodiscard]] Index fine_cell(Index cx, Index cy) const { return cy * n_fine() + cx; }
    [[nodiscard]] Index coarse_cell(Index kx, Index ky) const { return ky * n_coarse_ + kx; }

    /// Corner nodes of a fine cell in the order (0,0), (1,0), (1,1), (0,1).
    [[nodiscard]] std::array<Index, 4> cell_nodes(Index cell) const;
    [[nodiscard]] Eigen::Vector2d cell_center(Index cell) const;
    [[nodiscard]] Eigen::Vector2d node_coords(Index node) const;
    [[nodiscard]] bool on_domain_boundary(Index node) const;

    /// Fine cells making up coarse cell (kx, ky), ascending.
    [[nodiscard]] std::vector<Index> coarse_cell_fine_cells(Index kx, Index ky) const;
    /// Fine nodes of the closed coarse cell (kx, ky), row-major.
    [[nodiscard]] std::vector<Index> coarse_cell_nodes(Index kx, Index ky) const;

    /// Fine nodes not on the boundary of the unit square (homogeneous Dirichlet dofs).
    [[nodiscard]] const DofMap& interior_dofs() const { return interior_dofs_; }

    [[nodiscard]] const Neighborhood& neighborhood(Index i) const;
    [[nodiscard]] std::span<const Neighborhood> neighborhoods() const { return neighborhoods_; }
    /// True when D_i and D_j share at least one coarse cell.
    [[nodiscard]] bool neighborhoods_overlap(Index i, Index j) const;

private:
    Index n_coarse_;
    Index n_fine_per_coarse_;
    DofMap interior_dofs_;
    std::vector<Neighborhood> neighborhoods_;
};

}  // namespace msdybo
