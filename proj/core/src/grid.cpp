#include "msdybo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace msdybo {

DofMap::DofMap(std::vector<Index> nodes) : nodes_(std::move(nodes))
{
    sorted_.reserve(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        sorted_.emplace_back(nodes_[k], static_cast<Index>(k));
    }
    std::sort(sorted_.begin(), sorted_.end());
    const auto dup = std::adjacent_find(sorted_.begin(), sorted_.end(),
                                        [](const auto& a, const auto& b) { return a.first == b.first; });
    require(dup == sorted_.end(), "DofMap: duplicate node " + (dup == sorted_.end() ? std::string{} : std::to_string(dup->first)));
}

Index DofMap::local(Index global) const
{
    const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), std::make_pair(global, Index{-1}));
    if (it == sorted_.end() || it->first != global) {
        return -1;
    }
    return it->second;
}

GridPair::GridPair(Index n_coarse, Index n_fine_per_coarse)
    : n_coarse_(n_coarse), n_fine_per_coarse_(n_fine_per_coarse)
{
    require(n_coarse >= 2, "GridPair: n_coarse must be >= 2, got " + std::to_string(n_coarse));
    require(n_fine_per_coarse >= 2,
            "GridPair: n_fine_per_coarse must be >= 2, got " + std::to_string(n_fine_per_coarse));

    const Index nf = n_fine();
    std::vector<Index> interior;
    interior.reserve(static_cast<std::size_t>((nf - 1) * (nf - 1)));
    for (Index iy = 1; iy < nf; ++iy) {
        for (Index ix = 1; ix < nf; ++ix) {
            interior.push_back(fine_node(ix, iy));
        }
    }
    interior_dofs_ = DofMap(std::move(interior));

    const Index m = n_fine_per_coarse_;
    neighborhoods_.reserve(static_cast<std::size_t>(num_interior_coarse_nodes()));
    for (Index ny = 1; ny < n_coarse_; ++ny) {
        for (Index nx = 1; nx < n_coarse_; ++nx) {
            Neighborhood nb;
            nb.index = static_cast<Index>(neighborhoods_.size());
            nb.node_x = nx;
            nb.node_y = ny;
            for (Index ky = ny - 1; ky <= ny; ++ky) {
                for (Index kx = nx - 1; kx <= nx; ++kx) {
                    nb.coarse_cells.push_back(coarse_cell(kx, ky));
                }
            }
            const Index x0 = (nx - 1) * m;
            const Index x1 = (nx + 1) * m;
            const Index y0 = (ny - 1) * m;
            const Index y1 = (ny + 1) * m;
            for (Index cy = y0; cy < y1; ++cy) {
                for (Index cx = x0; cx < x1; ++cx) {
                    nb.fine_cells.push_back(fine_cell(cx, cy));
                }
            }
            for (Index iy = y0; iy <= y1; ++iy) {
                for (Index ix = x0; ix <= x1; ++ix) {
                    nb.nodes.push_back(fine_node(ix, iy));
                    if (ix > x0 && ix < x1 && iy > y0 && iy < y1) {
                        nb.interior_nodes.push_back(fine_node(ix, iy));
                    }
                }
            }
            // counter-clockwise walk around the patch boundary
            for (Index ix = x0; ix < x1; ++ix) nb.boundary_nodes.push_back(fine_node(ix, y0));
            for (Index iy = y0; iy < y1; ++iy) nb.boundary_nodes.push_back(fine_node(x1, iy));
            for (Index ix = x1; ix > x0; --ix) nb.boundary_nodes.push_back(fine_node(ix, y1));
            for (Index iy = y1; iy > y0; --iy) nb.boundary_nodes.push_back(fine_node(x0, iy));
            neighborhoods_.push_back(std::move(nb));
        }
    }
}

double GridPair::coarse_diagonal() const { return std::sqrt(2.0) * coarse_size(); }
double GridPair::fine_diagonal() const { return std::sqrt(2.0) * fine_size(); }

std::array<Index, 4> GridPair::cell_nodes(Index cell) const
{
    const Index cx = cell % n_fine();
    const Index cy = cell / n_fine();
    return {fine_node(cx, cy), fine_node(cx + 1, cy), fine_node(cx + 1, cy + 1), fine_node(cx, cy + 1)};
}

Eigen::Vector2d GridPair::cell_center(Index cell) const
{
    const double h = fine_size();
    return {(static_cast<double>(cell % n_fine()) + 0.5) * h, (static_cast<double>(cell / n_fine()) + 0.5) * h};
}

Eigen::Vector2d GridPair::node_coords(Index node) const
{
    const double h = fine_size();
    const Index stride = n_fine() + 1;
    return {static_cast<double>(node % stride) * h, static_cast<double>(node / stride) * h};
}

bool GridPair::on_domain_boundary(Index node) const
{
    const Index stride = n_fine() + 1;
    const Index ix = node % stride;
    const Index iy = node / stride;
    return ix == 0 || iy == 0 || ix == n_fine() || iy == n_fine();
}

std::vector<Index> GridPair::coarse_cell_fine_cells(Index kx, Index ky) const
{
    require(kx >= 0 && kx < n_coarse_ && ky >= 0 && ky < n_coarse_, "coarse cell out of range");
    std::vector<Index> cells;
    const Index m = n_fine_per_coarse_;
    for (Index cy = ky * m; cy < (ky + 1) * m; ++cy) {
        for (Index cx = kx * m; cx < (kx + 1) * m; ++cx) {
            cells.push_back(fine_cell(cx, cy));
        }
    }
    return cells;
}

std::vector<Index> GridPair::coarse_cell_nodes(Index kx, Index ky) const
{
    require(kx >= 0 && kx < n_coarse_ && ky >= 0 && ky < n_coarse_, "coarse cell out of range");
    std::vector<Index> nodes;
    const Index m = n_fine_per_coarse_;
    for (Index iy = ky * m; iy <= (ky + 1) * m; ++iy) {
        for (Index ix = kx * m; ix <= (kx + 1) * m; ++ix) {
            nodes.push_back(fine_node(ix, iy));
        }
    }
    return nodes;
}

const Neighborhood& GridPair::neighborhood(Index i) const
{
    require(i >= 0 && i < num_interior_coarse_nodes(),
            "neighborhood index " + std::to_string(i) + " out of range [0, " +
                std::to_string(num_interior_coarse_nodes()) + ")");
    return neighborhoods_[static_cast<std::size_t>(i)];
}

bool GridPair::neighborhoods_overlap(Index i, Index j) const
{
    const auto& a = neighborhood(i);
    const auto& b = neighborhood(j);
    return std::abs(a.node_x - b.node_x) <= 1 && std::abs(a.node_y - b.node_y) <= 1;
}

}  // namespace msdybo
