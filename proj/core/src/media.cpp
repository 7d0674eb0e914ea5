#include "msdybo/media.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace msdybo {

TrigVariant parse_trig_variant(std::string_view name)
{
    if (name == "diag-sin") return TrigVariant::DiagSin;
    if (name == "axis-cos") return TrigVariant::AxisCos;
    if (name == "shifted") return TrigVariant::Shifted;
    if (name == "diag-sum") return TrigVariant::DiagSum;
    throw InvalidArgument("unknown trig variant '" + std::string(name) + "'");
}

double trig_value(double x1, double x2, double amplitude, double P, double eps, TrigVariant variant)
{
    const double w = 2.0 * std::numbers::pi / eps;
    double s = 0.0;
    double c = 0.0;
    switch (variant) {
    case TrigVariant::DiagSin:
        s = std::sin(w * (x1 - x2));
        c = std::cos(w * (x1 - x2));
        break;
    case TrigVariant::AxisCos:
        s = std::cos(w * x1);
        c = std::sin(w * x2);
        break;
    case TrigVariant::Shifted:
        s = std::sin(w * (x1 - 0.5));
        c = std::cos(w * (x2 - 0.5));
        break;
    case TrigVariant::DiagSum:
        s = std::sin(w * (x1 - x2));
        c = std::cos(w * (x1 + x2));
        break;
    }
    return amplitude * (2.0 + P * s) / (2.0 - P * c);
}

CellField trig_field(const GridPair& g, double amplitude, double P, double eps, TrigVariant variant)
{
    require(std::abs(P) < 2.0, "trig_field: |P| must be < 2, got " + std::to_string(P));
    require(eps > 0.0, "trig_field: eps must be positive");
    Vector v(g.num_fine_cells());
    for (Index c = 0; c < g.num_fine_cells(); ++c) {
        const Eigen::Vector2d x = g.cell_center(c);
        v[c] = trig_value(x[0], x[1], amplitude, P, eps, variant);
    }
    return CellField(std::move(v));
}

CellField high_contrast_mean(const GridPair& g, int n_channels, double background, double contrast,
                             std::uint64_t seed)
{
    require(n_channels >= 0, "high_contrast_mean: channel count must be nonnegative");
    require(background > 0.0, "high_contrast_mean: background must be positive");
    require(contrast > background, "high_contrast_mean: contrast must exceed background");

    const Index n = g.n_fine();
    Vector v = Vector::Constant(g.num_fine_cells(), background);
    std::mt19937_64 rng(seed);
    // 53-bit uniform draw, independent of the standard library's distribution code
    const auto uniform = [&rng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    const auto to_cell = [n](double x) { return std::clamp<Index>(static_cast<Index>(std::floor(x * n)), 0, n - 1); };

    for (int k = 0; k < n_channels; ++k) {
        const bool horizontal = (rng() >> 63) != 0;
        const double centre = uniform(0.05, 0.95);
        const double width = uniform(0.01, 0.03);
        const double start = uniform(0.0, 0.5);
        const double length = uniform(0.4, 1.0);
        const Index c0 = to_cell(centre - 0.5 * width);
        const Index c1 = std::max(c0, to_cell(centre + 0.5 * width));
        const Index s0 = to_cell(start);
        const Index s1 = to_cell(std::min(1.0, start + length));
        for (Index across = c0; across <= c1; ++across) {
            for (Index along = s0; along <= s1; ++along) {
                const Index cell = horizontal ? g.fine_cell(along, across) : g.fine_cell(across, along);
                v[cell] = contrast;
            }
        }
    }
    return CellField(std::move(v));
}

CellField raster_import(const std::filesystem::path& path, const GridPair& g, double scale)
{
    require(scale > 0.0, "raster_import: scale must be positive");
    std::ifstream in(path);
    require(in.good(), "raster_import: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string token;
        while (ls >> token) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            require(used == token.size(), "raster_import: " + path.string() + ":" + std::to_string(line_no) +
                                              ": malformed number '" + token + "'");
            require(value > 0.0 && std::isfinite(value), "raster_import: " + path.string() + ":" +
                                                             std::to_string(line_no) + ": non-positive value " + token);
            row.push_back(value);
        }
        if (row.empty()) continue;
        require(rows.empty() || row.size() == rows.front().size(),
                "raster_import: " + path.string() + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "raster_import: " + path.string() + " is empty");

    const Index n = g.n_fine();
    const auto n_rows = static_cast<Index>(rows.size());
    const auto n_cols = static_cast<Index>(rows.front().size());
    require(n_rows <= n && n % n_rows == 0 && n_cols <= n && n % n_cols == 0,
            "raster_import: raster " + std::to_string(n_rows) + "x" + std::to_string(n_cols) +
                " incompatible with " + std::to_string(n) + "x" + std::to_string(n) + " fine cells");

    Vector v(g.num_fine_cells());
    for (Index cy = 0; cy < n; ++cy) {
        const Index row = n_rows - 1 - cy * n_rows / n;  // top row is y-max
        for (Index cx = 0; cx < n; ++cx) {
            const Index col = cx * n_cols / n;
            v[g.fine_cell(cx, cy)] = scale * rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
        }
    }
    return CellField(std::move(v));
}

void raster_export(const std::filesystem::path& path, const GridPair& g, const CellField& field)
{
    require(field.size() == g.num_fine_cells(), "raster_export: field/grid size mismatch");
    std::ofstream out(path);
    require(out.good(), "raster_export: cannot write " + path.string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const Index n = g.n_fine();
    for (Index cy = n - 1; cy >= 0; --cy) {
        for (Index cx = 0; cx < n; ++cx) {
            out << field[g.fine_cell(cx, cy)] << (cx + 1 < n ? ' ' : '\n');
        }
    }
}

CoefficientModel::CoefficientModel(CellField mean, std::vector<CellField> fluctuations)
    : mean_(std::move(mean)), fluctuations_(std::move(fluctuations))
{
    require(mean_.size() > 0, "CoefficientModel: empty mean field");
    Vector bound = mean_.values();
    for (const auto& a : fluctuations_) {
        require(a.size() == mean_.size(), "CoefficientModel: fluctuation size differs from mean");
        bound -= a.values().cwiseAbs();
    }
    for (Index c = 0; c < bound.size(); ++c) {
        if (!(bound[c] > 0.0)) {
            throw InvalidArgument("CoefficientModel: mean minus fluctuation bound is " + std::to_string(bound[c]) +
                                  " <= 0 at cell " + std::to_string(c));
        }
    }
}

double CoefficientModel::min_bound() const
{
    Vector bound = mean_.values();
    for (const auto& a : fluctuations_) bound -= a.values().cwiseAbs();
    return bound.minCoeff();
}

CellField CoefficientModel::realisation(std::span<const double> xi) const
{
    require(static_cast<int>(xi.size()) == r(), "CoefficientModel::realisation: wrong number of variables");
    Vector v = mean_.values();
    for (int i = 0; i < r(); ++i) v += xi[static_cast<std::size_t>(i)] * fluctuation(i).values();
    return CellField(std::move(v));
}

std::vector<CellField> example1_fluctuations(const GridPair& g)
{
    return {
        trig_field(g, 0.04, 1.6, 1.0 / 8.0, TrigVariant::DiagSin),
        trig_field(g, 0.08, 1.5, 1.0 / 7.0, TrigVariant::AxisCos),
        trig_field(g, 0.16, 1.4, 1.0 / 6.0, TrigVariant::Shifted),
    };
}

std::vector<CellField> example2_fluctuations(const GridPair& g)
{
    const double P[] = {1.4, 1.5, 1.6, 1.7};
    const double eps[] = {1.0 / 9.0, 1.0 / 8.0, 1.0 / 7.0, 1.0 / 6.0};
    std::vector<CellField> out;
    for (int i = 0; i < 4; ++i) out.push_back(trig_field(g, 0.02, P[i], eps[i], TrigVariant::DiagSum));
    return out;
}

}  // namespace msdybo
