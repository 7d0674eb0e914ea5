#pragma once

#include "msdybo/fem.hpp"
#include "msdybo/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace msdybo {

/// Closed-form oscillating fields a(x) = amplitude · (2 + P s(x)) / (2 − P c(x)).
enum class TrigVariant {
    DiagSin,  ///< s = sin(2π(x1−x2)/ε), c = cos(2π(x1−x2)/ε)
    AxisCos,  ///< s = cos(2πx1/ε),      c = sin(2πx2/ε)
    Shifted,  ///< s = sin(2π(x1−½)/ε),  c = cos(2π(x2−½)/ε)
    DiagSum,  ///< s = sin(2π(x1−x2)/ε), c = cos(2π(x1+x2)/ε)
};

[[nodiscard]] TrigVariant parse_trig_variant(std::string_view name);

/// Pointwise value of the oscillating field.
[[nodiscard]] double trig_value(double x1, double x2, double amplitude, double P, double eps, TrigVariant variant);
/// Oscillating field sampled at fine-cell centres. Requires |P| < 2 and ε > 0.
[[nodiscard]] CellField trig_field(const GridPair& g, double amplitude, double P, double eps, TrigVariant variant);

/// Background medium with axis-aligned high-permeability channels.
///
/// Channels are straight strips of width ≥ one fine cell at the `contrast`
/// value; everything else is `background`. Deterministic given the seed.
[[nodiscard]] CellField high_contrast_mean(const GridPair& g, int n_channels, double background, double contrast,
                                           std::uint64_t seed);

/// Plain-text raster: whitespace-separated rows of positive decimals, top row = y-max.
/// Rows/columns must divide the number of fine cells per side; values are
/// resampled by nearest cell and multiplied by `scale`.
[[nodiscard]] CellField raster_import(const std::filesystem::path& path, const GridPair& g, double scale);
/// Write a cell field in the raster layout read by raster_import.
void raster_export(const std::filesystem::path& path, const GridPair& g, const CellField& field);

/// a(x, ω) = ā(x) + Σ_i a_i(x) ξ_i(ω), ξ_i i.i.d. uniform on [−1, 1].
class CoefficientModel {
public:
    /// Validates ā − Σ|a_i| > 0 cellwise; the error names the first violating cell.
    CoefficientModel(CellField mean, std::vector<CellField> fluctuations);

    [[nodiscard]] const CellField& mean() const { return mean_; }
    [[nodiscard]] const std::vector<CellField>& fluctuations() const { return fluctuations_; }
    [[nodiscard]] const CellField& fluctuation(int i) const { return fluctuations_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] int r() const { return static_cast<int>(fluctuations_.size()); }
    /// Cellwise lower bound ā − Σ|a_i| (minimum over cells).
    [[nodiscard]] double min_bound() const;
    /// Realisation a(x, ξ) at a point ξ ∈ [−1, 1]^r.
    [[nodiscard]] CellField realisation(std::span<const double> xi) const;

private:
    CellField mean_;
    std::vector<CellField> fluctuations_;
};

/// The three fluctuation fields of the first benchmark (r = 3).
[[nodiscard]] std::vector<CellField> example1_fluctuations(const GridPair& g);
/// The four fluctuation fields of the second benchmark (r = 4).
[[nodiscard]] std::vector<CellField> example2_fluctuations(const GridPair& g);

}  // namespace msdybo
