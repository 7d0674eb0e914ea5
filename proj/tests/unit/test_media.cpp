#include "msdybo/media.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace msdybo;

TEST(Media, TrigValuesFromClosedForm)
{
    const double pi = std::numbers::pi;
    const double x = 0.3, y = 0.55;
    EXPECT_NEAR(trig_value(x, y, 0.04, 1.6, 1.0 / 8, TrigVariant::DiagSin),
                0.04 * (2 + 1.6 * std::sin(2 * pi * (x - y) * 8)) / (2 - 1.6 * std::cos(2 * pi * (x - y) * 8)), 1e-15);
    EXPECT_NEAR(trig_value(x, y, 0.08, 1.5, 1.0 / 7, TrigVariant::AxisCos),
                0.08 * (2 + 1.5 * std::cos(2 * pi * x * 7)) / (2 - 1.5 * std::sin(2 * pi * y * 7)), 1e-15);
    EXPECT_NEAR(trig_value(x, y, 0.16, 1.4, 1.0 / 6, TrigVariant::Shifted),
                0.16 * (2 + 1.4 * std::sin(2 * pi * (x - 0.5) * 6)) / (2 - 1.4 * std::cos(2 * pi * (y - 0.5) * 6)),
                1e-15);
    EXPECT_NEAR(trig_value(x, y, 0.02, 1.7, 1.0 / 6, TrigVariant::DiagSum),
                0.02 * (2 + 1.7 * std::sin(2 * pi * (x - y) * 6)) / (2 - 1.7 * std::cos(2 * pi * (x + y) * 6)), 1e-15);
}

TEST(Media, TrigFieldsArePositiveAndBounded)
{
    const GridPair g(4, 8);
    for (const CellField& a : example1_fluctuations(g)) {
        EXPECT_GT(a.min(), 0.0);
        EXPECT_LT(a.max(), 0.16 * (2 + 1.4) / (2 - 1.4) + 1e-12);
    }
    EXPECT_EQ(example2_fluctuations(g).size(), 4u);
    EXPECT_THROW(trig_field(g, 1.0, 2.0, 0.1, TrigVariant::DiagSin), InvalidArgument);
}

TEST(Media, ChannelsDeterministicWithTwoValues)
{
    const GridPair g(10, 10);
    const CellField a = high_contrast_mean(g, 12, 4.0, 1000.0, 7);
    const CellField b = high_contrast_mean(g, 12, 4.0, 1000.0, 7);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_DOUBLE_EQ(a.min(), 4.0);
    EXPECT_DOUBLE_EQ(a.max(), 1000.0);
    for (Index c = 0; c < a.size(); ++c) EXPECT_TRUE(a[c] == 4.0 || a[c] == 1000.0);
    const CellField other = high_contrast_mean(g, 12, 4.0, 1000.0, 8);
    EXPECT_NE(a.values(), other.values());
}

TEST(Media, ModelBoundAndRealisation)
{
    const GridPair g(4, 5);
    const CoefficientModel model(high_contrast_mean(g, 3, 4.0, 1000.0, 1), example1_fluctuations(g));
    EXPECT_GT(model.min_bound(), 0.0);
    const std::array<double, 3> xi{1.0, -1.0, 0.5};
    const CellField a = model.realisation(xi);
    for (Index c = 0; c < a.size(); ++c) {
        const double expect =
            model.mean()[c] + model.fluctuation(0)[c] - model.fluctuation(1)[c] + 0.5 * model.fluctuation(2)[c];
        EXPECT_NEAR(a[c], expect, 1e-13);
        EXPECT_GT(a[c], 0.0);
    }
}

TEST(Media, ModelRejectsNonPositiveCoefficient)
{
    const GridPair g(2, 4);
    EXPECT_THROW(CoefficientModel(CellField::constant(g, 0.1), example1_fluctuations(g)), InvalidArgument);
}

TEST(Media, RasterRoundTrip)
{
    const GridPair g(3, 4);
    const CellField a = high_contrast_mean(g, 4, 1.0, 50.0, 3);
    const auto path = std::filesystem::temp_directory_path() / "msdybo_raster_roundtrip.txt";
    raster_export(path, g, a);
    const CellField b = raster_import(path, g, 2.0);
    EXPECT_LT((b.values() - 2.0 * a.values()).cwiseAbs().maxCoeff(), 1e-12 * a.max());
    std::filesystem::remove(path);
}

TEST(Media, RasterCoarserThanGridIsUpsampled)
{
    const GridPair g(2, 2);  // 4 x 4 fine cells
    const auto path = std::filesystem::temp_directory_path() / "msdybo_raster_coarse.txt";
    std::ofstream(path) << "1 2\n3 4\n";
    const CellField a = raster_import(path, g, 1.0);
    // top row of the raster is y-max
    EXPECT_DOUBLE_EQ(a[g.fine_cell(0, 3)], 1.0);
    EXPECT_DOUBLE_EQ(a[g.fine_cell(3, 3)], 2.0);
    EXPECT_DOUBLE_EQ(a[g.fine_cell(0, 0)], 3.0);
    EXPECT_DOUBLE_EQ(a[g.fine_cell(3, 0)], 4.0);
    std::ofstream(path) << "1 -2\n3 4\n";
    EXPECT_THROW((void)raster_import(path, g, 1.0), InvalidArgument);
    std::filesystem::remove(path);
}
