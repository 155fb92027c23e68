#include "support.hpp"

#include <feelgrid/error.hpp>
#include <feelgrid/input.hpp>
#include <feelgrid/render.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace feelgrid;

TEST(MapToGrid, Endpoints)
{
    const Window xw{0, 10}, yw{0, 5};
    EXPECT_EQ(map_to_grid(0, 5, xw, yw), (Cell{6, 0}));
    EXPECT_EQ(map_to_grid(10, 0, xw, yw), (Cell{59, 33}));
    // 6 + 0.5 * 53 = 32.5 rounds away from zero.
    EXPECT_EQ(map_to_grid(5, 0, xw, yw).col, 33);
    EXPECT_THROW(map_to_grid(11, 0, xw, yw), Error);
}

TEST(Render, FirstAndLastQuarterAtPlotEdges)
{
    const auto chart = test::interest_chart();
    const auto frame = render(chart, default_viewport(chart));
    std::vector<const ChartElement*> data;
    for (const auto& e : frame.elements)
        if (e.kind == ElementKind::datum)
            data.push_back(&e);
    ASSERT_EQ(data.size(), 13u);
    EXPECT_EQ(data.front()->position.col, 6);
    EXPECT_EQ(data.back()->position.col, 59);
    EXPECT_EQ(data.back()->position.row, 0);
    EXPECT_EQ(data.front()->label, "2020 Quarter 2, interest 0.25%");
}

TEST(Render, ZeroLineWhenZeroInWindow)
{
    const auto chart = test::interest_chart();
    auto vp = default_viewport(chart);
    vp.y = {-1, 4};
    const auto frame = render(chart, vp);
    const int zero_row = map_to_grid(vp.x.lo, 0, vp.x, vp.y).row;
    int zero_cells = 0;
    for (int c = 6; c < 60; ++c)
        zero_cells += frame.marker({c, zero_row}) == Marker::zero_line;
    EXPECT_GT(zero_cells, 40);

    vp.y = {0.05, 4};
    const auto none = render(chart, vp);
    for (int r = 0; r < 40; ++r)
        for (int c = 0; c < 60; ++c)
            EXPECT_NE(none.marker({c, r}), Marker::zero_line);
}

TEST(Render, ScrollBarsOnBothSides)
{
    const auto chart = test::interest_chart();
    auto vp = default_viewport(chart);
    // Quarters 4..9 of 13 (1-based).
    vp.x = {static_cast<double>(Temporal::parse("2021-Q1").epoch_day()),
            static_cast<double>(Temporal::parse("2022-Q2").epoch_day())};
    const auto frame = render(chart, vp);
    EXPECT_TRUE(frame.scroll.left);
    EXPECT_TRUE(frame.scroll.right);
    EXPECT_FALSE(frame.scroll.up);
    int scroll_cells = 0;
    for (int r = 0; r < 40; ++r)
        for (int c = 0; c < 60; ++c)
            scroll_cells += frame.marker({c, r}) == Marker::scroll_bar;
    EXPECT_GT(scroll_cells, 1);
}

TEST(Render, EmptyViewportStillHasAxes)
{
    const auto chart = test::interest_chart();
    auto vp = default_viewport(chart);
    vp.y = {10, 20};
    const auto frame = render(chart, vp);
    EXPECT_TRUE(frame.empty_viewport);
    EXPECT_EQ(frame.marker({5, 10}), Marker::y_axis);
    EXPECT_TRUE(frame.raised({5, 10}));
}

TEST(Render, BarsAreTwoColumnsFromZero)
{
    const auto chart = load_chart_file(test::fixture("catalogue/profit_by_region.vl.json"));
    const auto vp = default_viewport(chart);
    const auto frame = render(chart, vp);
    const int zero_row = map_to_grid(vp.x.lo, 0, vp.x, vp.y).row;
    for (const auto& e : frame.elements)
    {
        if (e.kind != ElementKind::datum)
            continue;
        std::set<int> cols;
        for (const auto& c : e.footprint)
        {
            cols.insert(c.col);
            const int lo = std::min(e.position.row, zero_row);
            const int hi = std::max(e.position.row, zero_row);
            EXPECT_GE(c.row, lo);
            EXPECT_LE(c.row, hi);
        }
        EXPECT_EQ(cols.size(), 2u) << e.label;
    }
}

TEST(Render, NegativeBarHangsBelowZero)
{
    const auto chart = load_chart_file(test::fixture("catalogue/profit_by_region.vl.json"));
    const auto vp = default_viewport(chart);
    const auto frame = render(chart, vp);
    const int zero_row = map_to_grid(vp.x.lo, 0, vp.x, vp.y).row;
    for (const auto& e : frame.elements)
        if (e.datum && std::get<double>(e.datum->y) < 0)
            EXPECT_GT(e.position.row, zero_row);
}

TEST(Render, SeriesTexturesAreDistinct)
{
    std::set<std::vector<bool>> patterns;
    for (std::size_t s = 0; s < 4; ++s)
    {
        std::vector<bool> p;
        for (std::size_t n = 0; n < 12; ++n)
            p.push_back(texture_raised(series_texture(s), n));
        patterns.insert(p);
    }
    EXPECT_EQ(patterns.size(), 4u);
}

TEST(Render, Deterministic)
{
    const auto chart = load_chart_file(test::fixture("catalogue/height_weight.vl.json"));
    const auto vp = default_viewport(chart);
    const auto a = render(chart, vp, 1);
    const auto b = render(chart, vp, 1);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.dump_grid(), b.dump_grid());
    EXPECT_EQ(a.digest(), b.digest());
}

TEST(Render, DumpShape)
{
    const auto frame = render(test::interest_chart(), default_viewport(test::interest_chart()));
    const auto grid = frame.dump_grid();
    EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 40);
    EXPECT_EQ(grid.find('\n'), 60u);
}

TEST(Render, TicksBounded)
{
    const auto frame = render(test::interest_chart(), default_viewport(test::interest_chart()));
    int x_ticks = 0, y_ticks = 0;
    for (const auto& e : frame.elements)
        if (e.kind == ElementKind::axis_tick)
            (e.axis == Axis::x ? x_ticks : y_ticks)++;
    EXPECT_GE(x_ticks, 2);
    EXPECT_LE(x_ticks, 5);
    EXPECT_GE(y_ticks, 2);
    EXPECT_LE(y_ticks, 4);
}

TEST(Viewport, PanClampsAndInverts)
{
    const auto chart = test::interest_chart();
    const auto full = default_viewport(chart);
    EXPECT_EQ(pan(chart, full, PanDirection::right), full);
    const auto in = zoom(chart, zoom(chart, full, ZoomMode::geometric_in), ZoomMode::geometric_in);
    const auto back = pan(chart, pan(chart, in, PanDirection::left), PanDirection::right);
    EXPECT_DOUBLE_EQ(back.x.lo, in.x.lo);
    EXPECT_DOUBLE_EQ(back.x.hi, in.x.hi);
    EXPECT_EQ(back.magnification, in.magnification);
}

TEST(Viewport, GeometricZoomHalvesAboutCentre)
{
    const auto chart = test::interest_chart();
    const auto full = default_viewport(chart);
    const auto in = zoom(chart, full, ZoomMode::geometric_in);
    EXPECT_DOUBLE_EQ(in.x.span(), full.x.span() / 2);
    EXPECT_DOUBLE_EQ(in.x.center(), full.x.center());
    EXPECT_EQ(in.magnification, 2.0);
    const auto out = zoom(chart, in, ZoomMode::geometric_out);
    EXPECT_EQ(out, full);
}

TEST(Viewport, SemanticZoomStepsLayers)
{
    const auto chart = load_chart_file(test::fixture("catalogue/daily_visits.vl.json"));
    auto vp = default_viewport(chart);
    vp.active_layer = "month";
    vp = zoom(chart, vp, ZoomMode::semantic_in);
    EXPECT_EQ(vp.active_layer, "week");
    vp = zoom(chart, vp, ZoomMode::semantic_in);
    EXPECT_EQ(vp.active_layer, "day");
    try
    {
        zoom(chart, vp, ZoomMode::semantic_in);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::no_finer_layer);
    }
    vp.active_layer = "month";
    EXPECT_THROW(zoom(chart, vp, ZoomMode::semantic_out), Error);
}

TEST(Viewport, SelectLayerRule)
{
    const auto chart = load_chart_file(test::fixture("catalogue/daily_visits.vl.json"));
    const auto vp = default_viewport(chart);
    EXPECT_EQ(select_layer(chart, vp, 54), "week");
    EXPECT_EQ(select_layer(chart, vp, 90), "day");
    EXPECT_EQ(select_layer(chart, vp, 2), "month");
}

TEST(Labels, MeasureFormatting)
{
    const auto chart = test::interest_chart();
    EXPECT_EQ(measure_precision(chart), 2);
    EXPECT_EQ(format_measure(chart, 0.1), "0.10%");
    EXPECT_EQ(format_measure(chart, 3.85), "3.85%");
}

TEST(Labels, BraillePages)
{
    const auto chart = test::interest_chart();
    const auto pages = braille_pages(chart, {"interest 0.25%"});
    ASSERT_GE(pages.size(), 3u);
    for (const auto& p : pages)
        EXPECT_LE(p.size(), braille_line_cells);
    // Hand translation of "interest 0.25%": letters, space, number sign 0 . 2 5, percent.
    const std::string want = "⠊⠝⠞⠑⠗⠑⠎⠞⠀⠼⠚⠲⠃⠑⠨⠴";
    EXPECT_EQ(to_unicode(pages.back()), want);
}

// Every rendered datum sits at the cell an independent interpolation predicts,
// and touching its centre resolves back to it.
class RenderOracle : public ::testing::TestWithParam<int>
{
};

TEST_P(RenderOracle, PlacementAndRoundTrip)
{
    std::mt19937_64 rng(500 + GetParam());
    const auto spec = test::random_chart_spec(rng);
    const auto chart = test::chart_from(spec);
    const auto vp = test::random_viewport(rng, chart);
    const auto frame = render(chart, vp);
    const auto rep = test::check_placement(spec, frame, vp);
    EXPECT_EQ(rep.mismatched, 0u) << rep.first_problem;
    EXPECT_EQ(rep.unaccounted, 0u) << rep.first_problem;

    std::set<Cell> seen;
    for (const auto& e : frame.elements)
    {
        EXPECT_TRUE(in_frame(e.position));
        if (e.kind != ElementKind::datum)
            continue;
        for (const auto& c : e.footprint)
        {
            EXPECT_TRUE(seen.insert(c).second) << "footprints overlap";
            EXPECT_EQ(frame.marker(c), Marker::data_point);
        }
        const auto hit = infer_target({e.position.col + 0.5, e.position.row + 0.5}, frame);
        ASSERT_TRUE(hit.has_value());
        EXPECT_EQ(hit->element_id, e.element_id);
    }
    for (int r = 0; r < frame_height; ++r)
        for (int c = 0; c < frame_width; ++c)
            if (frame.raised({c, r}))
                EXPECT_TRUE(frame.marker({c, r}) != Marker::background || frame.structural({c, r}));
}

INSTANTIATE_TEST_SUITE_P(RandomCharts, RenderOracle, ::testing::Range(0, 60));
