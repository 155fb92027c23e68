#include "input_oracle.hpp"
#include "support.hpp"

#include <feelgrid/error.hpp>
#include <feelgrid/input.hpp>
#include <feelgrid/session.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace feelgrid;

namespace
{

TactileFrame frame_with(std::vector<Cell> positions)
{
    TactileFrame f;
    int id = 0;
    for (const auto& p : positions)
    {
        ChartElement e;
        e.element_id = id++;
        e.position = p;
        e.footprint = {p};
        f.elements.push_back(e);
    }
    return f;
}

std::vector<std::pair<ActionEvent, int>> keyed(const std::vector<ActionEvent>& v)
{
    std::vector<std::pair<ActionEvent, int>> out;
    for (const auto& a : v)
        out.push_back({a, static_cast<int>(a.action)});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.t, a.second) < std::tie(b.first.t, b.second);
    });
    return out;
}

std::vector<ActionEvent> press(Button b, Millis down, Millis up)
{
    return test::run_buttons({{b, Edge::down, down}, {b, Edge::up, up}});
}

} // namespace

TEST(InferTarget, TwoCandidatesHandComputed)
{
    // Distances 1 and 2 pins from the contact point.
    const auto f = frame_with({{10, 10}, {13, 10}});
    const auto t = infer_target({11.5, 10.5}, f);
    ASSERT_TRUE(t.has_value());
    EXPECT_EQ(t->element_id, 0);
    const double want = std::exp(-0.5) / (std::exp(-0.5) + std::exp(-2.0));
    EXPECT_NEAR(t->probability, want, 1e-12);
    EXPECT_NEAR(t->probability, 0.818, 0.001);
}

TEST(InferTarget, NoneOutsideRadius)
{
    const auto f = frame_with({{10, 10}});
    EXPECT_FALSE(infer_target({20.5, 10.5}, f).has_value());
    EXPECT_TRUE(infer_target({13.5, 10.5}, f).has_value()); // exactly 3 pins
}

TEST(InferTarget, TieGoesToSmallerId)
{
    const auto f = frame_with({{12, 10}, {10, 10}});
    const auto t = infer_target({11.5, 10.5}, f);
    ASSERT_TRUE(t.has_value());
    EXPECT_EQ(t->element_id, 0);
    EXPECT_NEAR(t->probability, 0.5, 1e-12);
}

TEST(InferTarget, SmallSigmaIsNearestNeighbour)
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> col(0, 59), row(0, 39), count(1, 12);
    std::uniform_real_distribution<double> px(0, 60), py(0, 40);
    for (int i = 0; i < 1000; ++i)
    {
        std::vector<Cell> cells;
        const int n = count(rng);
        for (int k = 0; k < n; ++k)
            cells.push_back({col(rng), row(rng)});
        const auto f = frame_with(cells);
        const Point2 p{px(rng), py(rng)};
        std::optional<int> best;
        double best_d = 1e9;
        for (int k = 0; k < n; ++k)
        {
            const double d = std::hypot(cells[k].col + 0.5 - p.x, cells[k].row + 0.5 - p.y);
            if (d <= 3.0 && d < best_d)
            {
                best = k;
                best_d = d;
            }
        }
        const auto got = infer_target(p, f, 0.05);
        ASSERT_EQ(got.has_value(), best.has_value());
        if (best)
            EXPECT_EQ(got->element_id, *best);
    }
}

TEST(Contact, DebounceAndHysteresis)
{
    ContactDetector d;
    EXPECT_TRUE(d.feed({0, Finger::left_index, {5.5, 5.5}, 1.5, 1.0}).empty());
    const auto start = d.feed({10, Finger::left_index, {5.5, 5.5}, 1.5, 1.0});
    ASSERT_EQ(start.size(), 1u);
    EXPECT_EQ(start[0].kind, GestureKind::contact_start);
    EXPECT_EQ(start[0].t, 0);
    // Between the thresholds: still in contact.
    EXPECT_TRUE(d.feed({20, Finger::left_index, {5.5, 5.5}, 3.0, 1.0}).empty());
    EXPECT_TRUE(d.in_contact(Finger::left_index));
    const auto end = d.feed({30, Finger::left_index, {5.5, 5.5}, 4.5, 1.0});
    ASSERT_EQ(end.size(), 1u);
    EXPECT_EQ(end[0].kind, GestureKind::contact_end);
}

TEST(Contact, NeverTouchingEmitsNothing)
{
    ContactDetector d;
    for (Millis t = 0; t < 500; t += 10)
        EXPECT_TRUE(d.feed({t, Finger::right_index, {5, 5}, 2.5, 1.0}).empty());
    // A single low frame is not enough.
    EXPECT_TRUE(d.feed({500, Finger::right_index, {5, 5}, 1.0, 1.0}).empty());
    EXPECT_TRUE(d.feed({510, Finger::right_index, {5, 5}, 9.0, 1.0}).empty());
}

TEST(Contact, LowConfidenceDropped)
{
    ContactDetector d;
    EXPECT_TRUE(d.feed({0, Finger::left_index, {5, 5}, 1.0, 0.1}).empty());
    EXPECT_TRUE(d.feed({10, Finger::left_index, {5, 5}, 1.0, 0.1}).empty());
    EXPECT_EQ(d.dropped(), 2u);
}

TEST(Contact, NonIncreasingTimestampRejected)
{
    ContactDetector d;
    d.feed({10, Finger::left_index, {5, 5}, 1.0, 1.0});
    EXPECT_THROW(d.feed({10, Finger::left_index, {5, 5}, 1.0, 1.0}), Error);
    EXPECT_NO_THROW(d.feed({10, Finger::right_index, {5, 5}, 1.0, 1.0}));
}

TEST(Taps, TwoShortContactsMakeDoubleTap)
{
    const std::vector<test::Stroke> strokes{{Finger::left_index, 0, 100, {10, 10}, false},
                                            {Finger::left_index, 300, 400, {10, 10}, false}};
    const auto got = test::run_recognizer(test::stroke_frames(strokes));
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].kind, GestureKind::double_tap);
    EXPECT_EQ(got[0].t, 400);
}

TEST(Taps, FarApartAreTwoTaps)
{
    const std::vector<test::Stroke> strokes{{Finger::left_index, 0, 100, {10, 10}, false},
                                            {Finger::left_index, 700, 800, {10, 10}, false}};
    const auto got = test::run_recognizer(test::stroke_frames(strokes));
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].kind, GestureKind::tap);
    EXPECT_EQ(got[1].kind, GestureKind::tap);
}

TEST(Taps, GapBoundaryIsInclusive)
{
    for (Millis gap : {390, 400, 410})
    {
        const std::vector<test::Stroke> strokes{{Finger::left_index, 0, 100, {10, 10}, false},
                                                {Finger::left_index, 100 + gap, 200 + gap, {10, 10}, false}};
        const auto got = test::run_recognizer(test::stroke_frames(strokes));
        EXPECT_EQ(got.size(), gap <= 400 ? 1u : 2u) << gap;
    }
}

TEST(Taps, DurationBoundary)
{
    for (Millis d : {240, 250, 260})
    {
        const std::vector<test::Stroke> strokes{{Finger::right_index, 0, d, {10, 10}, false}};
        EXPECT_EQ(test::run_recognizer(test::stroke_frames(strokes)).size(), d <= 250 ? 1u : 0u) << d;
    }
}

TEST(Taps, BothFingersSelectIndependently)
{
    const auto frames_a = double_tap_frames(Finger::left_index, {6.5, 32.5}, 1000);
    auto frames = double_tap_frames(Finger::right_index, {59.5, 0.5}, 1050);
    frames.insert(frames.end(), frames_a.begin(), frames_a.end());
    const auto got = test::run_recognizer(frames);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].kind, GestureKind::double_tap);
    EXPECT_EQ(got[1].kind, GestureKind::double_tap);
    EXPECT_NE(got[0].finger, got[1].finger);
}

class TapProperty : public ::testing::TestWithParam<int>
{
};

TEST_P(TapProperty, MatchesReferenceClassifier)
{
    std::mt19937_64 rng(77 + GetParam());
    const auto left = test::random_strokes(rng, Finger::left_index, 12);
    const auto right = test::random_strokes(rng, Finger::right_index, 12);
    auto frames = test::stroke_frames(left);
    const auto rf = test::stroke_frames(right);
    frames.insert(frames.end(), rf.begin(), rf.end());
    auto want = test::oracle_taps(left);
    const auto wr = test::oracle_taps(right);
    want.insert(want.end(), wr.begin(), wr.end());
    auto got = test::run_recognizer(frames);
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, want);
}

INSTANTIATE_TEST_SUITE_P(RandomStrokes, TapProperty, ::testing::Range(0, 100));

TEST(Selection, CachedPerFingerWithTtl)
{
    TouchContext ctx(1000);
    auto f = frame_with({{10, 10}});
    f.elements[0].label = "x";
    GestureEvent g;
    g.kind = GestureKind::double_tap;
    g.finger = Finger::left_index;
    g.target = Target{0, 0.9};
    g.t = 100;
    const auto s = cache_selection(g, f, ctx);
    EXPECT_EQ(s.label, "x");
    EXPECT_EQ(ctx.snapshot(500).size(), 1u);
    EXPECT_TRUE(ctx.snapshot(1100).empty());
    g.target.reset();
    try
    {
        cache_selection(g, f, ctx);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::unresolved_target);
    }
}

TEST(Buttons, QuickBoundaryAt200)
{
    EXPECT_EQ(press(Button::Right, 0, 199), (std::vector<ActionEvent>{{ButtonAction::page_right, 199}}));
    EXPECT_TRUE(press(Button::Right, 0, 200).empty());
    EXPECT_EQ(press(Button::Left, 0, 50), (std::vector<ActionEvent>{{ButtonAction::page_left, 100}}));
}

TEST(Buttons, HoldBoundaryAt500)
{
    EXPECT_TRUE(press(Button::F2, 0, 499).empty());
    EXPECT_EQ(press(Button::F2, 0, 500), (std::vector<ActionEvent>{{ButtonAction::stop, 500}}));
    EXPECT_EQ(press(Button::Left, 0, 900), (std::vector<ActionEvent>{{ButtonAction::previous_datum, 500}}));
}

TEST(Buttons, HoldFiresWhileStillDown)
{
    ButtonClassifier c;
    c.feed({Button::F3, Edge::down, 0});
    EXPECT_TRUE(c.advance(499).empty());
    EXPECT_EQ(c.advance(500), (std::vector<ActionEvent>{{ButtonAction::repeat, 500}}));
    EXPECT_TRUE(c.advance(900).empty());
}

TEST(Buttons, ComboWindowAt100)
{
    auto combo = [](Millis lag) {
        return test::run_buttons({{Button::Left, Edge::down, 0},
                                  {Button::F1, Edge::down, lag},
                                  {Button::Left, Edge::up, lag + 50},
                                  {Button::F1, Edge::up, lag + 60}});
    };
    EXPECT_EQ(combo(80), (std::vector<ActionEvent>{{ButtonAction::pan_left, 80}}));
    EXPECT_EQ(combo(100), (std::vector<ActionEvent>{{ButtonAction::pan_left, 100}}));
    EXPECT_EQ(combo(101), (std::vector<ActionEvent>{{ButtonAction::page_left, 151}}));
}

TEST(Buttons, LeftRightWithinWindowSuppressPaging)
{
    const auto got = test::run_buttons({{Button::Left, Edge::down, 0},
                                        {Button::Right, Edge::down, 80},
                                        {Button::Left, Edge::up, 120},
                                        {Button::Right, Edge::up, 150}});
    EXPECT_TRUE(got.empty());
}

TEST(Buttons, RepeatedEdgeRejected)
{
    ButtonClassifier c;
    c.feed({Button::F1, Edge::down, 0});
    EXPECT_THROW(c.feed({Button::F1, Edge::down, 10}), Error);
    EXPECT_THROW(c.feed({Button::F2, Edge::down, 5}), Error);
}

class ButtonProperty : public ::testing::TestWithParam<int>
{
};

TEST_P(ButtonProperty, MatchesReferenceModel)
{
    std::mt19937_64 rng(900 + GetParam());
    const auto script = test::random_button_script(rng, 20);
    EXPECT_EQ(keyed(test::run_buttons(script.events)), keyed(script.expected));
}

INSTANTIATE_TEST_SUITE_P(RandomPresses, ButtonProperty, ::testing::Range(0, 100));
