#include "support.hpp"

#include <feelgrid/error.hpp>
#include <feelgrid/output.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace feelgrid;

namespace
{

LoadedChart monthly_chart()
{
    return test::chart_from({{"mark", "line"},
                             {"data",
                              {{"values",
                                {{{"m", "2021-04"}, {"r", 0.1}},
                                 {{"m", "2021-05"}, {"r", 0.25}},
                                 {{"m", "2021-06"}, {"r", 0.1}}}}}},
                             {"encoding",
                              {{"x", {{"field", "m"}, {"type", "temporal"}}},
                               {"y", {{"field", "r"}, {"type", "quantitative"}}}}},
                             {"usermeta", {{"units", {{"r", "%"}}}}}});
}

int element_for(const TactileFrame& f, const std::string& month)
{
    for (const auto& e : f.elements)
        if (e.datum && to_text(e.datum->x) == month)
            return e.element_id;
    return -1;
}

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (const auto& p : parts)
        out += p;
    return out;
}

Selection select(const TactileFrame& f, int id, Finger finger, Millis t)
{
    const auto* e = f.element(id);
    Selection s;
    s.finger = finger;
    s.element_id = id;
    s.kind = e->kind;
    s.datum = e->datum;
    s.label = e->label;
    s.cell = e->position;
    s.t = t;
    s.frame_id = f.frame_id;
    return s;
}

std::vector<ResponseChunk> two_highlighted_chunks()
{
    std::vector<ResponseChunk> chunks(2);
    chunks[0].text = "One. ";
    chunks[1].text = "Two.";
    chunks[1].index = 1;
    for (auto& c : chunks)
    {
        HighlightCommand h;
        h.cells = {{static_cast<int>(c.index), 0}};
        c.highlight = h;
    }
    return chunks;
}

} // namespace

TEST(Speech, DurationStub)
{
    EXPECT_EQ(speech_duration(""), 0);
    EXPECT_EQ(speech_duration("hi"), 300);
    EXPECT_EQ(speech_duration(std::string(10, 'a')), 500);
}

TEST(Highlight, Validation)
{
    HighlightCommand h;
    h.cells = {{0, 0}};
    EXPECT_NO_THROW(validate(h));
    h.pulse_hz = 5;
    EXPECT_THROW(validate(h), Error);
    h.pulse_hz = 2;
    h.cells = {{60, 0}};
    EXPECT_THROW(validate(h), Error);
}

TEST(TouchResponse, WorkedExampleFeedback)
{
    const auto chart = test::interest_chart();
    auto frame = render(chart, default_viewport(chart), 7);
    const auto a = select(frame, 0, Finger::left_index, 100);
    const auto b = select(frame, 12, Finger::right_index, 200);
    const auto r = touch_response({a, b}, frame, 300);
    EXPECT_EQ(r.speech.text, "2020 Quarter 2, interest 0.25% ... 2023 Quarter 2, interest 3.85%.");
    ASSERT_TRUE(r.highlight.has_value());
    EXPECT_EQ(r.highlight->element_ids, (std::vector<int>{0, 12}));
    EXPECT_EQ(r.element_ids, r.highlight->element_ids);
    EXPECT_EQ(r.highlight->frame_id, 7u);
    EXPECT_EQ(r.frame_id, 7u);
    for (const auto& c : r.highlight->cells)
    {
        EXPECT_NE(c, frame.element(0)->position);
        EXPECT_NE(c, frame.element(12)->position);
    }
}

TEST(TouchResponse, MissSaysNoDataPoint)
{
    const auto chart = test::interest_chart();
    const auto frame = render(chart, default_viewport(chart));
    const auto r = touch_response({}, frame, 0);
    EXPECT_EQ(r.speech.text, "no data point here");
    EXPECT_FALSE(r.highlight.has_value());
}

TEST(TouchResponse, RingClippedAtCorner)
{
    ChartElement e;
    e.position = {0, 0};
    e.footprint = {{0, 0}};
    const auto ring = ring_cells(e);
    EXPECT_EQ(ring.size(), 3u);
    for (const auto& c : ring)
        EXPECT_TRUE(in_frame(c));
    e.position = {10, 10};
    e.footprint = {{10, 10}};
    EXPECT_EQ(ring_cells(e).size(), 8u);
}

TEST(Sentences, MayJuneExampleSplitsInTwo)
{
    const std::string text = "In May 2021, interest rates increased to 0.25%. In June they dropped to 0.1%.";
    const auto parts = split_sentences(text);
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0], "In May 2021, interest rates increased to 0.25%. ");
    EXPECT_EQ(join(parts), text);
}

TEST(Sentences, Guards)
{
    EXPECT_EQ(split_sentences("Rates fell to 0.25% in Q2.").size(), 1u);
    // A quarter token followed by a year reads as a date, not a boundary.
    EXPECT_EQ(split_sentences("It peaked in Q2. 2021 was flat.").size(), 1u);
    EXPECT_EQ(split_sentences("It peaked in Q2. Then it fell.").size(), 2u);
    EXPECT_EQ(split_sentences("See e.g. Figure 2 for details.").size(), 1u);
    EXPECT_EQ(split_sentences("Approx. 3.5 million. Then 4.").size(), 2u);
    EXPECT_EQ(split_sentences("J. Smith wrote it.").size(), 1u);
    EXPECT_EQ(split_sentences("Is it up? Yes! It rose.").size(), 3u);
    EXPECT_EQ(split_sentences("No break here").size(), 1u);
}

TEST(Chunks, MayJuneExampleDisjointHighlights)
{
    const auto chart = monthly_chart();
    const auto frame = render(chart, default_viewport(chart));
    const int may = element_for(frame, "2021-05");
    const int june = element_for(frame, "2021-06");
    ASSERT_GE(may, 0);
    ASSERT_GE(june, 0);
    const std::string text = "In May 2021, interest rates increased to 0.25%. In June they dropped to 0.1%.";
    const auto chunks = segment_response(text, {{may}, {june}}, frame);
    ASSERT_EQ(chunks.size(), 2u);
    ASSERT_TRUE(chunks[0].highlight && chunks[1].highlight);
    std::set<Cell> first(chunks[0].highlight->cells.begin(), chunks[0].highlight->cells.end());
    for (const auto& c : chunks[1].highlight->cells)
        EXPECT_FALSE(first.count(c));
    EXPECT_EQ(chunks[0].referenced_elements, std::vector<int>{may});
    EXPECT_EQ(chunks[1].referenced_elements, std::vector<int>{june});
}

TEST(Chunks, NoAttributionNoHighlight)
{
    const auto chart = monthly_chart();
    const auto frame = render(chart, default_viewport(chart));
    const auto chunks = segment_response("One. Two.", {}, frame);
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_FALSE(chunks[0].highlight.has_value());
}

TEST(Chunks, ConcatenationIdentityFuzz)
{
    std::mt19937_64 rng(5);
    static const std::vector<std::string> pieces = {
        "Rates", "rose", "to", "0.25%", "in", "Q2", "Q2.", "2020", "e.g.", "Mr.", "A.", "fell", "3.85", "!",
        "?", ".", "...", " ", "  ", "\n", "\"Yes.\"", "(about", "1,000)", "U.S.", "Then", "—", "a"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> len(1, 40);
    const auto frame = TactileFrame{};
    for (int i = 0; i < 1000; ++i)
    {
        std::string text;
        const int n = len(rng);
        for (int k = 0; k < n; ++k)
        {
            text += pieces[pick(rng)];
            if (k + 1 < n)
                text += ' ';
        }
        const auto chunks = segment_response(text, {}, frame);
        std::string back;
        for (const auto& c : chunks)
            back += c.text;
        ASSERT_EQ(back, text);
    }
}

TEST(Chunks, NeverSplitInsideNumbers)
{
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> whole(0, 9999), frac(0, 99);
    for (int i = 0; i < 500; ++i)
    {
        const std::string number = std::to_string(whole(rng)) + "." + std::to_string(frac(rng));
        const std::string text = "The value was " + number + " percent. Next it was " + number + ".";
        const auto parts = split_sentences(text);
        ASSERT_EQ(parts.size(), 2u) << text;
        EXPECT_EQ(parts[0], "The value was " + number + " percent. ");
        EXPECT_EQ(parts[1], "Next it was " + number + ".");
    }
}

TEST(Playback, AutoAdvanceLog)
{
    Playback p(two_highlighted_chunks(), 0);
    p.finish();
    std::vector<std::string> kinds;
    for (const auto& e : p.log())
        kinds.push_back(e.kind);
    EXPECT_EQ(kinds, (std::vector<std::string>{"highlight", "speech", "highlight", "speech", "clear"}));
    EXPECT_EQ(p.log()[2].t, 300);
}

TEST(Playback, StopClearsAndEnds)
{
    std::vector<ResponseChunk> chunks(2);
    chunks[0].text = "One. ";
    chunks[1].text = "Two.";
    Playback p(chunks, 0);
    p.control(ButtonAction::stop, 100);
    p.finish();
    EXPECT_EQ(p.log().back().kind, "clear");
    for (const auto& e : p.log())
        EXPECT_NE(e.chunk, 1);
}

TEST(Playback, PreviousReissuesHighlightFirst)
{
    Playback p(two_highlighted_chunks(), 0);
    p.control(ButtonAction::page_right, 50);
    p.control(ButtonAction::page_left, 80);
    const auto& log = p.log();
    ASSERT_GE(log.size(), 2u);
    EXPECT_EQ(log[log.size() - 2].kind, "highlight");
    EXPECT_EQ(log[log.size() - 2].chunk, 0);
    EXPECT_EQ(log.back().kind, "speech");
    EXPECT_EQ(log.back().chunk, 0);
}
