#include "calc_oracle.hpp"
#include "support.hpp"

#include <feelgrid/agent.hpp>
#include <feelgrid/model_port.hpp>
#include <feelgrid/output.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace feelgrid;

namespace
{

Selection touch(const TactileFrame& f, int id, Finger finger, Millis t)
{
    const auto* e = f.element(id);
    Selection s;
    s.finger = finger;
    s.element_id = id;
    s.kind = e->kind;
    s.datum = e->datum;
    s.label = e->label;
    s.cell = e->position;
    s.probability = 0.99;
    s.t = t;
    return s;
}

struct Fixture
{
    ChartCatalogue catalogue = scan_catalogue(test::fixture("catalogue"));
    LoadedChart chart = test::interest_chart();
    ViewportState viewport = default_viewport(chart);
    TactileFrame frame = render(chart, viewport, 1);

    AgentContext context(std::vector<Selection> selections = {}, Millis now = 5000)
    {
        return {&catalogue, &chart, &frame, &viewport, std::move(selections), now, 30000};
    }

    std::vector<Selection> both_ends()
    {
        return {touch(frame, 0, Finger::left_index, 1000), touch(frame, 12, Finger::right_index, 2000)};
    }
};

class ScriptedPort : public ModelPort
{
public:
    explicit ScriptedPort(PortReply reply, bool fail = false) : reply_(std::move(reply)), fail_(fail)
    {
    }
    PortReply ask(const PortRequest& request) override
    {
        last = request;
        if (fail_)
            throw Error(Errc::port_timeout, "no reply within 10 s");
        return reply_;
    }
    PortRequest last;

private:
    PortReply reply_;
    bool fail_;
};

} // namespace

TEST(Deictic, LexicalScores)
{
    EXPECT_EQ(deictic_lexical_score("What is the maximum interest rate?"), 0.0);
    EXPECT_GT(deictic_lexical_score("What happened here?"), 0.0);
    EXPECT_GT(deictic_lexical_score("during this period"), deictic_lexical_score("is that right"));
    EXPECT_EQ(deictic_lexical_score("describe this chart"), 0.0);
}

TEST(Deictic, WorkedExampleSuffix)
{
    Fixture fx;
    const auto r = classify_deictic("What was the trend of the interest rate data during this period?",
                                    fx.both_ends(), &fx.chart, 4000);
    EXPECT_TRUE(r.fused);
    EXPECT_GE(r.confidence, deictic_threshold);
    EXPECT_NE(r.augmented.find("point_A {quarter=2020-Q2, interest=0.25%}"), std::string::npos);
    EXPECT_NE(r.augmented.find("point_B {quarter=2023-Q2, interest=3.85%}"), std::string::npos);
    EXPECT_EQ(r.augmented.rfind("What was the trend", 0), 0u);
}

TEST(Deictic, NoMarkersUnchanged)
{
    Fixture fx;
    const std::string q = "What is the maximum interest rate?";
    const auto r = classify_deictic(q, fx.both_ends(), &fx.chart, 4000);
    EXPECT_FALSE(r.fused);
    EXPECT_EQ(r.augmented, q);
}

TEST(Deictic, EmptyContextIsIdentity)
{
    Fixture fx;
    for (const char* q : {"What happened here?", "between these", "this point", "anything"})
    {
        const auto r = classify_deictic(q, {}, &fx.chart, 0);
        EXPECT_EQ(r.augmented, q);
        EXPECT_FALSE(r.fused);
    }
}

TEST(Deictic, MonotoneInSelections)
{
    Fixture fx;
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> id(0, 12);
    std::uniform_int_distribution<Millis> age(0, 40000);
    for (int i = 0; i < 200; ++i)
    {
        const auto a = touch(fx.frame, id(rng), Finger::left_index, 50000 - age(rng));
        const auto b = touch(fx.frame, id(rng), Finger::right_index, 50000 - age(rng));
        for (const char* q : {"what about this", "what happened here", "between these"})
        {
            const double one = classify_deictic(q, {a}, &fx.chart, 50000).confidence;
            const double two = classify_deictic(q, {a, b}, &fx.chart, 50000).confidence;
            EXPECT_GE(two, one);
        }
    }
}

TEST(Router, Categories)
{
    auto load = route_intent("load the interest rates chart");
    EXPECT_EQ(load.category, IntentCategory::LoadChart);
    EXPECT_EQ(load.chart_name, "interest rates");
    auto zoom = route_intent("zoom in");
    EXPECT_EQ(zoom.category, IntentCategory::Operations);
    EXPECT_EQ(zoom.operation, Operation::zoom_in);
    EXPECT_EQ(route_intent("give me an overview").category, IntentCategory::Overview);
    EXPECT_EQ(route_intent("what does the image look like").category, IntentCategory::ImageAnalysis);
    auto trend = route_intent("What was the trend of the interest rate data during this period? (touched: x)");
    EXPECT_EQ(trend.category, IntentCategory::DataExplore);
    EXPECT_EQ(trend.task, Task::trend);
    EXPECT_EQ(route_intent("what is the highest value").task, Task::max);
    EXPECT_EQ(route_intent("what was the lowest rate").task, Task::min);
    EXPECT_EQ(route_intent("what is the average").task, Task::mean);
    EXPECT_EQ(route_intent("how many points are there").task, Task::count);
    EXPECT_EQ(route_intent("compare these points").task, Task::compare_points);
    EXPECT_TRUE(route_intent("sing me a song").clarify);
    EXPECT_TRUE(route_intent("what is the average of those points").refers_previous);
}

TEST(Router, StripTouchSuffix)
{
    EXPECT_EQ(strip_touch_suffix("why here? (touched: point_A {a=1})"), "why here?");
    EXPECT_EQ(strip_touch_suffix("plain"), "plain");
}

TEST(Calculate, RangeDescribeOverFixture)
{
    Fixture fx;
    const auto series = series_points(fx.chart, fx.chart.table);
    const auto r = calculate(Task::range_describe, series, std::pair(series.front().x, series.back().x));
    EXPECT_DOUBLE_EQ(r.min, 0.10);
    EXPECT_DOUBLE_EQ(r.points.front().y, 0.25);
    EXPECT_DOUBLE_EQ(r.points.back().y, 3.85);
    const auto d = calculate(Task::compare_points, series, std::nullopt, {series.front().x, series.back().x});
    EXPECT_NEAR(d.value, 3.60, 1e-12);
    EXPECT_THROW(calculate(Task::min, series, std::pair(-10.0, -5.0)), Error);
}

TEST(Calculate, TrendSegmentsOverFixture)
{
    Fixture fx;
    const auto series = series_points(fx.chart, fx.chart.table);
    const auto r = calculate(Task::trend, series);
    ASSERT_EQ(r.segments.size(), 3u);
    EXPECT_EQ(r.segments[0].direction, Direction::decline);
    EXPECT_EQ(r.segments[1].direction, Direction::plateau);
    EXPECT_DOUBLE_EQ(r.points[r.segments[1].first].y, 0.10);
    EXPECT_EQ(r.segments[2].direction, Direction::rise);
}

class CalcProperty : public ::testing::TestWithParam<int>
{
};

TEST_P(CalcProperty, AgreesWithBruteForce)
{
    std::mt19937_64 rng(3000 + GetParam());
    test::CalcVerdict v;
    test::check_calc_case(rng, test::random_calc_case(rng), v);
    EXPECT_EQ(v.failures, 0u) << v.first_failure;
}

INSTANTIATE_TEST_SUITE_P(RandomTables, CalcProperty, ::testing::Range(0, 100));

TEST(Respond, WorkedExampleTrend)
{
    Fixture fx;
    Agent agent;
    const auto r = agent.respond("What was the trend of the interest rate data during this period?",
                                 fx.context(fx.both_ends(), 4000));
    EXPECT_FALSE(r.clarification);
    EXPECT_EQ(r.intent.task, Task::trend);
    EXPECT_EQ(r.text.rfind("From Q2 2020 to Q2 2023", 0), 0u) << r.text;
    const auto declined = r.text.find("declined");
    const auto remained = r.text.find("remained at 0.10%");
    const auto rose = r.text.find("rose to 3.85%");
    EXPECT_NE(declined, std::string::npos);
    EXPECT_LT(declined, remained);
    EXPECT_LT(remained, rose);
    EXPECT_LE(r.word_count, max_answer_words);
    EXPECT_EQ(r.word_count, count_words(r.text));
    EXPECT_EQ(r.text.find("approximately"), std::string::npos);
}

TEST(Respond, ClarifiesDeicticWithoutTouch)
{
    Fixture fx;
    Agent agent;
    const auto r = agent.respond("What happened here?", fx.context());
    EXPECT_TRUE(r.clarification);
    EXPECT_EQ(r.augmented, "What happened here?");
}

TEST(Respond, ListsAllTiesForMinimum)
{
    Fixture fx;
    Agent agent;
    const auto r = agent.respond("What was the lowest interest rate?", fx.context());
    EXPECT_NE(r.text.find("0.10%"), std::string::npos);
    // Seven quarters share the minimum; the answer names them or says how many more.
    EXPECT_NE(r.text.find("Q3 2020"), std::string::npos);
    EXPECT_LE(r.word_count, max_answer_words);
}

TEST(Respond, TwoMaximaBothNamed)
{
    auto chart = test::chart_from({{"mark", "bar"},
                                   {"data",
                                    {{"values",
                                      {{{"q", "2021-Q1"}, {"v", 4}},
                                       {{"q", "2021-Q2"}, {"v", 9}},
                                       {{"q", "2021-Q3"}, {"v", 9}},
                                       {{"q", "2021-Q4"}, {"v", 2}}}}}},
                                   {"encoding",
                                    {{"x", {{"field", "q"}, {"type", "temporal"}}},
                                     {"y", {{"field", "v"}, {"type", "quantitative"}}}}}});
    const auto vp = default_viewport(chart);
    const auto frame = render(chart, vp);
    Agent agent;
    const auto r = agent.respond("what was the highest value", {nullptr, &chart, &frame, &vp, {}, 0, 30000});
    EXPECT_NE(r.text.find("Q2 2021"), std::string::npos) << r.text;
    EXPECT_NE(r.text.find("Q3 2021"), std::string::npos) << r.text;
    ASSERT_EQ(r.sentence_elements.size(), 1u);
    EXPECT_EQ(r.sentence_elements[0].size(), 2u);
}

TEST(Respond, ExactMeanHasNoApproximately)
{
    auto chart = test::chart_from({{"mark", "line"},
                                   {"data", {{"values", {{{"x", 1}, {"v", 1}}, {{"x", 2}, {"v", 3}}}}}},
                                   {"encoding",
                                    {{"x", {{"field", "x"}, {"type", "quantitative"}}},
                                     {"y", {{"field", "v"}, {"type", "quantitative"}}}}},
                                   {"usermeta", {{"units", {{"v", "%"}}}}}});
    const auto vp = default_viewport(chart);
    const auto frame = render(chart, vp);
    Agent agent;
    const auto r = agent.respond("what is the average", {nullptr, &chart, &frame, &vp, {}, 0, 30000});
    EXPECT_NE(r.text.find("2.0%"), std::string::npos) << r.text;
    EXPECT_EQ(r.text.find("approximately"), std::string::npos);
}

TEST(Respond, CompareTouchedPoints)
{
    Fixture fx;
    Agent agent;
    const auto r = agent.respond("compare these two points", fx.context(fx.both_ends(), 4000));
    EXPECT_NE(r.text.find("3.60 percentage points higher"), std::string::npos) << r.text;
}

TEST(Respond, LoadAndOperationsCommands)
{
    Fixture fx;
    Agent agent;
    const auto load = agent.respond("load the daily visits chart", fx.context());
    ASSERT_EQ(load.commands.size(), 1u);
    EXPECT_EQ(load.commands[0].kind, CommandKind::load_chart);
    EXPECT_EQ(load.commands[0].chart, "daily_visits");
    const auto zoom = agent.respond("zoom in", fx.context());
    ASSERT_EQ(zoom.commands.size(), 1u);
    EXPECT_EQ(zoom.commands[0].operation, Operation::zoom_in);
}

TEST(Respond, ThosePointsReferToLastAnswer)
{
    Fixture fx;
    Agent agent;
    (void)agent.respond("What was the trend of the interest rate data during this period?",
                        fx.context(fx.both_ends(), 4000));
    EXPECT_FALSE(agent.last_rows().empty());
    const auto r = agent.respond("what is the average of those points", fx.context({}, 90000));
    EXPECT_NE(r.text.find("my last answer"), std::string::npos) << r.text;
}

TEST(Respond, ElementsReferencedExistOrOffScreen)
{
    Fixture fx;
    fx.viewport.x = {fx.viewport.x.lo, fx.viewport.x.center()};
    fx.frame = render(fx.chart, fx.viewport, 2);
    Agent agent;
    const auto r = agent.respond("what was the highest interest rate", fx.context());
    for (const auto& ids : r.sentence_elements)
        for (int id : ids)
            EXPECT_NE(fx.frame.element(id), nullptr);
    EXPECT_FALSE(r.off_screen_rows.empty());
}

TEST(Respond, WordLimitOverFuzzCorpus)
{
    Fixture fx;
    std::mt19937_64 rng(21);
    const std::vector<std::string> questions = {
        "what was the trend", "what is the highest value", "what is the lowest value", "what is the average",
        "what is the total", "how many data points", "describe the range", "what was the trend during this period",
        "compare these points", "what is the value here"};
    std::uniform_int_distribution<std::size_t> q(0, questions.size() - 1);
    std::uniform_int_distribution<int> id(0, 12);
    for (int i = 0; i < 300; ++i)
    {
        Agent agent;
        std::vector<Selection> sel;
        if (i % 2)
            sel = {touch(fx.frame, id(rng), Finger::left_index, 100), touch(fx.frame, id(rng), Finger::right_index, 200)};
        const auto r = agent.respond(questions[q(rng)], fx.context(sel, 1000));
        if (r.intent.category == IntentCategory::DataExplore)
            EXPECT_LE(r.word_count, max_answer_words) << r.text;
    }
}

TEST(Respond, DeterministicWithoutPort)
{
    Fixture fx;
    Agent a, b;
    const auto ra = a.respond("What was the trend of the interest rate data during this period?",
                              fx.context(fx.both_ends(), 4000));
    const auto rb = b.respond("What was the trend of the interest rate data during this period?",
                              fx.context(fx.both_ends(), 4000));
    EXPECT_EQ(ra.text, rb.text);
    EXPECT_EQ(ra.sentence_elements, rb.sentence_elements);
}

TEST(ModelPort, WrongCitationLosesToCalculation)
{
    Fixture fx;
    PortReply reply;
    reply.intent = IntentCategory::DataExplore;
    reply.task = Task::max;
    reply.answer = "The maximum was 9.9%.";
    reply.cited_values = {{"max", 9.9}};
    auto port = std::make_shared<ScriptedPort>(reply);
    Agent agent(port);
    const auto r = agent.respond("what is the highest interest rate", fx.context());
    EXPECT_NE(r.text.find("3.85%"), std::string::npos);
    bool logged = false;
    for (const auto& l : r.log)
        logged = logged || l.find("discarded") != std::string::npos;
    EXPECT_TRUE(logged);
    EXPECT_EQ(port->last.chart, "interest_rates");
}

TEST(ModelPort, VerifiedAnswerUsed)
{
    Fixture fx;
    PortReply reply;
    reply.task = Task::max;
    reply.answer = "The peak was 3.85% in Q2 2023.";
    reply.cited_values = {{"max", 3.85}};
    Agent agent(std::make_shared<ScriptedPort>(reply));
    const auto r = agent.respond("what is the highest interest rate", fx.context());
    EXPECT_EQ(r.text, reply.answer);
}

TEST(ModelPort, TimeoutFallsBack)
{
    Fixture fx;
    Agent agent(std::make_shared<ScriptedPort>(PortReply{}, true));
    const auto r = agent.respond("what is the highest interest rate", fx.context());
    EXPECT_NE(r.text.find("3.85%"), std::string::npos);
    ASSERT_FALSE(r.log.empty());
    EXPECT_NE(r.log.front().find("PortTimeout"), std::string::npos);
}

TEST(ModelPort, ReplySchema)
{
    const auto ok = PortReply::parse(R"({"intent":"DataExplore","task":"trend","answer":"x","cited_values":{"max":1}})");
    EXPECT_EQ(ok.task, Task::trend);
    EXPECT_EQ(ok.cited_values.at("max"), 1.0);
    EXPECT_THROW(PortReply::parse("not json"), Error);
    EXPECT_THROW(PortReply::parse(R"({"intent":"Dance"})"), Error);
}

TEST(ModelPort, RequestJsonHasVersion)
{
    PortRequest req;
    req.transcript = "hi";
    const auto j = nlohmann::json::parse(req.to_json());
    EXPECT_EQ(j["version"], port_schema_version);
    EXPECT_EQ(j["transcript"], "hi");
}

TEST(ModelPort, UnreachableEndpointIsTimeout)
{
    HttpModelPort port("http://127.0.0.1:9/answer", std::chrono::milliseconds(300));
    try
    {
        port.ask(PortRequest{});
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.code(), Errc::port_timeout);
    }
}
