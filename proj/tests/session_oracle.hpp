#pragma once

// Random replay streams and a helper that runs one to its printed output.

#include "support.hpp"

#include <feelgrid/session.hpp>

#include <random>
#include <sstream>
#include <string>

namespace feelgrid::test
{

inline std::string random_replay(std::mt19937_64& rng)
{
    static const char* charts[] = {"interest_rates", "daily_visits", "profit_by_region", "height_weight", "missing"};
    static const char* buttons[] = {"Left", "Right", "F1", "F2", "F3", "F4"};
    static const char* queries[] = {
        "What was the trend of the interest rate data during this period?",
        "What is the maximum?",
        "What is the average between these points?",
        "Compare these two points",
        "zoom in",
        "load the daily visits chart",
        "tell me about those points",
        "hmm",
    };
    std::uniform_int_distribution<int> kind(0, 9), chart(0, 4), button(0, 5), query(0, 7), gap(1, 700),
        hold(20, 900), x(0, 599), y(0, 399);
    std::ostringstream out;
    Millis t = 0;
    auto line = [&](const char* k, const nlohmann::json& payload) {
        out << nlohmann::json{{"t", t}, {"kind", k}, {"payload", payload}}.dump() << '\n';
    };
    line("load", {{"chart", "interest_rates"}});
    std::uniform_int_distribution<int> count(5, 40);
    const int n = count(rng);
    for (int i = 0; i < n; ++i)
    {
        t += gap(rng);
        const double px = x(rng) / 10.0, py = y(rng) / 10.0;
        const char* finger = kind(rng) % 2 ? "left" : "right";
        switch (kind(rng))
        {
        case 0: line("load", {{"chart", charts[chart(rng)]}}); break;
        case 1:
        case 2: line("double_tap", {{"finger", finger}, {"x", px}, {"y", py}}); break;
        case 3: line("tap", {{"finger", finger}, {"x", px}, {"y", py}}); break;
        case 4:
        case 5:
        {
            const char* b = buttons[button(rng)];
            line("button", {{"button", b}, {"edge", "down"}});
            t += hold(rng);
            line("button", {{"button", b}, {"edge", "up"}});
            break;
        }
        case 6: line("advance", nlohmann::json::object()); break;
        default: line("query", {{"transcript", queries[query(rng)]}}); break;
        }
    }
    return out.str();
}

/// Log lines followed by the frame digest, as the replay command prints them.
inline std::string run_replay_text(const std::string& stream)
{
    std::istringstream in(stream);
    const auto events = parse_replay(in);
    Session session(scan_catalogue(fixture("catalogue")));
    run_replay(session, events);
    std::string out;
    for (const auto& l : session.log())
        out += l + '\n';
    out += "digest " + session.frame_digest() + '\n';
    return out;
}

} // namespace feelgrid::test
