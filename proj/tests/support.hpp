#pragma once

#include <feelgrid/chart.hpp>
#include <feelgrid/render.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>

namespace feelgrid::test
{

inline std::filesystem::path fixture(const std::string& relative)
{
    return std::filesystem::path(FEELGRID_SOURCE_DIR) / "fixtures" / relative;
}

inline LoadedChart chart_from(const nlohmann::json& spec, const std::string& name = "chart")
{
    return load_chart(parse_spec(spec.dump(), name));
}

inline LoadedChart interest_chart()
{
    return load_chart_file(fixture("catalogue/interest_rates.vl.json"));
}

inline std::string iso_day(int epoch_day)
{
    // Howard Hinnant's civil_from_days, kept separate from the library's calendar code.
    int z = epoch_day + 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = z - era * 146097;
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    int y = yoe + era * 400;
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    const int d = doy - (153 * mp + 2) / 5 + 1;
    const int m = mp < 10 ? mp + 3 : mp - 9;
    if (m <= 2)
        ++y;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

inline int days_from_civil(int y, int m, int d)
{
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = y - era * 400;
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

/// Daily line chart with random integer values and a month/week/day hierarchy.
inline nlohmann::json random_daily_spec(std::mt19937_64& rng, int days, const std::string& op,
                                        int start_day = 19723)
{
    std::uniform_int_distribution<int> value(-50, 200);
    std::bernoulli_distribution skip(0.1);
    auto rows = nlohmann::json::array();
    for (int i = 0; i < days; ++i)
    {
        if (skip(rng))
            continue;
        rows.push_back({{"date", iso_day(start_day + i)}, {"v", value(rng)}});
    }
    return {{"mark", "line"},
            {"data", {{"values", rows}}},
            {"encoding",
             {{"x", {{"field", "date"}, {"type", "temporal"}}},
              {"y", {{"field", "v"}, {"type", "quantitative"}}}}},
            {"usermeta", {{"resolution", {{"op", op}, {"layers", {"month", "week", "day"}}}}}}};
}

/// Random line/bar/point chart over quantitative, quarterly, daily or nominal x.
inline nlohmann::json random_chart_spec(std::mt19937_64& rng)
{
    static const char* marks[] = {"line", "bar", "point"};
    std::uniform_int_distribution<int> pick3(0, 2);
    std::uniform_int_distribution<int> pick4(0, 3);
    std::uniform_int_distribution<int> rows_n(1, 80);
    std::uniform_real_distribution<double> yv(-20.0, 120.0);
    std::bernoulli_distribution coin(0.5);
    const std::string mark = marks[pick3(rng)];
    const int xkind = pick4(rng);
    const bool series = mark != "bar" && coin(rng);
    const int n = rows_n(rng);
    auto rows = nlohmann::json::array();
    std::uniform_real_distribution<double> xq(-500.0, 500.0);
    std::uniform_int_distribution<int> start(15000, 20000);
    const int base = start(rng);
    for (int i = 0; i < n; ++i)
    {
        nlohmann::json row;
        switch (xkind)
        {
        case 0:
            row["x"] = std::round(xq(rng) * 10) / 10;
            break;
        case 1:
            row["x"] = std::to_string(2000 + i / 4) + "-Q" + std::to_string(i % 4 + 1);
            break;
        case 2:
            row["x"] = iso_day(base + i);
            break;
        default:
            row["x"] = "c" + std::to_string(i % 23);
        }
        row["y"] = std::round(yv(rng) * 100) / 100;
        if (series)
            row["s"] = coin(rng) ? "alpha" : "beta";
        rows.push_back(row);
    }
    static const char* types[] = {"quantitative", "temporal", "temporal", "nominal"};
    nlohmann::json spec = {{"mark", mark},
                           {"data", {{"values", rows}}},
                           {"encoding",
                            {{"x", {{"field", "x"}, {"type", types[xkind]}}},
                             {"y", {{"field", "y"}, {"type", "quantitative"}}}}}};
    if (series)
        spec["encoding"]["color"] = {{"field", "s"}, {"type", "nominal"}};
    return spec;
}

/// Random viewport reached through pans and zooms from the default.
inline ViewportState random_viewport(std::mt19937_64& rng, const LoadedChart& chart)
{
    auto vp = default_viewport(chart);
    std::uniform_int_distribution<int> steps(0, 5);
    std::uniform_int_distribution<int> op(0, 5);
    const int n = steps(rng);
    for (int i = 0; i < n; ++i)
    {
        switch (op(rng))
        {
        case 0:
            vp = pan(chart, vp, PanDirection::left);
            break;
        case 1:
            vp = pan(chart, vp, PanDirection::right);
            break;
        case 2:
            vp = pan(chart, vp, PanDirection::up);
            break;
        case 3:
            vp = pan(chart, vp, PanDirection::down);
            break;
        case 4:
            vp = zoom(chart, vp, ZoomMode::geometric_in);
            break;
        default:
            vp = zoom(chart, vp, ZoomMode::geometric_out);
        }
    }
    return vp;
}

/// Axis position of a raw JSON x value, computed without the library's calendar.
inline double oracle_x(const nlohmann::json& v, const std::vector<std::string>& categories)
{
    if (v.is_number())
        return v.get<double>();
    const auto s = v.get<std::string>();
    if (s.size() == 7 && s[5] == 'Q')
        return days_from_civil(std::stoi(s.substr(0, 4)), (s[6] - '1') * 3 + 1, 1);
    if (s.size() == 10 && s[4] == '-')
        return days_from_civil(std::stoi(s.substr(0, 4)), std::stoi(s.substr(5, 2)), std::stoi(s.substr(8, 2)));
    for (std::size_t i = 0; i < categories.size(); ++i)
        if (categories[i] == s)
            return static_cast<double>(i);
    return -1;
}

/// First-appearance order of string x values.
inline std::vector<std::string> oracle_categories(const nlohmann::json& rows)
{
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (r["x"].is_string())
        {
            const auto s = r["x"].get<std::string>();
            if (std::find(out.begin(), out.end(), s) == out.end())
                out.push_back(s);
        }
    return out;
}

/// Linear interpolation into the 54x34 plot area at columns 6.. and rows 0..,
/// rounded half away from zero.
inline Cell oracle_cell(double x, double y, const Window& xw, const Window& yw)
{
    const double fx = (x - xw.lo) / (xw.hi - xw.lo);
    const double fy = (yw.hi - y) / (yw.hi - yw.lo);
    return {static_cast<int>(6 + std::lround(fx * 53)), static_cast<int>(std::lround(fy * 33))};
}

struct OracleReport
{
    std::size_t in_window = 0;
    std::size_t mismatched = 0;
    std::size_t unaccounted = 0;
    std::string first_problem;
};

/// Checks every in-window row of a base-layer chart against the oracle cell.
/// Rows without an element must be occluded by another element's footprint.
inline OracleReport check_placement(const nlohmann::json& spec, const TactileFrame& frame,
                                    const ViewportState& vp)
{
    OracleReport rep;
    const auto& rows = spec["data"]["values"];
    const auto cats = oracle_categories(rows);
    std::map<std::size_t, const ChartElement*> by_row;
    for (const auto& e : frame.elements)
        if (e.datum)
            by_row[e.datum->row] = &e;
    std::size_t occluded = 0;
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        const double x = oracle_x(rows[r]["x"], cats);
        const double y = rows[r]["y"].get<double>();
        if (x < vp.x.lo || x > vp.x.hi || y < vp.y.lo || y > vp.y.hi)
            continue;
        ++rep.in_window;
        const Cell want = oracle_cell(x, y, vp.x, vp.y);
        auto it = by_row.find(r);
        if (it != by_row.end())
        {
            if (it->second->position != want)
            {
                ++rep.mismatched;
                if (rep.first_problem.empty())
                    rep.first_problem = "row " + std::to_string(r) + " at (" +
                                        std::to_string(it->second->position.col) + "," +
                                        std::to_string(it->second->position.row) + ") expected (" +
                                        std::to_string(want.col) + "," + std::to_string(want.row) + ")";
            }
            continue;
        }
        ++occluded;
        bool covered = false;
        for (const auto& [row, e] : by_row)
            covered = covered || std::find(e->footprint.begin(), e->footprint.end(), want) != e->footprint.end();
        if (!covered)
        {
            ++rep.unaccounted;
            if (rep.first_problem.empty())
                rep.first_problem = "row " + std::to_string(r) + " missing";
        }
    }
    if (occluded != frame.occluded && rep.first_problem.empty())
        rep.first_problem = "occluded count differs";
    if (occluded != frame.occluded)
        ++rep.unaccounted;
    return rep;
}

} // namespace feelgrid::test
