#pragma once

// Brute-force recomputation of the nine analytic tasks over raw JSON rows.

#include "support.hpp"

#include <feelgrid/agent.hpp>
#include <feelgrid/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace feelgrid::test
{

struct CalcCase
{
    nlohmann::json spec;
    std::vector<std::pair<double, std::optional<double>>> rows; // x, y (null when absent)
};

inline CalcCase random_calc_case(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> n_rows(1, 1000), y(-1000, 1000), flat(0, 3);
    std::bernoulli_distribution null_y(0.05), plateau(0.2);
    const int n = n_rows(rng);
    std::vector<int> xs(static_cast<std::size_t>(n));
    std::iota(xs.begin(), xs.end(), -n / 2);
    std::shuffle(xs.begin(), xs.end(), rng);
    CalcCase c;
    auto values = nlohmann::json::array();
    int last = 0;
    for (int x : xs)
    {
        nlohmann::json row{{"x", x}};
        std::optional<double> v;
        if (!null_y(rng))
        {
            last = plateau(rng) ? last : y(rng) / (flat(rng) == 0 ? 100 : 1);
            v = last;
            row["y"] = last;
        }
        else
            row["y"] = nullptr;
        values.push_back(row);
        c.rows.push_back({static_cast<double>(x), v});
    }
    c.spec = {{"mark", "line"},
              {"data", {{"values", values}}},
              {"encoding",
               {{"x", {{"field", "x"}, {"type", "quantitative"}}},
                {"y", {{"field", "y"}, {"type", "quantitative"}}}}}};
    return c;
}

struct CalcVerdict
{
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::string first_failure;

    void expect(bool ok, const std::string& what)
    {
        ++checks;
        if (!ok)
        {
            ++failures;
            if (first_failure.empty())
                first_failure = what;
        }
    }
};

/// Runs every task against one random table with a random range and picks.
inline void check_calc_case(std::mt19937_64& rng, const CalcCase& c, CalcVerdict& verdict)
{
    const auto chart = chart_from(c.spec);
    const auto series = series_points(chart, chart.table);

    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : c.rows)
        if (y)
            pts.push_back({x, *y});
    std::sort(pts.begin(), pts.end());

    std::optional<std::pair<double, double>> range;
    std::uniform_int_distribution<int> coin(0, 3);
    if (!pts.empty() && coin(rng) != 0)
    {
        std::uniform_int_distribution<std::size_t> at(0, c.rows.size() - 1);
        double a = c.rows[at(rng)].first, b = c.rows[at(rng)].first;
        if (a > b)
            std::swap(a, b);
        range = {a, b};
    }
    std::vector<std::pair<double, double>> in;
    for (const auto& p : pts)
        if (!range || (p.first >= range->first && p.first <= range->second))
            in.push_back(p);

    for (Task task : {Task::min, Task::max, Task::mean, Task::sum, Task::count, Task::range_describe, Task::trend})
    {
        const std::string name(to_string(task));
        if (in.empty())
        {
            bool threw = false;
            try
            {
                calculate(task, series, range);
            }
            catch (const Error& e)
            {
                threw = e.code() == Errc::empty_range;
            }
            verdict.expect(threw, name + ": expected EmptyRange");
            continue;
        }
        const auto r = calculate(task, series, range);
        double lo = in[0].second, hi = in[0].second;
        long double total = 0;
        for (const auto& p : in)
        {
            lo = std::min(lo, p.second);
            hi = std::max(hi, p.second);
            total += p.second;
        }
        const double mean = static_cast<double>(total / in.size());
        verdict.expect(r.points.size() == in.size(), name + ": filtered size");
        bool order = r.points.size() == in.size();
        for (std::size_t i = 0; order && i < in.size(); ++i)
            order = r.points[i].x == in[i].first && r.points[i].y == in[i].second;
        verdict.expect(order, name + ": filtered points");
        switch (task)
        {
        case Task::min:
        case Task::max:
        {
            const double want = task == Task::min ? lo : hi;
            std::vector<std::size_t> ties;
            for (std::size_t i = 0; i < in.size(); ++i)
                if (in[i].second == want)
                    ties.push_back(i);
            verdict.expect(r.value == want, name + ": value");
            verdict.expect(r.hits == ties, name + ": ties");
            break;
        }
        case Task::mean:
            verdict.expect(std::abs(r.value - mean) <= 1e-9, name + ": mean");
            break;
        case Task::sum:
            verdict.expect(r.value == static_cast<double>(total), name + ": sum");
            break;
        case Task::count:
            verdict.expect(r.value == static_cast<double>(in.size()), name + ": count");
            break;
        case Task::range_describe:
            verdict.expect(r.min == lo && r.max == hi, name + ": extremes");
            verdict.expect(std::abs(r.mean - mean) <= 1e-9, name + ": mean");
            verdict.expect(r.hits == std::vector<std::size_t>{0, in.size() - 1}, name + ": endpoints");
            break;
        case Task::trend:
        {
            // Runs of equal difference sign.
            std::vector<TrendSegment> want;
            for (std::size_t i = 1; i < in.size(); ++i)
            {
                const double d = in[i].second - in[i - 1].second;
                const Direction dir = d > 0 ? Direction::rise : d < 0 ? Direction::decline : Direction::plateau;
                if (!want.empty() && want.back().direction == dir)
                    want.back().last = i;
                else
                    want.push_back({dir, i - 1, i});
            }
            bool same = want.size() == r.segments.size();
            for (std::size_t i = 0; same && i < want.size(); ++i)
                same = want[i].direction == r.segments[i].direction && want[i].first == r.segments[i].first &&
                       want[i].last == r.segments[i].last;
            verdict.expect(same, name + ": segments");
            verdict.expect(r.value == in.back().second - in.front().second, name + ": net change");
            break;
        }
        default:
            break;
        }
    }

    if (pts.empty())
        return;
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    const auto a = pts[pick(rng)], b = pts[pick(rng)];
    const auto v = calculate(Task::value_at, series, std::nullopt, {a.first});
    verdict.expect(v.value == a.second, "value_at");
    const auto d = calculate(Task::compare_points, series, std::nullopt, {a.first, b.first});
    verdict.expect(d.value == b.second - a.second, "compare_points");
    bool threw = false;
    try
    {
        calculate(Task::value_at, series, std::nullopt, {0.5});
    }
    catch (const Error& e)
    {
        threw = e.code() == Errc::empty_range;
    }
    verdict.expect(threw, "value_at off-grid");
}

} // namespace feelgrid::test
