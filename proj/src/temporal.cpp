#include <feelgrid/error.hpp>
#include <feelgrid/temporal.hpp>

#include <fmt/format.h>

#include <array>
#include <charconv>
#include <chrono>

namespace feelgrid
{
namespace
{
using namespace std::chrono;

constexpr std::array<std::string_view, 12> month_names = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

std::optional<int> parse_digits(std::string_view s, std::size_t count)
{
    if (s.size() != count)
        return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

std::int64_t to_epoch(year_month_day ymd)
{
    return sys_days{ymd}.time_since_epoch().count();
}

year_month_day to_ymd(std::int64_t epoch_day)
{
    return year_month_day{sys_days{days{epoch_day}}};
}

// Monday of the ISO week containing `epoch_day`.
std::int64_t iso_week_start(std::int64_t epoch_day)
{
    const unsigned wd = weekday{sys_days{days{epoch_day}}}.c_encoding(); // Sunday = 0
    return epoch_day - static_cast<std::int64_t>((wd + 6) % 7);
}

std::pair<int, int> iso_week_of(std::int64_t epoch_day)
{
    const auto thursday = iso_week_start(epoch_day) + 3;
    const auto ymd = to_ymd(thursday);
    const int iso_year = static_cast<int>(ymd.year());
    const auto jan1 = to_epoch(year_month_day{ymd.year(), January, day{1}});
    return {iso_year, static_cast<int>((thursday - jan1) / 7 + 1)};
}

std::int64_t iso_week_monday(int iso_year, int week)
{
    // Jan 4 is always in week 1.
    const auto jan4 = to_epoch(year_month_day{year{iso_year}, January, day{4}});
    return iso_week_start(jan4) + 7 * (week - 1);
}

std::string make_label(std::int64_t epoch_day, TimeUnit grain)
{
    const auto ymd = to_ymd(epoch_day);
    const int y = static_cast<int>(ymd.year());
    const unsigned m = static_cast<unsigned>(ymd.month());
    switch (grain)
    {
    case TimeUnit::year: return fmt::format("{:04}", y);
    case TimeUnit::quarter: return fmt::format("{:04}-Q{}", y, (m - 1) / 3 + 1);
    case TimeUnit::month: return fmt::format("{:04}-{:02}", y, m);
    case TimeUnit::week:
    {
        auto [wy, wn] = iso_week_of(epoch_day);
        return fmt::format("{:04}-W{:02}", wy, wn);
    }
    case TimeUnit::day:
        return fmt::format("{:04}-{:02}-{:02}", y, m, static_cast<unsigned>(ymd.day()));
    }
    return {};
}

std::string day_words(std::int64_t epoch_day)
{
    const auto ymd = to_ymd(epoch_day);
    return fmt::format("{} {} {}", static_cast<unsigned>(ymd.day()),
                       month_names[static_cast<unsigned>(ymd.month()) - 1],
                       static_cast<int>(ymd.year()));
}

} // namespace

std::string_view to_string(TimeUnit unit)
{
    switch (unit)
    {
    case TimeUnit::year: return "year";
    case TimeUnit::quarter: return "quarter";
    case TimeUnit::month: return "month";
    case TimeUnit::week: return "week";
    case TimeUnit::day: return "day";
    }
    return "day";
}

std::optional<TimeUnit> parse_time_unit(std::string_view text)
{
    for (auto unit : {TimeUnit::year, TimeUnit::quarter, TimeUnit::month, TimeUnit::week,
                      TimeUnit::day})
        if (text == to_string(unit))
            return unit;
    if (text == "date" || text == "yearmonthdate")
        return TimeUnit::day;
    if (text == "yearmonth")
        return TimeUnit::month;
    if (text == "yearquarter")
        return TimeUnit::quarter;
    if (text == "yearweek")
        return TimeUnit::week;
    return std::nullopt;
}

std::string_view period_noun(TimeUnit unit, bool plural)
{
    switch (unit)
    {
    case TimeUnit::year: return plural ? "years" : "year";
    case TimeUnit::quarter: return plural ? "quarters" : "quarter";
    case TimeUnit::month: return plural ? "months" : "month";
    case TimeUnit::week: return plural ? "weeks" : "week";
    case TimeUnit::day: return plural ? "days" : "day";
    }
    return "";
}

std::optional<Temporal> Temporal::try_parse(std::string_view text)
{
    Temporal t;
    t.label_ = std::string(text);
    if (text.size() == 4)
    {
        auto y = parse_digits(text, 4);
        if (!y)
            return std::nullopt;
        t.grain_ = TimeUnit::year;
        t.epoch_day_ = to_epoch(year_month_day{year{*y}, January, day{1}});
        return t;
    }
    if (text.size() < 7 || text[4] != '-')
        return std::nullopt;
    auto y = parse_digits(text.substr(0, 4), 4);
    if (!y)
        return std::nullopt;
    const auto rest = text.substr(5);

    if (rest.size() == 2 && (rest[0] == 'Q' || rest[0] == 'q'))
    {
        auto q = parse_digits(rest.substr(1), 1);
        if (!q || *q < 1 || *q > 4)
            return std::nullopt;
        t.grain_ = TimeUnit::quarter;
        t.epoch_day_ = to_epoch(
            year_month_day{year{*y}, month{static_cast<unsigned>((*q - 1) * 3 + 1)}, day{1}});
        return t;
    }
    if (rest.size() == 3 && rest[0] == 'W')
    {
        auto w = parse_digits(rest.substr(1), 2);
        if (!w || *w < 1 || *w > 53)
            return std::nullopt;
        const auto monday = iso_week_monday(*y, *w);
        if (iso_week_of(monday).first != *y)
            return std::nullopt;
        t.grain_ = TimeUnit::week;
        t.epoch_day_ = monday;
        return t;
    }
    if (rest.size() == 2)
    {
        auto m = parse_digits(rest, 2);
        if (!m || *m < 1 || *m > 12)
            return std::nullopt;
        t.grain_ = TimeUnit::month;
        t.epoch_day_ =
            to_epoch(year_month_day{year{*y}, month{static_cast<unsigned>(*m)}, day{1}});
        return t;
    }
    if (rest.size() == 5 && rest[2] == '-')
    {
        auto m = parse_digits(rest.substr(0, 2), 2);
        auto d = parse_digits(rest.substr(3, 2), 2);
        if (!m || !d)
            return std::nullopt;
        year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)},
                           day{static_cast<unsigned>(*d)}};
        if (!ymd.ok())
            return std::nullopt;
        t.grain_ = TimeUnit::day;
        t.epoch_day_ = to_epoch(ymd);
        return t;
    }
    return std::nullopt;
}

Temporal Temporal::parse(std::string_view text)
{
    if (auto t = try_parse(text))
        return *t;
    throw Error(Errc::type_coercion, fmt::format("invalid temporal value '{}'", text));
}

Temporal Temporal::from_epoch_day(std::int64_t epoch_day, TimeUnit grain)
{
    Temporal t;
    t.epoch_day_ = epoch_day;
    t.grain_ = grain;
    t.label_ = make_label(epoch_day, grain);
    return t;
}

Temporal Temporal::truncate(TimeUnit unit) const
{
    const auto ymd = to_ymd(epoch_day_);
    std::int64_t start = epoch_day_;
    switch (unit)
    {
    case TimeUnit::year: start = to_epoch(year_month_day{ymd.year(), January, day{1}}); break;
    case TimeUnit::quarter:
    {
        const unsigned m = static_cast<unsigned>(ymd.month());
        start = to_epoch(year_month_day{ymd.year(), month{(m - 1) / 3 * 3 + 1}, day{1}});
        break;
    }
    case TimeUnit::month: start = to_epoch(year_month_day{ymd.year(), ymd.month(), day{1}}); break;
    case TimeUnit::week: start = iso_week_start(epoch_day_); break;
    case TimeUnit::day: break;
    }
    return from_epoch_day(start, unit);
}

std::string Temporal::spoken() const
{
    const auto ymd = to_ymd(epoch_day_);
    const int y = static_cast<int>(ymd.year());
    const unsigned m = static_cast<unsigned>(ymd.month());
    switch (grain_)
    {
    case TimeUnit::year: return fmt::format("{}", y);
    case TimeUnit::quarter: return fmt::format("{} Quarter {}", y, (m - 1) / 3 + 1);
    case TimeUnit::month: return fmt::format("{} {}", month_names[m - 1], y);
    case TimeUnit::week: return "week of " + day_words(epoch_day_);
    case TimeUnit::day: return day_words(epoch_day_);
    }
    return label_;
}

std::string Temporal::short_label() const
{
    if (grain_ == TimeUnit::quarter)
    {
        const auto ymd = to_ymd(epoch_day_);
        return fmt::format("Q{} {}", (static_cast<unsigned>(ymd.month()) - 1) / 3 + 1,
                           static_cast<int>(ymd.year()));
    }
    return spoken();
}

} // namespace feelgrid
