#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace feelgrid
{

enum class TimeUnit
{
    year,
    quarter,
    month,
    week,
    day,
};

/// Coarse units compare less than fine units: year < quarter < ... < day.
constexpr bool coarser(TimeUnit a, TimeUnit b)
{
    return static_cast<int>(a) < static_cast<int>(b);
}

std::string_view to_string(TimeUnit unit);
std::optional<TimeUnit> parse_time_unit(std::string_view text);
/// Plural noun used in spoken output ("quarters", "days").
std::string_view period_noun(TimeUnit unit, bool plural);

/// A calendar period: the canonical position is the epoch day of the period's
/// first day, so values of any grain order on one axis. The source label is kept.
class Temporal
{
public:
    Temporal() = default;

    /// Accepts YYYY-MM-DD, YYYY-Qn, YYYY-MM, YYYY-Www and YYYY.
    static std::optional<Temporal> try_parse(std::string_view text);
    /// Throws Error(type_coercion) on malformed input.
    static Temporal parse(std::string_view text);
    static Temporal from_epoch_day(std::int64_t epoch_day, TimeUnit grain);

    std::int64_t epoch_day() const noexcept
    {
        return epoch_day_;
    }
    TimeUnit grain() const noexcept
    {
        return grain_;
    }
    const std::string& label() const noexcept
    {
        return label_;
    }

    /// Floors to the start of the calendar bucket of `unit` (ISO weeks start Monday).
    Temporal truncate(TimeUnit unit) const;

    /// "2020 Quarter 2", "3 May 2021".
    std::string spoken() const;
    /// "Q2 2020", "3 May 2021".
    std::string short_label() const;

    friend bool operator==(const Temporal& a, const Temporal& b) noexcept
    {
        return a.epoch_day_ == b.epoch_day_ && a.grain_ == b.grain_;
    }
    friend std::strong_ordering operator<=>(const Temporal& a, const Temporal& b) noexcept
    {
        if (auto c = a.epoch_day_ <=> b.epoch_day_; c != 0)
            return c;
        return a.grain_ <=> b.grain_;
    }

private:
    std::int64_t epoch_day_ = 0;
    TimeUnit grain_ = TimeUnit::day;
    std::string label_ = "1970-01-01";
};

} // namespace feelgrid
