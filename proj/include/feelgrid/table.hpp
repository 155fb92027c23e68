#pragma once

#include <feelgrid/temporal.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace feelgrid
{

using Null = std::monostate;
using Value = std::variant<Null, double, std::string, bool, Temporal>;

enum class ColumnType
{
    number,
    string,
    temporal,
    boolean,
};

std::string_view to_string(ColumnType type);

struct Column
{
    std::string name;
    ColumnType type = ColumnType::number;

    friend bool operator==(const Column&, const Column&) = default;
};

inline bool is_null(const Value& v)
{
    return std::holds_alternative<Null>(v);
}

std::optional<double> as_number(const Value& v);
/// Position of a value on a continuous axis: numbers as-is, temporals by epoch day.
std::optional<double> axis_position(const Value& v);
/// Plain text form used in labels and augmented queries (temporal source label).
std::string to_text(const Value& v);
ColumnType type_of(const Value& v);

/// Half-away-from-zero rounding.
double round_half_away(double v);
std::string format_fixed(double v, int decimals);
/// Smallest decimal count (capped at 6) that reproduces every finite value exactly.
int display_precision(std::span<const double> values);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

/// Immutable row-major table. Every row has one value per column, each either
/// null or of the column's type.
class DataTable
{
public:
    DataTable() = default;
    DataTable(std::vector<Column> columns, std::vector<std::vector<Value>> rows);

    const std::vector<Column>& columns() const noexcept
    {
        return columns_;
    }
    std::size_t row_count() const noexcept
    {
        return rows_.size();
    }
    std::size_t column_count() const noexcept
    {
        return columns_.size();
    }
    const std::vector<std::vector<Value>>& rows() const noexcept
    {
        return rows_;
    }
    const std::vector<Value>& row(std::size_t i) const
    {
        return rows_.at(i);
    }
    const Value& at(std::size_t row, std::size_t col) const
    {
        return rows_.at(row).at(col);
    }

    std::optional<std::size_t> column_index(std::string_view name) const;
    /// Throws Error(unknown_column).
    std::size_t require_column(std::string_view name) const;
    const Column& column(std::string_view name) const
    {
        return columns_[require_column(name)];
    }

    std::vector<Value> column_values(std::string_view name) const;

    /// Canonical content hash over schema and values.
    std::string digest() const;

    friend bool operator==(const DataTable&, const DataTable&) = default;

private:
    std::vector<Column> columns_;
    std::vector<std::vector<Value>> rows_;
};

} // namespace feelgrid
