#include <feelgrid/error.hpp>
#include <feelgrid/table.hpp>

#include <fmt/format.h>

#include <cmath>
#include <unordered_set>

namespace feelgrid
{

std::string_view to_string(ColumnType type)
{
    switch (type)
    {
    case ColumnType::number: return "number";
    case ColumnType::string: return "string";
    case ColumnType::temporal: return "temporal";
    case ColumnType::boolean: return "boolean";
    }
    return "number";
}

std::optional<double> as_number(const Value& v)
{
    if (auto d = std::get_if<double>(&v))
        return *d;
    return std::nullopt;
}

std::optional<double> axis_position(const Value& v)
{
    if (auto d = std::get_if<double>(&v))
        return *d;
    if (auto t = std::get_if<Temporal>(&v))
        return static_cast<double>(t->epoch_day());
    return std::nullopt;
}

double round_half_away(double v)
{
    return std::round(v); // std::round rounds halfway cases away from zero
}

std::string format_fixed(double v, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    double r = round_half_away(v * scale) / scale;
    if (r == 0.0)
        r = 0.0; // drop negative zero
    return fmt::format("{:.{}f}", r, decimals);
}

int display_precision(std::span<const double> values)
{
    int best = 0;
    for (double v : values)
    {
        if (!std::isfinite(v))
            continue;
        int d = 0;
        while (d < 6)
        {
            const double scaled = v * std::pow(10.0, d);
            if (std::abs(scaled - std::round(scaled)) < 1e-6)
                break;
            ++d;
        }
        best = std::max(best, d);
    }
    return best;
}

std::string to_text(const Value& v)
{
    struct Visitor
    {
        std::string operator()(Null) const
        {
            return "null";
        }
        std::string operator()(double d) const
        {
            if (std::isfinite(d) && d == std::round(d) && std::abs(d) < 1e15)
                return fmt::format("{}", static_cast<long long>(d));
            return fmt::format("{}", d);
        }
        std::string operator()(const std::string& s) const
        {
            return s;
        }
        std::string operator()(bool b) const
        {
            return b ? "true" : "false";
        }
        std::string operator()(const Temporal& t) const
        {
            return t.label();
        }
    };
    return std::visit(Visitor{}, v);
}

ColumnType type_of(const Value& v)
{
    switch (v.index())
    {
    case 1: return ColumnType::number;
    case 2: return ColumnType::string;
    case 3: return ColumnType::boolean;
    case 4: return ColumnType::temporal;
    default: return ColumnType::number;
    }
}

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

DataTable::DataTable(std::vector<Column> columns, std::vector<std::vector<Value>> rows)
: columns_(std::move(columns)), rows_(std::move(rows))
{
    std::unordered_set<std::string> names;
    for (const auto& c : columns_)
        if (!names.insert(c.name).second)
            throw Error(Errc::invalid_argument, fmt::format("duplicate column '{}'", c.name));
    for (std::size_t r = 0; r < rows_.size(); ++r)
    {
        if (rows_[r].size() != columns_.size())
            throw Error(Errc::invalid_argument,
                        fmt::format("row {} has {} values, expected {}", r, rows_[r].size(),
                                    columns_.size()));
        for (std::size_t c = 0; c < columns_.size(); ++c)
        {
            const auto& v = rows_[r][c];
            if (!is_null(v) && type_of(v) != columns_[c].type)
                throw Error(Errc::type_coercion,
                            fmt::format("row {}, column '{}': expected {}, got {}", r,
                                        columns_[c].name, to_string(columns_[c].type),
                                        to_string(type_of(v))));
        }
    }
}

std::optional<std::size_t> DataTable::column_index(std::string_view name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name)
            return i;
    return std::nullopt;
}

std::size_t DataTable::require_column(std::string_view name) const
{
    if (auto i = column_index(name))
        return *i;
    throw Error(Errc::unknown_column, fmt::format("unknown column '{}'", name));
}

std::vector<Value> DataTable::column_values(std::string_view name) const
{
    const auto c = require_column(name);
    std::vector<Value> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_)
        out.push_back(row[c]);
    return out;
}

std::string DataTable::digest() const
{
    std::string canon;
    for (const auto& c : columns_)
        canon += fmt::format("{}:{};", c.name, to_string(c.type));
    canon += '\n';
    for (const auto& row : rows_)
    {
        for (const auto& v : row)
        {
            canon += static_cast<char>('0' + v.index());
            if (auto d = std::get_if<double>(&v))
                canon += fmt::format("{:a}", *d); // exact bits
            else
                canon += to_text(v);
            canon += '\x1f';
        }
        canon += '\n';
    }
    return fnv1a_hex(canon);
}

} // namespace feelgrid
