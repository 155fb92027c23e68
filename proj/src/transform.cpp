#include <feelgrid/error.hpp>
#include <feelgrid/expression.hpp>
#include <feelgrid/transform.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <future>
#include <limits>
#include <map>
#include <random>

namespace feelgrid
{
namespace
{

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Column& find_column(std::span<const Column> schema, std::string_view name)
{
    for (const auto& c : schema)
        if (c.name == name)
            return c;
    throw Error(Errc::unknown_column, fmt::format("unknown column '{}'", name));
}

std::string output_name(const AggregateField& f)
{
    if (!f.as.empty())
        return f.as;
    return f.field.empty() ? std::string("count") : f.field;
}

void set_or_append(std::vector<Column>& schema, Column col)
{
    for (auto& c : schema)
        if (c.name == col.name)
        {
            c = std::move(col);
            return;
        }
    schema.push_back(std::move(col));
}

std::vector<Column> step_schema(std::vector<Column> schema, const TransformSpec& t)
{
    return std::visit(
        overloaded{
            [&](const AggregateTransform& a) {
                std::vector<Column> out;
                for (const auto& g : a.groupby)
                    out.push_back(find_column(schema, g));
                for (const auto& f : a.fields)
                {
                    if (!f.field.empty())
                    {
                        const auto& c = find_column(schema, f.field);
                        if (f.op != AggregateOp::count && c.type != ColumnType::number)
                            throw Error(Errc::invalid_argument,
                                        fmt::format("cannot {} non-numeric column '{}'",
                                                    to_string(f.op), f.field));
                    }
                    else if (f.op != AggregateOp::count)
                        throw Error(Errc::invalid_argument,
                                    fmt::format("aggregate {} requires a field", to_string(f.op)));
                    out.push_back({output_name(f), ColumnType::number});
                }
                for (std::size_t i = 0; i < out.size(); ++i)
                    for (std::size_t j = i + 1; j < out.size(); ++j)
                        if (out[i].name == out[j].name)
                            throw Error(Errc::invalid_argument,
                                        fmt::format("duplicate aggregate output '{}'", out[i].name));
                return out;
            },
            [&](const CalculateTransform& c) {
                if (c.as.empty())
                    throw Error(Errc::invalid_argument, "calculate requires an output field");
                const auto type = Expression::parse(c.expression).result_type(schema);
                set_or_append(schema, {c.as, type});
                return schema;
            },
            [&](const FilterTransform& f) {
                const auto type = Expression::parse(f.predicate).result_type(schema);
                if (type != ColumnType::boolean)
                    throw ExpressionError("filter predicate must be boolean", 0,
                                          f.predicate.size());
                return schema;
            },
            [&](const JitterTransform& j) {
                if (!(j.amplitude >= 0.0))
                    throw Error(Errc::invalid_argument, "jitter amplitude must be >= 0");
                if (find_column(schema, j.field).type != ColumnType::number)
                    throw Error(Errc::invalid_argument,
                                fmt::format("jitter field '{}' is not numeric", j.field));
                return schema;
            },
        },
        t);
}

DataTable run_aggregate(const DataTable& table, const AggregateTransform& a)
{
    const auto schema = step_schema(table.columns(), a);
    std::vector<std::size_t> key_cols;
    for (const auto& g : a.groupby)
        key_cols.push_back(table.require_column(g));
    std::vector<std::optional<std::size_t>> value_cols;
    for (const auto& f : a.fields)
        value_cols.push_back(f.field.empty() ? std::nullopt
                                             : std::optional(table.require_column(f.field)));

    std::map<std::vector<Value>, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < table.row_count(); ++r)
    {
        std::vector<Value> key;
        key.reserve(key_cols.size());
        for (auto c : key_cols)
        {
            Value v = table.at(r, c);
            if (a.time_unit)
                if (auto t = std::get_if<Temporal>(&v))
                    v = t->truncate(*a.time_unit);
            key.push_back(std::move(v));
        }
        groups[std::move(key)].push_back(r);
    }

    std::vector<std::vector<Value>> rows;
    rows.reserve(groups.size());
    for (const auto& [key, members] : groups)
    {
        std::vector<Value> row = key;
        for (std::size_t i = 0; i < a.fields.size(); ++i)
        {
            if (!value_cols[i])
            {
                row.emplace_back(static_cast<double>(members.size()));
                continue;
            }
            std::vector<Value> values;
            values.reserve(members.size());
            for (auto m : members)
                values.push_back(table.at(m, *value_cols[i]));
            row.push_back(aggregate(a.fields[i].op, values));
        }
        rows.push_back(std::move(row));
    }
    return DataTable(schema, std::move(rows));
}

DataTable run_calculate(const DataTable& table, const CalculateTransform& c)
{
    const auto schema = step_schema(table.columns(), c);
    const auto expr = Expression::parse(c.expression);
    const auto out_col = *std::find_if(schema.begin(), schema.end(),
                                       [&](const Column& col) { return col.name == c.as; });
    const auto existing = table.column_index(c.as);
    std::vector<std::vector<Value>> rows;
    rows.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r)
    {
        Value v = expr.evaluate(bind_row(table, r));
        if (!is_null(v) && type_of(v) != out_col.type)
            throw ExpressionError(fmt::format("calculate produced {} for column of type {}",
                                              to_string(type_of(v)), to_string(out_col.type)),
                                  0, c.expression.size());
        auto row = table.row(r);
        if (existing)
            row[*existing] = std::move(v);
        else
            row.push_back(std::move(v));
        rows.push_back(std::move(row));
    }
    return DataTable(schema, std::move(rows));
}

DataTable run_filter(const DataTable& table, const FilterTransform& f)
{
    step_schema(table.columns(), f);
    const auto expr = Expression::parse(f.predicate);
    std::vector<std::vector<Value>> rows;
    for (std::size_t r = 0; r < table.row_count(); ++r)
    {
        Value v = expr.evaluate(bind_row(table, r));
        if (auto b = std::get_if<bool>(&v); b && *b)
            rows.push_back(table.row(r));
        else if (!is_null(v) && !std::holds_alternative<bool>(v))
            throw ExpressionError("filter predicate did not produce a boolean", 0,
                                  f.predicate.size());
    }
    return DataTable(table.columns(), std::move(rows));
}

DataTable run_jitter(const DataTable& table, const JitterTransform& j)
{
    step_schema(table.columns(), j);
    if (j.amplitude == 0.0)
        return table;
    const auto col = table.require_column(j.field);
    std::mt19937_64 rng(j.seed);
    std::vector<std::vector<Value>> rows;
    rows.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r)
    {
        // 53-bit uniform in [0,1) from the raw engine output, portable across stdlibs.
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        auto row = table.row(r);
        if (auto d = std::get_if<double>(&row[col]))
            row[col] = *d + j.amplitude * (2.0 * u - 1.0);
        rows.push_back(std::move(row));
    }
    return DataTable(table.columns(), std::move(rows));
}

} // namespace

std::string_view to_string(AggregateOp op)
{
    switch (op)
    {
    case AggregateOp::mean: return "mean";
    case AggregateOp::sum: return "sum";
    case AggregateOp::min: return "min";
    case AggregateOp::max: return "max";
    case AggregateOp::count: return "count";
    }
    return "mean";
}

std::optional<AggregateOp> parse_aggregate_op(std::string_view text)
{
    for (auto op : {AggregateOp::mean, AggregateOp::sum, AggregateOp::min, AggregateOp::max,
                    AggregateOp::count})
        if (text == to_string(op))
            return op;
    if (text == "average")
        return AggregateOp::mean;
    return std::nullopt;
}

Value aggregate(AggregateOp op, std::span<const Value> values)
{
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t n = 0;
    for (const auto& v : values)
    {
        if (is_null(v))
            continue;
        ++n;
        if (auto d = std::get_if<double>(&v))
        {
            sum += *d;
            lo = std::min(lo, *d);
            hi = std::max(hi, *d);
        }
    }
    switch (op)
    {
    case AggregateOp::count: return static_cast<double>(n);
    case AggregateOp::sum: return sum;
    case AggregateOp::mean: return n ? Value(sum / static_cast<double>(n)) : Value(Null{});
    case AggregateOp::min: return n ? Value(lo) : Value(Null{});
    case AggregateOp::max: return n ? Value(hi) : Value(Null{});
    }
    return Null{};
}

std::vector<Column> transformed_schema(std::vector<Column> input,
                                       std::span<const TransformSpec> transforms)
{
    for (const auto& t : transforms)
        input = step_schema(std::move(input), t);
    return input;
}

DataTable apply_transform(const DataTable& table, const TransformSpec& transform)
{
    return std::visit(
        overloaded{
            [&](const AggregateTransform& a) { return run_aggregate(table, a); },
            [&](const CalculateTransform& c) { return run_calculate(table, c); },
            [&](const FilterTransform& f) { return run_filter(table, f); },
            [&](const JitterTransform& j) { return run_jitter(table, j); },
        },
        transform);
}

DataTable apply_transforms(const DataTable& table, std::span<const TransformSpec> transforms)
{
    DataTable current = table;
    for (const auto& t : transforms)
        current = apply_transform(current, t);
    return current;
}

std::vector<ResolutionLayer> build_hierarchy(const DataTable& table,
                                             std::span<const TimeUnit> units, AggregateOp op,
                                             const std::string& field, const std::string& groupby,
                                             std::span<const std::string> extra_keys)
{
    if (table.column(groupby).type != ColumnType::temporal)
        throw Error(Errc::non_temporal_groupby,
                    fmt::format("groupby column '{}' is not temporal", groupby));
    for (std::size_t i = 1; i < units.size(); ++i)
        if (!coarser(units[i - 1], units[i]))
            throw Error(Errc::invalid_argument, "hierarchy units must be ordered coarse to fine");

    // Rows without a timestamp have no bucket.
    const auto time_col = table.require_column(groupby);
    std::vector<std::vector<Value>> timed;
    for (const auto& row : table.rows())
        if (!is_null(row[time_col]))
            timed.push_back(row);
    const DataTable base(table.columns(), std::move(timed));

    AggregateTransform proto;
    proto.fields.push_back({op, op == AggregateOp::count && field.empty() ? "" : field, field});
    proto.groupby.push_back(groupby);
    for (const auto& k : extra_keys)
        proto.groupby.push_back(k);

    std::vector<std::future<ResolutionLayer>> pending;
    for (auto unit : units)
    {
        pending.push_back(std::async(std::launch::async, [&base, proto, unit] {
            auto spec = proto;
            spec.time_unit = unit;
            ResolutionLayer layer;
            layer.layer_id = std::string(to_string(unit));
            layer.time_unit = unit;
            layer.table = apply_transform(base, spec);
            layer.point_count = layer.table.row_count();
            return layer;
        }));
    }
    std::vector<ResolutionLayer> layers;
    for (auto& f : pending)
        layers.push_back(f.get());
    return layers;
}

} // namespace feelgrid
