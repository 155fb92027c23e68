#pragma once

#include <feelgrid/table.hpp>
#include <feelgrid/temporal.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace feelgrid
{

enum class AggregateOp
{
    mean,
    sum,
    min,
    max,
    count,
};

std::string_view to_string(AggregateOp op);
std::optional<AggregateOp> parse_aggregate_op(std::string_view text);

struct AggregateField
{
    AggregateOp op = AggregateOp::mean;
    std::string field; // empty only for count, which then counts rows
    std::string as;

    friend bool operator==(const AggregateField&, const AggregateField&) = default;
};

struct AggregateTransform
{
    std::vector<AggregateField> fields;
    std::vector<std::string> groupby;
    /// Temporal groupby columns are floored to this calendar unit first.
    std::optional<TimeUnit> time_unit;

    friend bool operator==(const AggregateTransform&, const AggregateTransform&) = default;
};

struct CalculateTransform
{
    std::string expression;
    std::string as;

    friend bool operator==(const CalculateTransform&, const CalculateTransform&) = default;
};

struct FilterTransform
{
    std::string predicate;

    friend bool operator==(const FilterTransform&, const FilterTransform&) = default;
};

/// Adds seeded uniform noise in [-amplitude, amplitude] to a numeric column.
struct JitterTransform
{
    std::string field;
    double amplitude = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const JitterTransform&, const JitterTransform&) = default;
};

using TransformSpec =
    std::variant<AggregateTransform, CalculateTransform, FilterTransform, JitterTransform>;

/// Schema produced by applying `transforms` to a table with `input` columns,
/// without touching data. Throws UnknownColumn / ExpressionError / InvalidArgument.
std::vector<Column> transformed_schema(std::vector<Column> input,
                                       std::span<const TransformSpec> transforms);

DataTable apply_transform(const DataTable& table, const TransformSpec& transform);
/// Applies transforms in declaration order; the input table is never modified.
DataTable apply_transforms(const DataTable& table, std::span<const TransformSpec> transforms);

/// Aggregate of the non-null numeric values; count counts non-nulls.
/// Sum and count of an empty set are 0, the others null.
Value aggregate(AggregateOp op, std::span<const Value> values);

struct ResolutionLayer
{
    std::string layer_id;
    TimeUnit time_unit = TimeUnit::day;
    DataTable table;
    std::size_t point_count = 0;
};

/// One layer per unit, coarse to fine. Each layer groups `groupby` (temporal)
/// by calendar bucket and aggregates `field` with `op`; other group columns
/// (e.g. a series) are kept as extra keys. Layers are built concurrently.
std::vector<ResolutionLayer> build_hierarchy(const DataTable& table,
                                             std::span<const TimeUnit> units, AggregateOp op,
                                             const std::string& field, const std::string& groupby,
                                             std::span<const std::string> extra_keys = {});

} // namespace feelgrid
