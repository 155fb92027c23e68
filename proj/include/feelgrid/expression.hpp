#pragma once

#include <feelgrid/table.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feelgrid
{

/// Resolves a column reference to the current row's value; nullopt if unknown.
using RowBinding = std::function<std::optional<Value>(std::string_view)>;

RowBinding bind_row(const DataTable& table, std::size_t row);

/// Closed expression mini-language used by calculate and filter transforms:
/// column refs (`x`, `datum.x`, `datum['x y']`), number/string/boolean/null
/// literals, `date('2020-Q2')`, + - * /, comparisons, && || ! (or and/or/not)
/// and parentheses. Strings compared against temporals are parsed as temporals.
class Expression
{
public:
    struct Node;

    /// Throws ExpressionError with the offending span.
    static Expression parse(std::string_view source);

    /// Throws ExpressionError on type errors or division by zero, and
    /// Error(unknown_column) for unbound column refs.
    Value evaluate(const RowBinding& row) const;

    /// Static result type against a schema. Throws Error(unknown_column) and
    /// ExpressionError for operand type mismatches it can detect.
    ColumnType result_type(std::span<const Column> schema) const;

    /// Column names referenced, in first-use order.
    std::vector<std::string> columns() const;

    const std::string& source() const noexcept
    {
        return source_;
    }

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
};

Value eval_expression(std::string_view source, const RowBinding& row);

} // namespace feelgrid
