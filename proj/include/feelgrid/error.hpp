#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feelgrid
{

enum class Errc
{
    syntax_error,
    unsupported_mark,
    unsupported_channel,
    missing_field,
    schema_mismatch,
    io_error,
    type_coercion,
    expression_error,
    unknown_column,
    non_temporal_groupby,
    invalid_argument,
    out_of_window,
    no_finer_layer,
    no_coarser_layer,
    unresolved_target,
    empty_range,
    port_timeout,
    port_schema,
    unknown_topic,
    schema_violation,
    invalid_pattern,
    oversize_frame,
    framing_error,
    checksum_mismatch,
    bridge_error,
    replay_syntax,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code)
    {
    }

    Errc code() const noexcept
    {
        return code_;
    }

private:
    Errc code_;
};

/// Expression failures carry the byte span of the offending source text.
class ExpressionError : public Error
{
public:
    ExpressionError(const std::string& what, std::size_t offset, std::size_t length)
    : Error(Errc::expression_error, what), offset_(offset), length_(length)
    {
    }

    std::size_t offset() const noexcept
    {
        return offset_;
    }
    std::size_t length() const noexcept
    {
        return length_;
    }

private:
    std::size_t offset_;
    std::size_t length_;
};

} // namespace feelgrid
