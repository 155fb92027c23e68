#include <feelgrid/error.hpp>

namespace feelgrid
{

std::string_view to_string(Errc code)
{
    switch (code)
    {
    case Errc::syntax_error: return "SyntaxError";
    case Errc::unsupported_mark: return "UnsupportedMark";
    case Errc::unsupported_channel: return "UnsupportedChannel";
    case Errc::missing_field: return "MissingField";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::io_error: return "IoError";
    case Errc::type_coercion: return "TypeCoercionError";
    case Errc::expression_error: return "ExpressionError";
    case Errc::unknown_column: return "UnknownColumn";
    case Errc::non_temporal_groupby: return "NonTemporalGroupBy";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::out_of_window: return "OutOfWindow";
    case Errc::no_finer_layer: return "NoFinerLayer";
    case Errc::no_coarser_layer: return "NoCoarserLayer";
    case Errc::unresolved_target: return "UnresolvedTarget";
    case Errc::empty_range: return "EmptyRange";
    case Errc::port_timeout: return "PortTimeout";
    case Errc::port_schema: return "PortSchemaError";
    case Errc::unknown_topic: return "UnknownTopic";
    case Errc::schema_violation: return "SchemaViolation";
    case Errc::invalid_pattern: return "InvalidPattern";
    case Errc::oversize_frame: return "OversizeFrame";
    case Errc::framing_error: return "FramingError";
    case Errc::checksum_mismatch: return "ChecksumMismatch";
    case Errc::bridge_error: return "BridgeError";
    case Errc::replay_syntax: return "ReplaySyntaxError";
    }
    return "Error";
}

} // namespace feelgrid
