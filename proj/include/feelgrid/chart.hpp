#pragma once

#include <feelgrid/table.hpp>
#include <feelgrid/transform.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feelgrid
{

enum class Mark
{
    line,
    bar,
    point,
};

enum class FieldType
{
    quantitative,
    temporal,
    ordinal,
    nominal,
};

std::string_view to_string(Mark mark);
std::string_view to_string(FieldType type);

/// Explicit scale domain: numeric bounds (temporal bounds as epoch days) or categories.
struct ScaleDomain
{
    std::optional<double> min;
    std::optional<double> max;
    std::vector<std::string> categories;

    friend bool operator==(const ScaleDomain&, const ScaleDomain&) = default;
};

struct FieldDef
{
    std::string field;
    FieldType type = FieldType::quantitative;
    std::optional<ScaleDomain> scale;
    std::string title;

    bool continuous() const noexcept
    {
        return type == FieldType::quantitative || type == FieldType::temporal;
    }

    friend bool operator==(const FieldDef&, const FieldDef&) = default;
};

/// Inline rows (a JSON array of objects, kept as text) or a file relative to the spec.
struct DataRef
{
    std::string inline_values;
    std::string url;

    friend bool operator==(const DataRef&, const DataRef&) = default;
};

/// Multi-resolution aggregation declared under usermeta.resolution.
struct ResolutionSpec
{
    AggregateOp op = AggregateOp::mean;
    std::vector<TimeUnit> units;

    friend bool operator==(const ResolutionSpec&, const ResolutionSpec&) = default;
};

struct ChartSpec
{
    std::string name;
    std::string title;
    std::string description;
    Mark mark = Mark::line;
    FieldDef x;
    FieldDef y;
    std::optional<FieldDef> series;
    std::vector<TransformSpec> transforms;
    DataRef data;
    std::optional<ResolutionSpec> resolution;
    /// Measurement unit per field, from usermeta.units ("%" attaches without a space).
    std::map<std::string, std::string> units;
    /// Non-fatal notes (ignored keys). Not part of equality.
    std::vector<std::string> warnings;

    std::string unit_of(const std::string& field) const;
    const FieldDef* field_def(std::string_view field) const;

    friend bool operator==(const ChartSpec& a, const ChartSpec& b);
};

/// Parses the supported grammar subset. `name_hint` is used when the spec has
/// no "name". Inline data is loaded to check encodings against the schema.
/// Throws Error with syntax_error, unsupported_mark, unsupported_channel,
/// missing_field or schema_mismatch.
ChartSpec parse_spec(std::string_view text, std::string_view name_hint = "chart");
std::string serialize_spec(const ChartSpec& spec);

/// Loads the table a spec references. CSV and JSON-array files resolve against
/// `base_dir`. Encoded fields are coerced to their declared types; other columns
/// are inferred. Throws IoError / TypeCoercionError (with row and column).
DataTable load_table(const ChartSpec& spec, const std::filesystem::path& base_dir = {});
DataTable load_csv(std::string_view text, const std::map<std::string, FieldType>& declared = {});
DataTable load_json_rows(std::string_view text,
                         const std::map<std::string, FieldType>& declared = {});

/// A spec with its data loaded, transforms applied and hierarchy built.
struct LoadedChart
{
    ChartSpec spec;
    DataTable table;
    std::vector<ResolutionLayer> hierarchy;
    /// Category order for ordinal/nominal x.
    std::vector<std::string> x_categories;

    const DataTable& layer_table(std::string_view layer_id) const;
    /// x axis position of a value (category index for discrete x).
    std::optional<double> x_position(const Value& v) const;
    std::optional<TimeUnit> x_grain() const;
};

LoadedChart load_chart(const ChartSpec& spec, const std::filesystem::path& base_dir = {});
LoadedChart load_chart_file(const std::filesystem::path& spec_path);

struct CatalogueEntry
{
    std::string name;
    std::string title;
    std::string digest;
    Mark mark = Mark::line;
    std::vector<Column> schema;
    std::size_t row_count = 0;
    std::filesystem::path path;
    std::optional<std::vector<std::uint8_t>> preview;
};

struct SkippedSpec
{
    std::filesystem::path path;
    std::string reason;
};

struct ChartCatalogue
{
    std::vector<CatalogueEntry> entries;
    std::vector<SkippedSpec> skipped;

    /// Matches entry name or title, ignoring case, '_' and '-'.
    const CatalogueEntry* find(std::string_view name) const;
};

/// Recursively scans `root` for *.vl.json; entries sorted by name (relative
/// path without the extension). A sibling <stem>.png is attached as preview.
ChartCatalogue scan_catalogue(const std::filesystem::path& root);

/// Catalogue root from an explicit flag, else FEELGRID_CATALOGUE, else "catalogue".
std::filesystem::path resolve_catalogue_root(const std::optional<std::string>& flag);

std::string spec_digest(std::string_view spec_bytes);

} // namespace feelgrid
