#include <feelgrid/chart.hpp>
#include <feelgrid/error.hpp>
#include <feelgrid/expression.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace feelgrid
{
namespace
{
using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const std::set<std::string> silent_keys = {"$schema", "width", "height", "autosize",
                                           "padding", "background", "config"};

[[noreturn]] void missing(const std::string& what)
{
    throw Error(Errc::missing_field, fmt::format("missing {}", what));
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_error, fmt::format("cannot read '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<FieldType> parse_field_type(std::string_view s)
{
    if (s == "quantitative" || s == "Q")
        return FieldType::quantitative;
    if (s == "temporal" || s == "T")
        return FieldType::temporal;
    if (s == "ordinal" || s == "O")
        return FieldType::ordinal;
    if (s == "nominal" || s == "N")
        return FieldType::nominal;
    return std::nullopt;
}

std::optional<double> parse_double(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    if (s.empty())
        return std::nullopt;
    if (s.front() == '+')
        s.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

FieldDef parse_field_def(const json& j, const std::string& channel, ChartSpec& spec)
{
    if (!j.is_object())
        throw Error(Errc::syntax_error, fmt::format("encoding.{} must be an object", channel));
    FieldDef def;
    if (!j.contains("field") || !j["field"].is_string())
        missing(fmt::format("encoding.{}.field", channel));
    def.field = j["field"].get<std::string>();
    if (!j.contains("type") || !j["type"].is_string())
        missing(fmt::format("encoding.{}.type", channel));
    auto type = parse_field_type(j["type"].get<std::string>());
    if (!type)
        throw Error(Errc::syntax_error, fmt::format("encoding.{}: unknown type '{}'", channel,
                                                    j["type"].get<std::string>()));
    def.type = *type;
    if (j.contains("title") && j["title"].is_string())
        def.title = j["title"].get<std::string>();
    else if (j.contains("axis") && j["axis"].is_object() && j["axis"].contains("title") &&
             j["axis"]["title"].is_string())
        def.title = j["axis"]["title"].get<std::string>();
    if (j.contains("scale") && j["scale"].is_object() && j["scale"].contains("domain"))
    {
        const auto& d = j["scale"]["domain"];
        if (!d.is_array())
            throw Error(Errc::syntax_error, fmt::format("encoding.{}.scale.domain must be an array",
                                                        channel));
        ScaleDomain dom;
        if (def.type == FieldType::quantitative)
        {
            if (d.size() != 2 || !d[0].is_number() || !d[1].is_number())
                throw Error(Errc::syntax_error, "quantitative domain must be [min, max]");
            dom.min = d[0].get<double>();
            dom.max = d[1].get<double>();
            if (!(*dom.min < *dom.max))
                throw Error(Errc::syntax_error, "quantitative domain requires min < max");
        }
        else if (def.type == FieldType::temporal)
        {
            if (d.size() != 2 || !d[0].is_string() || !d[1].is_string())
                throw Error(Errc::syntax_error, "temporal domain must be two date strings");
            const auto lo = Temporal::try_parse(d[0].get<std::string>());
            const auto hi = Temporal::try_parse(d[1].get<std::string>());
            if (!lo || !hi || !(lo->epoch_day() < hi->epoch_day()))
                throw Error(Errc::syntax_error, "invalid temporal domain");
            dom.min = static_cast<double>(lo->epoch_day());
            dom.max = static_cast<double>(hi->epoch_day());
        }
        else
        {
            for (const auto& c : d)
                dom.categories.push_back(c.is_string() ? c.get<std::string>() : c.dump());
        }
        def.scale = std::move(dom);
    }
    static const std::set<std::string> known = {"field", "type", "title", "axis", "scale",
                                                "legend"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            spec.warnings.push_back(fmt::format("ignored key encoding.{}.{}", channel, key));
    return def;
}

std::vector<std::string> string_list(const json& j, const char* what)
{
    std::vector<std::string> out;
    if (j.is_string())
        out.push_back(j.get<std::string>());
    else if (j.is_array())
        for (const auto& s : j)
        {
            if (!s.is_string())
                throw Error(Errc::syntax_error, fmt::format("{} entries must be strings", what));
            out.push_back(s.get<std::string>());
        }
    else
        throw Error(Errc::syntax_error, fmt::format("{} must be a string or array", what));
    return out;
}

TransformSpec parse_transform(const json& j)
{
    if (!j.is_object())
        throw Error(Errc::syntax_error, "transform entries must be objects");
    if (j.contains("filter"))
    {
        if (!j["filter"].is_string())
            throw Error(Errc::syntax_error, "only expression filters are supported");
        FilterTransform f{j["filter"].get<std::string>()};
        Expression::parse(f.predicate);
        return f;
    }
    if (j.contains("calculate"))
    {
        if (!j["calculate"].is_string())
            throw Error(Errc::syntax_error, "calculate must be an expression string");
        if (!j.contains("as") || !j["as"].is_string())
            missing("calculate.as");
        CalculateTransform c{j["calculate"].get<std::string>(), j["as"].get<std::string>()};
        Expression::parse(c.expression);
        return c;
    }
    if (j.contains("aggregate"))
    {
        AggregateTransform a;
        if (!j["aggregate"].is_array() || j["aggregate"].empty())
            throw Error(Errc::syntax_error, "aggregate must be a non-empty array");
        for (const auto& f : j["aggregate"])
        {
            if (!f.is_object() || !f.contains("op") || !f["op"].is_string())
                missing("aggregate op");
            auto op = parse_aggregate_op(f["op"].get<std::string>());
            if (!op)
                throw Error(Errc::syntax_error, fmt::format("unsupported aggregate op '{}'",
                                                            f["op"].get<std::string>()));
            AggregateField field;
            field.op = *op;
            if (f.contains("field"))
                field.field = f["field"].get<std::string>();
            if (f.contains("as"))
                field.as = f["as"].get<std::string>();
            a.fields.push_back(std::move(field));
        }
        if (j.contains("groupby"))
            a.groupby = string_list(j["groupby"], "groupby");
        if (j.contains("timeUnit"))
        {
            auto unit = j["timeUnit"].is_string()
                            ? parse_time_unit(j["timeUnit"].get<std::string>())
                            : std::nullopt;
            if (!unit)
                throw Error(Errc::syntax_error, "unsupported aggregate timeUnit");
            a.time_unit = unit;
        }
        return a;
    }
    if (j.contains("jitter"))
    {
        JitterTransform t;
        if (!j["jitter"].is_string())
            throw Error(Errc::syntax_error, "jitter must name a field");
        t.field = j["jitter"].get<std::string>();
        if (!j.contains("seed") || !j["seed"].is_number_integer())
            missing("jitter.seed");
        t.seed = j["seed"].get<std::uint64_t>();
        t.amplitude = j.value("amplitude", 0.0);
        if (!(t.amplitude >= 0.0))
            throw Error(Errc::syntax_error, "jitter amplitude must be >= 0");
        return t;
    }
    throw Error(Errc::syntax_error, fmt::format("unsupported transform {}", j.dump()));
}

json transform_json(const TransformSpec& t)
{
    return std::visit(
        overloaded{
            [](const FilterTransform& f) { return json{{"filter", f.predicate}}; },
            [](const CalculateTransform& c) { return json{{"calculate", c.expression}, {"as", c.as}}; },
            [](const AggregateTransform& a) {
                json fields = json::array();
                for (const auto& f : a.fields)
                {
                    json e{{"op", to_string(f.op)}};
                    if (!f.field.empty())
                        e["field"] = f.field;
                    if (!f.as.empty())
                        e["as"] = f.as;
                    fields.push_back(e);
                }
                json out{{"aggregate", fields}, {"groupby", a.groupby}};
                if (a.time_unit)
                    out["timeUnit"] = to_string(*a.time_unit);
                return out;
            },
            [](const JitterTransform& t) {
                return json{{"jitter", t.field}, {"amplitude", t.amplitude}, {"seed", t.seed}};
            },
        },
        t);
}

json field_json(const FieldDef& f)
{
    json j{{"field", f.field}, {"type", to_string(f.type)}};
    if (!f.title.empty())
        j["title"] = f.title;
    if (f.scale)
    {
        json domain = json::array();
        if (f.type == FieldType::quantitative)
            domain = {*f.scale->min, *f.scale->max};
        else if (f.type == FieldType::temporal)
            domain = {Temporal::from_epoch_day(static_cast<std::int64_t>(*f.scale->min),
                                               TimeUnit::day)
                          .label(),
                      Temporal::from_epoch_day(static_cast<std::int64_t>(*f.scale->max),
                                               TimeUnit::day)
                          .label()};
        else
            domain = f.scale->categories;
        j["scale"] = {{"domain", domain}};
    }
    return j;
}

Value coerce(const json& cell, std::optional<FieldType> declared, std::size_t row,
             const std::string& column)
{
    if (cell.is_null())
        return Null{};
    auto fail = [&](const std::string& why) -> Value {
        throw Error(Errc::type_coercion,
                    fmt::format("row {}, column '{}': {}", row, column, why));
    };
    if (!declared)
    {
        if (cell.is_number())
            return cell.get<double>();
        if (cell.is_boolean())
            return cell.get<bool>();
        if (cell.is_string())
            return cell.get<std::string>();
        return cell.dump();
    }
    switch (*declared)
    {
    case FieldType::temporal:
    {
        const std::string text = cell.is_string() ? cell.get<std::string>() : cell.dump();
        if (auto t = Temporal::try_parse(text))
            return *t;
        return fail(fmt::format("invalid date or quarter '{}'", text));
    }
    case FieldType::quantitative:
        if (cell.is_number())
            return cell.get<double>();
        if (cell.is_string())
        {
            if (auto d = parse_double(cell.get<std::string>()))
                return *d;
            if (cell.get<std::string>().empty())
                return Null{};
        }
        return fail(fmt::format("'{}' is not a number", cell.is_string() ? cell.get<std::string>()
                                                                          : cell.dump()));
    case FieldType::ordinal:
    case FieldType::nominal:
        if (cell.is_string())
            return cell.get<std::string>();
        return to_text(cell.is_number() ? Value(cell.get<double>()) : Value(cell.dump()));
    }
    return Null{};
}

/// Settles column types: declared types win; inferred columns mixing numbers
/// and strings become strings.
DataTable build_table(const std::vector<std::string>& names,
                      std::vector<std::vector<Value>> rows,
                      const std::map<std::string, FieldType>& declared)
{
    std::vector<Column> columns;
    for (std::size_t c = 0; c < names.size(); ++c)
    {
        Column col{names[c], ColumnType::number};
        if (auto it = declared.find(names[c]); it != declared.end())
        {
            col.type = it->second == FieldType::quantitative ? ColumnType::number
                       : it->second == FieldType::temporal   ? ColumnType::temporal
                                                             : ColumnType::string;
        }
        else
        {
            std::set<ColumnType> seen;
            for (const auto& r : rows)
                if (!is_null(r[c]))
                    seen.insert(type_of(r[c]));
            if (seen.size() == 1)
                col.type = *seen.begin();
            else if (seen.size() > 1)
            {
                col.type = ColumnType::string;
                for (auto& r : rows)
                    if (!is_null(r[c]) && !std::holds_alternative<std::string>(r[c]))
                        r[c] = to_text(r[c]);
            }
        }
        columns.push_back(std::move(col));
    }
    return DataTable(std::move(columns), std::move(rows));
}

std::vector<std::vector<std::string>> split_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        const char c = text[i];
        if (quoted)
        {
            if (c == '"')
            {
                if (i + 1 < text.size() && text[i + 1] == '"')
                {
                    field += '"';
                    ++i;
                }
                else
                    quoted = false;
            }
            else
                field += c;
            continue;
        }
        if (c == '"')
        {
            quoted = true;
            any = true;
        }
        else if (c == ',')
        {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        }
        else if (c == '\n' || c == '\r')
        {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            if (any || !field.empty())
            {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            record.clear();
            field.clear();
            any = false;
        }
        else
        {
            field += c;
            any = true;
        }
    }
    if (quoted)
        throw Error(Errc::syntax_error, "unterminated quoted CSV field");
    if (any || !field.empty())
    {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

std::string normalize_name(std::string_view s)
{
    std::string out;
    for (char c : s)
    {
        if (c == '_' || c == '-' || c == ' ')
        {
            if (!out.empty() && out.back() != ' ')
                out += ' ';
        }
        else
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

std::map<std::string, FieldType> declared_types(const ChartSpec& spec)
{
    std::map<std::string, FieldType> out;
    out[spec.x.field] = spec.x.type;
    out[spec.y.field] = spec.y.type;
    if (spec.series)
        out[spec.series->field] = spec.series->type;
    return out;
}

void check_encodings(const ChartSpec& spec, const std::vector<Column>& schema)
{
    auto check = [&](const FieldDef& f, const char* channel) {
        auto it = std::find_if(schema.begin(), schema.end(),
                               [&](const Column& c) { return c.name == f.field; });
        if (it == schema.end())
            throw Error(Errc::schema_mismatch,
                        fmt::format("encoding.{} references absent column '{}'", channel, f.field));
        const bool ok = (f.type == FieldType::quantitative && it->type == ColumnType::number) ||
                        (f.type == FieldType::temporal && it->type == ColumnType::temporal) ||
                        f.type == FieldType::ordinal || f.type == FieldType::nominal;
        if (!ok)
            throw Error(Errc::schema_mismatch,
                        fmt::format("encoding.{}: column '{}' is {}, not {}", channel, f.field,
                                    to_string(it->type), to_string(f.type)));
    };
    check(spec.x, "x");
    check(spec.y, "y");
    if (spec.series)
        check(*spec.series, "color");
}

} // namespace

std::string_view to_string(Mark mark)
{
    switch (mark)
    {
    case Mark::line: return "line";
    case Mark::bar: return "bar";
    case Mark::point: return "point";
    }
    return "line";
}

std::string_view to_string(FieldType type)
{
    switch (type)
    {
    case FieldType::quantitative: return "quantitative";
    case FieldType::temporal: return "temporal";
    case FieldType::ordinal: return "ordinal";
    case FieldType::nominal: return "nominal";
    }
    return "quantitative";
}

std::string ChartSpec::unit_of(const std::string& field) const
{
    auto it = units.find(field);
    return it == units.end() ? std::string{} : it->second;
}

const FieldDef* ChartSpec::field_def(std::string_view field) const
{
    if (x.field == field)
        return &x;
    if (y.field == field)
        return &y;
    if (series && series->field == field)
        return &*series;
    return nullptr;
}

bool operator==(const ChartSpec& a, const ChartSpec& b)
{
    return a.name == b.name && a.title == b.title && a.description == b.description &&
           a.mark == b.mark && a.x == b.x && a.y == b.y && a.series == b.series &&
           a.transforms == b.transforms && a.data == b.data && a.resolution == b.resolution &&
           a.units == b.units;
}

ChartSpec parse_spec(std::string_view text, std::string_view name_hint)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw Error(Errc::syntax_error, e.what());
    }
    if (!j.is_object())
        throw Error(Errc::syntax_error, "spec must be a JSON object");

    ChartSpec spec;
    static const std::set<std::string> known = {"name",     "title",     "description", "mark",
                                                "encoding", "data",      "transform",   "usermeta"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key) && !silent_keys.count(key))
            spec.warnings.push_back(fmt::format("ignored top-level key '{}'", key));

    spec.name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>()
                                                            : std::string(name_hint);
    if (j.contains("title"))
    {
        if (j["title"].is_string())
            spec.title = j["title"].get<std::string>();
        else if (j["title"].is_object() && j["title"].contains("text"))
            spec.title = j["title"]["text"].get<std::string>();
    }
    if (j.contains("description") && j["description"].is_string())
        spec.description = j["description"].get<std::string>();

    if (!j.contains("mark"))
        missing("mark");
    std::string mark;
    if (j["mark"].is_string())
        mark = j["mark"].get<std::string>();
    else if (j["mark"].is_object() && j["mark"].contains("type") && j["mark"]["type"].is_string())
        mark = j["mark"]["type"].get<std::string>();
    else
        throw Error(Errc::syntax_error, "mark must be a string or an object with a type");
    if (mark == "line")
        spec.mark = Mark::line;
    else if (mark == "bar")
        spec.mark = Mark::bar;
    else if (mark == "point")
        spec.mark = Mark::point;
    else
        throw Error(Errc::unsupported_mark, fmt::format("unsupported mark '{}'", mark));

    if (!j.contains("encoding") || !j["encoding"].is_object())
        missing("encoding");
    const auto& enc = j["encoding"];
    for (const auto& [channel, _] : enc.items())
        if (channel != "x" && channel != "y" && channel != "color")
            throw Error(Errc::unsupported_channel,
                        fmt::format("unsupported encoding channel '{}'", channel));
    if (!enc.contains("x"))
        missing("encoding.x");
    if (!enc.contains("y"))
        missing("encoding.y");
    spec.x = parse_field_def(enc["x"], "x", spec);
    spec.y = parse_field_def(enc["y"], "y", spec);
    if (enc.contains("color"))
    {
        spec.series = parse_field_def(enc["color"], "color", spec);
        if (spec.series->continuous())
            throw Error(Errc::unsupported_channel, "series channel must be nominal or ordinal");
    }

    if (!j.contains("data") || !j["data"].is_object())
        missing("data");
    const auto& data = j["data"];
    if (data.contains("values"))
    {
        if (!data["values"].is_array())
            throw Error(Errc::syntax_error, "data.values must be an array");
        spec.data.inline_values = data["values"].dump();
    }
    else if (data.contains("url") && data["url"].is_string())
        spec.data.url = data["url"].get<std::string>();
    else
        missing("data.values or data.url");

    if (j.contains("transform"))
    {
        if (!j["transform"].is_array())
            throw Error(Errc::syntax_error, "transform must be an array");
        for (const auto& t : j["transform"])
            spec.transforms.push_back(parse_transform(t));
    }

    if (j.contains("usermeta") && j["usermeta"].is_object())
    {
        const auto& meta = j["usermeta"];
        if (meta.contains("units") && meta["units"].is_object())
            for (const auto& [field, unit] : meta["units"].items())
                if (unit.is_string())
                    spec.units[field] = unit.get<std::string>();
        if (meta.contains("resolution"))
        {
            const auto& r = meta["resolution"];
            ResolutionSpec res;
            if (r.contains("op"))
            {
                auto op = parse_aggregate_op(r["op"].get<std::string>());
                if (!op)
                    throw Error(Errc::syntax_error, "unsupported resolution op");
                res.op = *op;
            }
            if (!r.contains("layers") || !r["layers"].is_array() || r["layers"].empty())
                missing("usermeta.resolution.layers");
            for (const auto& l : r["layers"])
            {
                auto unit = l.is_string() ? parse_time_unit(l.get<std::string>()) : std::nullopt;
                if (!unit)
                    throw Error(Errc::syntax_error, fmt::format("unknown layer unit {}", l.dump()));
                res.units.push_back(*unit);
            }
            for (std::size_t i = 1; i < res.units.size(); ++i)
                if (!coarser(res.units[i - 1], res.units[i]))
                    throw Error(Errc::syntax_error, "resolution layers must be ordered coarse to fine");
            spec.resolution = std::move(res);
        }
    }

    if (!spec.data.inline_values.empty())
    {
        const auto raw = load_table(spec);
        check_encodings(spec, transformed_schema(raw.columns(), spec.transforms));
    }
    return spec;
}

std::string serialize_spec(const ChartSpec& spec)
{
    json j;
    j["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
    j["name"] = spec.name;
    if (!spec.title.empty())
        j["title"] = spec.title;
    if (!spec.description.empty())
        j["description"] = spec.description;
    j["mark"] = to_string(spec.mark);
    if (!spec.data.inline_values.empty())
        j["data"] = {{"values", json::parse(spec.data.inline_values)}};
    else
        j["data"] = {{"url", spec.data.url}};
    if (!spec.transforms.empty())
    {
        j["transform"] = json::array();
        for (const auto& t : spec.transforms)
            j["transform"].push_back(transform_json(t));
    }
    j["encoding"] = {{"x", field_json(spec.x)}, {"y", field_json(spec.y)}};
    if (spec.series)
        j["encoding"]["color"] = field_json(*spec.series);
    if (!spec.units.empty() || spec.resolution)
    {
        json meta = json::object();
        if (!spec.units.empty())
            meta["units"] = spec.units;
        if (spec.resolution)
        {
            json layers = json::array();
            for (auto u : spec.resolution->units)
                layers.push_back(to_string(u));
            meta["resolution"] = {{"op", to_string(spec.resolution->op)}, {"layers", layers}};
        }
        j["usermeta"] = meta;
    }
    return j.dump(2);
}

DataTable load_json_rows(std::string_view text, const std::map<std::string, FieldType>& declared)
{
    json rows;
    try
    {
        rows = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw Error(Errc::syntax_error, e.what());
    }
    if (!rows.is_array())
        throw Error(Errc::syntax_error, "data values must be an array of objects");
    std::vector<std::string> names;
    for (const auto& r : rows)
    {
        if (!r.is_object())
            throw Error(Errc::syntax_error, "data values must be an array of objects");
        for (const auto& [key, _] : r.items())
            if (std::find(names.begin(), names.end(), key) == names.end())
                names.push_back(key);
    }
    std::vector<std::vector<Value>> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        std::vector<Value> row;
        for (const auto& name : names)
        {
            auto it = declared.find(name);
            const auto type = it == declared.end() ? std::nullopt : std::optional(it->second);
            row.push_back(rows[i].contains(name) ? coerce(rows[i][name], type, i, name)
                                                 : Value(Null{}));
        }
        out.push_back(std::move(row));
    }
    return build_table(names, std::move(out), declared);
}

DataTable load_csv(std::string_view text, const std::map<std::string, FieldType>& declared)
{
    auto records = split_csv(text);
    if (records.empty())
        return DataTable();
    const auto names = records.front();
    std::vector<std::vector<Value>> out;
    for (std::size_t r = 1; r < records.size(); ++r)
    {
        const auto& rec = records[r];
        if (rec.size() != names.size())
            throw Error(Errc::type_coercion,
                        fmt::format("row {}: expected {} fields, got {}", r - 1, names.size(),
                                    rec.size()));
        std::vector<Value> row;
        for (std::size_t c = 0; c < names.size(); ++c)
        {
            const auto& cell = rec[c];
            auto it = declared.find(names[c]);
            if (cell.empty())
                row.emplace_back(Null{});
            else if (it != declared.end())
                row.push_back(coerce(json(cell), it->second, r - 1, names[c]));
            else if (auto d = parse_double(cell))
                row.emplace_back(*d);
            else
                row.emplace_back(cell);
        }
        out.push_back(std::move(row));
    }
    return build_table(names, std::move(out), declared);
}

DataTable load_table(const ChartSpec& spec, const std::filesystem::path& base_dir)
{
    const auto declared = declared_types(spec);
    if (!spec.data.inline_values.empty())
        return load_json_rows(spec.data.inline_values, declared);
    const auto path = base_dir / spec.data.url;
    const auto text = read_file(path);
    if (path.extension() == ".json")
        return load_json_rows(text, declared);
    return load_csv(text, declared);
}

const DataTable& LoadedChart::layer_table(std::string_view layer_id) const
{
    if (layer_id == "base" || layer_id.empty())
        return table;
    for (const auto& l : hierarchy)
        if (l.layer_id == layer_id)
            return l.table;
    throw Error(Errc::invalid_argument, fmt::format("unknown layer '{}'", layer_id));
}

std::optional<double> LoadedChart::x_position(const Value& v) const
{
    if (spec.x.continuous())
        return axis_position(v);
    if (is_null(v))
        return std::nullopt;
    const auto text = to_text(v);
    auto it = std::find(x_categories.begin(), x_categories.end(), text);
    if (it == x_categories.end())
        return std::nullopt;
    return static_cast<double>(it - x_categories.begin());
}

std::optional<TimeUnit> LoadedChart::x_grain() const
{
    if (spec.x.type != FieldType::temporal)
        return std::nullopt;
    const auto col = table.require_column(spec.x.field);
    for (const auto& row : table.rows())
        if (auto t = std::get_if<Temporal>(&row[col]))
            return t->grain();
    return std::nullopt;
}

LoadedChart load_chart(const ChartSpec& spec, const std::filesystem::path& base_dir)
{
    LoadedChart chart;
    chart.spec = spec;
    chart.table = apply_transforms(load_table(spec, base_dir), spec.transforms);
    check_encodings(spec, chart.table.columns());

    if (!spec.x.continuous())
    {
        if (spec.x.scale && !spec.x.scale->categories.empty())
            chart.x_categories = spec.x.scale->categories;
        else
            for (const auto& v : chart.table.column_values(spec.x.field))
            {
                if (is_null(v))
                    continue;
                auto text = to_text(v);
                if (std::find(chart.x_categories.begin(), chart.x_categories.end(), text) ==
                    chart.x_categories.end())
                    chart.x_categories.push_back(std::move(text));
            }
    }

    if (spec.resolution)
    {
        if (spec.x.type != FieldType::temporal)
            throw Error(Errc::non_temporal_groupby, "resolution layers need a temporal x field");
        std::vector<std::string> extra;
        if (spec.series)
            extra.push_back(spec.series->field);
        chart.hierarchy = build_hierarchy(chart.table, spec.resolution->units, spec.resolution->op,
                                          spec.y.field, spec.x.field, extra);
    }
    return chart;
}

LoadedChart load_chart_file(const std::filesystem::path& spec_path)
{
    auto stem = spec_path.filename().string();
    if (auto pos = stem.find('.'); pos != std::string::npos)
        stem = stem.substr(0, pos);
    const auto spec = parse_spec(read_file(spec_path), stem);
    return load_chart(spec, spec_path.parent_path());
}

const CatalogueEntry* ChartCatalogue::find(std::string_view name) const
{
    const auto wanted = normalize_name(name);
    for (const auto& e : entries)
        if (normalize_name(e.name) == wanted || (!e.title.empty() && normalize_name(e.title) == wanted))
            return &e;
    return nullptr;
}

std::string spec_digest(std::string_view spec_bytes)
{
    return fnv1a_hex(spec_bytes);
}

ChartCatalogue scan_catalogue(const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw Error(Errc::io_error, fmt::format("catalogue root '{}' is not a readable directory",
                                                root.string()));
    ChartCatalogue cat;
    fs::recursive_directory_iterator it(root, ec);
    if (ec)
        throw Error(Errc::io_error, fmt::format("cannot read '{}': {}", root.string(), ec.message()));
    for (const auto& entry : it)
    {
        if (!entry.is_regular_file())
            continue;
        const auto filename = entry.path().filename().string();
        constexpr std::string_view suffix = ".vl.json";
        if (filename.size() <= suffix.size() ||
            filename.compare(filename.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        const auto rel = fs::relative(entry.path(), root).generic_string();
        const auto name = rel.substr(0, rel.size() - suffix.size());
        try
        {
            const auto bytes = read_file(entry.path());
            const auto stem = filename.substr(0, filename.size() - suffix.size());
            const auto spec = parse_spec(bytes, stem);
            const auto chart = load_chart(spec, entry.path().parent_path());
            CatalogueEntry e;
            e.name = name;
            e.title = spec.title.empty() ? spec.name : spec.title;
            e.digest = spec_digest(bytes);
            e.mark = spec.mark;
            e.schema = chart.table.columns();
            e.row_count = chart.table.row_count();
            e.path = entry.path();
            const auto preview = entry.path().parent_path() / (stem + ".png");
            if (fs::exists(preview))
            {
                const auto raw = read_file(preview);
                e.preview = std::vector<std::uint8_t>(raw.begin(), raw.end());
            }
            cat.entries.push_back(std::move(e));
        }
        catch (const Error& err)
        {
            cat.skipped.push_back({entry.path(), err.what()});
        }
    }
    std::sort(cat.entries.begin(), cat.entries.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    std::sort(cat.skipped.begin(), cat.skipped.end(),
              [](const auto& a, const auto& b) { return a.path < b.path; });
    return cat;
}

std::filesystem::path resolve_catalogue_root(const std::optional<std::string>& flag)
{
    if (flag && !flag->empty())
        return *flag;
    if (const char* env = std::getenv("FEELGRID_CATALOGUE"); env && *env)
        return env;
    return "catalogue";
}

} // namespace feelgrid
