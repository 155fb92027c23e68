#include <feelgrid/agent.hpp>
#include <feelgrid/error.hpp>
#include <feelgrid/model_port.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <iterator>
#include <regex>
#include <set>
#include <sstream>

namespace feelgrid
{
namespace
{

std::string lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Lowercase, punctuation folded to spaces, single-spaced with sentinels at both ends.
std::string normalize(std::string_view text)
{
    std::string out = " ";
    for (unsigned char c : text)
    {
        if (std::isalnum(c) || c == '-' || c == '\'' || c == '.' || c == '%')
            out += static_cast<char>(std::tolower(c));
        else if (out.back() != ' ')
            out += ' ';
    }
    while (!out.empty() && (out.back() == '.' || out.back() == ' '))
        out.pop_back();
    out += ' ';
    // Drop sentence dots that are not decimal points.
    std::string cleaned;
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        if (out[i] == '.' && !(i > 0 && std::isdigit(static_cast<unsigned char>(out[i - 1])) &&
                               i + 1 < out.size() && std::isdigit(static_cast<unsigned char>(out[i + 1]))))
            continue;
        cleaned += out[i];
    }
    return cleaned;
}

bool has(const std::string& norm, std::string_view phrase)
{
    return norm.find(fmt::format(" {} ", phrase)) != std::string::npos;
}

bool has_prefix_word(const std::string& norm, std::string_view stem)
{
    return norm.find(fmt::format(" {}", stem)) != std::string::npos;
}

template <class... P>
bool any(const std::string& norm, P... phrases)
{
    return (has(norm, phrases) || ...);
}

struct Marker
{
    std::string_view phrase;
    double weight;
};

constexpr Marker deictic_markers[] = {
    {"between these", 1.0}, {"these points", 0.9}, {"this period", 0.9}, {"this point", 0.9},
    {"this bar", 0.9},      {"this value", 0.9},   {"this range", 0.9},  {"this quarter", 0.9},
    {"this month", 0.9},    {"this week", 0.9},    {"this day", 0.9},    {"this year", 0.9},
    {"these", 0.8},         {"here", 0.7},         {"this", 0.6},        {"that", 0.5},
};

constexpr std::string_view non_deictic[] = {
    "this chart", "this graph", "this plot", "this data", "this dataset", "this display",
};

std::string number_word(std::size_t n)
{
    static const char* words[] = {"zero", "one", "two", "three", "four", "five",
                                  "six",  "seven", "eight", "nine", "ten"};
    return n <= 10 ? words[n] : std::to_string(n);
}

bool exact(double v, int decimals)
{
    const double back = std::stod(format_fixed(v, decimals));
    return std::abs(back - v) <= 1e-12 * std::max(1.0, std::abs(v));
}

std::string x_short(const LoadedChart& chart, const Value& x)
{
    if (auto t = std::get_if<Temporal>(&x))
        return t->short_label();
    (void)chart;
    return to_text(x);
}

std::string x_field_value(const Value& x)
{
    if (auto t = std::get_if<Temporal>(&x))
        return t->label();
    return to_text(x);
}

std::string subject(const LoadedChart& chart)
{
    return chart.spec.y.title.empty() ? chart.spec.y.field : lower(chart.spec.y.title);
}

std::string join_list(const std::vector<std::string>& items)
{
    if (items.empty())
        return {};
    if (items.size() == 1)
        return items.front();
    std::string out;
    for (std::size_t i = 0; i + 1 < items.size(); ++i)
        out += (i ? ", " : "") + items[i];
    return out + " and " + items.back();
}

enum class Source
{
    none,
    touch,
    previous,
    spoken,
};

struct Referents
{
    Source source = Source::none;
    std::vector<double> picks;
    bool axis_only = false;
    std::string axis_label;
};

} // namespace

double deictic_lexical_score(std::string_view transcript)
{
    std::string norm = normalize(transcript);
    for (auto phrase : non_deictic)
    {
        const std::string needle = fmt::format(" {} ", phrase);
        for (auto pos = norm.find(needle); pos != std::string::npos; pos = norm.find(needle))
            norm.replace(pos, needle.size(), " ");
    }
    double best = 0.0;
    for (const auto& m : deictic_markers)
        if (has(norm, m.phrase))
            best = std::max(best, m.weight);
    return best;
}

std::string selection_fields(const LoadedChart& chart, const Selection& s)
{
    std::vector<std::string> parts;
    if (s.datum)
    {
        parts.push_back(chart.spec.x.field + "=" + x_field_value(s.datum->x));
        const auto y = as_number(s.datum->y);
        parts.push_back(chart.spec.y.field + "=" + (y ? format_measure(chart, *y) : "null"));
        if (chart.spec.series && s.datum->series)
            parts.push_back(chart.spec.series->field + "=" + *s.datum->series);
    }
    else
    {
        parts.push_back(fmt::format("element={}", to_string(s.kind)));
        parts.push_back("label=" + s.label);
    }
    return "{" + fmt::format("{}", fmt::join(parts, ", ")) + "}";
}

DeicticResult classify_deictic(std::string_view transcript, const std::vector<Selection>& selections,
                               const LoadedChart* chart, Millis now, Millis ttl_ms)
{
    DeicticResult r;
    r.augmented = std::string(transcript);
    r.lexical = deictic_lexical_score(transcript);
    double support = 0.0;
    for (const auto& s : selections)
    {
        const double age = static_cast<double>(std::max<Millis>(0, now - s.t));
        const double recency = std::max(0.0, 1.0 - 0.5 * age / static_cast<double>(ttl_ms));
        support = std::max(support, recency * (0.5 + 0.5 * s.probability));
    }
    r.confidence = r.lexical * support;
    if (r.confidence >= deictic_threshold && !selections.empty() && chart)
    {
        std::vector<std::string> parts;
        char name = 'A';
        for (const auto& s : selections)
        {
            const std::string prefix = s.datum ? "point" : "element";
            parts.push_back(fmt::format("{}_{} {}", prefix, name, selection_fields(*chart, s)));
            name = name == 'Z' ? 'A' : static_cast<char>(name + 1);
        }
        r.augmented += fmt::format(" (touched: {})", fmt::join(parts, "; "));
        r.fused = true;
    }
    return r;
}

std::string_view to_string(IntentCategory c)
{
    switch (c)
    {
    case IntentCategory::LoadChart: return "LoadChart";
    case IntentCategory::Overview: return "Overview";
    case IntentCategory::ImageAnalysis: return "ImageAnalysis";
    case IntentCategory::Operations: return "Operations";
    case IntentCategory::DataExplore: return "DataExplore";
    }
    return "DataExplore";
}

std::optional<IntentCategory> parse_intent_category(std::string_view text)
{
    for (auto c : {IntentCategory::LoadChart, IntentCategory::Overview, IntentCategory::ImageAnalysis,
                   IntentCategory::Operations, IntentCategory::DataExplore})
        if (to_string(c) == text)
            return c;
    return std::nullopt;
}

std::string_view to_string(Task t)
{
    static constexpr std::string_view names[] = {"min",   "max",   "mean",           "sum",     "count",
                                                 "range_describe", "trend", "compare_points", "value_at"};
    return names[static_cast<std::size_t>(t)];
}

std::string_view to_string(Operation op)
{
    static constexpr std::string_view names[] = {"pan_left", "pan_right", "pan_up",  "pan_down", "zoom_in",
                                                 "zoom_out", "finer",     "coarser", "reset"};
    return names[static_cast<std::size_t>(op)];
}

std::string strip_touch_suffix(std::string_view transcript)
{
    const auto pos = transcript.rfind(" (touched:");
    if (pos == std::string_view::npos)
        return std::string(transcript);
    return std::string(transcript.substr(0, pos));
}

Intent route_intent(std::string_view transcript)
{
    const std::string norm = normalize(strip_touch_suffix(transcript));
    Intent intent;

    static const std::regex load_re(R"( (?:load|open|switch to) (?:the )?(.*?)(?: chart| graph| plot)? $)");
    std::smatch m;
    if (std::regex_search(norm, m, load_re))
    {
        intent.category = IntentCategory::LoadChart;
        intent.chart_name = m[1].str();
        intent.clarify = intent.chart_name.empty();
        return intent;
    }

    const std::pair<const char*, Operation> operations[] = {
        {"zoom in", Operation::zoom_in},         {"zoom out", Operation::zoom_out},
        {"pan left", Operation::pan_left},       {"pan right", Operation::pan_right},
        {"pan up", Operation::pan_up},           {"pan down", Operation::pan_down},
        {"scroll left", Operation::pan_left},    {"scroll right", Operation::pan_right},
        {"scroll up", Operation::pan_up},        {"scroll down", Operation::pan_down},
        {"move left", Operation::pan_left},      {"move right", Operation::pan_right},
        {"more detail", Operation::finer},       {"drill down", Operation::finer},
        {"finer", Operation::finer},             {"less detail", Operation::coarser},
        {"coarser", Operation::coarser},         {"roll up", Operation::coarser},
        {"reset the view", Operation::reset},    {"reset view", Operation::reset},
        {"reset zoom", Operation::reset},
    };
    for (const auto& [phrase, op] : operations)
        if (has(norm, phrase))
        {
            intent.category = IntentCategory::Operations;
            intent.operation = op;
            return intent;
        }

    if (any(norm, "image", "picture", "look like", "kind of chart", "type of chart"))
    {
        intent.category = IntentCategory::ImageAnalysis;
        return intent;
    }
    if (any(norm, "overview", "summarize", "summarise", "summary", "describe the chart",
            "what is this chart", "what does this chart show", "about the chart", "about this chart"))
    {
        intent.category = IntentCategory::Overview;
        return intent;
    }

    intent.category = IntentCategory::DataExplore;
    intent.refers_previous = any(norm, "those points", "those values", "those", "them");
    if (has(norm, "compare") || has_prefix_word(norm, "differ") || any(norm, "how much higher", "how much lower"))
        intent.task = Task::compare_points;
    else if (any(norm, "trend", "change", "changed", "happened", "pattern", "over time", "go up", "go down"))
        intent.task = Task::trend;
    else if (has_prefix_word(norm, "max") || any(norm, "highest", "peak", "largest", "biggest"))
        intent.task = Task::max;
    else if (has_prefix_word(norm, "min") || any(norm, "lowest", "smallest", "trough"))
        intent.task = Task::min;
    else if (any(norm, "average", "mean"))
        intent.task = Task::mean;
    else if (any(norm, "total", "sum"))
        intent.task = Task::sum;
    else if (any(norm, "how many", "count", "number of"))
        intent.task = Task::count;
    else if (any(norm, "describe", "range", "statistics", "stats", "spread"))
        intent.task = Task::range_describe;
    else if (any(norm, "value", "values", "how much", "what is", "what was", "what's"))
        intent.task = Task::value_at;
    else
        intent.clarify = true;
    return intent;
}

std::vector<SeriesPoint> series_points(const LoadedChart& chart, const DataTable& table)
{
    const auto xc = table.require_column(chart.spec.x.field);
    const auto yc = table.require_column(chart.spec.y.field);
    std::vector<SeriesPoint> out;
    for (std::size_t r = 0; r < table.row_count(); ++r)
    {
        const auto x = chart.x_position(table.at(r, xc));
        const auto y = as_number(table.at(r, yc));
        if (x && y)
            out.push_back({*x, *y, r, x_short(chart, table.at(r, xc))});
    }
    std::stable_sort(out.begin(), out.end(), [](const SeriesPoint& a, const SeriesPoint& b) { return a.x < b.x; });
    return out;
}

std::vector<TrendSegment> segment_trend(const std::vector<double>& values)
{
    std::vector<TrendSegment> out;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
    {
        const double d = values[i + 1] - values[i];
        const Direction dir = std::abs(d) < 1e-9 ? Direction::plateau : d < 0 ? Direction::decline : Direction::rise;
        if (!out.empty() && out.back().direction == dir)
            out.back().last = i + 1;
        else
            out.push_back({dir, i, i + 1});
    }
    return out;
}

AnalyticResult calculate(Task task, const std::vector<SeriesPoint>& series,
                         std::optional<std::pair<double, double>> range, const std::vector<double>& picks)
{
    AnalyticResult r;
    r.task = task;
    if (task == Task::value_at || task == Task::compare_points)
    {
        if (task == Task::compare_points && picks.size() != 2)
            throw Error(Errc::invalid_argument, "compare_points needs exactly two points");
        for (double x : picks)
        {
            const auto it = std::find_if(series.begin(), series.end(), [&](const SeriesPoint& p) { return p.x == x; });
            if (it == series.end())
                throw Error(Errc::empty_range, "no data at the requested position");
            r.hits.push_back(r.points.size());
            r.points.push_back(*it);
        }
        if (r.points.empty())
            throw Error(Errc::empty_range, "no position requested");
        r.value = task == Task::compare_points ? r.points[1].y - r.points[0].y : r.points[0].y;
        double total = 0.0;
        r.min = r.max = r.points.front().y;
        for (const auto& p : r.points)
        {
            total += p.y;
            r.min = std::min(r.min, p.y);
            r.max = std::max(r.max, p.y);
        }
        r.mean = total / static_cast<double>(r.points.size());
        return r;
    }

    for (const auto& p : series)
        if (!range || (p.x >= range->first && p.x <= range->second))
            r.points.push_back(p);
    if (r.points.empty())
        throw Error(Errc::empty_range, "no data in the requested range");

    const auto n = r.points.size();
    double sum = 0.0;
    r.min = r.max = r.points.front().y;
    for (const auto& p : r.points)
    {
        sum += p.y;
        r.min = std::min(r.min, p.y);
        r.max = std::max(r.max, p.y);
    }
    r.mean = sum / static_cast<double>(n);
    auto ties = [&](double target) {
        for (std::size_t i = 0; i < n; ++i)
            if (r.points[i].y == target)
                r.hits.push_back(i);
    };

    switch (task)
    {
    case Task::min: r.value = r.min; ties(r.min); break;
    case Task::max: r.value = r.max; ties(r.max); break;
    case Task::mean: r.value = r.mean; break;
    case Task::sum: r.value = sum; break;
    case Task::count: r.value = static_cast<double>(n); break;
    case Task::range_describe:
        r.value = static_cast<double>(n);
        r.hits = {0, n - 1};
        break;
    case Task::trend:
    {
        std::vector<double> ys;
        for (const auto& p : r.points)
            ys.push_back(p.y);
        r.segments = segment_trend(ys);
        r.value = r.points.back().y - r.points.front().y;
        r.hits.push_back(0);
        for (const auto& s : r.segments)
            r.hits.push_back(s.last);
        break;
    }
    default: break;
    }
    return r;
}

std::size_t count_words(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return static_cast<std::size_t>(std::distance(std::istream_iterator<std::string>(in),
                                                  std::istream_iterator<std::string>()));
}

Agent::Agent(std::shared_ptr<ModelPort> port) : port_(std::move(port))
{
}

namespace
{

// Formats a measure and says "approximately" only when the shown digits are not exact.
std::string measure(const LoadedChart& chart, double v, bool derived)
{
    const int p = measure_precision(chart);
    const int decimals = derived ? std::max(p, 1) : p;
    const auto text = format_measure(chart, v, decimals);
    return exact(v, decimals) ? text : "approximately " + text;
}

std::string difference_text(const LoadedChart& chart, double v)
{
    const int decimals = std::max(measure_precision(chart), 1);
    const auto unit = chart.spec.unit_of(chart.spec.y.field);
    std::string number = format_fixed(std::abs(v), decimals);
    if (!exact(std::abs(v), decimals))
        number = "approximately " + number;
    if (unit == "%")
        return number + " percentage points";
    return unit.empty() ? number : number + " " + unit;
}

std::string period_plural(const LoadedChart& chart, std::size_t n)
{
    if (auto g = chart.x_grain())
        return fmt::format("{} {}", n, period_noun(*g, n != 1));
    return fmt::format("{} {}", n, n == 1 ? "point" : "points");
}

} // namespace

AgentResponse Agent::respond(std::string_view transcript, const AgentContext& context)
{
    ++turn_;
    const std::string plain = strip_touch_suffix(transcript);
    const auto deictic = classify_deictic(plain, context.selections, context.chart, context.now, context.ttl_ms);
    Intent intent = route_intent(plain);

    std::optional<PortReply> reply;
    std::vector<std::string> port_log;
    if (port_)
    {
        PortRequest req;
        req.transcript = plain;
        req.augmented = deictic.augmented;
        if (context.chart)
        {
            req.chart = context.chart->spec.name;
            req.schema = context.chart->table.columns();
            char name = 'A';
            for (const auto& s : context.selections)
            {
                PortSelection ps{fmt::format("point_{}", name++), {}};
                if (s.datum)
                {
                    ps.fields.emplace_back(context.chart->spec.x.field, x_field_value(s.datum->x));
                    if (auto y = as_number(s.datum->y))
                        ps.fields.emplace_back(context.chart->spec.y.field, format_measure(*context.chart, *y));
                }
                req.selections.push_back(std::move(ps));
            }
        }
        if (context.catalogue)
            for (const auto& e : context.catalogue->entries)
                req.catalogue.push_back(e.name);
        try
        {
            reply = port_->ask(req);
            if (reply->intent && *reply->intent != intent.category)
            {
                port_log.push_back(fmt::format("model port overrides intent {} -> {}", to_string(intent.category),
                                               to_string(*reply->intent)));
                intent.category = *reply->intent;
                intent.clarify = false;
            }
            if (reply->task && intent.category == IntentCategory::DataExplore)
                intent.task = *reply->task, intent.clarify = false;
        }
        catch (const Error& e)
        {
            port_log.push_back(fmt::format("{}: {}", to_string(e.code()), e.what()));
            reply.reset();
        }
    }

    AgentResponse r = answer(intent, plain, deictic.augmented, context, deictic.confidence);
    r.augmented = deictic.augmented;
    r.confidence = deictic.confidence;
    r.intent = intent;
    r.log.insert(r.log.begin(), port_log.begin(), port_log.end());

    if (reply && !reply->answer.empty())
    {
        std::vector<std::string> mismatches;
        if (r.result)
            mismatches = verify_citations(reply->cited_values, *r.result);
        else if (!reply->cited_values.empty())
            mismatches.push_back("no computed result to verify cited values");
        if (!mismatches.empty())
            for (auto& m : mismatches)
                r.log.push_back("model answer discarded, " + m);
        else if (r.intent.category == IntentCategory::DataExplore && count_words(reply->answer) > max_answer_words)
            r.log.push_back("model answer discarded, longer than 40 words");
        else if (!r.clarification)
        {
            r.text = reply->answer;
            r.sentence_elements.clear();
            r.word_count = count_words(r.text);
        }
    }
    return r;
}

AgentResponse Agent::answer(const Intent& intent, std::string_view plain, const std::string& augmented,
                            const AgentContext& context, double confidence)
{
    AgentResponse r;
    auto finish = [&](std::string text, bool clarification) {
        r.text = std::move(text);
        r.clarification = clarification;
        r.word_count = count_words(r.text);
        return r;
    };
    (void)augmented;

    if (intent.category == IntentCategory::LoadChart)
    {
        if (intent.clarify || !context.catalogue)
            return finish("Which chart should I load?", true);
        const auto* entry = context.catalogue->find(intent.chart_name);
        if (!entry)
        {
            std::vector<std::string> names;
            for (const auto& e : context.catalogue->entries)
                names.push_back(e.title.empty() ? e.name : e.title);
            return finish(fmt::format("I could not find a chart called {}. Available charts: {}.",
                                      intent.chart_name, join_list(names)),
                          true);
        }
        r.commands.push_back({CommandKind::load_chart, entry->name, std::nullopt, {}});
        return finish(fmt::format("Loaded {}.", entry->title.empty() ? entry->name : entry->title), false);
    }

    if (!context.chart)
        return finish("No chart is loaded. Say load followed by a chart name.", true);
    const LoadedChart& chart = *context.chart;
    const std::string active = context.viewport ? context.viewport->active_layer : "base";
    const DataTable& table = chart.layer_table(active);
    const auto series = series_points(chart, table);

    auto elements_for_rows = [&](const std::vector<std::size_t>& rows) {
        std::vector<int> ids;
        for (auto row : rows)
        {
            bool found = false;
            if (context.frame)
                for (const auto& e : context.frame->elements)
                    if (e.datum && e.datum->row == row)
                    {
                        if (std::find(ids.begin(), ids.end(), e.element_id) == ids.end())
                            ids.push_back(e.element_id);
                        found = true;
                    }
            if (!found && std::find(r.off_screen_rows.begin(), r.off_screen_rows.end(), row) == r.off_screen_rows.end())
                r.off_screen_rows.push_back(row);
        }
        return ids;
    };

    switch (intent.category)
    {
    case IntentCategory::Operations:
        r.commands.push_back({CommandKind::viewport, {}, intent.operation, {}});
        switch (*intent.operation)
        {
        case Operation::zoom_in: return finish("Zooming in.", false);
        case Operation::zoom_out: return finish("Zooming out.", false);
        case Operation::pan_left: return finish("Panning left.", false);
        case Operation::pan_right: return finish("Panning right.", false);
        case Operation::pan_up: return finish("Panning up.", false);
        case Operation::pan_down: return finish("Panning down.", false);
        case Operation::finer: return finish("Showing more detail.", false);
        case Operation::coarser: return finish("Showing less detail.", false);
        case Operation::reset: return finish("Resetting the view.", false);
        }
        break;
    case IntentCategory::ImageAnalysis:
    {
        std::vector<std::string> fields;
        for (const auto& c : chart.table.columns())
            fields.push_back(fmt::format("{} ({})", c.name, to_string(c.type)));
        return finish(fmt::format("This is a {} chart with {} rows. Its fields are {}.", to_string(chart.spec.mark),
                                  chart.table.row_count(), join_list(fields)),
                      false);
    }
    case IntentCategory::Overview:
    {
        if (series.empty())
            return finish(fmt::format("This {} chart has no data.", to_string(chart.spec.mark)), false);
        const auto stats = calculate(Task::range_describe, series);
        const auto title = chart.spec.title.empty() ? chart.spec.name : chart.spec.title;
        return finish(fmt::format("This is a {} chart of {} by {}, titled {}. It covers {} to {} with {} data points. "
                                  "Values range from {} to {}.",
                                  to_string(chart.spec.mark), subject(chart), chart.spec.x.field, title,
                                  series.front().label, series.back().label, series.size(),
                                  measure(chart, stats.min, false), measure(chart, stats.max, false)),
                      false);
    }
    default: break;
    }

    // Data questions.
    Referents ref;
    const auto live_data = [&] {
        std::vector<Selection> out;
        for (const auto& s : context.selections)
            if (s.datum)
                out.push_back(s);
        return out;
    }();
    if (confidence >= deictic_threshold && !context.selections.empty())
    {
        if (live_data.empty())
        {
            ref.axis_only = true;
            ref.axis_label = context.selections.front().label;
        }
        ref.source = Source::touch;
        for (const auto& s : live_data)
            if (auto x = chart.x_position(s.datum->x))
                ref.picks.push_back(*x);
    }
    else if (intent.refers_previous && !last_rows_.empty())
    {
        ref.source = Source::previous;
        for (auto row : last_rows_)
            for (const auto& p : series)
                if (p.row == row)
                    ref.picks.push_back(p.x);
    }
    else
    {
        const std::string norm = normalize(plain);
        const auto xc = table.require_column(chart.spec.x.field);
        for (const auto& p : series)
        {
            const auto& xv = table.at(p.row, xc);
            std::vector<std::string> forms = {lower(x_field_value(xv)), lower(p.label)};
            if (auto t = std::get_if<Temporal>(&xv))
                forms.push_back(lower(t->spoken()));
            for (const auto& f : forms)
                if (!f.empty() && f.size() > 3 && has(norm, f))
                {
                    ref.picks.push_back(p.x);
                    break;
                }
        }
        if (!ref.picks.empty())
            ref.source = Source::spoken;
    }

    if (ref.axis_only)
        return finish(fmt::format("You are touching an axis label, {}. Double-tap a data point to ask about its value.",
                                  ref.axis_label),
                      true);
    if (deictic_lexical_score(plain) > 0.0 && ref.source == Source::none && !intent.refers_previous)
        return finish("Which data point do you mean? Double-tap a point on the chart, then ask again.", true);
    if (intent.clarify || !intent.task)
        return finish("I did not understand the question. You can ask about the trend, the highest, lowest or "
                      "average value, or a touched point.",
                      true);

    Task task = *intent.task;
    if (task == Task::trend && ref.picks.size() == 1)
        task = Task::value_at;
    if (task == Task::compare_points && ref.picks.size() != 2)
        return finish("Which two points should I compare? Double-tap two data points, then ask again.", true);
    if (task == Task::value_at && ref.picks.empty())
        return finish("Which data point do you mean? Double-tap a point on the chart, then ask again.", true);

    std::optional<std::pair<double, double>> range;
    if (ref.picks.size() >= 2)
    {
        const auto [lo, hi] = std::minmax_element(ref.picks.begin(), ref.picks.end());
        range = std::pair(*lo, *hi);
    }

    AnalyticResult result;
    try
    {
        result = calculate(task, series, range, ref.picks);
    }
    catch (const Error& e)
    {
        if (e.code() != Errc::empty_range)
            throw;
        r.log.push_back(fmt::format("empty_range: {}", e.what()));
        return finish("There is no data in that range.", false);
    }
    r.result = result;

    // Context first, then data.
    std::string context_phrase;
    const auto label_of = [&](double x) {
        for (const auto& p : series)
            if (p.x == x)
                return p.label;
        return std::string{};
    };
    std::string origin;
    switch (ref.source)
    {
    case Source::touch:
        origin = ref.picks.size() == 1 ? "the data point you touched"
                                       : fmt::format("the {} data points you touched", number_word(ref.picks.size()));
        break;
    case Source::previous: origin = "the points from my last answer"; break;
    default: break;
    }
    const std::string paren = origin.empty() ? "" : " (" + origin + ")";
    if (task == Task::value_at || task == Task::compare_points)
    {
        std::vector<std::string> labels;
        for (double x : ref.picks)
            labels.push_back(label_of(x));
        context_phrase = fmt::format("At {}{},", join_list(labels), paren);
        if (task == Task::compare_points)
            context_phrase = fmt::format("Comparing {}{}:", join_list(labels), paren);
    }
    else if (range)
        context_phrase = fmt::format("From {} to {}{},", result.points.front().label, result.points.back().label, paren);
    else
        context_phrase = fmt::format("Across the whole chart, from {} to {},", result.points.front().label,
                                     result.points.back().label);

    const std::string subj = subject(chart);
    std::vector<std::size_t> cited_rows;
    for (auto i : result.hits)
        cited_rows.push_back(result.points[i].row);

    std::string text;
    switch (task)
    {
    case Task::max:
    case Task::min:
    {
        const bool is_max = task == Task::max;
        std::vector<std::string> labels;
        for (auto i : result.hits)
            labels.push_back(result.points[i].label);
        for (std::size_t shown = labels.size(); shown >= 1; --shown)
        {
            std::vector<std::string> listed(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(shown));
            if (shown < labels.size())
                listed.push_back(fmt::format("{} more", labels.size() - shown));
            text = fmt::format("{} the {} {} was {}, in {}.", context_phrase, is_max ? "highest" : "lowest", subj,
                               measure(chart, result.value, false), join_list(listed));
            if (count_words(text) <= max_answer_words)
                break;
        }
        break;
    }
    case Task::mean:
        text = fmt::format("{} the average {} was {}.", context_phrase, subj, measure(chart, result.value, true));
        cited_rows.clear();
        break;
    case Task::sum:
        text = fmt::format("{} the total {} was {}.", context_phrase, subj, measure(chart, result.value, false));
        cited_rows.clear();
        break;
    case Task::count:
        text = fmt::format("{} there are {} data points.", context_phrase, result.points.size());
        cited_rows.clear();
        break;
    case Task::range_describe:
        text = fmt::format("{} {} started at {} and ended at {}, with a low of {} and a high of {} across {}.",
                           context_phrase, subj, measure(chart, result.points.front().y, false),
                           measure(chart, result.points.back().y, false), measure(chart, result.min, false),
                           measure(chart, result.max, false), period_plural(chart, result.points.size()));
        break;
    case Task::value_at:
    {
        std::vector<std::string> values;
        for (const auto& p : result.points)
            values.push_back(measure(chart, p.y, false));
        text = fmt::format("{} {} was {}.", context_phrase, subj, join_list(values));
        break;
    }
    case Task::compare_points:
    {
        const auto& a = result.points[0];
        const auto& b = result.points[1];
        const char* relation = result.value > 0 ? "higher" : result.value < 0 ? "lower" : "the same";
        if (result.value == 0.0)
            text = fmt::format("{} {} was {} at both.", context_phrase, subj, measure(chart, a.y, false));
        else
            text = fmt::format("{} {} was {} and {}, so {} is {} {}.", context_phrase, subj, measure(chart, a.y, false),
                               measure(chart, b.y, false), b.label, difference_text(chart, result.value), relation);
        break;
    }
    case Task::trend:
    {
        const auto& pts = result.points;
        if (result.segments.empty())
        {
            text = fmt::format("{} there is only one value, {}.", context_phrase, measure(chart, pts.front().y, false));
            break;
        }
        std::vector<std::string> parts;
        for (std::size_t k = 0; k < result.segments.size(); ++k)
        {
            const auto& s = result.segments[k];
            const auto from = measure(chart, pts[s.first].y, false);
            const auto to = measure(chart, pts[s.last].y, false);
            const auto span = period_plural(chart, s.last - s.first + 1);
            switch (s.direction)
            {
            case Direction::decline:
                parts.push_back(k == 0 ? fmt::format("declined from {} to {}", from, to) : fmt::format("fell to {}", to));
                break;
            case Direction::rise:
                parts.push_back(k == 0 ? fmt::format("rose from {} to {}", from, to) : fmt::format("rose to {}", to));
                break;
            case Direction::plateau:
                parts.push_back(fmt::format("{} at {} for {}", k == 0 ? "held" : "remained", from, span));
                break;
            }
        }
        std::string body;
        for (std::size_t k = 0; k < parts.size(); ++k)
            body += (k == 0 ? "" : k + 1 == parts.size() ? ", then " : ", ") + parts[k];
        text = fmt::format("{} {} {}.", context_phrase, subj, body);
        if (count_words(text) > max_answer_words)
        {
            text = fmt::format("{} {} went from {} to {}, changing direction {} times, with a low of {} and a high of {}.",
                               context_phrase, subj, measure(chart, pts.front().y, false),
                               measure(chart, pts.back().y, false), result.segments.size() - 1,
                               measure(chart, result.min, false), measure(chart, result.max, false));
            cited_rows = {pts.front().row, pts.back().row};
        }
        break;
    }
    }

    const auto ids = elements_for_rows(cited_rows);
    r.sentence_elements = {ids};
    if (!ids.empty())
        r.commands.push_back({CommandKind::highlight, {}, std::nullopt, ids});
    if (!cited_rows.empty())
        last_rows_ = cited_rows;
    return finish(text, false);
}

} // namespace feelgrid
