#include <feelgrid/error.hpp>
#include <feelgrid/render.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace feelgrid
{
namespace
{

constexpr int y_axis_col = 5;
constexpr int y_tick_col = 4;
constexpr int x_axis_row = 34;
constexpr int x_tick_row = 35;
constexpr int scroll_row = 39;
constexpr int scroll_col = 0;

struct Point
{
    std::size_t row;
    double x;
    double y;
    std::size_t series;
    Cell cell;
};

Window widen(double lo, double hi)
{
    if (!(lo < hi))
        return {lo - 0.5, hi + 0.5};
    return {lo, hi};
}

void extend(double& lo, double& hi, std::optional<double> v)
{
    if (!v || !std::isfinite(*v))
        return;
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
}

template <class Fn>
void for_each_table(const LoadedChart& chart, Fn&& fn)
{
    fn(chart.table);
    for (const auto& layer : chart.hierarchy)
        fn(layer.table);
}

std::size_t layer_in_window_count(const LoadedChart& chart, const DataTable& table,
                                  const Window& xw)
{
    const auto xc = table.require_column(chart.spec.x.field);
    std::set<double> positions;
    for (const auto& row : table.rows())
        if (auto x = chart.x_position(row[xc]); x && xw.contains(*x))
            positions.insert(*x);
    return positions.size();
}

std::vector<double> nice_ticks(const Window& w, int max_count)
{
    const double span = w.span();
    if (!(span > 0) || !std::isfinite(span))
        return {};
    const int e0 = static_cast<int>(std::floor(std::log10(span))) - 2;
    for (int e = e0; e < e0 + 8; ++e)
        for (double m : {1.0, 2.0, 5.0})
        {
            const double step = m * std::pow(10.0, e);
            const auto first = static_cast<long long>(std::ceil(w.lo / step - 1e-9));
            const auto last = static_cast<long long>(std::floor(w.hi / step + 1e-9));
            const long long count = last - first + 1;
            if (count <= max_count)
            {
                std::vector<double> ticks;
                for (long long k = first; k <= last; ++k)
                {
                    const double v = static_cast<double>(k) * step;
                    if (w.contains(v))
                        ticks.push_back(v);
                }
                return ticks;
            }
        }
    return {};
}

int tick_decimals(const std::vector<double>& ticks)
{
    return display_precision(ticks);
}

void raise(TactileFrame& f, Cell c, Marker m)
{
    if (!in_frame(c))
        return;
    f.set_pin(c, true);
    f.set_marker(c, m);
}

std::vector<Cell> bresenham(Cell a, Cell b)
{
    std::vector<Cell> out;
    int x0 = a.col, y0 = a.row;
    const int dx = std::abs(b.col - x0), sx = x0 < b.col ? 1 : -1;
    const int dy = -std::abs(b.row - y0), sy = y0 < b.row ? 1 : -1;
    int err = dx + dy;
    for (;;)
    {
        out.push_back({x0, y0});
        if (x0 == b.col && y0 == b.row)
            break;
        const int e2 = 2 * err;
        if (e2 >= dy)
        {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx)
        {
            err += dx;
            y0 += sy;
        }
    }
    return out;
}

std::string x_tick_label(const LoadedChart& chart, const DataTable& table, double position)
{
    if (!chart.spec.x.continuous())
    {
        const auto idx = static_cast<std::size_t>(position);
        return idx < chart.x_categories.size() ? chart.x_categories[idx] : std::string{};
    }
    if (chart.spec.x.type == FieldType::temporal)
    {
        const auto xc = table.require_column(chart.spec.x.field);
        for (const auto& row : table.rows())
            if (auto t = std::get_if<Temporal>(&row[xc]);
                t && static_cast<double>(t->epoch_day()) == position)
                return t->short_label();
        return Temporal::from_epoch_day(static_cast<std::int64_t>(position), TimeUnit::day).short_label();
    }
    return to_text(Value(position));
}

std::vector<std::string> series_order(const LoadedChart& chart)
{
    std::vector<std::string> out;
    if (!chart.spec.series)
        return out;
    for (const auto& v : chart.table.column_values(chart.spec.series->field))
    {
        const auto text = to_text(v);
        if (std::find(out.begin(), out.end(), text) == out.end())
            out.push_back(text);
    }
    return out;
}

std::string y_title(const LoadedChart& chart)
{
    return chart.spec.y.title.empty() ? chart.spec.y.field : chart.spec.y.title;
}

std::string x_title(const LoadedChart& chart)
{
    return chart.spec.x.title.empty() ? chart.spec.x.field : chart.spec.x.title;
}

std::string with_unit(std::string number, const std::string& unit)
{
    if (unit.empty())
        return number;
    if (unit == "%")
        return number + unit;
    return number + " " + unit;
}

} // namespace

std::string_view to_string(ElementKind kind)
{
    switch (kind)
    {
    case ElementKind::datum: return "datum";
    case ElementKind::axis_tick: return "axis_tick";
    case ElementKind::axis_label: return "axis_label";
    }
    return "datum";
}

const ChartElement* TactileFrame::element(int id) const
{
    for (const auto& e : elements)
        if (e.element_id == id)
            return &e;
    return nullptr;
}

const ChartElement* TactileFrame::element_at(Cell c) const
{
    for (const auto& e : elements)
        if (std::find(e.footprint.begin(), e.footprint.end(), c) != e.footprint.end())
            return &e;
    return nullptr;
}

std::string TactileFrame::dump_grid() const
{
    std::string out;
    out.reserve(cell_count + frame_height);
    for (int r = 0; r < frame_height; ++r)
    {
        for (int c = 0; c < frame_width; ++c)
            out += raised({c, r}) ? '#' : '.';
        out += '\n';
    }
    return out;
}

std::string TactileFrame::dump_semantic() const
{
    static constexpr char glyphs[] = {'.', 'x', 'y', 'o', 'z', 's'};
    std::string out;
    out.reserve(cell_count + frame_height);
    for (int r = 0; r < frame_height; ++r)
    {
        for (int c = 0; c < frame_width; ++c)
            out += glyphs[static_cast<int>(marker({c, r}))];
        out += '\n';
    }
    return out;
}

std::string TactileFrame::digest() const
{
    std::string canon = dump_grid() + dump_semantic() + fill_.to_string();
    for (const auto& e : elements)
        canon += fmt::format("{}:{}:{},{};", e.element_id, to_string(e.kind), e.position.col,
                             e.position.row);
    return fnv1a_hex(canon);
}

bool operator==(const TactileFrame& a, const TactileFrame& b)
{
    return a.pins_ == b.pins_ && a.fill_ == b.fill_ && a.semantic_ == b.semantic_ &&
           a.elements == b.elements && a.braille_pages == b.braille_pages &&
           a.frame_id == b.frame_id && a.empty_viewport == b.empty_viewport &&
           a.scroll == b.scroll && a.occluded == b.occluded;
}

Cell map_to_grid(double x, double y, const Window& xw, const Window& yw, const PlotArea& plot)
{
    if (!xw.contains(x) || !yw.contains(y))
        throw Error(Errc::out_of_window, fmt::format("({}, {}) lies outside the viewport", x, y));
    const double fx = (x - xw.lo) / xw.span();
    const double fy = (yw.hi - y) / yw.span();
    return {static_cast<int>(round_half_away(plot.left + fx * (plot.width - 1))),
            static_cast<int>(round_half_away(plot.top + fy * (plot.height - 1)))};
}

Window x_extent(const LoadedChart& chart)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for_each_table(chart, [&](const DataTable& t) {
        const auto xc = t.require_column(chart.spec.x.field);
        for (const auto& row : t.rows())
            extend(lo, hi, chart.x_position(row[xc]));
    });
    if (!std::isfinite(lo))
        return {0.0, 1.0};
    return widen(lo, hi);
}

Window y_extent(const LoadedChart& chart)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for_each_table(chart, [&](const DataTable& t) {
        const auto yc = t.require_column(chart.spec.y.field);
        for (const auto& row : t.rows())
            extend(lo, hi, as_number(row[yc]));
    });
    if (!std::isfinite(lo))
        return {0.0, 1.0};
    return widen(lo, hi);
}

ViewportState default_viewport(const LoadedChart& chart)
{
    ViewportState v;
    v.x = x_extent(chart);
    v.y = y_extent(chart);
    if (chart.spec.x.scale && chart.spec.x.scale->min)
        v.x = {*chart.spec.x.scale->min, *chart.spec.x.scale->max};
    if (chart.spec.y.scale && chart.spec.y.scale->min)
        v.y = {*chart.spec.y.scale->min, *chart.spec.y.scale->max};
    if (!chart.hierarchy.empty())
        v.active_layer = select_layer(chart, v);
    return v;
}

ViewportState pan(const LoadedChart& chart, const ViewportState& viewport, PanDirection direction)
{
    ViewportState out = viewport;
    const bool horizontal = direction == PanDirection::left || direction == PanDirection::right;
    Window& w = horizontal ? out.x : out.y;
    const Window ext = horizontal ? x_extent(chart) : y_extent(chart);
    const double span = w.span();
    const double step = 0.25 * span;
    const bool forward = direction == PanDirection::right || direction == PanDirection::up;
    double lo = w.lo;
    if (forward)
        lo = std::min(w.lo + step, std::max(w.lo, ext.hi - span));
    else
        lo = std::max(w.lo - step, std::min(w.lo, ext.lo));
    if (lo != w.lo)
        w = {lo, lo + span};
    return out;
}

ViewportState zoom(const LoadedChart& chart, const ViewportState& viewport, ZoomMode mode)
{
    ViewportState out = viewport;
    switch (mode)
    {
    case ZoomMode::geometric_in:
    {
        const double c = viewport.x.center();
        const double quarter = viewport.x.span() / 4.0;
        out.x = {c - quarter, c + quarter};
        out.magnification = viewport.magnification * 2.0;
        break;
    }
    case ZoomMode::geometric_out:
    {
        const Window ext = x_extent(chart);
        const double span = viewport.x.span() * 2.0;
        if (span >= ext.span())
        {
            out.x = ext;
            out.magnification = 1.0;
        }
        else
        {
            double lo = viewport.x.center() - span / 2.0;
            lo = std::clamp(lo, ext.lo, ext.hi - span);
            out.x = {lo, lo + span};
            out.magnification = std::max(1.0, viewport.magnification / 2.0);
        }
        break;
    }
    case ZoomMode::semantic_in:
    case ZoomMode::semantic_out:
    {
        const bool finer = mode == ZoomMode::semantic_in;
        const auto& h = chart.hierarchy;
        auto it = std::find_if(h.begin(), h.end(),
                               [&](const ResolutionLayer& l) { return l.layer_id == viewport.active_layer; });
        if (it == h.end())
            throw Error(finer ? Errc::no_finer_layer : Errc::no_coarser_layer,
                        "chart has no resolution hierarchy");
        if (finer)
        {
            if (std::next(it) == h.end())
                throw Error(Errc::no_finer_layer,
                            fmt::format("'{}' is the finest layer", viewport.active_layer));
            out.active_layer = std::next(it)->layer_id;
        }
        else
        {
            if (it == h.begin())
                throw Error(Errc::no_coarser_layer,
                            fmt::format("'{}' is the coarsest layer", viewport.active_layer));
            out.active_layer = std::prev(it)->layer_id;
        }
        return out;
    }
    }
    if (!chart.hierarchy.empty())
        out.active_layer = select_layer(chart, out);
    return out;
}

std::string select_layer(const LoadedChart& chart, const ViewportState& viewport, int plot_width)
{
    const auto& h = chart.hierarchy;
    if (h.empty())
        return "base";
    for (auto it = h.rbegin(); it != h.rend(); ++it)
        if (layer_in_window_count(chart, it->table, viewport.x) <=
            static_cast<std::size_t>(plot_width))
            return it->layer_id;
    return h.front().layer_id;
}

int series_texture(std::size_t series_index)
{
    return static_cast<int>(series_index % 4);
}

bool texture_raised(int texture, std::size_t n)
{
    switch (texture)
    {
    case 0: return true;
    case 1: return n % 2 == 0;
    case 2: return n % 3 != 2;
    default: return n % 4 == 0;
    }
}

int measure_precision(const LoadedChart& chart)
{
    std::vector<double> values;
    const auto yc = chart.table.require_column(chart.spec.y.field);
    for (const auto& row : chart.table.rows())
        if (auto d = as_number(row[yc]))
            values.push_back(*d);
    return std::min(display_precision(values), 4);
}

std::string format_measure(const LoadedChart& chart, double value, int min_decimals)
{
    const int decimals = std::max(measure_precision(chart), min_decimals);
    return with_unit(format_fixed(value, decimals), chart.spec.unit_of(chart.spec.y.field));
}

std::string datum_label(const LoadedChart& chart, const Datum& datum)
{
    std::string x;
    if (auto t = std::get_if<Temporal>(&datum.x))
        x = t->spoken();
    else
        x = to_text(datum.x);
    std::string out = x + ", " + chart.spec.y.field + " ";
    if (auto y = as_number(datum.y))
        out += format_measure(chart, *y);
    else
        out += "no value";
    if (datum.series)
        out += ", " + *datum.series;
    return out;
}

std::vector<BrailleLine> braille_pages(const LoadedChart& chart,
                                       const std::vector<std::string>& selection_labels)
{
    std::vector<BrailleLine> pages;
    auto add = [&](const std::string& text) {
        for (auto& p : paginate_braille(text))
            pages.push_back(std::move(p));
    };
    const std::string title = chart.spec.title.empty() ? chart.spec.name : chart.spec.title;
    if (!title.empty())
        add(title);
    add("x: " + x_title(chart));
    const auto unit = chart.spec.unit_of(chart.spec.y.field);
    add("y: " + y_title(chart) + (unit.empty() ? "" : " (" + unit + ")"));
    for (const auto& label : selection_labels)
        add(label);
    return pages;
}

TactileFrame render(const LoadedChart& chart, const ViewportState& viewport, std::uint64_t frame_id)
{
    if (!(viewport.x.lo < viewport.x.hi) || !(viewport.y.lo < viewport.y.hi) ||
        viewport.magnification < 1.0)
        throw Error(Errc::invalid_argument, "invalid viewport");
    const PlotArea plot = default_plot_area;
    const DataTable& table = chart.layer_table(viewport.active_layer);
    const auto xc = table.require_column(chart.spec.x.field);
    const auto yc = table.require_column(chart.spec.y.field);
    const auto sc = chart.spec.series ? table.column_index(chart.spec.series->field) : std::nullopt;
    const auto series_names = series_order(chart);

    TactileFrame f;
    f.frame_id = frame_id;

    for (int r = 0; r <= x_axis_row; ++r)
        raise(f, {y_axis_col, r}, Marker::y_axis);
    for (int c = y_axis_col; c < frame_width; ++c)
        raise(f, {c, x_axis_row}, Marker::x_axis);

    std::optional<int> zero_row;
    if (viewport.y.contains(0.0))
    {
        zero_row = map_to_grid(viewport.x.lo, 0.0, viewport.x, viewport.y, plot).row;
        for (int c = plot.left; c <= plot.right(); ++c)
            raise(f, {c, *zero_row}, Marker::zero_line);
    }

    std::vector<Point> points;
    std::size_t total = 0, left = 0, right = 0, above = 0, below = 0;
    for (std::size_t r = 0; r < table.row_count(); ++r)
    {
        const auto x = chart.x_position(table.at(r, xc));
        const auto y = as_number(table.at(r, yc));
        if (!x || !y)
            continue;
        ++total;
        if (*x < viewport.x.lo)
        {
            ++left;
            continue;
        }
        if (*x > viewport.x.hi)
        {
            ++right;
            continue;
        }
        if (*y > viewport.y.hi)
        {
            ++above;
            continue;
        }
        if (*y < viewport.y.lo)
        {
            ++below;
            continue;
        }
        std::size_t series = 0;
        if (sc)
        {
            const auto name = to_text(table.at(r, *sc));
            series = static_cast<std::size_t>(
                std::find(series_names.begin(), series_names.end(), name) - series_names.begin());
        }
        points.push_back({r, *x, *y, series, map_to_grid(*x, *y, viewport.x, viewport.y, plot)});
    }
    f.empty_viewport = points.empty();

    std::set<Cell> vertex_cells;
    for (const auto& p : points)
        vertex_cells.insert(p.cell);

    if (chart.spec.mark == Mark::line)
    {
        std::map<std::size_t, std::vector<const Point*>> by_series;
        for (const auto& p : points)
            by_series[p.series].push_back(&p);
        for (auto& [series, pts] : by_series)
        {
            std::stable_sort(pts.begin(), pts.end(),
                             [](const Point* a, const Point* b) { return a->x < b->x; });
            const int texture = series_texture(series);
            std::size_t n = 0;
            for (std::size_t i = 1; i < pts.size(); ++i)
                for (const auto& c : bresenham(pts[i - 1]->cell, pts[i]->cell))
                {
                    if (vertex_cells.count(c))
                        continue;
                    if (texture_raised(texture, n++))
                    {
                        f.set_pin(c, true);
                        f.set_structural(c, true);
                    }
                }
        }
    }

    std::set<int> data_cols;
    for (const auto& p : points)
        data_cols.insert(p.cell.col);
    const int baseline = map_to_grid(viewport.x.lo, std::clamp(0.0, viewport.y.lo, viewport.y.hi),
                                     viewport.x, viewport.y, plot)
                             .row;

    std::set<Cell> claimed;
    int next_id = 0;
    for (const auto& p : points)
    {
        if (claimed.count(p.cell))
        {
            ++f.occluded;
            continue;
        }
        ChartElement e;
        e.element_id = next_id++;
        e.kind = ElementKind::datum;
        e.position = p.cell;
        e.datum = Datum{table.at(p.row, xc), table.at(p.row, yc),
                        sc ? std::optional(to_text(table.at(p.row, *sc))) : std::nullopt, p.row};
        e.label = datum_label(chart, *e.datum);

        if (chart.spec.mark == Mark::bar)
        {
            const int step = p.cell.row <= baseline ? 1 : -1;
            auto column_cells = [&](int col) {
                std::vector<Cell> cells;
                for (int r = p.cell.row;; r += step)
                {
                    cells.push_back({col, r});
                    if (r == baseline)
                        break;
                }
                return cells;
            };
            for (const auto& c : column_cells(p.cell.col))
                if (!claimed.count(c))
                    e.footprint.push_back(c);
            // Second column to the right, or to the left at the plot edge.
            const int second = p.cell.col + 1 <= plot.right() ? p.cell.col + 1 : p.cell.col - 1;
            if (second >= plot.left && !data_cols.count(second))
            {
                auto extra = column_cells(second);
                if (std::none_of(extra.begin(), extra.end(),
                                 [&](const Cell& c) { return claimed.count(c) > 0; }))
                    e.footprint.insert(e.footprint.end(), extra.begin(), extra.end());
            }
            const int texture = series_texture(p.series);
            for (const auto& c : e.footprint)
            {
                claimed.insert(c);
                f.set_marker(c, Marker::data_point);
                f.set_structural(c, false);
                const auto depth = static_cast<std::size_t>(std::abs(c.row - p.cell.row));
                f.set_pin(c, depth == 0 || texture_raised(texture, depth));
            }
        }
        else
        {
            e.footprint.push_back(p.cell);
            claimed.insert(p.cell);
            raise(f, p.cell, Marker::data_point);
            f.set_structural(p.cell, false);
        }
        f.elements.push_back(std::move(e));
    }

    // Ticks.
    std::vector<double> x_ticks;
    if (chart.spec.x.type == FieldType::quantitative)
        x_ticks = nice_ticks(viewport.x, 5);
    else
    {
        std::set<double> positions;
        for (const auto& row : table.rows())
            if (auto x = chart.x_position(row[xc]); x && viewport.x.contains(*x))
                positions.insert(*x);
        std::vector<double> sorted(positions.begin(), positions.end());
        const std::size_t k = std::min<std::size_t>(5, sorted.size());
        for (std::size_t i = 0; i < k; ++i)
        {
            const auto idx = k == 1 ? 0
                                    : static_cast<std::size_t>(round_half_away(
                                          static_cast<double>(i) * static_cast<double>(sorted.size() - 1) /
                                          static_cast<double>(k - 1)));
            x_ticks.push_back(sorted[idx]);
        }
    }
    std::set<int> used_cols;
    const int x_decimals = tick_decimals(x_ticks);
    for (double t : x_ticks)
    {
        const int col = map_to_grid(t, viewport.y.lo, viewport.x, viewport.y, plot).col;
        if (!used_cols.insert(col).second)
            continue;
        ChartElement e;
        e.element_id = next_id++;
        e.kind = ElementKind::axis_tick;
        e.axis = Axis::x;
        e.position = {col, x_tick_row};
        e.footprint = {e.position};
        e.label = chart.spec.x.type == FieldType::quantitative
                      ? format_fixed(t, x_decimals)
                      : x_tick_label(chart, table, t);
        raise(f, e.position, Marker::x_axis);
        f.elements.push_back(std::move(e));
    }
    const auto y_ticks = nice_ticks(viewport.y, 4);
    const int y_decimals = tick_decimals(y_ticks);
    std::set<int> used_rows;
    for (double t : y_ticks)
    {
        const int row = map_to_grid(viewport.x.lo, t, viewport.x, viewport.y, plot).row;
        if (!used_rows.insert(row).second)
            continue;
        ChartElement e;
        e.element_id = next_id++;
        e.kind = ElementKind::axis_tick;
        e.axis = Axis::y;
        e.position = {y_tick_col, row};
        e.footprint = {e.position};
        e.label = with_unit(format_fixed(t, y_decimals), chart.spec.unit_of(chart.spec.y.field));
        raise(f, e.position, Marker::y_axis);
        f.elements.push_back(std::move(e));
    }

    // Axis titles as short touchable strokes.
    {
        ChartElement e;
        e.element_id = next_id++;
        e.kind = ElementKind::axis_label;
        e.axis = Axis::x;
        e.position = {plot.left + plot.width / 2 - 1, 37};
        e.footprint = {{e.position.col - 1, 37}, e.position, {e.position.col + 1, 37}};
        e.label = x_title(chart);
        for (const auto& c : e.footprint)
            raise(f, c, Marker::x_axis);
        f.elements.push_back(std::move(e));
    }
    {
        ChartElement e;
        e.element_id = next_id++;
        e.kind = ElementKind::axis_label;
        e.axis = Axis::y;
        e.position = {2, plot.top + plot.height / 2};
        e.footprint = {{2, e.position.row - 1}, e.position, {2, e.position.row + 1}};
        const auto unit = chart.spec.unit_of(chart.spec.y.field);
        e.label = y_title(chart) + (unit.empty() ? "" : " (" + unit + ")");
        for (const auto& c : e.footprint)
            raise(f, c, Marker::y_axis);
        f.elements.push_back(std::move(e));
    }

    // Scroll strips: bottom row for x, leftmost column for y.
    if (total > 0)
    {
        auto length = [&](std::size_t count, int max_len) {
            const double frac = static_cast<double>(count) / static_cast<double>(total);
            return std::max(1, static_cast<int>(round_half_away(frac * max_len)));
        };
        const int half_w = plot.width / 2;
        const int half_h = plot.height / 2;
        if (left)
        {
            f.scroll.left = true;
            for (int i = 0; i < length(left, half_w); ++i)
                raise(f, {plot.left + i, scroll_row}, Marker::scroll_bar);
        }
        if (right)
        {
            f.scroll.right = true;
            for (int i = 0; i < length(right, half_w); ++i)
                raise(f, {plot.right() - i, scroll_row}, Marker::scroll_bar);
        }
        if (above)
        {
            f.scroll.up = true;
            for (int i = 0; i < length(above, half_h); ++i)
                raise(f, {scroll_col, plot.top + i}, Marker::scroll_bar);
        }
        if (below)
        {
            f.scroll.down = true;
            for (int i = 0; i < length(below, half_h); ++i)
                raise(f, {scroll_col, plot.bottom() - i}, Marker::scroll_bar);
        }
    }

    f.braille_pages = braille_pages(chart);
    return f;
}

} // namespace feelgrid
