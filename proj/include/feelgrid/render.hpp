#pragma once

#include <feelgrid/braille.hpp>
#include <feelgrid/chart.hpp>

#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace feelgrid
{

inline constexpr int frame_width = 60;
inline constexpr int frame_height = 40;

/// Plot area inside the axis margins: columns 0-5 hold the y axis and ticks,
/// rows 34-39 the x axis and ticks.
struct PlotArea
{
    int left = 6;
    int top = 0;
    int width = 54;
    int height = 34;

    int right() const noexcept
    {
        return left + width - 1;
    }
    int bottom() const noexcept
    {
        return top + height - 1;
    }
};

inline constexpr PlotArea default_plot_area{};

struct Cell
{
    int col = 0;
    int row = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline bool in_frame(Cell c) noexcept
{
    return c.col >= 0 && c.col < frame_width && c.row >= 0 && c.row < frame_height;
}

struct Window
{
    double lo = 0.0;
    double hi = 1.0;

    double span() const noexcept
    {
        return hi - lo;
    }
    double center() const noexcept
    {
        return (lo + hi) / 2.0;
    }
    bool contains(double v) const noexcept
    {
        return v >= lo && v <= hi;
    }

    friend bool operator==(const Window&, const Window&) = default;
};

struct ViewportState
{
    Window x;
    Window y;
    double magnification = 1.0;
    std::string active_layer = "base";

    friend bool operator==(const ViewportState&, const ViewportState&) = default;
};

enum class Marker : std::uint8_t
{
    background,
    x_axis,
    y_axis,
    data_point,
    zero_line,
    scroll_bar,
};

enum class ElementKind
{
    datum,
    axis_tick,
    axis_label,
};

std::string_view to_string(ElementKind kind);

enum class Axis
{
    x,
    y,
};

struct Datum
{
    Value x;
    Value y;
    std::optional<std::string> series;
    std::size_t row = 0;

    friend bool operator==(const Datum&, const Datum&) = default;
};

struct ChartElement
{
    int element_id = 0;
    ElementKind kind = ElementKind::datum;
    Cell position;
    std::vector<Cell> footprint;
    std::optional<Datum> datum;
    std::optional<Axis> axis; // for ticks and labels
    std::string label;

    friend bool operator==(const ChartElement&, const ChartElement&) = default;
};

struct ScrollIndicators
{
    bool left = false;
    bool right = false;
    bool up = false;
    bool down = false;

    friend bool operator==(const ScrollIndicators&, const ScrollIndicators&) = default;
};

/// 60x40 pin image plus the semantic layer the input side uses for hit testing.
/// Raised pins are either marked non-background or part of a structural fill
/// (line segments, bar textures).
class TactileFrame
{
public:
    static constexpr std::size_t cell_count = frame_width * frame_height;

    bool raised(Cell c) const
    {
        return pins_.test(index(c));
    }
    Marker marker(Cell c) const
    {
        return semantic_[index(c)];
    }
    bool structural(Cell c) const
    {
        return fill_.test(index(c));
    }
    void set_pin(Cell c, bool up)
    {
        pins_.set(index(c), up);
    }
    void set_marker(Cell c, Marker m)
    {
        semantic_[index(c)] = m;
    }
    void set_structural(Cell c, bool on)
    {
        fill_.set(index(c), on);
    }

    const std::bitset<cell_count>& pins() const noexcept
    {
        return pins_;
    }

    std::vector<ChartElement> elements;
    std::vector<BrailleLine> braille_pages;
    std::uint64_t frame_id = 0;
    bool empty_viewport = false;
    ScrollIndicators scroll;
    std::size_t occluded = 0; // data whose cell was already taken

    const ChartElement* element(int id) const;
    const ChartElement* element_at(Cell c) const;

    /// `#` raised, `.` lowered; 40 lines of 60 characters.
    std::string dump_grid() const;
    /// One character per cell: . background, x / y axes, o datum, z zero-line, s scroll bar.
    std::string dump_semantic() const;
    /// Hash over pins, markers and element positions (frame_id excluded).
    std::string digest() const;

    friend bool operator==(const TactileFrame& a, const TactileFrame& b);

private:
    static std::size_t index(Cell c)
    {
        return static_cast<std::size_t>(c.row) * frame_width + static_cast<std::size_t>(c.col);
    }

    std::bitset<cell_count> pins_;
    std::bitset<cell_count> fill_;
    std::array<Marker, cell_count> semantic_{};
};

/// Linear interpolation into the plot area with half-away-from-zero rounding;
/// row 0 is the top. Throws Error(out_of_window).
Cell map_to_grid(double x, double y, const Window& xw, const Window& yw,
                 const PlotArea& plot = default_plot_area);

/// Data extent over the base table and every layer.
Window x_extent(const LoadedChart& chart);
Window y_extent(const LoadedChart& chart);

ViewportState default_viewport(const LoadedChart& chart);

enum class PanDirection
{
    left,
    right,
    up,
    down,
};

enum class ZoomMode
{
    geometric_in,
    geometric_out,
    semantic_in,
    semantic_out,
};

/// Shifts a window by 25% of its span, never past the data extent.
ViewportState pan(const LoadedChart& chart, const ViewportState& viewport, PanDirection direction);

/// Geometric zoom halves/doubles the x span about its centre and reselects the
/// layer; semantic zoom steps the active layer. Throws NoFinerLayer/NoCoarserLayer.
ViewportState zoom(const LoadedChart& chart, const ViewportState& viewport, ZoomMode mode);

/// Finest layer whose in-window point count fits the plot width, else the coarsest.
std::string select_layer(const LoadedChart& chart, const ViewportState& viewport,
                         int plot_width = default_plot_area.width);

/// Texture index for a series (0 solid, 1 dotted, 2 dashed, 3 sparse).
int series_texture(std::size_t series_index);
/// Whether the n-th cell of a stroke or fill is raised for a texture.
bool texture_raised(int texture, std::size_t n);

TactileFrame render(const LoadedChart& chart, const ViewportState& viewport,
                    std::uint64_t frame_id = 0);

/// Title page, axis pages, then one page set per selection label.
std::vector<BrailleLine> braille_pages(const LoadedChart& chart,
                                       const std::vector<std::string>& selection_labels = {});

/// Spoken/Braille label of a datum: "2020 Quarter 2, interest 0.25%".
std::string datum_label(const LoadedChart& chart, const Datum& datum);
/// Formats a y value with the column's display precision and unit.
std::string format_measure(const LoadedChart& chart, double value, int min_decimals = 0);
int measure_precision(const LoadedChart& chart);

} // namespace feelgrid
