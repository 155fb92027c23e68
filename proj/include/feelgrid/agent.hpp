#pragma once

#include <feelgrid/input.hpp>
#include <feelgrid/render.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace feelgrid
{

class ModelPort;

inline constexpr double deictic_threshold = 0.40;
inline constexpr std::size_t max_answer_words = 40;

struct DeicticResult
{
    double lexical = 0.0;
    double confidence = 0.0;
    bool fused = false;
    std::string augmented;
};

/// Lexical marker score in [0, 1]; 0 when no deictic marker is present.
double deictic_lexical_score(std::string_view transcript);

/// Appends "(touched: point_A {...}; ...)" when the fused confidence reaches
/// the threshold; otherwise returns the transcript unchanged.
DeicticResult classify_deictic(std::string_view transcript, const std::vector<Selection>& selections,
                               const LoadedChart* chart, Millis now, Millis ttl_ms = 30000);

/// "{quarter=2020-Q2, interest=0.25%}"
std::string selection_fields(const LoadedChart& chart, const Selection& s);

enum class IntentCategory
{
    LoadChart,
    Overview,
    ImageAnalysis,
    Operations,
    DataExplore,
};

std::string_view to_string(IntentCategory c);
std::optional<IntentCategory> parse_intent_category(std::string_view text);

enum class Task
{
    min,
    max,
    mean,
    sum,
    count,
    range_describe,
    trend,
    compare_points,
    value_at,
};

std::string_view to_string(Task t);

enum class Operation
{
    pan_left,
    pan_right,
    pan_up,
    pan_down,
    zoom_in,
    zoom_out,
    finer,
    coarser,
    reset,
};

std::string_view to_string(Operation op);

struct Intent
{
    IntentCategory category = IntentCategory::DataExplore;
    std::string chart_name;
    std::optional<Operation> operation;
    std::optional<Task> task;
    bool clarify = false;
    bool refers_previous = false; // "those points"
};

/// Rule table over the transcript with any touch suffix removed.
Intent route_intent(std::string_view transcript);

/// Strips a trailing "(touched: ...)" suffix.
std::string strip_touch_suffix(std::string_view transcript);

struct SeriesPoint
{
    double x = 0.0;
    double y = 0.0;
    std::size_t row = 0;
    std::string label; // short x label, e.g. "Q2 2020"
};

enum class Direction
{
    decline,
    plateau,
    rise,
};

struct TrendSegment
{
    Direction direction = Direction::plateau;
    std::size_t first = 0; // indices into AnalyticResult::points
    std::size_t last = 0;
};

struct AnalyticResult
{
    Task task = Task::count;
    double value = 0.0;
    std::vector<SeriesPoint> points; // filtered series in x order
    std::vector<std::size_t> hits;   // argmax/argmin ties, value_at, compare pair
    std::vector<TrendSegment> segments;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

/// Points of the y field ordered by x, skipping nulls.
std::vector<SeriesPoint> series_points(const LoadedChart& chart, const DataTable& table);

/// Inclusive x-range filter then the task. Throws Error(empty_range) when
/// nothing is left, Error(unknown_column) for a missing field.
AnalyticResult calculate(Task task, const std::vector<SeriesPoint>& series,
                         std::optional<std::pair<double, double>> range = std::nullopt,
                         const std::vector<double>& picks = {});

/// Maximal runs of constant first-difference sign; |delta| < 1e-9 is flat.
std::vector<TrendSegment> segment_trend(const std::vector<double>& values);

enum class CommandKind
{
    load_chart,
    viewport,
    highlight,
};

struct AgentCommand
{
    CommandKind kind = CommandKind::highlight;
    std::string chart;
    std::optional<Operation> operation;
    std::vector<int> elements;
};

struct AgentResponse
{
    std::string text;
    std::vector<std::vector<int>> sentence_elements;
    std::vector<AgentCommand> commands;
    double confidence = 0.0;
    std::size_t word_count = 0;
    Intent intent;
    std::string augmented;
    bool clarification = false;
    std::vector<std::size_t> off_screen_rows;
    std::optional<AnalyticResult> result;
    std::vector<std::string> log;
};

std::size_t count_words(std::string_view text);

struct AgentContext
{
    const ChartCatalogue* catalogue = nullptr;
    const LoadedChart* chart = nullptr;
    const TactileFrame* frame = nullptr;
    const ViewportState* viewport = nullptr;
    std::vector<Selection> selections;
    Millis now = 0;
    Millis ttl_ms = 30000;
};

/// Dialogue manager: one per session.
class Agent
{
public:
    explicit Agent(std::shared_ptr<ModelPort> port = nullptr);

    AgentResponse respond(std::string_view transcript, const AgentContext& context);

    const std::vector<std::size_t>& last_rows() const noexcept
    {
        return last_rows_;
    }
    int turn() const noexcept
    {
        return turn_;
    }

private:
    AgentResponse answer(const Intent& intent, std::string_view plain, const std::string& augmented,
                         const AgentContext& context, double confidence);

    std::shared_ptr<ModelPort> port_;
    std::vector<std::size_t> last_rows_;
    int turn_ = 0;
};

} // namespace feelgrid
