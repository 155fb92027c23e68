#pragma once

#include <feelgrid/render.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feelgrid
{

using Millis = std::int64_t;

/// Tuning knobs for the touch and button classifiers.
struct InputConfig
{
    double contact_mm = 2.0;
    double release_mm = 4.0;
    int debounce_frames = 2;
    double min_confidence = 0.3;
    Millis tap_max_ms = 250;
    int tap_max_cells = 1;
    Millis double_tap_gap_ms = 400;
    int double_tap_cells = 1;
    double sigma = 1.0;
    double radius = 3.0;
    Millis selection_ttl_ms = 30000;
    Millis quick_press_ms = 200;
    Millis hold_ms = 500;
    Millis combo_ms = 100;
};

enum class Finger
{
    left_index,
    right_index,
};

std::string_view to_string(Finger f);
Finger parse_finger(std::string_view text);

struct Point2
{
    double x = 0.0;
    double y = 0.0;
};

struct TouchFrame
{
    Millis t = 0;
    Finger finger = Finger::left_index;
    Point2 position; // pin units
    double height = 10.0; // mm above the surface
    double confidence = 1.0;
};

/// Cell under a continuous position, clamped to the frame.
Cell cell_at(Point2 p);

enum class GestureKind
{
    contact_start,
    contact_move,
    contact_end,
    tap,
    double_tap,
};

std::string_view to_string(GestureKind k);

struct Target
{
    int element_id = 0;
    double probability = 1.0;
};

struct GestureEvent
{
    GestureKind kind = GestureKind::contact_start;
    Finger finger = Finger::left_index;
    Cell cell;
    Point2 point;
    std::optional<Target> target;
    Millis t = 0;
    std::uint64_t frame_id = 0;
};

/// Gaussian target model: candidates within `radius` of the contact point
/// (measured to cell centres) weighted by exp(-d^2 / 2 sigma^2).
std::optional<Target> infer_target(Point2 point, const TactileFrame& frame, double sigma = 1.0,
                                   double radius = 3.0);

/// Contact debounce and hysteresis for both index fingers.
class ContactDetector
{
public:
    explicit ContactDetector(InputConfig config = {});

    std::vector<GestureEvent> feed(const TouchFrame& frame);
    bool in_contact(Finger f) const;
    /// Time of the first low frame while a contact is still being debounced.
    std::optional<Millis> settling_since(Finger f) const;
    std::size_t dropped() const noexcept
    {
        return dropped_;
    }

private:
    struct State
    {
        int low_frames = 0;
        bool contact = false;
        Millis first_low_t = 0;
        Point2 first_low_point;
        Cell cell;
        std::optional<Millis> last_t;
    };

    InputConfig config_;
    std::array<State, 2> state_{};
    std::size_t dropped_ = 0;
};

/// Turns contact events into taps and double taps. A tap is held back until
/// the double-tap window closes, so `advance`/`flush` release pending taps.
class TapClassifier
{
public:
    explicit TapClassifier(InputConfig config = {});

    std::vector<GestureEvent> feed(const GestureEvent& contact);
    /// `settling` holds, per finger, the start of a contact still debouncing;
    /// a pending tap is only released once that contact could no longer join it.
    std::vector<GestureEvent> advance(Millis now, std::array<std::optional<Millis>, 2> settling = {});
    std::vector<GestureEvent> flush();

private:
    struct Stroke
    {
        Millis start_t = 0;
        Cell start_cell;
        Point2 start_point;
        int travel = 0;
    };
    struct PendingTap
    {
        GestureEvent tap;
        Millis end_t = 0;
    };

    InputConfig config_;
    std::array<std::optional<Stroke>, 2> stroke_;
    std::array<std::optional<PendingTap>, 2> pending_;
};

/// Full touch pipeline; resolves tap targets against the frame currently shown.
class GestureRecognizer
{
public:
    explicit GestureRecognizer(InputConfig config = {});

    void set_frame(const TactileFrame* frame)
    {
        frame_ = frame;
    }

    std::vector<GestureEvent> feed(const TouchFrame& frame);
    std::vector<GestureEvent> advance(Millis now);
    std::vector<GestureEvent> flush();

    std::size_t dropped_frames() const noexcept
    {
        return contacts_.dropped();
    }

private:
    std::vector<GestureEvent> resolve(std::vector<GestureEvent> events) const;

    InputConfig config_;
    ContactDetector contacts_;
    TapClassifier taps_;
    const TactileFrame* frame_ = nullptr;
};

struct Selection
{
    Finger finger = Finger::left_index;
    int element_id = 0;
    ElementKind kind = ElementKind::datum;
    std::optional<Datum> datum;
    std::string label;
    Cell cell;
    double probability = 1.0;
    Millis t = 0;
    std::uint64_t frame_id = 0;
};

/// One live selection slot per finger.
class TouchContext
{
public:
    explicit TouchContext(Millis ttl_ms = 30000) : ttl_ms_(ttl_ms)
    {
    }

    void cache(Selection s);
    /// Live selections at `now`, oldest tap first.
    std::vector<Selection> snapshot(Millis now) const;
    void clear();
    Millis ttl_ms() const noexcept
    {
        return ttl_ms_;
    }

private:
    Millis ttl_ms_;
    std::array<std::optional<Selection>, 2> slots_;
};

/// Records a double tap as a selection. Throws Error(unresolved_target) for a
/// double tap without a target.
Selection cache_selection(const GestureEvent& double_tap, const TactileFrame& frame,
                          TouchContext& context);

enum class Button
{
    Left,
    Right,
    F1,
    F2,
    F3,
    F4,
};

std::string_view to_string(Button b);
Button parse_button(std::string_view text);

enum class Edge
{
    down,
    up,
};

struct ButtonEvent
{
    Button button = Button::Left;
    Edge edge = Edge::down;
    Millis t = 0;
};

enum class ButtonAction
{
    page_left,
    page_right,
    previous_datum,
    next_datum,
    push_to_talk,
    stop,
    repeat,
    refresh,
    pan_left,
    pan_right,
    zoom_out,
    zoom_in,
};

std::string_view to_string(ButtonAction a);

struct ActionEvent
{
    ButtonAction action = ButtonAction::page_left;
    Millis t = 0;

    friend bool operator==(const ActionEvent&, const ActionEvent&) = default;
};

/// Quick press, long hold and two-button combos. Quick presses are emitted at
/// max(up, down + combo window) so that a late partner can still cancel them.
class ButtonClassifier
{
public:
    explicit ButtonClassifier(InputConfig config = {});

    std::vector<ActionEvent> feed(const ButtonEvent& event);
    std::vector<ActionEvent> advance(Millis now);
    /// Releases completed quick presses; a button still held emits nothing.
    std::vector<ActionEvent> flush();

private:
    struct State
    {
        bool down = false;
        Millis down_t = 0;
        bool combo = false;
        bool hold_fired = false;
        bool pressed = false;
    };
    struct Pending
    {
        Button button;
        ButtonAction action;
        Millis emit_t;
    };

    std::vector<ActionEvent> release(Millis now, bool inclusive_quick);

    InputConfig config_;
    std::array<State, 6> state_{};
    std::vector<Pending> pending_;
    std::optional<Millis> last_t_;
};

} // namespace feelgrid
