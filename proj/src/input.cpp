#include <feelgrid/error.hpp>
#include <feelgrid/input.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace feelgrid
{
namespace
{

std::size_t slot(Finger f)
{
    return static_cast<std::size_t>(f);
}

std::size_t slot(Button b)
{
    return static_cast<std::size_t>(b);
}

int chebyshev(Cell a, Cell b)
{
    return std::max(std::abs(a.col - b.col), std::abs(a.row - b.row));
}

std::optional<ButtonAction> quick_action(Button b)
{
    switch (b)
    {
    case Button::Left: return ButtonAction::page_left;
    case Button::Right: return ButtonAction::page_right;
    default: return std::nullopt;
    }
}

ButtonAction hold_action(Button b)
{
    switch (b)
    {
    case Button::Left: return ButtonAction::previous_datum;
    case Button::Right: return ButtonAction::next_datum;
    case Button::F1: return ButtonAction::push_to_talk;
    case Button::F2: return ButtonAction::stop;
    case Button::F3: return ButtonAction::repeat;
    case Button::F4: return ButtonAction::refresh;
    }
    return ButtonAction::refresh;
}

std::optional<ButtonAction> combo_action(Button a, Button b)
{
    if (b == Button::Left || b == Button::Right)
        std::swap(a, b);
    if (a == Button::Left && b == Button::F1)
        return ButtonAction::pan_left;
    if (a == Button::Right && b == Button::F1)
        return ButtonAction::pan_right;
    if (a == Button::Left && b == Button::F2)
        return ButtonAction::zoom_out;
    if (a == Button::Right && b == Button::F2)
        return ButtonAction::zoom_in;
    return std::nullopt;
}

} // namespace

std::string_view to_string(Finger f)
{
    return f == Finger::left_index ? "left_index" : "right_index";
}

Finger parse_finger(std::string_view text)
{
    if (text == "left_index" || text == "left")
        return Finger::left_index;
    if (text == "right_index" || text == "right")
        return Finger::right_index;
    throw Error(Errc::invalid_argument, fmt::format("unknown finger '{}'", text));
}

Cell cell_at(Point2 p)
{
    const int col = static_cast<int>(std::floor(p.x));
    const int row = static_cast<int>(std::floor(p.y));
    return {std::clamp(col, 0, frame_width - 1), std::clamp(row, 0, frame_height - 1)};
}

std::string_view to_string(GestureKind k)
{
    switch (k)
    {
    case GestureKind::contact_start: return "contact_start";
    case GestureKind::contact_move: return "contact_move";
    case GestureKind::contact_end: return "contact_end";
    case GestureKind::tap: return "tap";
    case GestureKind::double_tap: return "double_tap";
    }
    return "tap";
}

std::optional<Target> infer_target(Point2 point, const TactileFrame& frame, double sigma,
                                   double radius)
{
    struct Candidate
    {
        int id;
        double d;
    };
    std::vector<Candidate> candidates;
    for (const auto& e : frame.elements)
    {
        const double dx = point.x - (e.position.col + 0.5);
        const double dy = point.y - (e.position.row + 0.5);
        const double d = std::hypot(dx, dy);
        if (d <= radius)
            candidates.push_back({e.element_id, d});
    }
    if (candidates.empty())
        return std::nullopt;

    const auto best = std::min_element(candidates.begin(), candidates.end(),
                                       [](const Candidate& a, const Candidate& b) {
                                           return a.d != b.d ? a.d < b.d : a.id < b.id;
                                       });
    // Weights relative to the best candidate keep tiny sigmas from underflowing.
    const double two_s2 = 2.0 * sigma * sigma;
    const double best_log = -best->d * best->d / two_s2;
    double total = 0.0;
    for (const auto& c : candidates)
        total += std::exp(-c.d * c.d / two_s2 - best_log);
    return Target{best->id, 1.0 / total};
}

ContactDetector::ContactDetector(InputConfig config) : config_(config)
{
}

bool ContactDetector::in_contact(Finger f) const
{
    return state_[slot(f)].contact;
}

std::vector<GestureEvent> ContactDetector::feed(const TouchFrame& frame)
{
    auto& s = state_[slot(frame.finger)];
    if (s.last_t && frame.t <= *s.last_t)
        throw Error(Errc::invalid_argument,
                    fmt::format("touch frame at {} ms is not after {} ms", frame.t, *s.last_t));
    s.last_t = frame.t;
    if (frame.confidence < config_.min_confidence)
    {
        ++dropped_;
        return {};
    }

    std::vector<GestureEvent> out;
    const Cell cell = cell_at(frame.position);
    auto event = [&](GestureKind kind, Millis t, Cell c, Point2 p) {
        GestureEvent e;
        e.kind = kind;
        e.finger = frame.finger;
        e.cell = c;
        e.point = p;
        e.t = t;
        out.push_back(e);
    };

    if (!s.contact)
    {
        if (frame.height <= config_.contact_mm)
        {
            if (s.low_frames == 0)
            {
                s.first_low_t = frame.t;
                s.first_low_point = frame.position;
            }
            if (++s.low_frames >= config_.debounce_frames)
            {
                s.contact = true;
                s.cell = cell_at(s.first_low_point);
                event(GestureKind::contact_start, s.first_low_t, s.cell, s.first_low_point);
                if (cell != s.cell)
                {
                    s.cell = cell;
                    event(GestureKind::contact_move, frame.t, cell, frame.position);
                }
            }
        }
        else
            s.low_frames = 0;
        return out;
    }

    if (frame.height > config_.release_mm)
    {
        s.contact = false;
        s.low_frames = 0;
        event(GestureKind::contact_end, frame.t, s.cell, frame.position);
        return out;
    }
    if (cell != s.cell)
    {
        s.cell = cell;
        event(GestureKind::contact_move, frame.t, cell, frame.position);
    }
    return out;
}

std::optional<Millis> ContactDetector::settling_since(Finger f) const
{
    const auto& s = state_[slot(f)];
    if (!s.contact && s.low_frames > 0)
        return s.first_low_t;
    return std::nullopt;
}

TapClassifier::TapClassifier(InputConfig config) : config_(config)
{
}

std::vector<GestureEvent> TapClassifier::feed(const GestureEvent& contact)
{
    std::vector<GestureEvent> out = advance(contact.t);
    const auto i = slot(contact.finger);
    switch (contact.kind)
    {
    case GestureKind::contact_start:
        stroke_[i] = Stroke{contact.t, contact.cell, contact.point, 0};
        break;
    case GestureKind::contact_move:
        if (stroke_[i])
            stroke_[i]->travel = std::max(stroke_[i]->travel, chebyshev(stroke_[i]->start_cell, contact.cell));
        break;
    case GestureKind::contact_end:
    {
        if (!stroke_[i])
            break;
        const Stroke stroke = *stroke_[i];
        stroke_[i].reset();
        const int travel = std::max(stroke.travel, chebyshev(stroke.start_cell, contact.cell));
        if (contact.t - stroke.start_t > config_.tap_max_ms || travel > config_.tap_max_cells)
        {
            // A non-tap contact separates the pending tap from any later one.
            if (pending_[i])
            {
                out.push_back(pending_[i]->tap);
                pending_[i].reset();
            }
            break;
        }
        GestureEvent tap;
        tap.kind = GestureKind::tap;
        tap.finger = contact.finger;
        tap.cell = stroke.start_cell;
        tap.point = stroke.start_point;
        tap.t = stroke.start_t;

        auto& pending = pending_[i];
        if (pending && stroke.start_t - pending->end_t <= config_.double_tap_gap_ms &&
            chebyshev(pending->tap.cell, tap.cell) <= config_.double_tap_cells)
        {
            GestureEvent dbl = tap;
            dbl.kind = GestureKind::double_tap;
            dbl.t = contact.t;
            pending.reset();
            out.push_back(dbl);
        }
        else
        {
            if (pending)
                out.push_back(pending->tap);
            pending = PendingTap{tap, contact.t};
        }
        break;
    }
    default:
        break;
    }
    return out;
}

std::vector<GestureEvent> TapClassifier::advance(Millis now,
                                                 std::array<std::optional<Millis>, 2> settling)
{
    std::vector<GestureEvent> out;
    for (std::size_t i = 0; i < pending_.size(); ++i)
    {
        auto& p = pending_[i];
        const Millis at = settling[i] ? std::min(now, *settling[i]) : now;
        // A stroke in progress may still become the second tap.
        if (p && at - p->end_t > config_.double_tap_gap_ms && !stroke_[i])
        {
            out.push_back(p->tap);
            p.reset();
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const GestureEvent& a, const GestureEvent& b) { return a.t < b.t; });
    return out;
}

std::vector<GestureEvent> TapClassifier::flush()
{
    std::vector<GestureEvent> out;
    for (auto& p : pending_)
        if (p)
        {
            out.push_back(p->tap);
            p.reset();
        }
    std::stable_sort(out.begin(), out.end(),
                     [](const GestureEvent& a, const GestureEvent& b) { return a.t < b.t; });
    return out;
}

GestureRecognizer::GestureRecognizer(InputConfig config)
: config_(config), contacts_(config), taps_(config)
{
}

std::vector<GestureEvent> GestureRecognizer::resolve(std::vector<GestureEvent> events) const
{
    for (auto& e : events)
        if (frame_ && (e.kind == GestureKind::tap || e.kind == GestureKind::double_tap))
        {
            e.target = infer_target(e.point, *frame_, config_.sigma, config_.radius);
            e.frame_id = frame_->frame_id;
        }
    return events;
}

std::vector<GestureEvent> GestureRecognizer::feed(const TouchFrame& frame)
{
    std::vector<GestureEvent> fed;
    for (const auto& contact : contacts_.feed(frame))
    {
        fed.push_back(contact);
        for (auto& g : taps_.feed(contact))
            fed.push_back(g);
    }
    auto out = taps_.advance(frame.t, {contacts_.settling_since(Finger::left_index),
                                       contacts_.settling_since(Finger::right_index)});
    out.insert(out.end(), fed.begin(), fed.end());
    return resolve(std::move(out));
}

std::vector<GestureEvent> GestureRecognizer::advance(Millis now)
{
    return resolve(taps_.advance(now, {contacts_.settling_since(Finger::left_index),
                                       contacts_.settling_since(Finger::right_index)}));
}

std::vector<GestureEvent> GestureRecognizer::flush()
{
    return resolve(taps_.flush());
}

void TouchContext::cache(Selection s)
{
    slots_[slot(s.finger)] = std::move(s);
}

std::vector<Selection> TouchContext::snapshot(Millis now) const
{
    std::vector<Selection> out;
    for (const auto& s : slots_)
        if (s && now - s->t < ttl_ms_)
            out.push_back(*s);
    std::stable_sort(out.begin(), out.end(),
                     [](const Selection& a, const Selection& b) { return a.t < b.t; });
    return out;
}

void TouchContext::clear()
{
    for (auto& s : slots_)
        s.reset();
}

Selection cache_selection(const GestureEvent& double_tap, const TactileFrame& frame,
                          TouchContext& context)
{
    if (!double_tap.target)
        throw Error(Errc::unresolved_target, "double tap did not land on a chart element");
    const ChartElement* e = frame.element(double_tap.target->element_id);
    if (!e)
        throw Error(Errc::unresolved_target,
                    fmt::format("element {} is not in frame {}", double_tap.target->element_id,
                                frame.frame_id));
    Selection s;
    s.finger = double_tap.finger;
    s.element_id = e->element_id;
    s.kind = e->kind;
    s.datum = e->datum;
    s.label = e->label;
    s.cell = e->position;
    s.probability = double_tap.target->probability;
    s.t = double_tap.t;
    s.frame_id = frame.frame_id;
    context.cache(s);
    return s;
}

std::string_view to_string(Button b)
{
    static constexpr std::string_view names[] = {"Left", "Right", "F1", "F2", "F3", "F4"};
    return names[slot(b)];
}

Button parse_button(std::string_view text)
{
    for (Button b : {Button::Left, Button::Right, Button::F1, Button::F2, Button::F3, Button::F4})
        if (to_string(b) == text)
            return b;
    throw Error(Errc::invalid_argument, fmt::format("unknown button '{}'", text));
}

std::string_view to_string(ButtonAction a)
{
    static constexpr std::string_view names[] = {
        "page_left", "page_right", "previous_datum", "next_datum", "push_to_talk", "stop",
        "repeat",    "refresh",    "pan_left",       "pan_right",  "zoom_out",     "zoom_in",
    };
    return names[static_cast<std::size_t>(a)];
}

ButtonClassifier::ButtonClassifier(InputConfig config) : config_(config)
{
}

std::vector<ActionEvent> ButtonClassifier::release(Millis now, bool inclusive_quick)
{
    struct Keyed
    {
        ActionEvent event;
        std::size_t button;
    };
    std::vector<Keyed> due;
    for (std::size_t i = 0; i < state_.size(); ++i)
    {
        auto& s = state_[i];
        if (s.down && !s.combo && !s.hold_fired && now - s.down_t >= config_.hold_ms)
        {
            s.hold_fired = true;
            due.push_back({{hold_action(static_cast<Button>(i)), s.down_t + config_.hold_ms}, i});
        }
    }
    for (auto it = pending_.begin(); it != pending_.end();)
    {
        if (inclusive_quick || it->emit_t < now)
        {
            due.push_back({{it->action, it->emit_t}, slot(it->button)});
            it = pending_.erase(it);
        }
        else
            ++it;
    }
    std::sort(due.begin(), due.end(), [](const Keyed& a, const Keyed& b) {
        return a.event.t != b.event.t ? a.event.t < b.event.t : a.button < b.button;
    });
    std::vector<ActionEvent> out;
    for (auto& k : due)
        out.push_back(k.event);
    return out;
}

std::vector<ActionEvent> ButtonClassifier::advance(Millis now)
{
    return release(now, false);
}

std::vector<ActionEvent> ButtonClassifier::flush()
{
    return release(last_t_.value_or(0), true);
}

std::vector<ActionEvent> ButtonClassifier::feed(const ButtonEvent& event)
{
    if (last_t_ && event.t < *last_t_)
        throw Error(Errc::invalid_argument, "button events out of order");
    last_t_ = event.t;
    auto& s = state_[slot(event.button)];
    if ((event.edge == Edge::down) == s.down)
        throw Error(Errc::invalid_argument,
                    fmt::format("{} {} edge repeated", to_string(event.button),
                                event.edge == Edge::down ? "down" : "up"));

    std::vector<ActionEvent> out = release(event.t, false);
    if (event.edge == Edge::down)
    {
        s = State{true, event.t, false, false, true};
        // Earliest other button whose down edge is inside the combo window.
        std::optional<std::size_t> partner;
        for (std::size_t i = 0; i < state_.size(); ++i)
        {
            if (i == slot(event.button))
                continue;
            const auto& o = state_[i];
            if (o.pressed && !o.combo && !o.hold_fired && event.t - o.down_t <= config_.combo_ms &&
                (!partner || o.down_t < state_[*partner].down_t))
                partner = i;
        }
        if (partner)
        {
            s.combo = true;
            state_[*partner].combo = true;
            std::erase_if(pending_, [&](const Pending& p) { return slot(p.button) == *partner; });
            if (auto a = combo_action(static_cast<Button>(*partner), event.button))
                out.push_back({*a, event.t});
        }
        return out;
    }

    s.down = false;
    if (s.combo || s.hold_fired)
        return out;
    if (event.t - s.down_t < config_.quick_press_ms)
        if (auto a = quick_action(event.button))
            pending_.push_back({event.button, *a, std::max(event.t, s.down_t + config_.combo_ms)});
    return out;
}

} // namespace feelgrid
