#pragma once

#include <feelgrid/agent.hpp>
#include <feelgrid/bus.hpp>
#include <feelgrid/chart.hpp>
#include <feelgrid/device.hpp>
#include <feelgrid/input.hpp>
#include <feelgrid/output.hpp>
#include <feelgrid/render.hpp>

#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace feelgrid
{

struct SessionOptions
{
    InputConfig input;
    std::shared_ptr<ModelPort> model_port;
    Bus* bus = nullptr; // publishes session/event, agent/*, device/frame when set
    Millis device_latency_ms = transmit_ms(full_frame_bytes + 7);
};

/// One user at one display: owns the chart, the current frame, the
/// classifiers, the dialogue and the simulated device. Time is supplied by
/// the caller, so replays are deterministic.
class Session
{
public:
    explicit Session(ChartCatalogue catalogue, SessionOptions options = {});

    void load(const std::string& chart_name, Millis t);
    void touch(const TouchFrame& frame);
    void button(const ButtonEvent& event);
    AgentResponse query(const std::string& transcript, Millis t);
    void advance(Millis t);
    /// Releases pending taps and presses and plays queued speech to the end.
    void finish();

    const std::vector<std::string>& log() const noexcept
    {
        return log_;
    }
    const ChartCatalogue& catalogue() const noexcept
    {
        return catalogue_;
    }
    const LoadedChart* chart() const
    {
        return chart_ ? &*chart_ : nullptr;
    }
    const TactileFrame& frame() const noexcept
    {
        return frame_;
    }
    const ViewportState* viewport() const
    {
        return chart_ ? &viewport_ : nullptr;
    }
    const TouchContext& touch_context() const noexcept
    {
        return context_;
    }
    const SimulatedDevice& device() const noexcept
    {
        return device_;
    }
    const std::optional<Playback>& playback() const noexcept
    {
        return playback_;
    }
    Millis now() const noexcept
    {
        return now_;
    }
    /// Digest of the frame on the display (a blank frame before any load).
    std::string frame_digest() const
    {
        return frame_.digest();
    }
    /// Catalogue payload for vis/catalogue.
    Json catalogue_payload() const;
    /// Finishes, clears the display and logs the shutdown.
    void shutdown(Millis t);
    /// Logs a failure without stopping the session.
    void report(Millis t, const Error& error);

private:
    void record(Millis t, std::string kind, Json data);
    void show(const ViewportState& viewport, Millis t, const char* reason);
    void send(const Packet& packet, Millis t);
    void handle_gestures(const std::vector<GestureEvent>& events);
    void handle_actions(const std::vector<ActionEvent>& actions);
    void apply_operation(Operation op, Millis t);
    void feedback(const TouchResponse& response, Millis t);
    void dismiss_highlights(Millis t);
    void stop_playback(Millis t);
    void pump_playback(Millis t);
    void step_datum(int direction, Millis t);
    void tick(Millis t);

    ChartCatalogue catalogue_;
    SessionOptions options_;
    std::optional<LoadedChart> chart_;
    ViewportState viewport_;
    TactileFrame frame_;
    std::uint64_t next_frame_id_ = 1;
    GestureRecognizer gestures_;
    ButtonClassifier buttons_;
    TouchContext context_;
    Agent agent_;
    SimulatedDevice device_;
    std::optional<Playback> playback_;
    std::size_t playback_seen_ = 0;
    bool highlights_active_ = false;
    std::size_t braille_page_ = 0;
    std::optional<int> datum_cursor_;
    Millis now_ = 0;
    std::vector<std::string> log_;
};

struct ReplayEvent
{
    Millis t = 0;
    std::string kind;
    Json payload;
    std::size_t line = 0;
};

/// Line-delimited {t, kind, payload}. Throws Error(replay_syntax) with the line number.
std::vector<ReplayEvent> parse_replay(std::istream& in);

/// Touch profile of a double tap starting at `t`: approach, two short contacts, retreat.
std::vector<TouchFrame> double_tap_frames(Finger finger, Point2 at, Millis t);
std::vector<TouchFrame> tap_frames(Finger finger, Point2 at, Millis t);

/// Feeds events in order and finishes the session.
void run_replay(Session& session, const std::vector<ReplayEvent>& events);

} // namespace feelgrid
