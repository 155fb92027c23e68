#include <feelgrid/error.hpp>
#include <feelgrid/session.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace feelgrid
{
namespace
{

double round3(double v)
{
    return std::round(v * 1000.0) / 1000.0;
}

Json cells_json(const std::vector<Cell>& cells)
{
    auto arr = Json::array();
    for (const auto& c : cells)
        arr.push_back({c.col, c.row});
    return arr;
}

std::string hex_bytes(const std::vector<std::uint8_t>& bytes)
{
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes)
        out += fmt::format("{:02x}", b);
    return out;
}

std::optional<Operation> operation_for(ButtonAction a)
{
    switch (a)
    {
    case ButtonAction::pan_left: return Operation::pan_left;
    case ButtonAction::pan_right: return Operation::pan_right;
    case ButtonAction::zoom_in: return Operation::zoom_in;
    case ButtonAction::zoom_out: return Operation::zoom_out;
    default: return std::nullopt;
    }
}

} // namespace

Session::Session(ChartCatalogue catalogue, SessionOptions options)
: catalogue_(std::move(catalogue)),
  options_(std::move(options)),
  gestures_(options_.input),
  buttons_(options_.input),
  context_(options_.input.selection_ttl_ms),
  agent_(options_.model_port),
  device_(options_.device_latency_ms)
{
}

Json Session::catalogue_payload() const
{
    auto charts = Json::array();
    for (const auto& e : catalogue_.entries)
    {
        auto fields = Json::array();
        for (const auto& c : e.schema)
            fields.push_back({{"name", c.name}, {"type", to_string(c.type)}});
        charts.push_back({{"name", e.name},
                          {"title", e.title},
                          {"digest", e.digest},
                          {"mark", to_string(e.mark)},
                          {"rows", e.row_count},
                          {"fields", std::move(fields)},
                          {"preview", e.preview.has_value()}});
    }
    return {{"charts", std::move(charts)}};
}

void Session::record(Millis t, std::string kind, Json data)
{
    nlohmann::ordered_json line;
    line["t"] = t;
    line["kind"] = kind;
    for (auto it = data.begin(); it != data.end(); ++it)
        line[it.key()] = it.value();
    log_.push_back(line.dump());
    if (options_.bus)
    {
        Json payload = Json::parse(log_.back());
        options_.bus->publish("session/event", std::move(payload));
    }
}

void Session::report(Millis t, const Error& error)
{
    record(t, "error", {{"code", to_string(error.code())}, {"message", error.what()}});
}

void Session::send(const Packet& packet, Millis t)
{
    device_.write(encode(packet), t);
}

void Session::show(const ViewportState& viewport, Millis t, const char* reason)
{
    viewport_ = viewport;
    frame_ = render(*chart_, viewport_, next_frame_id_++);
    gestures_.set_frame(&frame_);
    datum_cursor_.reset();
    braille_page_ = 0;
    highlights_active_ = false;
    send(full_frame_packet(frame_.pins()), t);
    if (!frame_.braille_pages.empty())
        send(braille_packet(frame_.braille_pages.front()), t);
    Json data = {{"frame_id", frame_.frame_id}, {"layer", viewport_.active_layer}, {"digest", frame_.digest()}};
    if (std::string_view(reason) == "loaded")
        data["chart"] = chart_->spec.name;
    if (frame_.empty_viewport)
        data["empty"] = true;
    record(t, reason, std::move(data));
    if (options_.bus)
        options_.bus->publish("device/frame", {{"frame_id", frame_.frame_id},
                                               {"pins", hex_bytes(full_frame_packet(frame_.pins()).payload)},
                                               {"digest", frame_.digest()}});
}

void Session::load(const std::string& chart_name, Millis t)
{
    tick(t);
    const auto* entry = catalogue_.find(chart_name);
    if (!entry)
    {
        report(t, Error(Errc::io_error, fmt::format("no chart named '{}' in the catalogue", chart_name)));
        return;
    }
    try
    {
        chart_ = load_chart_file(entry->path);
    }
    catch (const Error& e)
    {
        report(t, e);
        return;
    }
    stop_playback(t);
    context_.clear();
    show(default_viewport(*chart_), t, "loaded");
}

void Session::tick(Millis t)
{
    now_ = std::max(now_, t);
    handle_gestures(gestures_.advance(t));
    handle_actions(buttons_.advance(t));
    pump_playback(t);
}

void Session::touch(const TouchFrame& frame)
{
    tick(frame.t);
    try
    {
        handle_gestures(gestures_.feed(frame));
    }
    catch (const Error& e)
    {
        report(frame.t, e);
    }
}

void Session::button(const ButtonEvent& event)
{
    tick(event.t);
    try
    {
        handle_actions(buttons_.feed(event));
    }
    catch (const Error& e)
    {
        report(event.t, e);
    }
}

void Session::advance(Millis t)
{
    tick(t);
}

void Session::finish()
{
    handle_gestures(gestures_.flush());
    handle_actions(buttons_.flush());
    if (playback_ && !playback_->done())
    {
        playback_->finish();
        pump_playback(now_);
    }
}

void Session::shutdown(Millis t)
{
    finish();
    stop_playback(t);
    send(clear_packet(), std::max(t, now_));
    record(std::max(t, now_), "shutdown", Json::object());
}

void Session::handle_gestures(const std::vector<GestureEvent>& events)
{
    for (const auto& g : events)
    {
        if (g.kind == GestureKind::tap)
        {
            Json data = {{"finger", to_string(g.finger)}, {"cell", {g.cell.col, g.cell.row}}};
            if (g.target)
                data["element_id"] = g.target->element_id;
            record(g.t, "tap", std::move(data));
            continue;
        }
        if (g.kind != GestureKind::double_tap)
            continue;
        if (!chart_)
        {
            record(g.t, "miss", {{"finger", to_string(g.finger)}, {"cell", {g.cell.col, g.cell.row}}});
            continue;
        }
        try
        {
            const auto s = cache_selection(g, frame_, context_);
            record(g.t, "selection",
                   {{"finger", to_string(s.finger)},
                    {"element_id", s.element_id},
                    {"label", s.label},
                    {"probability", round3(s.probability)},
                    {"cell", {s.cell.col, s.cell.row}},
                    {"frame_id", s.frame_id}});
            feedback(touch_response(context_.snapshot(g.t), frame_, g.t), g.t);
        }
        catch (const Error& e)
        {
            if (e.code() != Errc::unresolved_target)
                throw;
            record(g.t, "miss", {{"finger", to_string(g.finger)}, {"cell", {g.cell.col, g.cell.row}}});
            feedback(touch_response({}, frame_, g.t), g.t);
        }
    }
}

void Session::feedback(const TouchResponse& response, Millis t)
{
    stop_playback(t);
    dismiss_highlights(t);
    Json data = {{"frame_id", response.frame_id}, {"elements", response.element_ids}};
    if (response.highlight)
    {
        send(pulse_packet({response.highlight->cells, 20, 50, 0}), t);
        highlights_active_ = true;
        data["cells"] = cells_json(response.highlight->cells);
    }
    if (!response.braille.empty())
        send(braille_packet(response.braille.front()), t);
    data["braille"] = response.braille.empty() ? "" : to_unicode(response.braille.front());
    data["speech"] = response.speech.text;
    data["duration_ms"] = response.speech.duration_ms;
    record(t, "feedback", std::move(data));
}

void Session::dismiss_highlights(Millis t)
{
    if (!highlights_active_)
        return;
    send(full_frame_packet(frame_.pins()), t);
    highlights_active_ = false;
}

void Session::stop_playback(Millis t)
{
    if (playback_ && !playback_->done())
    {
        playback_->control(ButtonAction::stop, t);
        pump_playback(t);
    }
}

void Session::pump_playback(Millis t)
{
    if (!playback_)
        return;
    playback_->advance(t);
    const auto& events = playback_->log();
    for (; playback_seen_ < events.size(); ++playback_seen_)
    {
        const auto& e = events[playback_seen_];
        Json data = {{"chunk", e.chunk}};
        if (e.kind == "highlight")
        {
            dismiss_highlights(e.t);
            const auto& text = playback_->chunks()[static_cast<std::size_t>(e.chunk)].text;
            const auto duration = std::min<Millis>(speech_duration(text), 0xFFFF);
            send(pulse_packet({e.cells, 20, 50, static_cast<std::uint16_t>(duration)}), e.t);
            highlights_active_ = true;
            data["cells"] = cells_json(e.cells);
        }
        else if (e.kind == "speech")
            data["text"] = e.text;
        else if (e.kind == "clear")
            dismiss_highlights(e.t);
        record(e.t, e.kind, std::move(data));
    }
}

void Session::apply_operation(Operation op, Millis t)
{
    if (!chart_)
    {
        report(t, Error(Errc::invalid_argument, "no chart is loaded"));
        return;
    }
    try
    {
        ViewportState next = viewport_;
        switch (op)
        {
        case Operation::pan_left: next = pan(*chart_, viewport_, PanDirection::left); break;
        case Operation::pan_right: next = pan(*chart_, viewport_, PanDirection::right); break;
        case Operation::pan_up: next = pan(*chart_, viewport_, PanDirection::up); break;
        case Operation::pan_down: next = pan(*chart_, viewport_, PanDirection::down); break;
        case Operation::zoom_in: next = zoom(*chart_, viewport_, ZoomMode::geometric_in); break;
        case Operation::zoom_out: next = zoom(*chart_, viewport_, ZoomMode::geometric_out); break;
        case Operation::finer: next = zoom(*chart_, viewport_, ZoomMode::semantic_in); break;
        case Operation::coarser: next = zoom(*chart_, viewport_, ZoomMode::semantic_out); break;
        case Operation::reset: next = default_viewport(*chart_); break;
        }
        if (!(next == viewport_))
            show(next, t, "frame");
        else
            record(t, "unchanged", {{"operation", to_string(op)}});
    }
    catch (const Error& e)
    {
        report(t, e);
    }
}

void Session::step_datum(int direction, Millis t)
{
    std::vector<const ChartElement*> data;
    for (const auto& e : frame_.elements)
        if (e.kind == ElementKind::datum)
            data.push_back(&e);
    if (data.empty())
        return;
    std::stable_sort(data.begin(), data.end(), [](const ChartElement* a, const ChartElement* b) {
        return a->position.col < b->position.col;
    });
    int index = 0;
    if (datum_cursor_)
    {
        const auto it = std::find_if(data.begin(), data.end(),
                                     [&](const ChartElement* e) { return e->element_id == *datum_cursor_; });
        const int current = static_cast<int>(it - data.begin());
        index = std::clamp(current + direction, 0, static_cast<int>(data.size()) - 1);
    }
    else if (direction < 0)
        index = static_cast<int>(data.size()) - 1;
    const ChartElement& e = *data[static_cast<std::size_t>(index)];
    datum_cursor_ = e.element_id;
    Selection s;
    s.element_id = e.element_id;
    s.kind = e.kind;
    s.datum = e.datum;
    s.label = e.label;
    s.cell = e.position;
    s.t = t;
    s.frame_id = frame_.frame_id;
    feedback(touch_response({s}, frame_, t), t);
}

void Session::handle_actions(const std::vector<ActionEvent>& actions)
{
    for (const auto& a : actions)
    {
        record(a.t, "action", {{"action", to_string(a.action)}});
        const bool playing = playback_ && !playback_->done();
        switch (a.action)
        {
        case ButtonAction::page_left:
        case ButtonAction::page_right:
            if (playing)
            {
                playback_->control(a.action, a.t);
                pump_playback(a.t);
            }
            else if (!frame_.braille_pages.empty())
            {
                const auto last = frame_.braille_pages.size() - 1;
                if (a.action == ButtonAction::page_right)
                    braille_page_ = std::min(braille_page_ + 1, last);
                else if (braille_page_ > 0)
                    --braille_page_;
                send(braille_packet(frame_.braille_pages[braille_page_]), a.t);
                record(a.t, "braille", {{"page", braille_page_},
                                        {"text", to_unicode(frame_.braille_pages[braille_page_])}});
            }
            break;
        case ButtonAction::previous_datum: step_datum(-1, a.t); break;
        case ButtonAction::next_datum: step_datum(1, a.t); break;
        case ButtonAction::push_to_talk: record(a.t, "listening", Json::object()); break;
        case ButtonAction::stop:
            stop_playback(a.t);
            dismiss_highlights(a.t);
            break;
        case ButtonAction::repeat:
            if (playing)
            {
                playback_->control(a.action, a.t);
                pump_playback(a.t);
            }
            break;
        case ButtonAction::refresh:
            if (chart_)
                show(viewport_, a.t, "frame");
            break;
        default:
            if (auto op = operation_for(a.action))
                apply_operation(*op, a.t);
            break;
        }
    }
}

AgentResponse Session::query(const std::string& transcript, Millis t)
{
    tick(t);
    AgentContext ctx;
    ctx.catalogue = &catalogue_;
    ctx.chart = chart();
    ctx.frame = chart_ ? &frame_ : nullptr;
    ctx.viewport = viewport();
    ctx.selections = context_.snapshot(t);
    ctx.now = t;
    ctx.ttl_ms = context_.ttl_ms();
    AgentResponse r = agent_.respond(transcript, ctx);

    record(t, "query", {{"transcript", transcript},
                        {"augmented", r.augmented},
                        {"confidence", round3(r.confidence)},
                        {"selections", ctx.selections.size()}});
    for (const auto& line : r.log)
        record(t, "agent_log", {{"message", line}});
    Json data = {{"intent", to_string(r.intent.category)}};
    if (r.intent.task && r.intent.category == IntentCategory::DataExplore)
        data["task"] = to_string(*r.intent.task);
    data["text"] = r.text;
    data["words"] = r.word_count;
    data["clarification"] = r.clarification;
    std::vector<int> elements;
    for (const auto& s : r.sentence_elements)
        elements.insert(elements.end(), s.begin(), s.end());
    data["elements"] = elements;
    if (!r.off_screen_rows.empty())
        data["off_screen_rows"] = r.off_screen_rows;
    record(t, "response", std::move(data));

    for (const auto& c : r.commands)
    {
        if (options_.bus)
        {
            Json cmd = {{"kind", c.kind == CommandKind::load_chart ? "load_chart"
                                 : c.kind == CommandKind::viewport ? "viewport"
                                                                   : "highlight"}};
            if (!c.chart.empty())
                cmd["chart"] = c.chart;
            if (c.operation)
                cmd["operation"] = to_string(*c.operation);
            if (!c.elements.empty())
                cmd["elements"] = c.elements;
            options_.bus->publish("agent/command", std::move(cmd));
        }
        if (c.kind == CommandKind::load_chart)
            load(c.chart, t);
        else if (c.kind == CommandKind::viewport && c.operation)
            apply_operation(*c.operation, t);
    }

    auto chunks = segment_response(r.text, r.sentence_elements, frame_);
    if (options_.bus)
    {
        auto cj = Json::array();
        for (const auto& c : chunks)
            cj.push_back({{"index", c.index}, {"text", c.text}, {"elements", c.referenced_elements}});
        options_.bus->publish("agent/response", {{"text", r.text}, {"chunks", std::move(cj)}});
    }
    stop_playback(t);
    dismiss_highlights(t);
    if (!chunks.empty())
    {
        playback_.emplace(std::move(chunks), t);
        playback_seen_ = 0;
        pump_playback(t);
    }
    return r;
}

std::vector<ReplayEvent> parse_replay(std::istream& in)
{
    static const std::set<std::string> kinds = {"load", "touch", "button", "query", "double_tap", "tap", "advance"};
    std::vector<ReplayEvent> events;
    std::string line;
    std::size_t number = 0;
    Millis last = 0;
    auto fail = [&](const std::string& why) {
        throw Error(Errc::replay_syntax, fmt::format("line {}: {}", number, why));
    };
    while (std::getline(in, line))
    {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Json j;
        try
        {
            j = Json::parse(line);
        }
        catch (const Json::exception& e)
        {
            fail(fmt::format("not JSON ({})", e.what()));
        }
        if (!j.is_object() || !j.contains("t") || !j["t"].is_number_integer() || !j.contains("kind") ||
            !j["kind"].is_string())
            fail("expected {\"t\": <ms>, \"kind\": <string>, \"payload\": {...}}");
        ReplayEvent e{j["t"].get<Millis>(), j["kind"].get<std::string>(), j.value("payload", Json::object()), number};
        if (!kinds.count(e.kind))
            fail(fmt::format("unknown kind '{}'", e.kind));
        if (e.t < last)
            fail("timestamps must not decrease");
        if (!e.payload.is_object())
            fail("payload must be an object");
        auto need = [&](const char* key, bool number_field) {
            if (!e.payload.contains(key) || (number_field ? !e.payload[key].is_number() : !e.payload[key].is_string()))
                fail(fmt::format("{} needs payload.{}", e.kind, key));
        };
        if (e.kind == "load")
            need("chart", false);
        else if (e.kind == "query")
            need("transcript", false);
        else if (e.kind == "button")
        {
            need("button", false);
            need("edge", false);
            const auto edge = e.payload["edge"].get<std::string>();
            if (edge != "down" && edge != "up")
                fail("edge must be down or up");
            try
            {
                parse_button(e.payload["button"].get<std::string>());
            }
            catch (const Error& err)
            {
                fail(err.what());
            }
        }
        else if (e.kind == "touch" || e.kind == "tap" || e.kind == "double_tap")
        {
            need("finger", false);
            need("x", true);
            need("y", true);
            if (e.kind == "touch")
                need("height", true);
            try
            {
                parse_finger(e.payload["finger"].get<std::string>());
            }
            catch (const Error& err)
            {
                fail(err.what());
            }
        }
        last = e.t;
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<TouchFrame> tap_frames(Finger finger, Point2 at, Millis t)
{
    return {
        {t, finger, at, 10.0, 1.0},       {t + 20, finger, at, 1.0, 1.0}, {t + 40, finger, at, 1.0, 1.0},
        {t + 60, finger, at, 1.0, 1.0},   {t + 100, finger, at, 10.0, 1.0},
    };
}

std::vector<TouchFrame> double_tap_frames(Finger finger, Point2 at, Millis t)
{
    auto frames = tap_frames(finger, at, t);
    for (auto& f : tap_frames(finger, at, t + 180))
        if (f.t > frames.back().t)
            frames.push_back(f);
    return frames;
}

void run_replay(Session& session, const std::vector<ReplayEvent>& events)
{
    struct Step
    {
        Millis t;
        std::size_t order;
        std::function<void()> run;
    };
    std::vector<Step> steps;
    for (const auto& e : events)
    {
        const auto& p = e.payload;
        if (e.kind == "load")
            steps.push_back({e.t, steps.size(), [&session, e] { session.load(e.payload["chart"].get<std::string>(), e.t); }});
        else if (e.kind == "query")
            steps.push_back({e.t, steps.size(), [&session, e] { session.query(e.payload["transcript"].get<std::string>(), e.t); }});
        else if (e.kind == "advance")
            steps.push_back({e.t, steps.size(), [&session, e] { session.advance(e.t); }});
        else if (e.kind == "button")
        {
            ButtonEvent b{parse_button(p["button"].get<std::string>()),
                          p["edge"].get<std::string>() == "down" ? Edge::down : Edge::up, e.t};
            steps.push_back({e.t, steps.size(), [&session, b] { session.button(b); }});
        }
        else
        {
            const Finger finger = parse_finger(p["finger"].get<std::string>());
            const Point2 at{p["x"].get<double>(), p["y"].get<double>()};
            std::vector<TouchFrame> frames;
            if (e.kind == "touch")
                frames.push_back({e.t, finger, at, p["height"].get<double>(), p.value("confidence", 1.0)});
            else if (e.kind == "tap")
                frames = tap_frames(finger, at, e.t);
            else
                frames = double_tap_frames(finger, at, e.t);
            for (const auto& f : frames)
                steps.push_back({f.t, steps.size(), [&session, f] { session.touch(f); }});
        }
    }
    std::stable_sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) { return a.t < b.t; });
    for (auto& s : steps)
    {
        try
        {
            s.run();
        }
        catch (const Error& err)
        {
            session.report(s.t, err);
        }
    }
    session.finish();
}

} // namespace feelgrid
