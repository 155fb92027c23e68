// feelgrid: render charts to the pin grid, replay recorded sessions, or serve
// a live session to the operator console.

#include <feelgrid/bridge.hpp>
#include <feelgrid/error.hpp>
#include <feelgrid/model_port.hpp>
#include <feelgrid/session.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace feelgrid;

namespace
{

constexpr int exit_parse = 2;
constexpr int exit_replay_syntax = 3;
constexpr int exit_port_busy = 4;

std::atomic<bool> interrupted{false};

void on_signal(int)
{
    interrupted = true;
}

double window_bound(const std::string& text)
{
    if (auto t = Temporal::try_parse(text))
        return static_cast<double>(t->epoch_day());
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
        throw std::invalid_argument(text);
    return v;
}

Window parse_window(const std::string& text)
{
    const auto colon = text.find(':', 1);
    if (colon == std::string::npos)
        throw Error(Errc::invalid_argument, fmt::format("window '{}' must be lo:hi", text));
    try
    {
        Window w{window_bound(text.substr(0, colon)), window_bound(text.substr(colon + 1))};
        if (!(w.lo < w.hi))
            throw Error(Errc::invalid_argument, fmt::format("window '{}' is empty", text));
        return w;
    }
    catch (const std::invalid_argument&)
    {
        throw Error(Errc::invalid_argument, fmt::format("window '{}' has a bad bound", text));
    }
}

LoadedChart open_chart(const std::string& chart, const std::optional<std::string>& catalogue_flag)
{
    const std::filesystem::path as_path(chart);
    if (std::filesystem::is_regular_file(as_path))
        return load_chart_file(as_path);
    const auto catalogue = scan_catalogue(resolve_catalogue_root(catalogue_flag));
    if (const auto* entry = catalogue.find(chart))
        return load_chart_file(entry->path);
    throw Error(Errc::io_error, fmt::format("no chart file or catalogue entry named '{}'", chart));
}

int cmd_render(const std::string& chart_name, const std::optional<std::string>& catalogue,
               const std::optional<std::string>& x_window, const std::optional<std::string>& y_window)
{
    try
    {
        const auto chart = open_chart(chart_name, catalogue);
        for (const auto& w : chart.spec.warnings)
            std::cerr << "warning: " << w << '\n';
        auto viewport = default_viewport(chart);
        if (x_window)
            viewport.x = parse_window(*x_window);
        if (y_window)
            viewport.y = parse_window(*y_window);
        if (x_window && !chart.hierarchy.empty())
            viewport.active_layer = select_layer(chart, viewport);
        const auto frame = render(chart, viewport, 1);
        std::cout << frame.dump_grid() << '\n' << frame.dump_semantic();
        return 0;
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_parse;
    }
}

int cmd_replay(const std::string& file, const std::optional<std::string>& catalogue,
               const std::optional<std::string>& expected)
{
    std::ifstream in(file);
    if (!in)
    {
        std::cerr << "error: cannot open " << file << '\n';
        return exit_replay_syntax;
    }
    std::vector<ReplayEvent> events;
    try
    {
        events = parse_replay(in);
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << file << ": " << e.what() << '\n';
        return exit_replay_syntax;
    }

    SessionOptions options;
    options.model_port = model_port_from_env();
    Session session(scan_catalogue(resolve_catalogue_root(catalogue)), options);
    run_replay(session, events);

    std::ostringstream out;
    for (const auto& line : session.log())
        out << line << '\n';
    out << "digest " << session.frame_digest() << '\n';
    std::cout << out.str();

    if (expected)
    {
        std::ifstream want_in(*expected);
        if (!want_in)
        {
            std::cerr << "error: cannot open " << *expected << '\n';
            return 1;
        }
        std::stringstream want;
        want << want_in.rdbuf();
        if (want.str() != out.str())
        {
            std::istringstream a(want.str()), b(out.str());
            std::string la, lb;
            for (int line = 1;; ++line)
            {
                const bool ga = static_cast<bool>(std::getline(a, la));
                const bool gb = static_cast<bool>(std::getline(b, lb));
                if (!ga && !gb)
                    break;
                if (!ga || !gb || la != lb)
                {
                    std::cerr << fmt::format("assert failed at line {}\n  expected: {}\n  actual:   {}\n", line,
                                             ga ? la : "<end>", gb ? lb : "<end>");
                    break;
                }
            }
            return 1;
        }
        std::cerr << "assert: log matches " << *expected << '\n';
    }
    return 0;
}

int cmd_serve(const std::optional<std::string>& catalogue, std::uint16_t port, const std::optional<std::string>& chart)
{
    Bus bus;
    SessionOptions options;
    options.bus = &bus;
    options.model_port = model_port_from_env();
    Session session(scan_catalogue(resolve_catalogue_root(catalogue)), options);
    auto inbox = bus.subscribe("user/query");
    auto events = bus.subscribe("session/event");

    std::unique_ptr<ConsoleBridge> bridge;
    try
    {
        bridge = std::make_unique<ConsoleBridge>(bus, port, [&session] { return session.catalogue_payload(); });
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_port_busy;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << fmt::format("serving on 127.0.0.1:{}\n", bridge->port());

    const auto start = std::chrono::steady_clock::now();
    auto now = [&] {
        return static_cast<Millis>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
    };
    std::size_t printed = 0;
    auto flush_log = [&] {
        for (; printed < session.log().size(); ++printed)
            std::cout << session.log()[printed] << '\n';
        std::cout.flush();
    };

    if (chart)
        session.load(*chart, now());
    while (!interrupted)
    {
        if (auto q = inbox.pop_for(std::chrono::milliseconds(10)))
            session.query(q->payload.value("transcript", ""), now());
        for (const auto& e : events.drain())
        {
            const auto kind = e.payload.value("kind", "");
            const auto& p = e.payload;
            try
            {
                if (kind == "touch")
                    session.touch({now(), parse_finger(p.value("finger", "left_index")),
                                   {p.value("x", 0.0), p.value("y", 0.0)}, p.value("height", 10.0),
                                   p.value("confidence", 1.0)});
                else if (kind == "button")
                    session.button({parse_button(p.value("button", "")),
                                    p.value("edge", "") == "down" ? Edge::down : Edge::up, now()});
                else if (kind == "load")
                    session.load(p.value("chart", ""), now());
            }
            catch (const Error& err)
            {
                session.report(now(), err);
            }
        }
        session.advance(now());
        flush_log();
    }

    session.shutdown(now());
    flush_log();
    bridge->stop();
    std::cerr << "shutdown: device cleared\n";
    return 0;
}

int cmd_catalogue(const std::optional<std::string>& catalogue)
{
    const auto root = resolve_catalogue_root(catalogue);
    const auto cat = scan_catalogue(root);
    for (const auto& e : cat.entries)
        std::cout << fmt::format("{}\t{}\t{}\t{} rows\t{}{}\n", e.name, e.title, to_string(e.mark), e.row_count,
                                 e.digest, e.preview ? "\tpreview" : "");
    for (const auto& s : cat.skipped)
        std::cerr << fmt::format("skipped {}: {}\n", s.path.string(), s.reason);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"feelgrid: charts on a refreshable tactile display"};
    app.require_subcommand(1);

    std::optional<std::string> catalogue;
    app.add_option("--catalogue", catalogue, "Catalogue directory (default: $FEELGRID_CATALOGUE or ./catalogue)");

    auto* render = app.add_subcommand("render", "Render a chart to a text pin grid");
    std::string chart;
    std::optional<std::string> x_window, y_window;
    render->add_option("--chart", chart, "Spec file or catalogue name")->required();
    render->add_option("--x-window", x_window, "lo:hi (numbers or dates)");
    render->add_option("--y-window", y_window, "lo:hi");

    auto* replay = app.add_subcommand("replay", "Replay a recorded session");
    std::string replay_file;
    std::optional<std::string> expected;
    replay->add_option("--replay,file", replay_file, "Session file (JSON lines)")->required();
    replay->add_option("--assert", expected, "Expected output; exit 1 on mismatch");

    auto* serve = app.add_subcommand("serve", "Run a live session with the console bridge");
    std::uint16_t port = 7878;
    std::optional<std::string> serve_chart;
    serve->add_option("--port", port, "Console bridge TCP port");
    serve->add_option("--chart", serve_chart, "Chart to load at start");

    auto* list = app.add_subcommand("catalogue", "List catalogue entries");

    for (auto* sub : {render, replay, serve, list})
        sub->add_option("--catalogue", catalogue, "Catalogue directory");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? 0 : exit_parse;
    }

    if (*render)
        return cmd_render(chart, catalogue, x_window, y_window);
    if (*replay)
        return cmd_replay(replay_file, catalogue, expected);
    if (*serve)
        return cmd_serve(catalogue, port, serve_chart);
    return cmd_catalogue(catalogue);
}
