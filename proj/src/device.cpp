#include <feelgrid/device.hpp>

#include <fmt/format.h>

#include <fcntl.h>
#include <termios.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

namespace feelgrid
{
namespace
{

std::size_t pin_index(int col, int row)
{
    return static_cast<std::size_t>(row) * frame_width + static_cast<std::size_t>(col);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at)
{
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

bool known_command(std::uint8_t c)
{
    return c >= 0x01 && c <= 0x05;
}

// Structural check of a payload for its command; throws framing_error.
void check_payload(Command c, std::span<const std::uint8_t> payload)
{
    switch (c)
    {
    case Command::full_frame:
        if (payload.size() != full_frame_bytes)
            throw Error(Errc::framing_error, fmt::format("FULL_FRAME payload is {} bytes", payload.size()));
        break;
    case Command::braille_line:
        if (payload.size() != braille_line_cells)
            throw Error(Errc::framing_error, fmt::format("BRAILLE_LINE payload is {} bytes", payload.size()));
        break;
    case Command::clear:
        if (!payload.empty())
            throw Error(Errc::framing_error, "CLEAR carries no payload");
        break;
    case Command::partial: parse_partial(payload); break;
    case Command::pulse: parse_pulse(payload); break;
    }
}

// Cheap header plausibility used while resynchronising.
bool plausible_length(std::uint8_t cmd, std::uint16_t len)
{
    switch (static_cast<Command>(cmd))
    {
    case Command::full_frame: return len == full_frame_bytes;
    case Command::braille_line: return len == braille_line_cells;
    case Command::clear: return len == 0;
    case Command::pulse: return len >= 6 && (len - 6) % 2 == 0;
    case Command::partial: return len >= 4;
    }
    return false;
}

} // namespace

std::string_view to_string(Command c)
{
    switch (c)
    {
    case Command::full_frame: return "FULL_FRAME";
    case Command::partial: return "PARTIAL";
    case Command::braille_line: return "BRAILLE_LINE";
    case Command::clear: return "CLEAR";
    case Command::pulse: return "PULSE";
    }
    return "?";
}

std::uint8_t checksum(std::span<const std::uint8_t> bytes)
{
    std::uint8_t x = 0;
    for (auto b : bytes)
        x ^= b;
    return x;
}

std::vector<std::uint8_t> encode(const Packet& packet)
{
    if (packet.payload.size() > 0xFFFF)
        throw Error(Errc::oversize_frame, fmt::format("payload of {} bytes", packet.payload.size()));
    std::vector<std::uint8_t> out;
    out.reserve(packet.payload.size() + 5);
    out.push_back(packet_header);
    out.push_back(static_cast<std::uint8_t>(packet.command));
    put_u16(out, static_cast<std::uint16_t>(packet.payload.size()));
    out.insert(out.end(), packet.payload.begin(), packet.payload.end());
    out.push_back(checksum(std::span(out).subspan(1)));
    return out;
}

Packet decode(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 5 || bytes[0] != packet_header)
        throw Error(Errc::framing_error, "missing header");
    if (!known_command(bytes[1]))
        throw Error(Errc::framing_error, fmt::format("unknown command 0x{:02X}", bytes[1]));
    const std::size_t len = get_u16(bytes, 2);
    if (bytes.size() != len + 5)
        throw Error(Errc::framing_error, fmt::format("length {} does not match {} bytes", len, bytes.size()));
    const auto body = bytes.subspan(1, len + 3);
    if (checksum(body) != bytes.back())
        throw Error(Errc::checksum_mismatch, "checksum mismatch");
    Packet p{static_cast<Command>(bytes[1]), {bytes.begin() + 4, bytes.begin() + 4 + static_cast<std::ptrdiff_t>(len)}};
    check_payload(p.command, p.payload);
    return p;
}

Packet full_frame_packet(const PinImage& pins)
{
    Packet p{Command::full_frame, std::vector<std::uint8_t>(full_frame_bytes, 0)};
    for (std::size_t i = 0; i < pins.size(); ++i)
        if (pins.test(i))
            p.payload[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return p;
}

PinImage unpack_full_frame(std::span<const std::uint8_t> payload)
{
    if (payload.size() != full_frame_bytes)
        throw Error(Errc::framing_error, "FULL_FRAME payload must be 300 bytes");
    PinImage pins;
    for (std::size_t i = 0; i < pins.size(); ++i)
        pins.set(i, (payload[i / 8] & (0x80u >> (i % 8))) != 0);
    return pins;
}

Packet partial_packet(const std::vector<PartialRun>& runs)
{
    Packet p{Command::partial, {}};
    for (const auto& r : runs)
    {
        if (r.bits.empty() || r.bits.size() > 255 || r.col >= frame_width || r.row >= frame_height ||
            r.col + r.bits.size() > static_cast<std::size_t>(frame_width))
            throw Error(Errc::invalid_argument, fmt::format("bad run at ({}, {})", r.col, r.row));
        p.payload.push_back(r.col);
        p.payload.push_back(r.row);
        p.payload.push_back(static_cast<std::uint8_t>(r.bits.size()));
        std::vector<std::uint8_t> packed((r.bits.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < r.bits.size(); ++i)
            if (r.bits[i])
                packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        p.payload.insert(p.payload.end(), packed.begin(), packed.end());
    }
    if (p.payload.size() > 0xFFFF)
        throw Error(Errc::oversize_frame, "PARTIAL payload too large");
    return p;
}

std::vector<PartialRun> parse_partial(std::span<const std::uint8_t> payload)
{
    std::vector<PartialRun> runs;
    std::size_t i = 0;
    while (i < payload.size())
    {
        if (i + 3 > payload.size())
            throw Error(Errc::framing_error, "truncated PARTIAL run header");
        PartialRun r{payload[i], payload[i + 1], {}};
        const std::size_t len = payload[i + 2];
        const std::size_t nbytes = (len + 7) / 8;
        if (len == 0 || r.col >= frame_width || r.row >= frame_height || r.col + len > static_cast<std::size_t>(frame_width))
            throw Error(Errc::framing_error, fmt::format("PARTIAL run at ({}, {}) out of bounds", r.col, r.row));
        if (i + 3 + nbytes > payload.size())
            throw Error(Errc::framing_error, "truncated PARTIAL run bits");
        for (std::size_t k = 0; k < len; ++k)
            r.bits.push_back((payload[i + 3 + k / 8] & (0x80u >> (k % 8))) != 0);
        runs.push_back(std::move(r));
        i += 3 + nbytes;
    }
    if (runs.empty())
        throw Error(Errc::framing_error, "empty PARTIAL");
    return runs;
}

Packet braille_packet(const BrailleLine& line)
{
    if (line.size() > braille_line_cells)
        throw Error(Errc::oversize_frame, fmt::format("Braille line of {} cells", line.size()));
    Packet p{Command::braille_line, std::vector<std::uint8_t>(braille_line_cells, 0)};
    for (std::size_t i = 0; i < line.size(); ++i)
        p.payload[i] = line[i];
    return p;
}

Packet clear_packet()
{
    return {Command::clear, {}};
}

Packet pulse_packet(const PulseCommand& pulse)
{
    if (pulse.cells.size() > 0xFFFF)
        throw Error(Errc::oversize_frame, "too many pulse cells");
    if (pulse.rate_decihz == 0 || pulse.duty_percent == 0 || pulse.duty_percent > 100)
        throw Error(Errc::invalid_argument, "pulse rate and duty must be positive");
    Packet p{Command::pulse, {}};
    put_u16(p.payload, static_cast<std::uint16_t>(pulse.cells.size()));
    for (const auto& c : pulse.cells)
    {
        if (!in_frame(c))
            throw Error(Errc::invalid_argument, "pulse cell outside the frame");
        p.payload.push_back(static_cast<std::uint8_t>(c.col));
        p.payload.push_back(static_cast<std::uint8_t>(c.row));
    }
    p.payload.push_back(pulse.rate_decihz);
    p.payload.push_back(pulse.duty_percent);
    put_u16(p.payload, pulse.duration_ms);
    if (p.payload.size() > 0xFFFF)
        throw Error(Errc::oversize_frame, "PULSE payload too large");
    return p;
}

PulseCommand parse_pulse(std::span<const std::uint8_t> payload)
{
    if (payload.size() < 6)
        throw Error(Errc::framing_error, "short PULSE payload");
    const std::size_t n = get_u16(payload, 0);
    if (payload.size() != 2 + 2 * n + 4)
        throw Error(Errc::framing_error, "PULSE cell count does not match length");
    PulseCommand p;
    for (std::size_t i = 0; i < n; ++i)
    {
        const Cell c{payload[2 + 2 * i], payload[3 + 2 * i]};
        if (!in_frame(c))
            throw Error(Errc::framing_error, "PULSE cell outside the frame");
        p.cells.push_back(c);
    }
    const std::size_t tail = 2 + 2 * n;
    p.rate_decihz = payload[tail];
    p.duty_percent = payload[tail + 1];
    p.duration_ms = get_u16(payload, tail + 2);
    if (p.rate_decihz == 0 || p.duty_percent == 0 || p.duty_percent > 100)
        throw Error(Errc::framing_error, "PULSE rate or duty out of range");
    return p;
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes)
{
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    scan(false);
}

void StreamDecoder::finish()
{
    scan(true);
}

std::vector<Packet> StreamDecoder::take_packets()
{
    return std::exchange(packets_, {});
}

void StreamDecoder::scan(bool final)
{
    std::size_t pos = 0;
    while (pos < buffer_.size())
    {
        if (buffer_[pos] != packet_header)
        {
            ++pos;
            continue;
        }
        const std::size_t avail = buffer_.size() - pos;
        if (avail >= 2 && !known_command(buffer_[pos + 1]))
        {
            issues_.push_back({Errc::framing_error, consumed_ + pos});
            ++pos;
            continue;
        }
        if (avail < 4)
        {
            if (!final)
                break;
            issues_.push_back({Errc::framing_error, consumed_ + pos});
            ++pos;
            continue;
        }
        const std::uint16_t len = get_u16(buffer_, pos + 2);
        if (!plausible_length(buffer_[pos + 1], len))
        {
            issues_.push_back({Errc::framing_error, consumed_ + pos});
            ++pos;
            continue;
        }
        const std::size_t total = std::size_t{len} + 5;
        if (avail < total)
        {
            if (!final)
                break;
            issues_.push_back({Errc::framing_error, consumed_ + pos});
            ++pos;
            continue;
        }
        try
        {
            packets_.push_back(decode(std::span(buffer_).subspan(pos, total)));
            pos += total;
        }
        catch (const Error& e)
        {
            issues_.push_back({e.code(), consumed_ + pos});
            ++pos;
        }
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
    consumed_ += pos;
}

Millis transmit_ms(std::size_t bytes, unsigned baud)
{
    return static_cast<Millis>(std::llround(static_cast<double>(bytes) * 10.0 * 1000.0 / baud));
}

SimulatedDevice::SimulatedDevice(Millis latency_ms) : latency_(latency_ms)
{
    braille_.resize(braille_line_cells);
}

Millis SimulatedDevice::write(std::span<const std::uint8_t> bytes, Millis t)
{
    StreamDecoder decoder;
    decoder.feed(bytes);
    decoder.finish();
    issues_.insert(issues_.end(), decoder.issues().begin(), decoder.issues().end());
    Millis landed = t;
    for (const auto& p : decoder.take_packets())
    {
        landed = std::max(t, busy_until_) + latency_;
        busy_until_ = landed;
        apply(p, landed);
    }
    return landed;
}

void SimulatedDevice::apply(const Packet& packet, Millis t)
{
    auto cancel_pulses = [&] {
        for (auto& p : pulses_)
            if (!p.end || *p.end > t)
                p.end = t;
    };
    switch (packet.command)
    {
    case Command::full_frame:
        pins_ = unpack_full_frame(packet.payload);
        cancel_pulses();
        break;
    case Command::partial:
        for (const auto& r : parse_partial(packet.payload))
            for (std::size_t k = 0; k < r.bits.size(); ++k)
                pins_.set(pin_index(r.col + static_cast<int>(k), r.row), r.bits[k]);
        break;
    case Command::braille_line:
        for (std::size_t i = 0; i < braille_line_cells; ++i)
            braille_[i] = packet.payload[i];
        break;
    case Command::clear:
        pins_.reset();
        for (auto& c : braille_)
            c = 0;
        cancel_pulses();
        break;
    case Command::pulse:
    {
        ActivePulse a{t, std::nullopt, parse_pulse(packet.payload)};
        if (a.command.duration_ms > 0)
            a.end = t + a.command.duration_ms;
        pulses_.push_back(std::move(a));
        break;
    }
    }
    log_.push_back({t, packet});
}

PinImage SimulatedDevice::pins_at(Millis t) const
{
    std::vector<LogEntry> upto;
    for (const auto& e : log_)
        if (e.t <= t)
            upto.push_back(e);
    PinImage pins = replay_pins(upto);
    for (const auto& p : pulses_)
    {
        if (t < p.start || (p.end && t >= *p.end))
            continue;
        const double period = 10000.0 / p.command.rate_decihz;
        const double off = period * (100 - p.command.duty_percent) / 100.0;
        const double phase = std::fmod(static_cast<double>(t - p.start), period);
        if (phase >= off)
            for (const auto& c : p.command.cells)
                pins.set(pin_index(c.col, c.row));
    }
    return pins;
}

std::vector<Toggle> SimulatedDevice::toggles(Millis from, Millis to) const
{
    std::vector<Toggle> out;
    for (const auto& p : pulses_)
    {
        const double period = 10000.0 / p.command.rate_decihz;
        const double off = period * (100 - p.command.duty_percent) / 100.0;
        const double end = p.end ? static_cast<double>(*p.end) : static_cast<double>(to) + period;
        for (int k = 0;; ++k)
        {
            const double up = static_cast<double>(p.start) + k * period + off;
            if (up >= end || up > static_cast<double>(to))
                break;
            const double down = std::min(static_cast<double>(p.start) + (k + 1) * period, end);
            const auto up_t = static_cast<Millis>(std::llround(up));
            const auto down_t = static_cast<Millis>(std::llround(down));
            if (up_t > from && up_t <= to)
                out.push_back({up_t, p.command.cells, true});
            if (down_t > from && down_t <= to)
                out.push_back({down_t, p.command.cells, false});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Toggle& a, const Toggle& b) { return a.t < b.t; });
    return out;
}

PinImage replay_pins(const std::vector<SimulatedDevice::LogEntry>& log)
{
    PinImage pins;
    for (const auto& e : log)
    {
        switch (e.packet.command)
        {
        case Command::full_frame: pins = unpack_full_frame(e.packet.payload); break;
        case Command::clear: pins.reset(); break;
        case Command::partial:
            for (const auto& r : parse_partial(e.packet.payload))
                for (std::size_t k = 0; k < r.bits.size(); ++k)
                    pins.set(pin_index(r.col + static_cast<int>(k), r.row), r.bits[k]);
            break;
        default: break;
        }
    }
    return pins;
}

PosixSerialPort::PosixSerialPort(const std::string& path, unsigned baud)
{
    fd_ = ::open(path.c_str(), O_RDWR | O_NOCTTY | O_NONBLOCK);
    if (fd_ < 0)
        throw Error(Errc::io_error, fmt::format("cannot open {}: {}", path, std::strerror(errno)));
    termios tio{};
    if (::tcgetattr(fd_, &tio) != 0)
    {
        ::close(fd_);
        throw Error(Errc::io_error, fmt::format("{} is not a tty", path));
    }
    ::cfmakeraw(&tio);
    tio.c_cflag &= ~static_cast<tcflag_t>(PARENB | CSTOPB | CSIZE);
    tio.c_cflag |= CS8 | CLOCAL | CREAD;
    const speed_t speed = baud == 115200 ? B115200 : baud == 57600 ? B57600 : B9600;
    ::cfsetispeed(&tio, speed);
    ::cfsetospeed(&tio, speed);
    if (::tcsetattr(fd_, TCSANOW, &tio) != 0)
    {
        ::close(fd_);
        throw Error(Errc::io_error, fmt::format("cannot configure {}", path));
    }
}

PosixSerialPort::~PosixSerialPort()
{
    if (fd_ >= 0)
        ::close(fd_);
}

void PosixSerialPort::write(std::span<const std::uint8_t> bytes)
{
    std::size_t done = 0;
    while (done < bytes.size())
    {
        const auto n = ::write(fd_, bytes.data() + done, bytes.size() - done);
        if (n < 0 && (errno == EAGAIN || errno == EINTR))
            continue;
        if (n < 0)
            throw Error(Errc::io_error, fmt::format("serial write: {}", std::strerror(errno)));
        done += static_cast<std::size_t>(n);
    }
}

std::vector<std::uint8_t> PosixSerialPort::read_available()
{
    std::vector<std::uint8_t> out;
    std::uint8_t buf[512];
    for (;;)
    {
        const auto n = ::read(fd_, buf, sizeof buf);
        if (n <= 0)
            break;
        out.insert(out.end(), buf, buf + n);
    }
    return out;
}

void LoopbackPort::write(std::span<const std::uint8_t> bytes)
{
    pending_.insert(pending_.end(), bytes.begin(), bytes.end());
}

std::vector<std::uint8_t> LoopbackPort::read_available()
{
    return std::exchange(pending_, {});
}

} // namespace feelgrid
