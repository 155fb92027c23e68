#pragma once

#include <feelgrid/braille.hpp>
#include <feelgrid/error.hpp>
#include <feelgrid/render.hpp>

#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace feelgrid
{

using Millis = std::int64_t;
using PinImage = std::bitset<TactileFrame::cell_count>;

inline constexpr std::uint8_t packet_header = 0xAA;
inline constexpr std::size_t full_frame_bytes = 300;
inline constexpr unsigned serial_baud = 115200;

enum class Command : std::uint8_t
{
    full_frame = 0x01,
    partial = 0x02,
    braille_line = 0x03,
    clear = 0x04,
    pulse = 0x05,
};

std::string_view to_string(Command c);

struct Packet
{
    Command command = Command::clear;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Packet&, const Packet&) = default;
};

/// Header, command, big-endian length, payload, XOR checksum of command..payload.
/// Throws Error(oversize_frame) for payloads over 65535 bytes.
std::vector<std::uint8_t> encode(const Packet& packet);

/// Exactly one packet. Throws Error(framing_error) or Error(checksum_mismatch).
Packet decode(std::span<const std::uint8_t> bytes);

std::uint8_t checksum(std::span<const std::uint8_t> command_through_payload);

/// Row-major, most significant bit is the leftmost pin.
Packet full_frame_packet(const PinImage& pins);
PinImage unpack_full_frame(std::span<const std::uint8_t> payload);

/// Horizontal run of pins starting at (col, row).
struct PartialRun
{
    std::uint8_t col = 0;
    std::uint8_t row = 0;
    std::vector<bool> bits;

    friend bool operator==(const PartialRun&, const PartialRun&) = default;
};

Packet partial_packet(const std::vector<PartialRun>& runs);
std::vector<PartialRun> parse_partial(std::span<const std::uint8_t> payload);

/// Throws Error(oversize_frame) when the line exceeds 20 cells; shorter lines are padded.
Packet braille_packet(const BrailleLine& line);
Packet clear_packet();

struct PulseCommand
{
    std::vector<Cell> cells;
    std::uint8_t rate_decihz = 20; // 2.0 Hz
    std::uint8_t duty_percent = 50;
    std::uint16_t duration_ms = 0; // 0: until cleared

    friend bool operator==(const PulseCommand&, const PulseCommand&) = default;
};

Packet pulse_packet(const PulseCommand& pulse);
PulseCommand parse_pulse(std::span<const std::uint8_t> payload);

struct DecodeIssue
{
    Errc code = Errc::framing_error;
    std::size_t offset = 0; // stream offset of the rejected header
};

/// Incremental decoder that resynchronises on the header byte after garbage
/// or corruption.
class StreamDecoder
{
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Treats buffered bytes as a truncated tail and rescans them.
    void finish();

    std::vector<Packet> take_packets();
    const std::vector<DecodeIssue>& issues() const noexcept
    {
        return issues_;
    }

private:
    void scan(bool final);

    std::vector<std::uint8_t> buffer_;
    std::size_t consumed_ = 0; // stream offset of buffer_[0]
    std::vector<Packet> packets_;
    std::vector<DecodeIssue> issues_;
};

/// Serial transmit time for `bytes` at 8-N-1, rounded to the nearest ms.
Millis transmit_ms(std::size_t bytes, unsigned baud = serial_baud);

struct Toggle
{
    Millis t = 0;
    std::vector<Cell> cells;
    bool raised = false;
};

/// Bit-faithful display model. Each packet lands `latency_ms` after it is
/// written, or after the previous packet landed, whichever is later.
class SimulatedDevice
{
public:
    struct LogEntry
    {
        Millis t = 0;
        Packet packet;
    };

    explicit SimulatedDevice(Millis latency_ms = transmit_ms(full_frame_bytes + 7));

    /// Decodes and applies a byte stream; returns the landing time of the last packet.
    Millis write(std::span<const std::uint8_t> bytes, Millis t);
    void apply(const Packet& packet, Millis t);

    const PinImage& pins() const noexcept
    {
        return pins_;
    }
    /// Pins as felt at `t`, pulses included.
    PinImage pins_at(Millis t) const;
    const BrailleLine& braille() const noexcept
    {
        return braille_;
    }
    const std::vector<LogEntry>& log() const noexcept
    {
        return log_;
    }
    const std::vector<DecodeIssue>& issues() const noexcept
    {
        return issues_;
    }
    /// Pulse transitions in (from, to].
    std::vector<Toggle> toggles(Millis from, Millis to) const;
    Millis latency_ms() const noexcept
    {
        return latency_;
    }

private:
    struct ActivePulse
    {
        Millis start = 0;
        std::optional<Millis> end; // cancelled or finished
        PulseCommand command;
    };

    Millis latency_;
    Millis busy_until_ = 0;
    PinImage pins_;
    BrailleLine braille_;
    std::vector<LogEntry> log_;
    std::vector<ActivePulse> pulses_;
    std::vector<DecodeIssue> issues_;
};

/// Replays a log from a blank device; the oracle for SimulatedDevice state.
PinImage replay_pins(const std::vector<SimulatedDevice::LogEntry>& log);

class SerialPort
{
public:
    virtual ~SerialPort() = default;
    virtual void write(std::span<const std::uint8_t> bytes) = 0;
    virtual std::vector<std::uint8_t> read_available() = 0;
};

/// POSIX tty at 115200-8-N-1, raw mode. Throws Error(io_error).
class PosixSerialPort : public SerialPort
{
public:
    explicit PosixSerialPort(const std::string& path, unsigned baud = serial_baud);
    ~PosixSerialPort() override;

    PosixSerialPort(const PosixSerialPort&) = delete;
    PosixSerialPort& operator=(const PosixSerialPort&) = delete;

    void write(std::span<const std::uint8_t> bytes) override;
    std::vector<std::uint8_t> read_available() override;

private:
    int fd_ = -1;
};

/// Echoes written bytes back to the reader.
class LoopbackPort : public SerialPort
{
public:
    void write(std::span<const std::uint8_t> bytes) override;
    std::vector<std::uint8_t> read_available() override;

private:
    std::vector<std::uint8_t> pending_;
};

} // namespace feelgrid
