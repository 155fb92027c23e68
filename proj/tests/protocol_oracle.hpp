#pragma once

// Random device packets, a byte-level reference encoder and a reference pin model.

#include <feelgrid/device.hpp>

#include <random>
#include <vector>

namespace feelgrid::test
{

inline Packet random_packet(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> kind(0, 4), byte(0, 255), col(0, 59), row(0, 39), small(1, 8);
    std::bernoulli_distribution bit(0.5);
    switch (kind(rng))
    {
    case 0:
    {
        PinImage pins;
        for (std::size_t i = 0; i < pins.size(); ++i)
            pins.set(i, bit(rng));
        return full_frame_packet(pins);
    }
    case 1:
    {
        std::vector<PartialRun> runs(static_cast<std::size_t>(small(rng)));
        for (auto& r : runs)
        {
            r.col = static_cast<std::uint8_t>(col(rng));
            r.row = static_cast<std::uint8_t>(row(rng));
            std::uniform_int_distribution<int> len(1, 60 - r.col);
            r.bits.resize(static_cast<std::size_t>(len(rng)));
            for (std::size_t k = 0; k < r.bits.size(); ++k)
                r.bits[k] = bit(rng);
        }
        return partial_packet(runs);
    }
    case 2:
    {
        std::uniform_int_distribution<int> len(0, 20);
        BrailleLine line(static_cast<std::size_t>(len(rng)));
        for (auto& c : line)
            c = static_cast<BrailleCell>(byte(rng) & 0x3F);
        return braille_packet(line);
    }
    case 3:
        return clear_packet();
    default:
    {
        PulseCommand p;
        p.cells.resize(static_cast<std::size_t>(small(rng)));
        for (auto& c : p.cells)
            c = {col(rng), row(rng)};
        std::uniform_int_distribution<int> rate(5, 40), duty(1, 100), dur(0, 3000);
        p.rate_decihz = static_cast<std::uint8_t>(rate(rng));
        p.duty_percent = static_cast<std::uint8_t>(duty(rng));
        p.duration_ms = static_cast<std::uint16_t>(dur(rng));
        return pulse_packet(p);
    }
    }
}

/// 0xAA, command, length (big endian), payload, XOR of command through payload.
inline std::vector<std::uint8_t> reference_encode(const Packet& p)
{
    std::vector<std::uint8_t> out{0xAA, static_cast<std::uint8_t>(p.command),
                                  static_cast<std::uint8_t>(p.payload.size() >> 8),
                                  static_cast<std::uint8_t>(p.payload.size() & 0xFF)};
    out.insert(out.end(), p.payload.begin(), p.payload.end());
    std::uint8_t x = 0;
    for (std::size_t i = 1; i < out.size(); ++i)
        x ^= out[i];
    out.push_back(x);
    return out;
}

/// Pin state after applying packets to a blank display.
inline PinImage reference_pins(const std::vector<Packet>& packets)
{
    PinImage pins;
    for (const auto& p : packets)
    {
        if (p.command == Command::clear)
            pins.reset();
        else if (p.command == Command::full_frame)
        {
            for (std::size_t i = 0; i < 2400; ++i)
                pins.set(i, (p.payload[i / 8] >> (7 - i % 8)) & 1);
        }
        else if (p.command == Command::partial)
        {
            std::size_t i = 0;
            while (i < p.payload.size())
            {
                const int c = p.payload[i], r = p.payload[i + 1], len = p.payload[i + 2];
                for (int k = 0; k < len; ++k)
                    pins.set(static_cast<std::size_t>(r * 60 + c + k),
                             (p.payload[i + 3 + static_cast<std::size_t>(k / 8)] >> (7 - k % 8)) & 1);
                i += 3 + static_cast<std::size_t>((len + 7) / 8);
            }
        }
    }
    return pins;
}

} // namespace feelgrid::test
