#pragma once

#include <feelgrid/input.hpp>

#include <optional>
#include <string>
#include <vector>

namespace feelgrid
{

enum class HighlightStyle
{
    static_raise,
    pulse,
};

struct HighlightCommand
{
    std::vector<Cell> cells;
    HighlightStyle style = HighlightStyle::pulse;
    double pulse_hz = 2.0;
    std::optional<Millis> duration_ms; // empty: until dismissed
    std::vector<int> element_ids;
    std::uint64_t frame_id = 0;
};

/// Throws Error(invalid_argument) on out-of-frame cells or a rate outside [0.5, 4] Hz.
void validate(const HighlightCommand& command);

struct SpeechEvent
{
    std::string text;
    Millis started_at = 0;
    Millis duration_ms = 0;
};

/// 50 ms per character, at least 300 ms; zero for empty text.
Millis speech_duration(std::string_view text);

struct TouchResponse
{
    std::optional<HighlightCommand> highlight;
    std::string braille_text;
    std::vector<BrailleLine> braille;
    SpeechEvent speech;
    std::vector<int> element_ids;
    std::uint64_t frame_id = 0;
};

/// Feedback for the live selections: a 3x3 ring around each, a Braille page
/// and one spoken line naming them in tap order. No selections means a miss.
TouchResponse touch_response(const std::vector<Selection>& selections, const TactileFrame& frame,
                             Millis now);

/// Cells of a ring around an element, excluding its footprint, clipped to the frame.
std::vector<Cell> ring_cells(const ChartElement& element);

/// Sentence split that keeps trailing whitespace with each sentence, so the
/// pieces concatenate back to the input.
std::vector<std::string> split_sentences(std::string_view text);

struct ResponseChunk
{
    std::size_t index = 0;
    std::string text;
    std::optional<HighlightCommand> highlight;
    std::optional<std::string> braille_label;
    std::vector<int> referenced_elements;
};

/// One chunk per sentence. `sentence_elements[i]` lists the elements sentence i
/// talks about; sentences without an entry get no highlight.
std::vector<ResponseChunk> segment_response(std::string_view text,
                                            const std::vector<std::vector<int>>& sentence_elements,
                                            const TactileFrame& frame);

struct PlaybackEvent
{
    Millis t = 0;
    std::string kind; // highlight, speech, clear
    int chunk = -1;
    std::vector<Cell> cells;
    std::string text;

    std::string to_json() const;
};

/// Chunk playback: highlight then speech per chunk, auto-advance when speech
/// ends, clear after the last chunk. Button actions navigate.
class Playback
{
public:
    Playback(std::vector<ResponseChunk> chunks, Millis start);

    void advance(Millis now);
    void control(ButtonAction action, Millis t);
    /// Runs to the end without further input.
    void finish();

    bool done() const noexcept
    {
        return done_;
    }
    std::size_t current() const noexcept
    {
        return current_;
    }
    std::optional<Millis> speech_end() const
    {
        return done_ ? std::nullopt : std::optional(speech_end_);
    }
    const std::vector<PlaybackEvent>& log() const noexcept
    {
        return log_;
    }
    const std::vector<ResponseChunk>& chunks() const noexcept
    {
        return chunks_;
    }

private:
    void issue(std::size_t index, Millis t);
    void clear(Millis t);

    std::vector<ResponseChunk> chunks_;
    std::vector<PlaybackEvent> log_;
    std::size_t current_ = 0;
    Millis speech_end_ = 0;
    bool done_ = false;
};

} // namespace feelgrid
