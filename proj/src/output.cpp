#include <feelgrid/error.hpp>
#include <feelgrid/output.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace feelgrid
{
namespace
{

std::size_t utf8_length(std::string_view text)
{
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

// Word immediately before position `end` (exclusive), lowercased.
std::string word_before(std::string_view text, std::size_t end)
{
    std::size_t start = end;
    while (start > 0 && !is_space(text[start - 1]))
        --start;
    std::string w(text.substr(start, end - start));
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    return w;
}

bool is_abbreviation(const std::string& word)
{
    static const std::set<std::string> known = {
        "mr", "mrs", "ms", "dr", "st", "vs", "etc", "e.g", "i.e", "approx", "fig", "jan",
        "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    };
    return known.count(word) > 0;
}

bool is_quarter_token(const std::string& word)
{
    return word.size() == 2 && word[0] == 'q' && word[1] >= '1' && word[1] <= '4';
}

std::vector<Cell> footprint_cells(const TactileFrame& frame, const std::vector<int>& ids)
{
    std::vector<Cell> cells;
    for (int id : ids)
        if (const auto* e = frame.element(id))
            for (const auto& c : e->footprint)
                if (std::find(cells.begin(), cells.end(), c) == cells.end())
                    cells.push_back(c);
    return cells;
}

} // namespace

void validate(const HighlightCommand& command)
{
    for (const auto& c : command.cells)
        if (!in_frame(c))
            throw Error(Errc::invalid_argument, "highlight cell outside the frame");
    if (command.style == HighlightStyle::pulse && (command.pulse_hz < 0.5 || command.pulse_hz > 4.0))
        throw Error(Errc::invalid_argument, "pulse rate must be within 0.5 to 4 Hz");
}

Millis speech_duration(std::string_view text)
{
    if (text.empty())
        return 0;
    return std::max<Millis>(300, static_cast<Millis>(utf8_length(text)) * 50);
}

std::vector<Cell> ring_cells(const ChartElement& element)
{
    std::vector<Cell> out;
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
        {
            const Cell c{element.position.col + dc, element.position.row + dr};
            if (!in_frame(c))
                continue;
            if (std::find(element.footprint.begin(), element.footprint.end(), c) != element.footprint.end())
                continue;
            out.push_back(c);
        }
    return out;
}

TouchResponse touch_response(const std::vector<Selection>& selections, const TactileFrame& frame,
                             Millis now)
{
    TouchResponse r;
    r.frame_id = frame.frame_id;
    r.speech.started_at = now;
    if (selections.empty())
    {
        r.speech.text = "no data point here";
        r.speech.duration_ms = speech_duration(r.speech.text);
        r.braille_text = r.speech.text;
        r.braille = paginate_braille(r.braille_text);
        return r;
    }

    HighlightCommand h;
    h.frame_id = frame.frame_id;
    std::string spoken;
    for (const auto& s : selections)
    {
        r.element_ids.push_back(s.element_id);
        h.element_ids.push_back(s.element_id);
        if (const auto* e = frame.element(s.element_id))
            for (const auto& c : ring_cells(*e))
                if (std::find(h.cells.begin(), h.cells.end(), c) == h.cells.end())
                    h.cells.push_back(c);
        if (!spoken.empty())
            spoken += " ... ";
        spoken += s.label;
    }
    r.highlight = std::move(h);
    r.braille_text = spoken;
    r.braille = paginate_braille(spoken);
    r.speech.text = spoken + ".";
    r.speech.duration_ms = speech_duration(r.speech.text);
    return r;
}

std::vector<std::string> split_sentences(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?')
            continue;
        std::size_t j = i + 1;
        // Closing quotes and brackets stay with their sentence.
        while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')'))
            ++j;
        if (j < text.size() && !is_space(text[j]))
            continue;
        std::size_t k = j;
        while (k < text.size() && is_space(text[k]))
            ++k;
        if (k < text.size())
        {
            const auto next = static_cast<unsigned char>(text[k]);
            if (!std::isupper(next) && !std::isdigit(next) && next != '"' && next != '\'')
                continue;
            if (c == '.')
            {
                const auto word = word_before(text, i);
                if (is_abbreviation(word))
                    continue;
                if (is_quarter_token(word) && std::isdigit(next))
                    continue;
                if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0])))
                    continue; // initials
            }
        }
        out.emplace_back(text.substr(start, k - start));
        start = k;
        i = k == 0 ? 0 : k - 1;
    }
    if (start < text.size())
        out.emplace_back(text.substr(start));
    return out;
}

std::vector<ResponseChunk> segment_response(std::string_view text,
                                            const std::vector<std::vector<int>>& sentence_elements,
                                            const TactileFrame& frame)
{
    std::vector<ResponseChunk> chunks;
    for (auto& sentence : split_sentences(text))
    {
        ResponseChunk chunk;
        chunk.index = chunks.size();
        chunk.text = std::move(sentence);
        if (chunk.index < sentence_elements.size() && !sentence_elements[chunk.index].empty())
        {
            chunk.referenced_elements = sentence_elements[chunk.index];
            HighlightCommand h;
            h.cells = footprint_cells(frame, chunk.referenced_elements);
            h.element_ids = chunk.referenced_elements;
            h.frame_id = frame.frame_id;
            std::string label;
            for (int id : chunk.referenced_elements)
                if (const auto* e = frame.element(id))
                    label += (label.empty() ? "" : "; ") + e->label;
            if (!h.cells.empty())
                chunk.highlight = std::move(h);
            if (!label.empty())
                chunk.braille_label = std::move(label);
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::string PlaybackEvent::to_json() const
{
    nlohmann::ordered_json j;
    j["t"] = t;
    j["kind"] = kind;
    j["chunk"] = chunk;
    if (kind == "highlight")
    {
        auto arr = nlohmann::json::array();
        for (const auto& c : cells)
            arr.push_back({c.col, c.row});
        j["cells"] = std::move(arr);
    }
    else if (kind == "speech")
        j["text"] = text;
    return j.dump();
}

Playback::Playback(std::vector<ResponseChunk> chunks, Millis start) : chunks_(std::move(chunks))
{
    if (chunks_.empty())
        throw Error(Errc::invalid_argument, "playback needs at least one chunk");
    issue(0, start);
}

void Playback::issue(std::size_t index, Millis t)
{
    current_ = index;
    const auto& chunk = chunks_[index];
    const int i = static_cast<int>(index);
    if (chunk.highlight)
        log_.push_back({t, "highlight", i, chunk.highlight->cells, {}});
    log_.push_back({t, "speech", i, {}, chunk.text});
    speech_end_ = t + speech_duration(chunk.text);
}

void Playback::clear(Millis t)
{
    log_.push_back({t, "clear", static_cast<int>(current_), {}, {}});
    done_ = true;
}

void Playback::advance(Millis now)
{
    while (!done_ && now >= speech_end_)
    {
        if (current_ + 1 < chunks_.size())
            issue(current_ + 1, speech_end_);
        else
            clear(speech_end_);
    }
}

void Playback::control(ButtonAction action, Millis t)
{
    advance(t);
    if (done_)
        return;
    switch (action)
    {
    case ButtonAction::page_right:
        if (current_ + 1 < chunks_.size())
            issue(current_ + 1, t);
        break;
    case ButtonAction::page_left:
        if (current_ > 0)
            issue(current_ - 1, t);
        break;
    case ButtonAction::repeat:
        issue(current_, t);
        break;
    case ButtonAction::stop:
        clear(t);
        break;
    default:
        break;
    }
}

void Playback::finish()
{
    while (!done_)
        advance(speech_end_);
}

} // namespace feelgrid
