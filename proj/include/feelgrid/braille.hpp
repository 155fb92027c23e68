#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace feelgrid
{

/// One 6-dot cell; dot n is bit n-1.
using BrailleCell = std::uint8_t;
using BrailleLine = std::vector<BrailleCell>;

inline constexpr std::size_t braille_line_cells = 20;

/// Uncontracted English: letters (case folded, no capital sign), digits with
/// a number sign, a letter sign after digits when a-j follows, and the
/// punctuation in the shipped table. Unmapped characters become a full cell.
BrailleLine to_braille(std::string_view text);

/// Word-wrapped pages of at most `width` cells; words longer than a page are split.
std::vector<BrailleLine> paginate_braille(std::string_view text,
                                          std::size_t width = braille_line_cells);

/// Unicode braille pattern string (U+2800 block), for logs and golden files.
std::string to_unicode(const BrailleLine& line);

} // namespace feelgrid
