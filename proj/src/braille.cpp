#include <feelgrid/braille.hpp>

#include <array>
#include <cctype>

namespace feelgrid
{
namespace
{

constexpr BrailleCell dots(std::string_view numbers)
{
    BrailleCell mask = 0;
    for (char c : numbers)
        mask |= static_cast<BrailleCell>(1u << (c - '1'));
    return mask;
}

struct Entry
{
    char ch;
    BrailleCell first;
    BrailleCell second; // 0 when the symbol is a single cell
};

// Uncontracted (grade 1) table.
constexpr std::array<Entry, 26> letters = {{
    {'a', dots("1"), 0},     {'b', dots("12"), 0},    {'c', dots("14"), 0},
    {'d', dots("145"), 0},   {'e', dots("15"), 0},    {'f', dots("124"), 0},
    {'g', dots("1245"), 0},  {'h', dots("125"), 0},   {'i', dots("24"), 0},
    {'j', dots("245"), 0},   {'k', dots("13"), 0},    {'l', dots("123"), 0},
    {'m', dots("134"), 0},   {'n', dots("1345"), 0},  {'o', dots("135"), 0},
    {'p', dots("1234"), 0},  {'q', dots("12345"), 0}, {'r', dots("1235"), 0},
    {'s', dots("234"), 0},   {'t', dots("2345"), 0},  {'u', dots("136"), 0},
    {'v', dots("1236"), 0},  {'w', dots("2456"), 0},  {'x', dots("1346"), 0},
    {'y', dots("13456"), 0}, {'z', dots("1356"), 0},
}};

constexpr std::array<Entry, 14> symbols = {{
    {'.', dots("256"), 0},
    {',', dots("2"), 0},
    {';', dots("23"), 0},
    {':', dots("25"), 0},
    {'?', dots("236"), 0},
    {'!', dots("235"), 0},
    {'\'', dots("3"), 0},
    {'-', dots("36"), 0},
    {'%', dots("46"), dots("356")},
    {'(', dots("5"), dots("126")},
    {')', dots("5"), dots("345")},
    {'/', dots("456"), dots("34")},
    {'=', dots("5"), dots("2356")},
    {'+', dots("5"), dots("235")},
}};

constexpr BrailleCell number_sign = dots("3456");
constexpr BrailleCell letter_sign = dots("56");
constexpr BrailleCell minus_prefix = dots("5");
constexpr BrailleCell unknown_cell = dots("123456");

const Entry* find_symbol(char c)
{
    for (const auto& e : symbols)
        if (e.ch == c)
            return &e;
    return nullptr;
}

BrailleCell digit_cell(char d)
{
    return d == '0' ? letters[9].first : letters[static_cast<std::size_t>(d - '1')].first;
}

void push(BrailleLine& out, const Entry& e)
{
    out.push_back(e.first);
    if (e.second)
        out.push_back(e.second);
}

} // namespace

BrailleLine to_braille(std::string_view text)
{
    BrailleLine out;
    bool numeric = false;
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        const unsigned char uc = static_cast<unsigned char>(text[i]);
        // U+2212 MINUS SIGN
        if (uc == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x88 &&
            static_cast<unsigned char>(text[i + 2]) == 0x92)
        {
            out.push_back(minus_prefix);
            out.push_back(dots("36"));
            numeric = false;
            i += 2;
            continue;
        }
        if (uc >= 0x80)
        {
            // Skip continuation bytes of other multibyte characters.
            while (i + 1 < text.size() && (static_cast<unsigned char>(text[i + 1]) & 0xC0) == 0x80)
                ++i;
            out.push_back(unknown_cell);
            numeric = false;
            continue;
        }
        const char c = static_cast<char>(std::tolower(uc));
        if (std::isdigit(uc))
        {
            if (!numeric)
                out.push_back(number_sign);
            numeric = true;
            out.push_back(digit_cell(c));
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\n')
        {
            out.push_back(0);
            numeric = false;
            continue;
        }
        if (numeric && (c == '.' || c == ',') && i + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[i + 1])))
        {
            out.push_back(find_symbol(c)->first); // stays in numeric mode
            continue;
        }
        if (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
            (i == 0 || text[i - 1] == ' ' || text[i - 1] == '('))
        {
            out.push_back(minus_prefix);
            out.push_back(dots("36"));
            numeric = false;
            continue;
        }
        if (c >= 'a' && c <= 'z')
        {
            if (numeric && c <= 'j')
                out.push_back(letter_sign);
            numeric = false;
            push(out, letters[static_cast<std::size_t>(c - 'a')]);
            continue;
        }
        numeric = false;
        if (const auto* e = find_symbol(c))
            push(out, *e);
        else
            out.push_back(unknown_cell);
    }
    return out;
}

std::vector<BrailleLine> paginate_braille(std::string_view text, std::size_t width)
{
    std::vector<BrailleLine> pages;
    BrailleLine current;
    std::size_t start = 0;
    while (start <= text.size())
    {
        auto end = text.find(' ', start);
        if (end == std::string_view::npos)
            end = text.size();
        const auto word_text = text.substr(start, end - start);
        start = end + 1;
        if (word_text.empty())
        {
            if (end >= text.size())
                break;
            continue;
        }
        auto word = to_braille(word_text);
        const std::size_t needed = word.size() + (current.empty() ? 0 : 1);
        if (current.size() + needed <= width)
        {
            if (!current.empty())
                current.push_back(0);
            current.insert(current.end(), word.begin(), word.end());
            continue;
        }
        if (!current.empty())
        {
            pages.push_back(std::move(current));
            current.clear();
        }
        std::size_t pos = 0;
        while (word.size() - pos > width)
        {
            pages.emplace_back(word.begin() + static_cast<std::ptrdiff_t>(pos),
                               word.begin() + static_cast<std::ptrdiff_t>(pos + width));
            pos += width;
        }
        current.assign(word.begin() + static_cast<std::ptrdiff_t>(pos), word.end());
    }
    if (!current.empty())
        pages.push_back(std::move(current));
    return pages;
}

std::string to_unicode(const BrailleLine& line)
{
    std::string out;
    for (BrailleCell cell : line)
    {
        const unsigned code = 0x2800u + cell;
        out += static_cast<char>(0xE0 | (code >> 12));
        out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (code & 0x3F));
    }
    return out;
}

} // namespace feelgrid
