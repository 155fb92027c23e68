#include <feelgrid/error.hpp>
#include <feelgrid/expression.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace feelgrid
{

enum class Op
{
    add,
    sub,
    mul,
    div,
    eq,
    ne,
    lt,
    le,
    gt,
    ge,
    land,
    lor,
    lnot,
    neg,
};

struct Expression::Node
{
    enum class Kind
    {
        literal,
        column,
        unary,
        binary,
    };
    Kind kind = Kind::literal;
    Value literal;
    std::string column;
    Op op = Op::add;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    std::size_t offset = 0;
    std::size_t length = 0;
};

namespace
{
using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

enum class Tok
{
    number,
    string,
    ident,
    op,
    lparen,
    rparen,
    lbracket,
    rbracket,
    dot,
    end,
};

struct Token
{
    Tok kind;
    std::string text;
    std::size_t offset;
};

std::vector<Token> tokenize(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size())
    {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c)))
        {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1]))))
        {
            while (i < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.'))
                ++i;
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E'))
            {
                ++i;
                if (i < src.size() && (src[i] == '+' || src[i] == '-'))
                    ++i;
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
                    ++i;
            }
            out.push_back({Tok::number, std::string(src.substr(start, i - start)), start});
            continue;
        }
        if (c == '\'' || c == '"')
        {
            ++i;
            std::string text;
            while (i < src.size() && src[i] != c)
            {
                if (src[i] == '\\' && i + 1 < src.size())
                    ++i;
                text += src[i++];
            }
            if (i >= src.size())
                throw ExpressionError("unterminated string literal", start, src.size() - start);
            ++i;
            out.push_back({Tok::string, std::move(text), start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
        {
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
                ++i;
            out.push_back({Tok::ident, std::string(src.substr(start, i - start)), start});
            continue;
        }
        auto two = src.substr(i, 2);
        auto three = src.substr(i, 3);
        if (three == "===" || three == "!==")
        {
            out.push_back({Tok::op, std::string(three.substr(0, 2)), start});
            i += 3;
            continue;
        }
        if (two == "==" || two == "!=" || two == "<=" || two == ">=" || two == "&&" || two == "||")
        {
            out.push_back({Tok::op, std::string(two), start});
            i += 2;
            continue;
        }
        switch (c)
        {
        case '+':
        case '-':
        case '*':
        case '/':
        case '<':
        case '>':
        case '!': out.push_back({Tok::op, std::string(1, c), start}); break;
        case '(': out.push_back({Tok::lparen, "(", start}); break;
        case ')': out.push_back({Tok::rparen, ")", start}); break;
        case '[': out.push_back({Tok::lbracket, "[", start}); break;
        case ']': out.push_back({Tok::rbracket, "]", start}); break;
        case '.': out.push_back({Tok::dot, ".", start}); break;
        default: throw ExpressionError(fmt::format("unexpected character '{}'", c), start, 1);
        }
        ++i;
    }
    out.push_back({Tok::end, "", src.size()});
    return out;
}

class Parser
{
public:
    Parser(std::string_view src) : src_(src), tokens_(tokenize(src))
    {
    }

    NodePtr parse()
    {
        auto node = parse_or();
        if (peek().kind != Tok::end)
            fail("unexpected token '" + peek().text + "'", peek());
        return node;
    }

private:
    const Token& peek() const
    {
        return tokens_[pos_];
    }
    const Token& next()
    {
        return tokens_[pos_++];
    }
    bool accept_op(std::string_view text)
    {
        if (peek().kind == Tok::op && peek().text == text)
        {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept_word(std::string_view word)
    {
        if (peek().kind == Tok::ident && peek().text == word)
        {
            ++pos_;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg, const Token& at) const
    {
        throw ExpressionError(msg, at.offset, std::max<std::size_t>(at.text.size(), 1));
    }

    static NodePtr binary(Op op, NodePtr lhs, NodePtr rhs)
    {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::binary;
        n->op = op;
        n->offset = lhs->offset;
        n->length = rhs->offset + rhs->length - lhs->offset;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    NodePtr parse_or()
    {
        auto lhs = parse_and();
        while (accept_op("||") || accept_word("or"))
            lhs = binary(Op::lor, lhs, parse_and());
        return lhs;
    }

    NodePtr parse_and()
    {
        auto lhs = parse_not();
        while (accept_op("&&") || accept_word("and"))
            lhs = binary(Op::land, lhs, parse_not());
        return lhs;
    }

    NodePtr parse_not()
    {
        const auto start = peek().offset;
        if (accept_op("!") || accept_word("not"))
        {
            auto operand = parse_not();
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::unary;
            n->op = Op::lnot;
            n->offset = start;
            n->length = operand->offset + operand->length - start;
            n->lhs = std::move(operand);
            return n;
        }
        return parse_comparison();
    }

    NodePtr parse_comparison()
    {
        auto lhs = parse_additive();
        static const std::pair<std::string_view, Op> ops[] = {
            {"==", Op::eq}, {"!=", Op::ne}, {"<=", Op::le},
            {">=", Op::ge}, {"<", Op::lt},  {">", Op::gt}};
        for (auto [text, op] : ops)
            if (accept_op(text))
                return binary(op, lhs, parse_additive());
        return lhs;
    }

    NodePtr parse_additive()
    {
        auto lhs = parse_multiplicative();
        for (;;)
        {
            if (accept_op("+"))
                lhs = binary(Op::add, lhs, parse_multiplicative());
            else if (accept_op("-"))
                lhs = binary(Op::sub, lhs, parse_multiplicative());
            else
                return lhs;
        }
    }

    NodePtr parse_multiplicative()
    {
        auto lhs = parse_unary();
        for (;;)
        {
            if (accept_op("*"))
                lhs = binary(Op::mul, lhs, parse_unary());
            else if (accept_op("/"))
                lhs = binary(Op::div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary()
    {
        const auto start = peek().offset;
        if (accept_op("-"))
        {
            auto operand = parse_unary();
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::unary;
            n->op = Op::neg;
            n->offset = start;
            n->length = operand->offset + operand->length - start;
            n->lhs = std::move(operand);
            return n;
        }
        return parse_primary();
    }

    NodePtr literal(Value v, const Token& tok, std::size_t end)
    {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::literal;
        n->literal = std::move(v);
        n->offset = tok.offset;
        n->length = end - tok.offset;
        return n;
    }

    std::size_t token_end(const Token& tok) const
    {
        if (tok.kind == Tok::string)
        {
            // Quoted source length may differ from decoded text; scan the source.
            const char quote = src_[tok.offset];
            std::size_t i = tok.offset + 1;
            while (i < src_.size() && src_[i] != quote)
                i += (src_[i] == '\\') ? 2 : 1;
            return std::min(i + 1, src_.size());
        }
        return tok.offset + tok.text.size();
    }

    NodePtr parse_primary()
    {
        const Token& tok = next();
        switch (tok.kind)
        {
        case Tok::number:
        {
            double v = 0;
            auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
            if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size())
                fail("malformed number '" + tok.text + "'", tok);
            return literal(v, tok, token_end(tok));
        }
        case Tok::string: return literal(tok.text, tok, token_end(tok));
        case Tok::lparen:
        {
            auto inner = parse_or();
            if (peek().kind != Tok::rparen)
                fail("expected ')'", peek());
            next();
            return inner;
        }
        case Tok::ident:
        {
            if (tok.text == "true" || tok.text == "false")
                return literal(tok.text == "true", tok, token_end(tok));
            if (tok.text == "null")
                return literal(Null{}, tok, token_end(tok));
            if (tok.text == "date" && peek().kind == Tok::lparen)
            {
                next();
                const Token& arg = next();
                if (arg.kind != Tok::string)
                    fail("date() expects a string literal", arg);
                auto t = Temporal::try_parse(arg.text);
                if (!t)
                    fail("invalid date literal '" + arg.text + "'", arg);
                if (peek().kind != Tok::rparen)
                    fail("expected ')'", peek());
                const Token& close = next();
                return literal(*t, tok, close.offset + 1);
            }
            if (tok.text == "datum")
            {
                if (peek().kind == Tok::dot)
                {
                    next();
                    const Token& name = next();
                    if (name.kind != Tok::ident)
                        fail("expected field name after 'datum.'", name);
                    return column(name.text, tok, token_end(name));
                }
                if (peek().kind == Tok::lbracket)
                {
                    next();
                    const Token& name = next();
                    if (name.kind != Tok::string)
                        fail("expected quoted field name", name);
                    if (peek().kind != Tok::rbracket)
                        fail("expected ']'", peek());
                    const Token& close = next();
                    return column(name.text, tok, close.offset + 1);
                }
            }
            return column(tok.text, tok, token_end(tok));
        }
        default: fail(tok.kind == Tok::end ? "unexpected end of expression"
                                           : "unexpected token '" + tok.text + "'",
                      tok);
        }
    }

    NodePtr column(std::string name, const Token& tok, std::size_t end)
    {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::column;
        n->column = std::move(name);
        n->offset = tok.offset;
        n->length = end - tok.offset;
        return n;
    }

    std::string_view src_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

[[noreturn]] void type_error(const Node& n, std::string_view what)
{
    throw ExpressionError(std::string(what), n.offset, n.length);
}

std::string_view type_name(const Value& v)
{
    switch (v.index())
    {
    case 0: return "null";
    case 1: return "number";
    case 2: return "string";
    case 3: return "boolean";
    default: return "date";
    }
}

std::optional<bool> truth(const Node& n, const Value& v)
{
    if (is_null(v))
        return std::nullopt;
    if (auto b = std::get_if<bool>(&v))
        return *b;
    type_error(n, fmt::format("expected boolean, got {}", type_name(v)));
}

// Returns <0, 0, >0; nullopt when either side is null.
std::optional<int> compare(const Node& n, const Value& a, const Value& b)
{
    if (is_null(a) || is_null(b))
        return std::nullopt;
    auto three = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
    if (auto x = std::get_if<double>(&a))
        if (auto y = std::get_if<double>(&b))
            return three(*x, *y);
    if (auto x = std::get_if<std::string>(&a))
        if (auto y = std::get_if<std::string>(&b))
            return three(*x, *y);
    if (auto x = std::get_if<bool>(&a))
        if (auto y = std::get_if<bool>(&b))
            return three(*x, *y);
    auto as_temporal = [&](const Value& v) -> std::optional<Temporal> {
        if (auto t = std::get_if<Temporal>(&v))
            return *t;
        if (auto s = std::get_if<std::string>(&v))
        {
            auto t = Temporal::try_parse(*s);
            if (!t)
                type_error(n, fmt::format("'{}' is not a valid date", *s));
            return t;
        }
        return std::nullopt;
    };
    if (std::holds_alternative<Temporal>(a) || std::holds_alternative<Temporal>(b))
    {
        auto x = as_temporal(a);
        auto y = as_temporal(b);
        if (x && y)
            return three(x->epoch_day(), y->epoch_day());
    }
    type_error(n, fmt::format("cannot compare {} with {}", type_name(a), type_name(b)));
}

Value eval(const Node& n, const RowBinding& row)
{
    switch (n.kind)
    {
    case Node::Kind::literal: return n.literal;
    case Node::Kind::column:
    {
        auto v = row(n.column);
        if (!v)
            throw Error(Errc::unknown_column, fmt::format("unknown column '{}'", n.column));
        return *v;
    }
    case Node::Kind::unary:
    {
        Value v = eval(*n.lhs, row);
        if (is_null(v))
            return Null{};
        if (n.op == Op::neg)
        {
            auto d = std::get_if<double>(&v);
            if (!d)
                type_error(n, fmt::format("cannot negate {}", type_name(v)));
            return -*d;
        }
        return !*truth(*n.lhs, v);
    }
    case Node::Kind::binary: break;
    }

    if (n.op == Op::land || n.op == Op::lor)
    {
        auto a = truth(*n.lhs, eval(*n.lhs, row));
        if (n.op == Op::land && a == false)
            return false;
        if (n.op == Op::lor && a == true)
            return true;
        auto b = truth(*n.rhs, eval(*n.rhs, row));
        if (n.op == Op::land)
        {
            if (b == false)
                return false;
            if (a && b)
                return true;
            return Null{};
        }
        if (b == true)
            return true;
        if (a && b)
            return false;
        return Null{};
    }

    const Value a = eval(*n.lhs, row);
    const Value b = eval(*n.rhs, row);

    switch (n.op)
    {
    case Op::eq:
    case Op::ne:
    {
        if (is_null(a) || is_null(b))
            return (is_null(a) && is_null(b)) == (n.op == Op::eq);
        const bool equal = *compare(n, a, b) == 0;
        return n.op == Op::eq ? equal : !equal;
    }
    case Op::lt:
    case Op::le:
    case Op::gt:
    case Op::ge:
    {
        auto c = compare(n, a, b);
        if (!c)
            return false;
        switch (n.op)
        {
        case Op::lt: return *c < 0;
        case Op::le: return *c <= 0;
        case Op::gt: return *c > 0;
        default: return *c >= 0;
        }
    }
    default: break;
    }

    if (is_null(a) || is_null(b))
        return Null{};
    if (n.op == Op::add)
    {
        auto sa = std::get_if<std::string>(&a);
        auto sb = std::get_if<std::string>(&b);
        if (sa && sb)
            return *sa + *sb;
    }
    auto x = std::get_if<double>(&a);
    auto y = std::get_if<double>(&b);
    if (!x || !y)
        type_error(n, fmt::format("arithmetic on {} and {}", type_name(a), type_name(b)));
    switch (n.op)
    {
    case Op::add: return *x + *y;
    case Op::sub: return *x - *y;
    case Op::mul: return *x * *y;
    case Op::div:
        if (*y == 0.0)
            throw ExpressionError("division by zero", n.offset, n.length);
        return *x / *y;
    default: break;
    }
    type_error(n, "unsupported operator");
}

void collect_columns(const Node& n, std::vector<std::string>& out)
{
    if (n.kind == Node::Kind::column)
    {
        if (std::find(out.begin(), out.end(), n.column) == out.end())
            out.push_back(n.column);
        return;
    }
    if (n.lhs)
        collect_columns(*n.lhs, out);
    if (n.rhs)
        collect_columns(*n.rhs, out);
}

ColumnType static_type(const Node& n, std::span<const Column> schema)
{
    switch (n.kind)
    {
    case Node::Kind::literal: return is_null(n.literal) ? ColumnType::number : type_of(n.literal);
    case Node::Kind::column:
        for (const auto& c : schema)
            if (c.name == n.column)
                return c.type;
        throw Error(Errc::unknown_column, fmt::format("unknown column '{}'", n.column));
    case Node::Kind::unary:
    {
        const auto t = static_type(*n.lhs, schema);
        if (n.op == Op::neg && t != ColumnType::number)
            type_error(n, "cannot negate a non-number");
        return n.op == Op::neg ? ColumnType::number : ColumnType::boolean;
    }
    case Node::Kind::binary: break;
    }
    const auto a = static_type(*n.lhs, schema);
    const auto b = static_type(*n.rhs, schema);
    switch (n.op)
    {
    case Op::add:
        if (a == ColumnType::string && b == ColumnType::string)
            return ColumnType::string;
        [[fallthrough]];
    case Op::sub:
    case Op::mul:
    case Op::div:
        if (a != ColumnType::number || b != ColumnType::number)
            type_error(n, "arithmetic requires numbers");
        return ColumnType::number;
    default: return ColumnType::boolean;
    }
}

} // namespace

ColumnType Expression::result_type(std::span<const Column> schema) const
{
    return static_type(*root_, schema);
}

RowBinding bind_row(const DataTable& table, std::size_t row)
{
    return [&table, row](std::string_view name) -> std::optional<Value> {
        if (auto c = table.column_index(name))
            return table.at(row, *c);
        return std::nullopt;
    };
}

Expression Expression::parse(std::string_view source)
{
    Expression e;
    e.source_ = std::string(source);
    e.root_ = Parser(e.source_).parse();
    return e;
}

Value Expression::evaluate(const RowBinding& row) const
{
    return eval(*root_, row);
}

std::vector<std::string> Expression::columns() const
{
    std::vector<std::string> out;
    collect_columns(*root_, out);
    return out;
}

Value eval_expression(std::string_view source, const RowBinding& row)
{
    return Expression::parse(source).evaluate(row);
}

} // namespace feelgrid
