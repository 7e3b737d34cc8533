#include "caspr/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace caspr {

namespace {

enum class Tok { lower, var, integer, lparen, rparen, comma, period, if_, query, minus, kw_not, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

const char* describe(Tok k)
{
    switch (k) {
    case Tok::lower: return "identifier";
    case Tok::var: return "variable";
    case Tok::integer: return "integer";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::period: return "'.'";
    case Tok::if_: return "':-'";
    case Tok::query: return "'?-'";
    case Tok::minus: return "'-'";
    case Tok::kw_not: return "'not'";
    case Tok::end: return "end of input";
    }
    return "token";
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run(std::vector<Diagnostic>& diags)
    {
        std::vector<Token> out;
        while (true) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= text_.size()) {
                t.kind = Tok::end;
                out.push_back(t);
                return out;
            }
            const char c = text_[pos_];
            const auto uc = static_cast<unsigned char>(c);
            if (std::isalpha(uc) || c == '_') {
                std::size_t start = pos_;
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                    advance();
                t.text = std::string(text_.substr(start, pos_ - start));
                if (t.text == "not")
                    t.kind = Tok::kw_not;
                else if (std::islower(uc))
                    t.kind = Tok::lower;
                else
                    t.kind = Tok::var;
                out.push_back(std::move(t));
                continue;
            }
            if (std::isdigit(uc)) {
                std::size_t start = pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    advance();
                t.kind = Tok::integer;
                t.text = std::string(text_.substr(start, pos_ - start));
                out.push_back(std::move(t));
                continue;
            }
            auto two = text_.substr(pos_, 2);
            if (two == ":-" || two == "?-") {
                t.kind = two == ":-" ? Tok::if_ : Tok::query;
                t.text = std::string(two);
                advance();
                advance();
                out.push_back(std::move(t));
                continue;
            }
            t.text = std::string(1, c);
            switch (c) {
            case '(': t.kind = Tok::lparen; break;
            case ')': t.kind = Tok::rparen; break;
            case ',': t.kind = Tok::comma; break;
            case '.': t.kind = Tok::period; break;
            case '-': t.kind = Tok::minus; break;
            default:
                diags.push_back({Diagnostic::Severity::error, line_, col_,
                                 "unexpected character '" + t.text + "'", t.text});
                advance();
                continue;
            }
            advance();
            out.push_back(std::move(t));
        }
    }

private:
    void advance()
    {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space()
    {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '%') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

struct SyntaxError {
    Diagnostic diag;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
        : toks_(std::move(tokens)), diags_(diags)
    {
    }

    std::vector<Rule> program()
    {
        std::vector<Rule> rules;
        while (peek().kind != Tok::end) {
            try {
                rules.push_back(rule());
            } catch (const SyntaxError& e) {
                diags_.push_back(e.diag);
                recover();
            }
        }
        return rules;
    }

    std::optional<Query> query()
    {
        try {
            expect(Tok::query, "expected '?-' at start of query");
            if (peek().kind == Tok::period)
                fail(peek(), "empty query");
            auto body = conjunction();
            expect_period("query");
            if (peek().kind != Tok::end)
                fail(peek(), "unexpected " + std::string(describe(peek().kind)) + " after query");
            Query q;
            q.body = std::move(body);
            for (const auto& b : q.body) {
                std::vector<std::string> vars;
                collect_variables(b.literal.atom, vars);
                for (auto& v : vars) {
                    if (anonymous_.count(v) == 0 &&
                        std::find(q.free_variables.begin(), q.free_variables.end(), v) ==
                            q.free_variables.end())
                        q.free_variables.push_back(v);
                }
            }
            return q;
        } catch (const SyntaxError& e) {
            diags_.push_back(e.diag);
            return std::nullopt;
        }
    }

    std::optional<Literal> lone_literal()
    {
        try {
            if (peek().kind == Tok::kw_not)
                fail(peek(), "'not' is not allowed here");
            auto l = literal();
            if (peek().kind != Tok::end)
                fail(peek(), "unexpected " + std::string(describe(peek().kind)) + " after literal");
            return l;
        } catch (const SyntaxError& e) {
            diags_.push_back(e.diag);
            return std::nullopt;
        }
    }

    std::optional<Term> lone_term()
    {
        try {
            auto t = term();
            if (peek().kind != Tok::end)
                fail(peek(), "unexpected " + std::string(describe(peek().kind)) + " after term");
            return t;
        } catch (const SyntaxError& e) {
            diags_.push_back(e.diag);
            return std::nullopt;
        }
    }

private:
    const Token& peek() const { return toks_[i_]; }
    const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

    [[noreturn]] void fail(const Token& t, std::string msg)
    {
        throw SyntaxError{{Diagnostic::Severity::error, t.line, t.column, std::move(msg), t.text}};
    }

    void expect(Tok k, const std::string& msg)
    {
        if (peek().kind != k)
            fail(peek(), msg);
        next();
    }

    void expect_period(const char* what)
    {
        if (peek().kind == Tok::end)
            fail(peek(), std::string("unterminated ") + what + " starting at line " +
                             std::to_string(start_line_) + ": missing '.'");
        if (peek().kind != Tok::period)
            fail(peek(), std::string("expected ',' or '.' but found ") + describe(peek().kind));
        next();
    }

    void recover()
    {
        while (peek().kind != Tok::end && peek().kind != Tok::period)
            next();
        if (peek().kind == Tok::period)
            next();
    }

    Rule rule()
    {
        start_line_ = peek().line;
        Rule r;
        if (peek().kind == Tok::if_) {
            next();
            r.body = conjunction();
            expect_period("rule");
            return r;
        }
        if (peek().kind == Tok::kw_not)
            fail(peek(), "'not' is not allowed in a rule head");
        r.head = literal();
        if (peek().kind == Tok::if_) {
            next();
            r.body = conjunction();
        }
        expect_period("rule");
        return r;
    }

    std::vector<BodyLiteral> conjunction()
    {
        std::vector<BodyLiteral> body;
        body.push_back(body_literal());
        while (peek().kind == Tok::comma) {
            next();
            body.push_back(body_literal());
        }
        return body;
    }

    BodyLiteral body_literal()
    {
        BodyLiteral b;
        if (peek().kind == Tok::kw_not) {
            next();
            b.naf = true;
            if (peek().kind == Tok::kw_not)
                fail(peek(), "nested 'not' is not allowed");
        }
        b.literal = literal();
        return b;
    }

    Literal literal()
    {
        Literal l;
        if (peek().kind == Tok::minus) {
            next();
            l.negated = true;
        }
        if (peek().kind == Tok::kw_not)
            fail(peek(), "'not' must precede '-'");
        l.atom = atom();
        return l;
    }

    Atom atom()
    {
        const Token& t = peek();
        if (t.kind == Tok::var)
            fail(t, "predicate name must start with a lowercase letter: " + t.text);
        if (t.kind != Tok::lower)
            fail(t, std::string("expected an atom but found ") + describe(t.kind));
        next();
        Atom a{t.text, {}};
        if (peek().kind == Tok::lparen)
            a.args = arguments();
        return a;
    }

    std::vector<Term> arguments()
    {
        expect(Tok::lparen, "expected '('");
        std::vector<Term> args;
        args.push_back(term());
        while (peek().kind == Tok::comma) {
            next();
            args.push_back(term());
        }
        if (peek().kind != Tok::rparen)
            fail(peek(), std::string("expected ',' or ')' but found ") + describe(peek().kind));
        next();
        return args;
    }

    Term term()
    {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::var: {
            next();
            if (peek().kind == Tok::lparen)
                fail(t, "functor must start with a lowercase letter: " + t.text);
            if (t.text == "_") {
                std::string fresh = "_G" + std::to_string(++anon_counter_);
                anonymous_.insert(fresh);
                return Term::variable(fresh);
            }
            return Term::variable(t.text);
        }
        case Tok::integer: {
            next();
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            if (ec != std::errc())
                fail(t, "integer out of range: " + t.text);
            return Term::integer(v);
        }
        case Tok::lower: {
            next();
            if (peek().kind == Tok::lparen)
                return Term::compound(t.text, arguments());
            return Term::constant(t.text);
        }
        default:
            fail(t, std::string("expected a term but found ") + describe(t.kind));
        }
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    std::vector<Diagnostic>& diags_;
    std::size_t start_line_ = 1;
    std::size_t anon_counter_ = 0;
    std::set<std::string> anonymous_;
};

bool has_error(const std::vector<Diagnostic>& diags)
{
    for (const auto& d : diags) {
        if (d.severity == Diagnostic::Severity::error)
            return true;
    }
    return false;
}

template <typename T, typename F>
ParseResult<T> run_parser(std::string_view text, F&& f)
{
    ParseResult<T> result;
    auto tokens = Lexer(text).run(result.diagnostics);
    Parser parser(std::move(tokens), result.diagnostics);
    auto value = f(parser);
    if (!has_error(result.diagnostics))
        result.value = std::move(value);
    return result;
}

template <typename T>
T value_or_throw(ParseResult<T> r)
{
    if (!r.ok())
        throw ParseError(std::move(r.diagnostics));
    return std::move(*r.value);
}

} // namespace

Query make_query(std::vector<BodyLiteral> body)
{
    Query q;
    q.body = std::move(body);
    for (const auto& b : q.body)
        collect_variables(b.literal.atom, q.free_variables);
    return q;
}

std::string to_string(const Diagnostic& d)
{
    std::ostringstream os;
    os << d.line << ':' << d.column << ": "
       << (d.severity == Diagnostic::Severity::error ? "error" : "warning") << ": " << d.message;
    return os.str();
}

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(diagnostics.empty() ? std::string("parse error") : to_string(diagnostics.front())),
      diagnostics_(std::move(diagnostics))
{
}

ParseResult<Program> parse_program(std::string_view text, const std::string& provenance)
{
    return run_parser<Program>(text, [&](Parser& p) { return Program(p.program(), provenance); });
}

ParseResult<Query> parse_query(std::string_view text)
{
    ParseResult<Query> result;
    auto tokens = Lexer(text).run(result.diagnostics);
    Parser parser(std::move(tokens), result.diagnostics);
    auto q = parser.query();
    if (q && !has_error(result.diagnostics))
        result.value = std::move(q);
    return result;
}

ParseResult<Literal> parse_literal(std::string_view text)
{
    ParseResult<Literal> result;
    auto tokens = Lexer(text).run(result.diagnostics);
    Parser parser(std::move(tokens), result.diagnostics);
    auto l = parser.lone_literal();
    if (l && !has_error(result.diagnostics))
        result.value = std::move(l);
    return result;
}

ParseResult<Term> parse_term(std::string_view text)
{
    ParseResult<Term> result;
    auto tokens = Lexer(text).run(result.diagnostics);
    Parser parser(std::move(tokens), result.diagnostics);
    auto t = parser.lone_term();
    if (t && !has_error(result.diagnostics))
        result.value = std::move(t);
    return result;
}

Program parse_program_or_throw(std::string_view text, const std::string& provenance)
{
    return value_or_throw(parse_program(text, provenance));
}

Query parse_query_or_throw(std::string_view text)
{
    return value_or_throw(parse_query(text));
}

Literal parse_literal_or_throw(std::string_view text)
{
    return value_or_throw(parse_literal(text));
}

Rule parse_rule_or_throw(std::string_view text)
{
    auto p = parse_program_or_throw(text);
    if (p.size() != 1)
        throw std::invalid_argument("expected exactly one rule in: " + std::string(text));
    return p.rules().front();
}

// --- printing ---------------------------------------------------------------

namespace {

void print(std::string& os, const Term& t)
{
    switch (t.kind()) {
    case Term::Kind::integer:
        os += std::to_string(t.value());
        return;
    case Term::Kind::variable:
    case Term::Kind::constant:
        os += t.name();
        return;
    case Term::Kind::compound:
        os += t.name();
        os += '(';
        for (std::size_t i = 0; i < t.args().size(); ++i) {
            if (i)
                os += ", ";
            print(os, t.args()[i]);
        }
        os += ')';
        return;
    }
}

void print(std::string& os, const Atom& a)
{
    os += a.predicate;
    if (a.args.empty())
        return;
    os += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i)
            os += ", ";
        print(os, a.args[i]);
    }
    os += ')';
}

void print(std::string& os, const Literal& l)
{
    if (l.negated)
        os += '-';
    print(os, l.atom);
}

void print(std::string& os, const BodyLiteral& b)
{
    if (b.naf)
        os += "not ";
    print(os, b.literal);
}

void print_body(std::string& os, const std::vector<BodyLiteral>& body)
{
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (i)
            os += ", ";
        print(os, body[i]);
    }
}

void print(std::string& os, const Rule& r)
{
    if (r.head) {
        print(os, *r.head);
        if (!r.body.empty())
            os += " :- ";
    } else {
        os += ":- ";
    }
    print_body(os, r.body);
    os += '.';
}

template <typename T>
std::string render(const T& x)
{
    std::string os;
    print(os, x);
    return os;
}

} // namespace

std::string to_string(const Term& t) { return render(t); }
std::string to_string(const Atom& a) { return render(a); }
std::string to_string(const Literal& l) { return render(l); }
std::string to_string(const BodyLiteral& b) { return render(b); }
std::string to_string(const Rule& r) { return render(r); }

std::string to_string(const Query& q)
{
    std::string os;
    os += "?- ";
    print_body(os, q.body);
    os += '.';
    return os;
}

std::string to_string(const Program& p)
{
    std::string os;
    for (const auto& r : p.rules()) {
        print(os, r);
        os += '\n';
    }
    return os;
}

std::string to_string(const Substitution& s)
{
    std::string os;
    os += '{';
    bool first = true;
    for (const auto& [var, term] : s.bindings()) {
        if (!first)
            os += ", ";
        first = false;
        os += var;
        os += " = ";
        print(os, s.apply(term));
    }
    os += '}';
    return os;
}

std::string to_string_with_provenance(const Program& p)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p.provenance(i).empty())
            os << "% " << p.provenance(i) << '\n';
        os << to_string(p.rules()[i]);
        os << '\n';
    }
    return os.str();
}

Program load_program_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open program file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_program_or_throw(ss.str(), path);
}

} // namespace caspr
