#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "caspr/term.hpp"

namespace caspr {

// `?- b1, ..., bn.`  The free variables are the answer variables, in order of
// first textual occurrence (anonymous variables excluded).
struct Query {
    std::vector<BodyLiteral> body;
    std::vector<std::string> free_variables;

    bool is_ground() const { return free_variables.empty(); }

    friend bool operator==(const Query&, const Query&) = default;
};

Query make_query(std::vector<BodyLiteral> body);

struct Diagnostic {
    enum class Severity { error, warning };

    Severity severity = Severity::error;
    std::size_t line = 0;   // 1-based
    std::size_t column = 0; // 1-based
    std::string message;
    std::string token;
};

std::string to_string(const Diagnostic& d);

template <typename T>
struct ParseResult {
    std::optional<T> value;
    std::vector<Diagnostic> diagnostics;

    bool ok() const noexcept { return value.has_value(); }
    explicit operator bool() const noexcept { return ok(); }
};

// Raised by the `*_or_throw` conveniences; carries every diagnostic.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

// Grammar:
//   program := rule*
//   rule    := head ":-" body "." | head "." | ":-" body "."
//   body    := blit ("," blit)*
//   blit    := ["not"] ["-"] atom
//   atom    := pred ["(" term ("," term)* ")"]
//   term    := Var | const | int | functor "(" term ("," term)* ")"
// `%` starts a line comment. `_` is an anonymous variable, fresh per occurrence.
ParseResult<Program> parse_program(std::string_view text, const std::string& provenance = {});
ParseResult<Query> parse_query(std::string_view text);
// A single `[-]atom` with no trailing period.
ParseResult<Literal> parse_literal(std::string_view text);
// A single term with no trailing period.
ParseResult<Term> parse_term(std::string_view text);

Program parse_program_or_throw(std::string_view text, const std::string& provenance = {});
Query parse_query_or_throw(std::string_view text);
Literal parse_literal_or_throw(std::string_view text);
Rule parse_rule_or_throw(std::string_view text);

// Canonical printing. parse(print(x)) == x.
std::string to_string(const Term& t);
std::string to_string(const Atom& a);
std::string to_string(const Literal& l);
std::string to_string(const BodyLiteral& b);
std::string to_string(const Rule& r);
std::string to_string(const Query& q);
std::string to_string(const Program& p);
std::string to_string(const Substitution& s);

// Program text with each rule preceded by a `% provenance` comment line.
std::string to_string_with_provenance(const Program& p);

Program load_program_file(const std::string& path);

} // namespace caspr
