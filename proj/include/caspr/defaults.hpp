#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "caspr/parser.hpp"
#include "caspr/term.hpp"

namespace caspr {

// "Normally members of class_pred have property." Every template is over the
// single variable X.
struct DefaultSpec {
    std::string name;
    std::string class_pred;
    Literal property;
    std::vector<Literal> weak_exceptions;
    std::vector<Literal> strong_exceptions;
    // Extra body literal placed after the class literal in the main rule.
    std::optional<Literal> guard;
};

// The preferred default's applicability disables the other one.
struct PreferenceSpec {
    std::string preferred;
    std::string over;
    std::optional<Literal> condition;
};

// An exception declared separately from its default and attached by name.
struct ExceptionDecl {
    std::string default_name;
    Literal condition;
    bool strong = false;
};

struct DefaultTheory {
    std::vector<DefaultSpec> defaults;
    std::vector<ExceptionDecl> exceptions;
    std::vector<PreferenceSpec> preferences;

    bool empty() const noexcept { return defaults.empty() && exceptions.empty() && preferences.empty(); }
};

class DefaultsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Main rule, then one rule per weak exception, then one per strong exception:
//   p(X) :- c(X), [guard,] not ab(d(X)), not -p(X).
//   ab(d(X)) :- c(X), not -e(X).
//   -p(X) :- c(X), e(X).
std::vector<Rule> compile_default(const DefaultSpec& d);

// ab(over(X)) :- c_preferred(X)[, condition].
std::vector<Rule> compile_preference(const PreferenceSpec& pref, const std::vector<DefaultSpec>& kb);

// Attaches exception declarations, checks names, and compiles everything into
// a program whose rules carry "default-layer: ..." provenance.
Program compile_theory(const DefaultTheory& t);

DefaultTheory merge(DefaultTheory a, const DefaultTheory& b);

struct Augmented {
    Program program;
    std::vector<std::string> warnings;
};

// p's rules followed by the compiled theory. Warns when p states as a fact a
// property that some strong exception can contradict.
Augmented augment(const Program& p, const DefaultTheory& t);

// `.defaults` files, one statement per line, `%` comments:
//   default NAME: class(X)[, guard] ~> [-]prop(...X...).
//   weak NAME: cond(X).
//   strong NAME: cond(X).
//   prefer NAME over NAME [if cond(X)].
ParseResult<DefaultTheory> parse_defaults(std::string_view text);
DefaultTheory load_defaults_file(const std::string& path);

} // namespace caspr
