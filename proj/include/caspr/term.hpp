#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caspr {

// A first-order term: variable, constant, integer or compound f(t1, ..., tn).
// Integers are inert constants; there is no arithmetic.
class Term {
public:
    enum class Kind : std::uint8_t { variable, constant, integer, compound };

    static Term variable(std::string name);
    static Term constant(std::string name);
    static Term integer(std::int64_t value);
    static Term compound(std::string functor, std::vector<Term> args);

    Kind kind() const noexcept { return kind_; }
    bool is_variable() const noexcept { return kind_ == Kind::variable; }
    bool is_compound() const noexcept { return kind_ == Kind::compound; }

    // Variable name, constant name or functor. Empty for integers.
    const std::string& name() const noexcept { return name_; }
    std::int64_t value() const noexcept { return value_; }
    const std::vector<Term>& args() const noexcept;

    bool is_ground() const noexcept;
    // Functor nesting depth: 0 for atomic terms, 1 + max(child depth) otherwise.
    std::size_t depth() const noexcept;

    friend bool operator==(const Term& a, const Term& b);
    friend std::strong_ordering operator<=>(const Term& a, const Term& b);

private:
    Term() = default;

    Kind kind_ = Kind::constant;
    std::string name_;
    std::int64_t value_ = 0;
    // Compound arguments are shared and immutable, so copying a term is cheap.
    struct Node;
    std::shared_ptr<const Node> node_;
};

struct Atom {
    std::string predicate;
    std::vector<Term> args;

    std::size_t arity() const noexcept { return args.size(); }
    bool is_ground() const;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend std::strong_ordering operator<=>(const Atom& a, const Atom& b);
};

// An atom, optionally under classical negation (`-p(a)`).
struct Literal {
    Atom atom;
    bool negated = false;

    bool is_ground() const { return atom.is_ground(); }

    friend bool operator==(const Literal&, const Literal&) = default;
    friend std::strong_ordering operator<=>(const Literal& a, const Literal& b);
};

Literal complement(const Literal& l);

// A literal in a rule body, optionally under negation as failure (`not L`).
struct BodyLiteral {
    Literal literal;
    bool naf = false;

    friend bool operator==(const BodyLiteral&, const BodyLiteral&) = default;
};

// `head :- body.`  A fact has an empty body; a headless rule is an integrity
// constraint.
struct Rule {
    std::optional<Literal> head;
    std::vector<BodyLiteral> body;

    bool is_fact() const noexcept { return head && body.empty(); }
    bool is_constraint() const noexcept { return !head.has_value(); }
    bool is_ground() const;

    friend bool operator==(const Rule&, const Rule&) = default;
};

// Immutable ordered rule list. Each rule carries a provenance tag (source file,
// compiling layer, ...). Equality ignores provenance.
class Program {
public:
    Program() = default;
    explicit Program(std::vector<Rule> rules, std::string provenance = {});
    Program(std::vector<Rule> rules, std::vector<std::string> provenance);

    const std::vector<Rule>& rules() const noexcept { return rules_; }
    const std::string& provenance(std::size_t i) const { return provenance_.at(i); }
    std::size_t size() const noexcept { return rules_.size(); }
    bool empty() const noexcept { return rules_.empty(); }

    // New program: this program's rules followed by `more`.
    Program extended(const std::vector<Rule>& more, const std::string& provenance) const;
    Program extended(const Program& more) const;

    friend bool operator==(const Program& a, const Program& b) { return a.rules_ == b.rules_; }

private:
    std::vector<Rule> rules_;
    std::vector<std::string> provenance_;
};

// Variable -> term bindings. Bindings may be triangular while a derivation is
// in progress; `apply` always chases them to the end.
class Substitution {
public:
    using Map = std::map<std::string, Term>;

    Substitution() = default;
    explicit Substitution(Map bindings) : bindings_(std::move(bindings)) {}

    const Map& bindings() const noexcept { return bindings_; }
    bool empty() const noexcept { return bindings_.empty(); }
    std::size_t size() const noexcept { return bindings_.size(); }
    const Term* lookup(const std::string& var) const;
    void bind(const std::string& var, Term t) { bindings_.insert_or_assign(var, std::move(t)); }

    // Follows variable bindings at the top level only.
    const Term& walk(const Term& t) const;

    Term apply(const Term& t) const;
    Atom apply(const Atom& a) const;
    Literal apply(const Literal& l) const;
    BodyLiteral apply(const BodyLiteral& b) const;
    Rule apply(const Rule& r) const;

    // Fully resolved copy: no bound variable occurs in any bound term.
    Substitution normalized() const;
    // Keep only the listed variables (resolved).
    Substitution restricted(const std::vector<std::string>& vars) const;

    friend bool operator==(const Substitution&, const Substitution&) = default;

private:
    Map bindings_;
};

// Most general unifier with occurs check; absent on clash.
std::optional<Substitution> unify(const Term& a, const Term& b);
std::optional<Substitution> unify(const Atom& a, const Atom& b);
std::optional<Substitution> unify(const Literal& a, const Literal& b);

// Extends `s` in place (triangular form). On failure `s` is left in an
// unspecified but valid state; callers copy first when they need rollback.
bool unify_into(const Term& a, const Term& b, Substitution& s);
bool unify_into(const Atom& a, const Atom& b, Substitution& s);

// One-way matching: binds variables of `pattern` only, so that
// apply(s, pattern) == target.
bool match_into(const Term& pattern, const Term& target, Substitution& s);
bool match_into(const Atom& pattern, const Atom& target, Substitution& s);

// Variable names in order of first occurrence.
void collect_variables(const Term& t, std::vector<std::string>& out);
void collect_variables(const Atom& a, std::vector<std::string>& out);
void collect_variables(const Rule& r, std::vector<std::string>& out);

// Renames every variable V in r to V#suffix.
Rule rename_apart(const Rule& r, std::size_t suffix);

// Identifier classes of the surface syntax.
bool is_lower_identifier(std::string_view s);
bool is_variable_name(std::string_view s);

} // namespace caspr
