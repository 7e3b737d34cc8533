#include "caspr/term.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace caspr {

Term Term::variable(std::string name)
{
    if (!is_variable_name(name))
        throw std::invalid_argument("variable name must start with an uppercase letter or '_': " + name);
    Term t;
    t.kind_ = Kind::variable;
    t.name_ = std::move(name);
    return t;
}

Term Term::constant(std::string name)
{
    if (!is_lower_identifier(name))
        throw std::invalid_argument("constant must start with a lowercase letter: " + name);
    Term t;
    t.kind_ = Kind::constant;
    t.name_ = std::move(name);
    return t;
}

Term Term::integer(std::int64_t value)
{
    Term t;
    t.kind_ = Kind::integer;
    t.value_ = value;
    return t;
}

struct Term::Node {
    std::vector<Term> args;
    bool ground = true;
    std::size_t depth = 1;
};

Term Term::compound(std::string functor, std::vector<Term> args)
{
    if (!is_lower_identifier(functor))
        throw std::invalid_argument("functor must start with a lowercase letter: " + functor);
    if (args.empty())
        throw std::invalid_argument("compound term needs at least one argument: " + functor);
    Term t;
    t.kind_ = Kind::compound;
    t.name_ = std::move(functor);
    auto node = std::make_shared<Node>();
    for (const auto& a : args) {
        node->ground = node->ground && a.is_ground();
        node->depth = std::max(node->depth, a.depth() + 1);
    }
    node->args = std::move(args);
    t.node_ = std::move(node);
    return t;
}

const std::vector<Term>& Term::args() const noexcept
{
    static const std::vector<Term> none;
    return node_ ? node_->args : none;
}

bool Term::is_ground() const noexcept
{
    if (kind_ == Kind::variable)
        return false;
    return !node_ || node_->ground;
}

std::size_t Term::depth() const noexcept
{
    return node_ ? node_->depth : 0;
}

bool operator==(const Term& a, const Term& b)
{
    if (a.kind_ != b.kind_ || a.value_ != b.value_ || a.name_ != b.name_)
        return false;
    return a.node_ == b.node_ || a.args() == b.args();
}

std::strong_ordering operator<=>(const Term& a, const Term& b)
{
    if (auto c = a.kind_ <=> b.kind_; c != 0)
        return c;
    if (auto c = a.value_ <=> b.value_; c != 0)
        return c;
    if (auto c = a.name_.compare(b.name_) <=> 0; c != 0)
        return c;
    if (a.node_ == b.node_)
        return std::strong_ordering::equal;
    const auto& x = a.args();
    const auto& y = b.args();
    return std::lexicographical_compare_three_way(x.begin(), x.end(), y.begin(), y.end());
}

bool Atom::is_ground() const
{
    return std::all_of(args.begin(), args.end(), [](const Term& a) { return a.is_ground(); });
}

std::strong_ordering operator<=>(const Atom& a, const Atom& b)
{
    if (auto c = a.predicate.compare(b.predicate) <=> 0; c != 0)
        return c;
    return std::lexicographical_compare_three_way(a.args.begin(), a.args.end(), b.args.begin(),
                                                  b.args.end());
}

std::strong_ordering operator<=>(const Literal& a, const Literal& b)
{
    if (auto c = a.atom <=> b.atom; c != 0)
        return c;
    return a.negated <=> b.negated;
}

Literal complement(const Literal& l)
{
    return Literal{l.atom, !l.negated};
}

bool Rule::is_ground() const
{
    if (head && !head->is_ground())
        return false;
    return std::all_of(body.begin(), body.end(), [](const BodyLiteral& b) { return b.literal.is_ground(); });
}

Program::Program(std::vector<Rule> rules, std::string provenance)
    : rules_(std::move(rules)), provenance_(rules_.size(), provenance)
{
}

Program::Program(std::vector<Rule> rules, std::vector<std::string> provenance)
    : rules_(std::move(rules)), provenance_(std::move(provenance))
{
    provenance_.resize(rules_.size());
}

Program Program::extended(const std::vector<Rule>& more, const std::string& provenance) const
{
    auto rules = rules_;
    auto prov = provenance_;
    rules.insert(rules.end(), more.begin(), more.end());
    prov.resize(rules.size(), provenance);
    return Program(std::move(rules), std::move(prov));
}

Program Program::extended(const Program& more) const
{
    auto rules = rules_;
    auto prov = provenance_;
    rules.insert(rules.end(), more.rules_.begin(), more.rules_.end());
    prov.insert(prov.end(), more.provenance_.begin(), more.provenance_.end());
    return Program(std::move(rules), std::move(prov));
}

// --- substitution -----------------------------------------------------------

const Term* Substitution::lookup(const std::string& var) const
{
    auto it = bindings_.find(var);
    return it == bindings_.end() ? nullptr : &it->second;
}

const Term& Substitution::walk(const Term& t) const
{
    const Term* cur = &t;
    while (cur->is_variable()) {
        const Term* next = lookup(cur->name());
        if (!next)
            break;
        cur = next;
    }
    return *cur;
}

Term Substitution::apply(const Term& t) const
{
    const Term& w = walk(t);
    if (!w.is_compound() || w.is_ground())
        return w;
    std::vector<Term> args;
    args.reserve(w.args().size());
    for (const auto& a : w.args())
        args.push_back(apply(a));
    return Term::compound(w.name(), std::move(args));
}

Atom Substitution::apply(const Atom& a) const
{
    Atom out{a.predicate, {}};
    out.args.reserve(a.args.size());
    for (const auto& t : a.args)
        out.args.push_back(apply(t));
    return out;
}

Literal Substitution::apply(const Literal& l) const
{
    return Literal{apply(l.atom), l.negated};
}

BodyLiteral Substitution::apply(const BodyLiteral& b) const
{
    return BodyLiteral{apply(b.literal), b.naf};
}

Rule Substitution::apply(const Rule& r) const
{
    Rule out;
    if (r.head)
        out.head = apply(*r.head);
    out.body.reserve(r.body.size());
    for (const auto& b : r.body)
        out.body.push_back(apply(b));
    return out;
}

Substitution Substitution::normalized() const
{
    Map out;
    for (const auto& [var, term] : bindings_)
        out.emplace(var, apply(term));
    return Substitution(std::move(out));
}

Substitution Substitution::restricted(const std::vector<std::string>& vars) const
{
    Map out;
    for (const auto& v : vars) {
        if (lookup(v))
            out.emplace(v, apply(Term::variable(v)));
    }
    return Substitution(std::move(out));
}

namespace {

bool occurs(const std::string& var, const Term& t, const Substitution& s)
{
    const Term& w = s.walk(t);
    if (w.is_variable())
        return w.name() == var;
    if (w.is_ground())
        return false;
    for (const auto& a : w.args()) {
        if (occurs(var, a, s))
            return true;
    }
    return false;
}

} // namespace

bool unify_into(const Term& a, const Term& b, Substitution& s)
{
    const Term& x = s.walk(a);
    const Term& y = s.walk(b);
    if (x.is_variable() && y.is_variable() && x.name() == y.name())
        return true;
    if (x.is_variable()) {
        if (occurs(x.name(), y, s))
            return false;
        s.bind(x.name(), y);
        return true;
    }
    if (y.is_variable()) {
        if (occurs(y.name(), x, s))
            return false;
        s.bind(y.name(), x);
        return true;
    }
    if (x.kind() != y.kind() || x.name() != y.name() || x.value() != y.value() ||
        x.args().size() != y.args().size())
        return false;
    // Copy: binding may invalidate references into the map.
    const auto xa = x.args();
    const auto ya = y.args();
    for (std::size_t i = 0; i < xa.size(); ++i) {
        if (!unify_into(xa[i], ya[i], s))
            return false;
    }
    return true;
}

bool unify_into(const Atom& a, const Atom& b, Substitution& s)
{
    if (a.predicate != b.predicate || a.args.size() != b.args.size())
        return false;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (!unify_into(a.args[i], b.args[i], s))
            return false;
    }
    return true;
}

std::optional<Substitution> unify(const Term& a, const Term& b)
{
    Substitution s;
    if (!unify_into(a, b, s))
        return std::nullopt;
    return s.normalized();
}

std::optional<Substitution> unify(const Atom& a, const Atom& b)
{
    Substitution s;
    if (!unify_into(a, b, s))
        return std::nullopt;
    return s.normalized();
}

std::optional<Substitution> unify(const Literal& a, const Literal& b)
{
    if (a.negated != b.negated)
        return std::nullopt;
    return unify(a.atom, b.atom);
}

bool match_into(const Term& pattern, const Term& target, Substitution& s)
{
    if (pattern.is_variable()) {
        if (const Term* bound = s.lookup(pattern.name()))
            return *bound == target;
        s.bind(pattern.name(), target);
        return true;
    }
    if (pattern.kind() != target.kind() || pattern.name() != target.name() ||
        pattern.value() != target.value() || pattern.args().size() != target.args().size())
        return false;
    for (std::size_t i = 0; i < pattern.args().size(); ++i) {
        if (!match_into(pattern.args()[i], target.args()[i], s))
            return false;
    }
    return true;
}

bool match_into(const Atom& pattern, const Atom& target, Substitution& s)
{
    if (pattern.predicate != target.predicate || pattern.args.size() != target.args.size())
        return false;
    for (std::size_t i = 0; i < pattern.args.size(); ++i) {
        if (!match_into(pattern.args[i], target.args[i], s))
            return false;
    }
    return true;
}

void collect_variables(const Term& t, std::vector<std::string>& out)
{
    if (t.is_variable()) {
        if (std::find(out.begin(), out.end(), t.name()) == out.end())
            out.push_back(t.name());
        return;
    }
    if (t.is_ground())
        return;
    for (const auto& a : t.args())
        collect_variables(a, out);
}

void collect_variables(const Atom& a, std::vector<std::string>& out)
{
    for (const auto& t : a.args)
        collect_variables(t, out);
}

void collect_variables(const Rule& r, std::vector<std::string>& out)
{
    if (r.head)
        collect_variables(r.head->atom, out);
    for (const auto& b : r.body)
        collect_variables(b.literal.atom, out);
}

Rule rename_apart(const Rule& r, std::size_t suffix)
{
    std::vector<std::string> vars;
    collect_variables(r, vars);
    if (vars.empty())
        return r;
    Substitution s;
    const std::string tag = "#" + std::to_string(suffix);
    for (const auto& v : vars)
        s.bind(v, Term::variable(v + tag));
    return s.apply(r);
}

bool is_lower_identifier(std::string_view s)
{
    if (s.empty() || !std::islower(static_cast<unsigned char>(s.front())))
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

bool is_variable_name(std::string_view s)
{
    if (s.empty())
        return false;
    const auto c = static_cast<unsigned char>(s.front());
    return std::isupper(c) || c == '_';
}

} // namespace caspr
