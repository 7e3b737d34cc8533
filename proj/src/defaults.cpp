#include "caspr/defaults.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace caspr {

namespace {

const Term x_var = Term::variable("X");

Literal positive(std::string pred, std::vector<Term> args) { return Literal{Atom{std::move(pred), std::move(args)}, false}; }

Literal abnormal(const std::string& name) { return positive("ab", {Term::compound(name, {x_var})}); }

Literal class_literal(const DefaultSpec& d) { return positive(d.class_pred, {x_var}); }

BodyLiteral plain(Literal l) { return BodyLiteral{std::move(l), false}; }
BodyLiteral naf(Literal l) { return BodyLiteral{std::move(l), true}; }

void check_template(const DefaultSpec& d, const Literal& l, const char* what)
{
    std::vector<std::string> vars;
    collect_variables(l.atom, vars);
    if (vars != std::vector<std::string>{"X"})
        throw DefaultsError("default " + d.name + ": " + what + " `" + to_string(l) +
                            "` must mention exactly the variable X");
}

void validate(const DefaultSpec& d)
{
    if (!is_lower_identifier(d.name))
        throw DefaultsError("default name must be a lowercase identifier: `" + d.name + "`");
    if (!is_lower_identifier(d.class_pred))
        throw DefaultsError("default " + d.name + ": bad class predicate `" + d.class_pred + "`");
    check_template(d, d.property, "property");
    for (const auto& e : d.weak_exceptions)
        check_template(d, e, "weak exception");
    for (const auto& e : d.strong_exceptions) {
        check_template(d, e, "strong exception");
        if (e.atom == d.property.atom)
            throw DefaultsError("default " + d.name + ": strong exception `" + to_string(e) +
                                "` would derive both " + to_string(d.property) + " and " +
                                to_string(complement(d.property)));
    }
}

struct Compiled {
    Rule rule;
    std::string note;
};

std::vector<Compiled> compile_with_notes(const DefaultSpec& d)
{
    validate(d);
    std::vector<Compiled> out;
    Rule main{d.property, {plain(class_literal(d))}};
    if (d.guard)
        main.body.push_back(plain(*d.guard));
    main.body.push_back(naf(abnormal(d.name)));
    main.body.push_back(naf(complement(d.property)));
    out.push_back({main, d.name + " main rule"});
    for (const auto& e : d.weak_exceptions) {
        out.push_back({Rule{abnormal(d.name), {plain(class_literal(d)), naf(complement(e))}},
                       d.name + " weak exception " + to_string(e) + "; " + d.class_pred +
                           "(X) added so the rule is safe and ground at call time"});
    }
    for (const auto& e : d.strong_exceptions) {
        out.push_back({Rule{complement(d.property), {plain(class_literal(d)), plain(e)}},
                       d.name + " strong exception " + to_string(e) + "; " + d.class_pred +
                           "(X) added so the rule is safe and ground at call time"});
    }
    return out;
}

const DefaultSpec& find_default(const std::vector<DefaultSpec>& kb, const std::string& name)
{
    auto it = std::find_if(kb.begin(), kb.end(), [&](const DefaultSpec& d) { return d.name == name; });
    if (it == kb.end())
        throw DefaultsError("unknown default `" + name + "`");
    return *it;
}

} // namespace

std::vector<Rule> compile_default(const DefaultSpec& d)
{
    std::vector<Rule> out;
    for (auto& c : compile_with_notes(d))
        out.push_back(std::move(c.rule));
    return out;
}

std::vector<Rule> compile_preference(const PreferenceSpec& pref, const std::vector<DefaultSpec>& kb)
{
    if (pref.preferred == pref.over)
        throw DefaultsError("default `" + pref.preferred + "` cannot be preferred over itself");
    const DefaultSpec& a = find_default(kb, pref.preferred);
    const DefaultSpec& b = find_default(kb, pref.over);
    if (a.property.atom.predicate != b.property.atom.predicate || a.property.atom.arity() != b.property.atom.arity())
        throw DefaultsError("preference of " + a.name + " over " + b.name + " is vacuous: " +
                            to_string(a.property) + " and " + to_string(b.property) + " cannot conflict");
    if (pref.condition) {
        std::vector<std::string> vars;
        collect_variables(pref.condition->atom, vars);
        if (vars != std::vector<std::string>{"X"})
            throw DefaultsError("preference condition `" + to_string(*pref.condition) +
                                "` must mention exactly the variable X");
    }
    Rule r{abnormal(b.name), {plain(class_literal(a))}};
    if (pref.condition)
        r.body.push_back(plain(*pref.condition));
    return {r};
}

DefaultTheory merge(DefaultTheory a, const DefaultTheory& b)
{
    a.defaults.insert(a.defaults.end(), b.defaults.begin(), b.defaults.end());
    a.exceptions.insert(a.exceptions.end(), b.exceptions.begin(), b.exceptions.end());
    a.preferences.insert(a.preferences.end(), b.preferences.begin(), b.preferences.end());
    return a;
}

Program compile_theory(const DefaultTheory& t)
{
    std::vector<DefaultSpec> specs = t.defaults;
    std::set<std::string> names;
    for (const auto& d : specs) {
        if (!names.insert(d.name).second)
            throw DefaultsError("duplicate default name `" + d.name + "`");
    }
    for (const auto& e : t.exceptions) {
        auto it = std::find_if(specs.begin(), specs.end(), [&](const DefaultSpec& d) { return d.name == e.default_name; });
        if (it == specs.end())
            throw DefaultsError(std::string(e.strong ? "strong" : "weak") + " exception `" + to_string(e.condition) +
                                "` names unknown default `" + e.default_name + "`");
        (e.strong ? it->strong_exceptions : it->weak_exceptions).push_back(e.condition);
    }
    std::vector<Rule> rules;
    std::vector<std::string> prov;
    for (const auto& d : specs) {
        for (auto& c : compile_with_notes(d)) {
            rules.push_back(std::move(c.rule));
            prov.push_back("default-layer: " + c.note);
        }
    }
    for (const auto& p : t.preferences) {
        for (auto& r : compile_preference(p, specs)) {
            rules.push_back(std::move(r));
            prov.push_back("default-layer: prefer " + p.preferred + " over " + p.over);
        }
    }
    return Program(std::move(rules), std::move(prov));
}

Augmented augment(const Program& p, const DefaultTheory& t)
{
    Augmented out{p, {}};
    if (t.empty())
        return out;
    const Program layer = compile_theory(t);
    std::map<std::string, std::vector<std::string>> strong_by_default;
    for (const auto& d : t.defaults) {
        for (const auto& e : d.strong_exceptions)
            strong_by_default[d.name].push_back(to_string(e));
    }
    for (const auto& e : t.exceptions) {
        if (e.strong)
            strong_by_default[e.default_name].push_back(to_string(e.condition));
    }
    for (const auto& d : t.defaults) {
        auto it = strong_by_default.find(d.name);
        if (it == strong_by_default.end())
            continue;
        for (const auto& r : p.rules()) {
            if (!r.is_fact() || r.head->negated != d.property.negated)
                continue;
            if (unify(r.head->atom, d.property.atom)) {
                out.warnings.push_back("fact " + to_string(*r.head) + " may be contradicted by a strong exception of default " +
                                       d.name + " (" + it->second.front() + ")");
            }
        }
    }
    out.program = p.extended(layer);
    return out;
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Splits on commas outside parentheses.
std::vector<std::string> split_top_level(const std::string& s)
{
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

struct LineError {
    std::string message;
    std::string token;
};

Literal literal_or_fail(const std::string& text)
{
    auto r = parse_literal(text);
    if (!r.ok())
        throw LineError{"bad literal `" + text + "`" + (r.diagnostics.empty() ? "" : ": " + r.diagnostics[0].message), text};
    return *r.value;
}

std::string name_or_fail(const std::string& text)
{
    if (!is_lower_identifier(text))
        throw LineError{"expected a default name, got `" + text + "`", text};
    return text;
}

} // namespace

ParseResult<DefaultTheory> parse_defaults(std::string_view text)
{
    ParseResult<DefaultTheory> result;
    DefaultTheory theory;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('%')));
        if (line.empty())
            continue;
        const std::size_t column = raw.find_first_not_of(" \t") + 1;
        try {
            if (line.back() != '.')
                throw LineError{"statement must end with '.'", line};
            line = trim(line.substr(0, line.size() - 1));
            const auto space = line.find_first_of(" \t");
            const std::string keyword = line.substr(0, space);
            const std::string rest = space == std::string::npos ? "" : trim(line.substr(space));
            if (keyword == "default" || keyword == "weak" || keyword == "strong") {
                const auto colon = rest.find(':');
                if (colon == std::string::npos)
                    throw LineError{"expected ':' after the default name", rest};
                const std::string name = name_or_fail(trim(rest.substr(0, colon)));
                const std::string body = trim(rest.substr(colon + 1));
                if (keyword != "default") {
                    theory.exceptions.push_back(ExceptionDecl{name, literal_or_fail(body), keyword == "strong"});
                    continue;
                }
                const auto arrow = body.find("~>");
                if (arrow == std::string::npos)
                    throw LineError{"expected '~>' between class and property", body};
                const auto lhs = split_top_level(trim(body.substr(0, arrow)));
                if (lhs.size() > 2)
                    throw LineError{"a default takes a class literal and at most one guard", body};
                const Literal cls = literal_or_fail(lhs[0]);
                if (cls.negated || cls.atom.arity() != 1 || cls.atom.args[0] != x_var)
                    throw LineError{"class must be a positive unary literal over X, like bird(X)", lhs[0]};
                DefaultSpec d;
                d.name = name;
                d.class_pred = cls.atom.predicate;
                d.property = literal_or_fail(trim(body.substr(arrow + 2)));
                if (lhs.size() == 2)
                    d.guard = literal_or_fail(lhs[1]);
                theory.defaults.push_back(std::move(d));
            } else if (keyword == "prefer") {
                std::istringstream words(rest);
                std::string preferred, over_kw, over;
                words >> preferred >> over_kw >> over;
                if (over_kw != "over")
                    throw LineError{"expected `prefer NAME over NAME`", rest};
                PreferenceSpec p{name_or_fail(preferred), name_or_fail(over), std::nullopt};
                std::string if_kw;
                if (words >> if_kw) {
                    if (if_kw != "if")
                        throw LineError{"expected `if` before the preference condition", if_kw};
                    std::string cond;
                    std::getline(words, cond);
                    p.condition = literal_or_fail(trim(cond));
                }
                theory.preferences.push_back(std::move(p));
            } else {
                throw LineError{"unknown statement `" + keyword + "`", keyword};
            }
        } catch (const LineError& e) {
            Diagnostic d;
            d.line = line_no;
            const auto at = raw.find(e.token);
            d.column = e.token.empty() || at == std::string::npos ? column : at + 1;
            d.message = e.message;
            d.token = e.token;
            result.diagnostics.push_back(std::move(d));
        }
    }
    if (result.diagnostics.empty())
        result.value = std::move(theory);
    return result;
}

DefaultTheory load_defaults_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open defaults file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto r = parse_defaults(buf.str());
    if (!r.ok())
        throw ParseError(r.diagnostics);
    return *r.value;
}

} // namespace caspr
