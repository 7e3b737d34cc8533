#include "caspr/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace caspr {

namespace {

const std::set<std::string, std::less<>> labels{"nsubj", "dobj", "nmod_of", "nmod_in", "amod",
                                                "cop",   "case", "root",    "wh",      "prt"};

// kind -> allowed arities
const std::map<std::string, std::set<std::size_t>, std::less<>> kinds{
    {"part_of", {2}}, {"isa", {2}}, {"property", {2}}, {"event", {2, 3}}, {"location", {2}}};

const char* shipped_patterns = R"(% Relation extraction table.
%
%   pattern ID: rel(Var[:POS[|POS...]], Arg), ... => kind(Arg, ...) [unless kind(Arg, ...)].
%
% Match atoms are dependency labels; arguments are variables (optionally
% restricted by coarse POS), `_`, or lowercase lemmas. Patterns with an
% `unless` clause fire after the others and are skipped when the clause
% matches a relation already emitted for the same sentence.

pattern copula_kind: nsubj(kind, S), cop(kind, _), nmod_of(kind, C) => isa(S, C).
pattern copula_isa: nsubj(C:NOUN, S), cop(C, _) => isa(S, C) unless isa(S, _).
pattern copula_property: nsubj(P:ADJ, S), cop(P, _) => property(S, P).
pattern attribute: amod(N, A:ADJ) => property(N, A).
pattern genitive_part: nmod_of(A:NOUN|PROPN|PRON, B) => part_of(A, B) unless isa(_, B).
pattern transitive_event: nsubj(V:VERB, S), dobj(V, O) => event(V, S, O).
pattern subject_event: nsubj(V:VERB, S) => event(V, S).
pattern verb_location: nsubj(V:VERB, S), nmod_in(V, L) => location(S, L).
pattern noun_location: nmod_in(N:NOUN|PROPN, L) => location(N, L).
)";

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos)
            return out;
        start = tab + 1;
    }
}

std::string slurp(const std::string& path, const char* what)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(std::string("cannot open ") + what + " file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Diagnostic diag(std::size_t line, std::size_t column, std::string message, std::string token = {})
{
    Diagnostic d;
    d.line = line;
    d.column = column;
    d.message = std::move(message);
    d.token = std::move(token);
    return d;
}

bool has_upper(const std::string& s)
{
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c); });
}

} // namespace

bool is_dependency_label(std::string_view label) { return labels.count(label) > 0; }

ParseResult<std::vector<DependencyTriple>> parse_dependencies(std::string_view text)
{
    ParseResult<std::vector<DependencyTriple>> result;
    std::vector<DependencyTriple> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '%')
            continue;
        const auto f = split_tabs(line);
        if (f.size() != 8) {
            result.diagnostics.push_back(
                diag(line_no, 1, "expected 8 tab-separated columns, got " + std::to_string(f.size()), line));
            continue;
        }
        std::size_t column = 1;
        std::vector<std::size_t> columns;
        for (const auto& field : f) {
            columns.push_back(column);
            column += field.size() + 1;
        }
        bool ok = true;
        for (std::size_t i = 0; i < 8 && ok; ++i) {
            if (f[i].empty()) {
                result.diagnostics.push_back(diag(line_no, columns[i], "empty column " + std::to_string(i + 1)));
                ok = false;
            }
        }
        if (!ok)
            continue;
        if (!is_dependency_label(f[4])) {
            result.diagnostics.push_back(diag(line_no, columns[4], "unknown dependency label `" + f[4] + "`", f[4]));
            continue;
        }
        for (std::size_t i : {2u, 6u}) {
            if (has_upper(f[i])) {
                result.diagnostics.push_back(diag(line_no, columns[i], "lemma must be lowercase: `" + f[i] + "`", f[i]));
                ok = false;
            }
        }
        if (ok)
            out.push_back(DependencyTriple{f[0], Token{f[1], f[2], f[3]}, f[4], Token{f[5], f[6], f[7]}});
    }
    if (result.diagnostics.empty())
        result.value = std::move(out);
    return result;
}

ParseResult<std::vector<DependencyTriple>> load_dependencies(const std::string& path)
{
    return parse_dependencies(slurp(path, "dependency"));
}

Literal SemanticRelation::literal() const { return Literal{Atom{kind, args}, false}; }

// ---------------------------------------------------------------------------
// Pattern files

namespace {

class PatternLexer {
public:
    explicit PatternLexer(std::string_view text) : text_(text) {}

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

    bool at_end()
    {
        skip_space();
        return pos_ >= text_.size();
    }

    bool accept(std::string_view s)
    {
        skip_space();
        if (text_.substr(pos_, s.size()) != s)
            return false;
        for (std::size_t i = 0; i < s.size(); ++i)
            advance();
        return true;
    }

    // Identifier-ish word: letters, digits, `_`.
    std::string word()
    {
        skip_space();
        std::string out;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            out += advance();
        return out;
    }

    char peek()
    {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    // Skips to just after the next `.` that ends a pattern.
    void recover()
    {
        while (pos_ < text_.size() && text_[pos_] != '.')
            advance();
        if (pos_ < text_.size())
            advance();
    }

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    char advance()
    {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

struct PatternSyntax : std::runtime_error {
    PatternSyntax(std::size_t l, std::size_t c, const std::string& m) : std::runtime_error(m), line(l), column(c) {}
    std::size_t line;
    std::size_t column;
};

bool is_variable_name(const std::string& w) { return !w.empty() && std::isupper(static_cast<unsigned char>(w[0])); }

PatternArg parse_arg(PatternLexer& lx, bool allow_pos)
{
    const auto line = lx.line();
    const auto col = lx.column();
    auto w = lx.word();
    if (w.empty())
        throw PatternSyntax(line, col, "expected an argument");
    PatternArg a;
    if (w == "_") {
        a.kind = PatternArg::Kind::wildcard;
    } else if (is_variable_name(w)) {
        a.kind = PatternArg::Kind::variable;
        a.name = w;
    } else if (has_upper(w)) {
        throw PatternSyntax(line, col, "lemma constants are lowercase: `" + w + "`");
    } else {
        a.kind = PatternArg::Kind::constant;
        a.name = w;
    }
    if (lx.peek() == ':') {
        if (!allow_pos || a.kind != PatternArg::Kind::variable)
            throw PatternSyntax(lx.line(), lx.column(), "POS restriction only allowed on match variables");
        lx.accept(":");
        do {
            auto tag = lx.word();
            if (tag.empty())
                throw PatternSyntax(lx.line(), lx.column(), "expected a POS tag");
            a.pos += (a.pos.empty() ? "" : "|") + tag;
        } while (lx.accept("|"));
    }
    return a;
}

PatternAtom parse_atom(PatternLexer& lx, bool allow_pos)
{
    PatternAtom atom;
    const auto line = lx.line();
    const auto col = lx.column();
    atom.relation = lx.word();
    if (atom.relation.empty())
        throw PatternSyntax(line, col, "expected a relation name");
    if (!lx.accept("("))
        throw PatternSyntax(lx.line(), lx.column(), "expected `(` after " + atom.relation);
    do {
        atom.args.push_back(parse_arg(lx, allow_pos));
    } while (lx.accept(","));
    if (!lx.accept(")"))
        throw PatternSyntax(lx.line(), lx.column(), "expected `)`");
    return atom;
}

} // namespace

ParseResult<std::vector<PatternRule>> parse_patterns(std::string_view text)
{
    ParseResult<std::vector<PatternRule>> result;
    std::vector<PatternRule> rules;
    std::set<std::string> ids;
    PatternLexer lx(text);
    while (!lx.at_end()) {
        const auto start_line = lx.line();
        const auto start_col = lx.column();
        PatternRule rule;
        try {
            if (lx.word() != "pattern")
                throw PatternSyntax(start_line, start_col, "expected `pattern`");
            rule.id = lx.word();
            if (rule.id.empty())
                throw PatternSyntax(lx.line(), lx.column(), "expected a pattern id");
            if (!lx.accept(":"))
                throw PatternSyntax(lx.line(), lx.column(), "expected `:` after pattern " + rule.id);
            do {
                const auto l = lx.line();
                const auto c = lx.column();
                rule.match.push_back(parse_atom(lx, true));
                const auto& m = rule.match.back();
                if (!is_dependency_label(m.relation))
                    throw PatternSyntax(l, c, "pattern " + rule.id + ": unknown dependency label `" + m.relation + "`");
                if (m.args.size() != 2)
                    throw PatternSyntax(l, c, "pattern " + rule.id + ": dependency atoms take 2 arguments");
            } while (lx.accept(","));
            if (!lx.accept("=>"))
                throw PatternSyntax(lx.line(), lx.column(), "pattern " + rule.id + ": expected `=>`");
            const auto el = lx.line();
            const auto ec = lx.column();
            rule.emit = parse_atom(lx, false);
            auto check_kind = [&](const PatternAtom& a, std::size_t l, std::size_t c) {
                auto k = kinds.find(a.relation);
                if (k == kinds.end())
                    throw PatternSyntax(l, c, "pattern " + rule.id + ": unknown relation kind `" + a.relation + "`");
                if (!k->second.count(a.args.size()))
                    throw PatternSyntax(l, c, "pattern " + rule.id + ": wrong arity for " + a.relation);
            };
            check_kind(rule.emit, el, ec);
            if (lx.peek() == 'u') {
                const auto ul = lx.line();
                const auto uc = lx.column();
                if (lx.word() != "unless")
                    throw PatternSyntax(ul, uc, "pattern " + rule.id + ": expected `unless` or `.`");
                const auto cl = lx.line();
                const auto cc = lx.column();
                rule.unless = parse_atom(lx, false);
                check_kind(*rule.unless, cl, cc);
            }
            if (!lx.accept("."))
                throw PatternSyntax(lx.line(), lx.column(), "pattern " + rule.id + ": expected `.`");

            std::set<std::string> bound;
            for (const auto& m : rule.match) {
                for (const auto& a : m.args) {
                    if (a.kind == PatternArg::Kind::variable)
                        bound.insert(a.name);
                }
            }
            for (const auto& a : rule.emit.args) {
                if (a.kind == PatternArg::Kind::wildcard)
                    throw PatternSyntax(el, ec, "pattern " + rule.id + ": `_` cannot be emitted");
                if (a.kind == PatternArg::Kind::variable && !bound.count(a.name))
                    throw PatternSyntax(el, ec, "pattern " + rule.id + ": emit variable " + a.name +
                                                    " is not bound by the match");
            }
            if (rule.unless) {
                for (const auto& a : rule.unless->args) {
                    if (a.kind == PatternArg::Kind::variable && !bound.count(a.name))
                        throw PatternSyntax(el, ec, "pattern " + rule.id + ": unless variable " + a.name +
                                                        " is not bound by the match");
                }
            }
            if (!ids.insert(rule.id).second)
                throw PatternSyntax(start_line, start_col, "duplicate pattern id " + rule.id);
            rules.push_back(std::move(rule));
        } catch (const PatternSyntax& e) {
            result.diagnostics.push_back(diag(e.line, e.column, e.what(), rule.id));
            lx.recover();
        }
    }
    if (result.diagnostics.empty())
        result.value = std::move(rules);
    return result;
}

ParseResult<std::vector<PatternRule>> load_patterns(const std::string& path)
{
    return parse_patterns(slurp(path, "patterns"));
}

const char* default_patterns_text() { return shipped_patterns; }

const std::vector<PatternRule>& default_patterns()
{
    static const std::vector<PatternRule> table = [] {
        auto r = parse_patterns(shipped_patterns);
        if (!r.ok())
            throw std::logic_error("built-in pattern table does not parse: " + to_string(r.diagnostics.front()));
        return *r.value;
    }();
    return table;
}

std::string to_string(const Coverage& c)
{
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.2f", c.percent());
    std::string out = "coverage: " + std::to_string(c.consumed) + "/" + std::to_string(c.total) +
                      " dependency triples consumed (" + pct + "%)\n";
    for (const auto& t : c.unconsumed) {
        out += "  unconsumed: " + t.sentence_id + " " + t.relation + "(" + t.head.text + ", " + t.dependent.text +
               ")\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

Term lemma_term(const std::string& lemma)
{
    if (!lemma.empty() && std::all_of(lemma.begin(), lemma.end(), [](unsigned char c) { return std::isdigit(c); }) &&
        lemma.size() < 18)
        return Term::integer(std::stoll(lemma));
    std::string name;
    for (unsigned char c : lemma)
        name += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_';
    if (name.empty() || !std::islower(static_cast<unsigned char>(name[0])))
        name = "w_" + name;
    return Term::constant(name);
}

struct Node {
    std::string lemma;
    std::string pos;
    bool wh = false;
};

struct Edge {
    std::size_t index; // position in the caller's triple list, or npos
    std::string relation;
    Node head;
    Node dep;
};

// A sentence after particle merging. Nodes are identified by lemma.
struct Sentence {
    std::string id;
    std::vector<Edge> edges;
};

bool pos_allows(const std::string& allowed, const std::string& pos)
{
    if (allowed.empty())
        return true;
    std::size_t start = 0;
    while (true) {
        const auto bar = allowed.find('|', start);
        if (allowed.compare(start, bar - start, pos) == 0)
            return true;
        if (bar == std::string::npos)
            return false;
        start = bar + 1;
    }
}

using Binding = std::map<std::string, const Node*>;

bool bind_arg(const PatternArg& a, const Node& n, Binding& b)
{
    switch (a.kind) {
    case PatternArg::Kind::wildcard:
        return true;
    case PatternArg::Kind::constant:
        return !n.wh && n.lemma == a.name;
    case PatternArg::Kind::variable:
        if (!pos_allows(a.pos, n.pos))
            return false;
        if (auto it = b.find(a.name); it != b.end())
            return it->second->lemma == n.lemma && it->second->wh == n.wh;
        b.emplace(a.name, &n);
        return true;
    }
    return false;
}

void match_all(const Sentence& s, const std::vector<PatternAtom>& atoms, std::size_t i, Binding& b,
               std::vector<std::size_t>& used, const std::function<void(const Binding&, const std::vector<std::size_t>&)>& k)
{
    if (i == atoms.size()) {
        k(b, used);
        return;
    }
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        const auto& edge = s.edges[e];
        if (edge.relation != atoms[i].relation)
            continue;
        Binding next = b;
        if (!bind_arg(atoms[i].args[0], edge.head, next) || !bind_arg(atoms[i].args[1], edge.dep, next))
            continue;
        used.push_back(e);
        match_all(s, atoms, i + 1, next, used, k);
        used.pop_back();
    }
}

Term node_term(const Node& n) { return n.wh ? Term::variable(answer_variable) : lemma_term(n.lemma); }

Term arg_term(const PatternArg& a, const Binding& b)
{
    if (a.kind == PatternArg::Kind::constant)
        return lemma_term(a.name);
    return node_term(*b.at(a.name));
}

bool blocked(const PatternAtom& cond, const Binding& b, const std::vector<SemanticRelation>& emitted)
{
    for (const auto& r : emitted) {
        if (r.kind != cond.relation || r.args.size() != cond.args.size())
            continue;
        bool all = true;
        for (std::size_t i = 0; i < cond.args.size() && all; ++i) {
            if (cond.args[i].kind != PatternArg::Kind::wildcard)
                all = arg_term(cond.args[i], b) == r.args[i];
        }
        if (all)
            return true;
    }
    return false;
}

std::vector<Sentence> group(const std::vector<DependencyTriple>& triples, const std::set<std::size_t>& wh_nodes,
                            std::vector<bool>& consumed)
{
    // Sentence order follows first appearance.
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        auto& m = members[triples[i].sentence_id];
        if (m.empty())
            order.push_back(triples[i].sentence_id);
        m.push_back(i);
    }
    std::vector<Sentence> out;
    for (const auto& sid : order) {
        // Particle verbs: break + down -> break_down, keyed by head token text.
        std::map<std::string, std::string> merged;
        for (auto i : members[sid]) {
            const auto& t = triples[i];
            if (t.relation == "prt") {
                merged[t.head.text] = t.head.lemma + "_" + t.dependent.lemma;
                consumed[i] = true;
            }
        }
        std::set<std::string> wh_texts;
        for (auto i : wh_nodes) {
            if (triples[i].sentence_id == sid)
                wh_texts.insert(triples[i].dependent.text);
        }
        auto node = [&](const Token& tok) {
            Node n{tok.lemma, tok.pos, wh_texts.count(tok.text) > 0};
            if (auto it = merged.find(tok.text); it != merged.end())
                n.lemma = it->second;
            return n;
        };
        Sentence s{sid, {}};
        for (auto i : members[sid]) {
            const auto& t = triples[i];
            if (t.relation == "prt")
                continue;
            if (t.relation == "root")
                consumed[i] = true;
            s.edges.push_back(Edge{i, t.relation, node(t.head), node(t.dependent)});
        }
        out.push_back(std::move(s));
    }
    return out;
}

Extraction run(const std::vector<DependencyTriple>& triples, const std::vector<PatternRule>& patterns,
               const std::set<std::size_t>& wh_nodes, std::vector<bool> consumed)
{
    Extraction out;
    std::set<std::string> seen;
    auto sentences = group(triples, wh_nodes, consumed);
    for (const auto& s : sentences) {
        // per pattern index, emissions in match order
        std::vector<std::vector<SemanticRelation>> by_pattern(patterns.size());
        std::vector<SemanticRelation> first_pass;
        auto fire = [&](std::size_t p, bool second) {
            const auto& rule = patterns[p];
            Binding b;
            std::vector<std::size_t> used;
            match_all(s, rule.match, 0, b, used, [&](const Binding& bound, const std::vector<std::size_t>& edges) {
                if (second && blocked(*rule.unless, bound, first_pass))
                    return;
                SemanticRelation r;
                r.kind = rule.emit.relation;
                for (const auto& a : rule.emit.args)
                    r.args.push_back(arg_term(a, bound));
                r.sentence_id = s.id;
                r.pattern_id = rule.id;
                for (auto e : edges)
                    consumed[s.edges[e].index] = true;
                by_pattern[p].push_back(std::move(r));
            });
        };
        for (std::size_t p = 0; p < patterns.size(); ++p) {
            if (!patterns[p].unless) {
                fire(p, false);
                first_pass.insert(first_pass.end(), by_pattern[p].begin(), by_pattern[p].end());
            }
        }
        for (std::size_t p = 0; p < patterns.size(); ++p) {
            if (patterns[p].unless)
                fire(p, true);
        }
        for (auto& rels : by_pattern) {
            for (auto& r : rels) {
                if (seen.insert(to_string(r.literal())).second)
                    out.relations.push_back(std::move(r));
            }
        }
        // `case` markers go with a consumed edge on the same head.
        std::set<std::string> live;
        for (const auto& e : s.edges) {
            if (consumed[e.index] && e.relation != "root") {
                live.insert(e.head.lemma);
                live.insert(e.dep.lemma);
            }
        }
        for (const auto& e : s.edges) {
            if (e.relation == "case" && live.count(e.head.lemma))
                consumed[e.index] = true;
        }
    }
    out.coverage.total = triples.size();
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (consumed[i])
            ++out.coverage.consumed;
        else
            out.coverage.unconsumed.push_back(triples[i]);
    }
    return out;
}

} // namespace

Extraction extract(const std::vector<DependencyTriple>& triples, const std::vector<PatternRule>& patterns)
{
    return run(triples, patterns, {}, std::vector<bool>(triples.size(), false));
}

std::vector<SemanticRelation> extract_relations(const std::vector<DependencyTriple>& triples,
                                                const std::vector<PatternRule>& patterns)
{
    return extract(triples, patterns).relations;
}

Program relations_to_program(const std::vector<SemanticRelation>& rels)
{
    std::vector<Rule> rules;
    std::vector<std::string> provenance;
    std::set<Literal> seen;
    for (const auto& r : rels) {
        auto l = r.literal();
        if (!seen.insert(l).second)
            continue;
        rules.push_back(Rule{std::move(l), {}});
        provenance.push_back("sentence " + r.sentence_id + ", pattern " + r.pattern_id);
    }
    return Program(std::move(rules), std::move(provenance));
}

Query translate_question(const std::vector<DependencyTriple>& input, const std::vector<PatternRule>& patterns)
{
    std::vector<DependencyTriple> triples = input;
    std::vector<std::size_t> wh;
    std::set<std::string> wh_tokens;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (triples[i].relation == "wh") {
            wh.push_back(i);
            wh_tokens.insert(triples[i].dependent.text);
        }
    }
    if (wh_tokens.size() > 1) {
        std::string names;
        for (const auto& t : wh_tokens)
            names += (names.empty() ? "" : ", ") + t;
        throw QuestionError("question has several wh tokens: " + names);
    }
    std::set<std::size_t> wh_nodes(wh.begin(), wh.end());
    if (!wh.empty()) {
        const auto i = wh.front();
        auto has = [&](const char* rel) {
            return std::any_of(triples.begin(), triples.end(), [&](const DependencyTriple& t) {
                return t.relation == rel && t.head.text == triples[i].head.text &&
                       t.sentence_id == triples[i].sentence_id;
            });
        };
        const auto& lemma = triples[i].dependent.lemma;
        if (lemma == "where")
            triples[i].relation = "nmod_in";
        else if (!has("nsubj"))
            triples[i].relation = "nsubj";
        else if (!has("dobj"))
            triples[i].relation = "dobj";
        for (auto j : wh)
            triples[j].relation = triples[j].relation == "wh" ? "root" : triples[j].relation;
    }
    const auto ex = run(triples, patterns, wh_nodes, std::vector<bool>(triples.size(), false));
    std::vector<BodyLiteral> body;
    for (const auto& r : ex.relations)
        body.push_back(BodyLiteral{r.literal(), false});
    if (body.empty())
        throw QuestionError("no pattern matched the question");
    if (!wh.empty()) {
        const bool mentions = std::any_of(ex.relations.begin(), ex.relations.end(), [](const SemanticRelation& r) {
            return std::any_of(r.args.begin(), r.args.end(), [](const Term& t) { return t.is_variable(); });
        });
        if (!mentions)
            throw QuestionError("no pattern bound the wh token " + *wh_tokens.begin());
    }
    return make_query(std::move(body));
}

} // namespace caspr
