#include "caspr/kb.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace caspr {

namespace {

const std::set<std::string, std::less<>> relations{"isa", "part_of", "synonym", "has_property", "instance_of"};

const std::set<std::string, std::less<>> stop_words{
    "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",    "at",
    "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",    "does",  "for",   "from",
    "had",   "has",   "have",  "he",    "her",   "his",   "how",   "i",     "if",    "in",    "into",
    "is",    "it",    "its",   "may",   "more",  "not",   "of",    "on",    "or",    "our",   "she",
    "so",    "some",  "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",
    "this",  "to",    "was",   "we",    "were",  "what",  "when",  "where", "which", "who",   "whom",
    "why",   "will",  "with",  "would", "you",   "your"};

bool lower_token(std::string_view s)
{
    if (s.empty() || !std::islower(static_cast<unsigned char>(s[0])))
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
    });
}

bool concept_token(std::string_view s)
{
    const auto hash = s.find('#');
    if (hash == std::string_view::npos)
        return lower_token(s);
    return lower_token(s.substr(0, hash)) && lower_token(s.substr(hash + 1));
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

std::vector<std::string> words(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w)
        out.push_back(w);
    return out;
}

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

Diagnostic line_error(std::size_t line, std::size_t column, std::string message, std::string token)
{
    Diagnostic d;
    d.line = line;
    d.column = column;
    d.message = std::move(message);
    d.token = std::move(token);
    return d;
}

// 1-based column of field i in a tab-separated line.
std::size_t field_column(const std::vector<std::string>& fields, std::size_t i)
{
    std::size_t col = 1;
    for (std::size_t k = 0; k < i; ++k)
        col += fields[k].size() + 1;
    return col;
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

std::string word_of(const std::string& token) { return token.substr(0, token.find('#')); }

} // namespace

bool is_kb_relation(std::string_view r) { return relations.count(r) > 0; }

bool is_stop_word(std::string_view w) { return stop_words.count(w) > 0; }

ParseResult<std::vector<ConceptTriple>> parse_triples(std::string_view text)
{
    ParseResult<std::vector<ConceptTriple>> result;
    std::vector<ConceptTriple> triples;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_cr(raw);
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '%')
            continue;
        const auto f = split(line, '\t');
        if (f.size() < 3 || f.size() > 4) {
            result.diagnostics.push_back(
                line_error(line_no, 1, "expected 3 or 4 tab-separated columns, got " + std::to_string(f.size()), line));
            continue;
        }
        if (!concept_token(f[0])) {
            result.diagnostics.push_back(line_error(line_no, 1, "bad concept token `" + f[0] + "`", f[0]));
            continue;
        }
        if (!is_kb_relation(f[1])) {
            result.diagnostics.push_back(line_error(line_no, field_column(f, 1), "unknown relation `" + f[1] +
                                                        "` (expected isa, part_of, synonym, has_property or instance_of)",
                                                    f[1]));
            continue;
        }
        if (!concept_token(f[2])) {
            result.diagnostics.push_back(line_error(line_no, field_column(f, 2), "bad concept token `" + f[2] + "`", f[2]));
            continue;
        }
        double weight = 1.0;
        if (f.size() == 4) {
            const auto& w = f[3];
            auto [end, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
            if (ec != std::errc{} || end != w.data() + w.size() || weight < 0) {
                result.diagnostics.push_back(
                    line_error(line_no, field_column(f, 3), "weight must be a non-negative number, got `" + w + "`", w));
                continue;
            }
        }
        auto key = std::make_tuple(f[0], f[1], f[2]);
        if (auto it = seen.find(key); it != seen.end()) {
            triples[it->second].weight = std::max(triples[it->second].weight, weight);
            continue;
        }
        seen.emplace(key, triples.size());
        triples.push_back(ConceptTriple{f[0], f[1], f[2], weight});
    }
    if (result.diagnostics.empty())
        result.value = std::move(triples);
    return result;
}

ParseResult<std::vector<ConceptTriple>> load_triples(const std::string& path)
{
    return parse_triples(slurp(path, "triples"));
}

ParseResult<SenseIndex> parse_senses(std::string_view text)
{
    ParseResult<SenseIndex> result;
    SenseIndex index;
    std::set<std::string> ids;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_cr(raw);
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '%')
            continue;
        const auto f = split(line, '\t');
        if (f.size() < 3 || f.size() > 4) {
            result.diagnostics.push_back(
                line_error(line_no, 1, "expected word, sense_id, gloss terms[, domain tags]", line));
            continue;
        }
        SenseEntry e{f[0], f[1], words(f[2]), f.size() == 4 ? words(f[3]) : std::vector<std::string>{}};
        if (!lower_token(e.word)) {
            result.diagnostics.push_back(line_error(line_no, 1, "bad word `" + e.word + "`", e.word));
            continue;
        }
        if (!concept_token(e.sense_id) || word_of(e.sense_id) != e.word) {
            result.diagnostics.push_back(line_error(line_no, field_column(f, 1),
                                                    "sense id must look like " + e.word + "#name", e.sense_id));
            continue;
        }
        if (!ids.insert(e.sense_id).second) {
            result.diagnostics.push_back(
                line_error(line_no, field_column(f, 1), "duplicate sense id `" + e.sense_id + "`", e.sense_id));
            continue;
        }
        if (e.gloss_terms.empty()) {
            result.diagnostics.push_back(line_error(line_no, field_column(f, 2), "empty gloss", f[2]));
            continue;
        }
        for (auto* bag : {&e.gloss_terms, &e.domain_tags}) {
            for (auto& t : *bag)
                std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
        }
        index[e.word].push_back(std::move(e));
    }
    if (result.diagnostics.empty())
        result.value = std::move(index);
    return result;
}

ParseResult<SenseIndex> load_senses(const std::string& path) { return parse_senses(slurp(path, "senses")); }

void ContextProfile::add_text(std::string_view text, std::size_t times)
{
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !is_stop_word(cur))
            terms_[cur] += times;
        cur.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else
            flush();
    }
    flush();
}

namespace {

void harvest(const Term& t, ContextProfile& ctx)
{
    if (t.kind() == Term::Kind::constant)
        ctx.add_text(t.name());
    for (const auto& a : t.args())
        harvest(a, ctx);
}

void harvest(const Literal& l, ContextProfile& ctx)
{
    for (const auto& t : l.atom.args)
        harvest(t, ctx);
}

} // namespace

void ContextProfile::add_program(const Program& p)
{
    for (const auto& r : p.rules()) {
        if (r.head)
            harvest(*r.head, *this);
        for (const auto& b : r.body)
            harvest(b.literal, *this);
    }
}

void ContextProfile::add_query(const Query& q)
{
    for (const auto& b : q.body)
        harvest(b.literal, *this);
}

std::size_t ContextProfile::count(const std::string& term) const
{
    auto it = terms_.find(term);
    return it == terms_.end() ? 0 : it->second;
}

namespace {

std::size_t tag_count(const std::string& tag, const ContextProfile& ctx)
{
    if (std::size_t n = ctx.count(tag))
        return n;
    if (tag.find('_') == std::string::npos)
        return 0;
    std::size_t best = SIZE_MAX;
    for (const auto& part : split(tag, '_')) {
        if (!part.empty())
            best = std::min(best, ctx.count(part));
    }
    return best == SIZE_MAX ? 0 : best;
}

std::vector<std::string> distinct(std::vector<std::string> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

Disambiguation disambiguate(const std::string& word, const SenseIndex& senses, const ContextProfile& ctx,
                            double domain_bonus)
{
    auto it = senses.find(word);
    if (it == senses.end() || it->second.empty())
        throw std::invalid_argument("no senses for word `" + word + "`");
    Disambiguation out;
    bool first = true;
    for (const auto& s : it->second) {
        double gloss = 0, domain = 0;
        for (const auto& g : distinct(s.gloss_terms))
            gloss += static_cast<double>(ctx.count(g));
        for (const auto& t : distinct(s.domain_tags))
            domain += static_cast<double>(tag_count(t, ctx));
        const double score = gloss + domain_bonus * domain;
        out.scores.push_back({s.sense_id, score});
        if (first || score > out.score || (score == out.score && s.sense_id < out.sense_id)) {
            out.sense_id = s.sense_id;
            out.score = score;
            first = false;
        }
    }
    return out;
}

std::string inheritance_default_name(const std::string& cls, const std::string& prop)
{
    return "d_" + cls + "_" + prop;
}

Program CompiledKb::full_program() const { return program.extended(compile_theory(defaults)); }

CompiledKb compile_kb(const std::vector<ConceptTriple>& input, const ContextProfile& ctx, const SenseIndex& senses,
                      const KbConfig& cfg)
{
    if (cfg.hops == 0)
        throw std::invalid_argument("hops must be at least 1");
    CompiledKb out;

    // Sense selection.
    std::map<std::string, std::set<std::string>> tagged;
    for (const auto& t : input) {
        for (const auto* tok : {&t.subject, &t.object}) {
            if (tok->find('#') != std::string::npos)
                tagged[word_of(*tok)].insert(*tok);
        }
    }
    std::map<std::string, std::string> chosen;
    for (const auto& [word, ids] : tagged) {
        if (senses.count(word)) {
            auto d = disambiguate(word, senses, ctx, cfg.domain_bonus);
            chosen[word] = d.sense_id;
            out.senses.emplace(word, std::move(d));
        } else {
            chosen[word] = *ids.begin();
            out.warnings.push_back("no sense index entry for `" + word + "`; using " + *ids.begin());
        }
    }
    std::vector<ConceptTriple> resolved;
    for (auto t : input) {
        bool keep = true;
        for (auto* tok : {&t.subject, &t.object}) {
            if (tok->find('#') == std::string::npos)
                continue;
            if (chosen[word_of(*tok)] != *tok)
                keep = false;
            else
                *tok = word_of(*tok);
        }
        if (keep)
            resolved.push_back(std::move(t));
    }

    // Relevance: breadth-first distances from context terms over the
    // undirected concept graph.
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& t : resolved) {
        adj[t.subject].push_back(t.object);
        adj[t.object].push_back(t.subject);
    }
    auto in_context = [&](const std::string& node) {
        if (ctx.count(node))
            return true;
        if (node.find('_') == std::string::npos)
            return false;
        for (const auto& part : split(node, '_')) {
            if (!part.empty() && !ctx.count(part))
                return false;
        }
        return true;
    };
    std::map<std::string, std::size_t> dist;
    std::deque<std::string> queue;
    for (const auto& [node, _] : adj) {
        if (in_context(node)) {
            dist[node] = 0;
            queue.push_back(node);
        }
    }
    const std::size_t radius = cfg.hops - 1;
    while (!queue.empty()) {
        const auto node = queue.front();
        queue.pop_front();
        if (dist[node] >= radius)
            continue;
        for (const auto& next : adj[node]) {
            if (!dist.count(next)) {
                dist[next] = dist[node] + 1;
                queue.push_back(next);
            }
        }
    }
    for (const auto& t : resolved) {
        if (dist.count(t.subject) || dist.count(t.object))
            out.kept.push_back(t);
    }

    // Emission.
    std::vector<Rule> rules;
    std::set<std::string> used;
    std::vector<std::string> classes;
    std::set<std::string> class_seen;
    std::set<std::string> default_names;
    for (const auto& t : out.kept) {
        rules.push_back(Rule{Literal{Atom{t.relation, {Term::constant(t.subject), Term::constant(t.object)}}, false}, {}});
        used.insert(t.relation);
        if (t.relation != "has_property")
            continue;
        if (class_seen.insert(t.subject).second)
            classes.push_back(t.subject);
        const std::string name = inheritance_default_name(t.subject, t.object);
        if (!default_names.insert(name).second)
            continue;
        DefaultSpec d;
        d.name = name;
        d.class_pred = t.subject;
        d.property = Literal{Atom{"holds", {Term::variable("X"), Term::constant(t.object)}}, false};
        out.defaults.defaults.push_back(std::move(d));
    }
    auto add_rule = [&](const char* text) { rules.push_back(parse_rule_or_throw(text)); };
    const bool taxonomy = used.count("isa") || used.count("instance_of") || !classes.empty();
    if (taxonomy)
        add_rule("isa(X, Z) :- isa(X, Y), isa(Y, Z).");
    if (used.count("part_of"))
        add_rule("part_of(X, Z) :- part_of(X, Y), part_of(Y, Z).");
    if (used.count("synonym"))
        add_rule("synonym(X, Y) :- synonym(Y, X).");
    // Passages state membership as instance_of facts, so the bridge is
    // emitted with any taxonomy, not only when the KB itself has instances.
    if (taxonomy)
        add_rule("isa(X, C) :- instance_of(X, C).");
    for (const auto& c : classes) {
        rules.push_back(Rule{Literal{Atom{c, {Term::variable("X")}}, false},
                             {BodyLiteral{Literal{Atom{"isa", {Term::variable("X"), Term::constant(c)}}, false}, false}}});
    }
    out.program = Program(std::move(rules), "kb-import");

    // isa cycles.
    std::map<std::string, std::vector<std::string>> isa;
    for (const auto& t : out.kept) {
        if (t.relation == "isa")
            isa[t.subject].push_back(t.object);
    }
    std::map<std::string, int> colour;
    std::vector<std::string> path;
    std::function<void(const std::string&)> visit = [&](const std::string& n) {
        colour[n] = 1;
        path.push_back(n);
        for (const auto& m : isa[n]) {
            if (colour[m] == 1) {
                std::string cycle;
                for (auto it = std::find(path.begin(), path.end(), m); it != path.end(); ++it)
                    cycle += *it + " -> ";
                out.warnings.push_back("isa cycle: " + cycle + m);
            } else if (colour[m] == 0) {
                visit(m);
            }
        }
        path.pop_back();
        colour[n] = 2;
    };
    for (const auto& [n, _] : isa) {
        if (colour[n] == 0)
            visit(n);
    }
    return out;
}

} // namespace caspr
