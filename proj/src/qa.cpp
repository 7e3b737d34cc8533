#include "caspr/qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace caspr {

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path, const char* what)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(std::string("cannot open ") + what + " file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

bool blank_or_comment(const std::string& line)
{
    return line.find_first_not_of(" \t") == std::string::npos || line[0] == '%' || line[0] == '#';
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

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

// ---------------------------------------------------------------------------
// Matching

std::string normalize_answer(std::string_view text)
{
    std::string s;
    for (unsigned char c : text)
        s += c == '_' ? ' ' : static_cast<char>(std::tolower(c));
    std::istringstream in(s);
    std::vector<std::string> words;
    std::string w;
    while (in >> w)
        words.push_back(w);
    while (!words.empty()) {
        auto& last = words.back();
        while (!last.empty() && std::string_view(".,;:!?").find(last.back()) != std::string_view::npos)
            last.pop_back();
        if (!last.empty())
            break;
        words.pop_back();
    }
    std::string out;
    for (const auto& word : words) {
        if (word == "a" || word == "an" || word == "the")
            continue;
        out += (out.empty() ? "" : " ") + word;
    }
    return out;
}

bool match(const std::string& predicted, const std::vector<std::string>& gold)
{
    const auto p = normalize_answer(predicted);
    if (p.empty() || p == no_answer)
        return false;
    for (const auto& g : gold) {
        const auto n = normalize_answer(g);
        if (n.empty())
            continue;
        if (p == n || p.find(n) != std::string::npos || n.find(p) != std::string::npos)
            return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Scores

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

std::optional<long> parse_count(const std::string& s)
{
    const auto t = trim(s);
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c) || c == '-'; }))
        return std::nullopt;
    try {
        std::size_t used = 0;
        const long v = std::stol(t, &used);
        if (used != t.size())
            return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

ParseResult<std::vector<ArticleResult>> parse_results(std::string_view text)
{
    ParseResult<std::vector<ArticleResult>> result;
    std::vector<ArticleResult> rows;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (blank_or_comment(line))
            continue;
        const auto f = split_csv(line);
        const bool header = first && f.size() == 3 && trim(f[1]) == "correct" && trim(f[2]) == "count";
        first = false;
        if (header)
            continue;
        if (f.size() != 3) {
            result.diagnostics.push_back(diag(line_no, 1, "expected article,correct,count", line));
            continue;
        }
        const auto c = parse_count(f[1]);
        const auto n = parse_count(f[2]);
        if (!c || !n) {
            result.diagnostics.push_back(diag(line_no, 1, "counts must be integers", line));
            continue;
        }
        if (*c < 0 || *n <= 0 || *c > *n) {
            result.diagnostics.push_back(
                diag(line_no, 1, "need 0 <= correct <= count and count > 0", line));
            continue;
        }
        rows.push_back(ArticleResult{trim(f[0]), *c, *n});
    }
    if (result.diagnostics.empty())
        result.value = std::move(rows);
    return result;
}

ParseResult<std::vector<ArticleResult>> load_results(const std::string& path)
{
    return parse_results(slurp(path, "results"));
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

std::string format_percent(double p)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", p);
    return buf;
}

ScoreTable score_run(const std::vector<ArticleResult>& results)
{
    if (results.empty())
        throw std::invalid_argument("no article rows");
    ScoreTable t;
    double sum = 0;
    t.total.name = "Total";
    for (const auto& r : results) {
        if (r.count <= 0 || r.correct < 0 || r.correct > r.count)
            throw std::invalid_argument("bad counts for article " + r.article);
        const double exact = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.count);
        sum += exact;
        t.rows.push_back(ScoreRow{r.article, r.correct, r.count, round2(exact)});
        t.total.correct += r.correct;
        t.total.count += r.count;
    }
    t.total.percent = round2(100.0 * static_cast<double>(t.total.correct) / static_cast<double>(t.total.count));
    t.average = round2(sum / static_cast<double>(results.size()));
    return t;
}

std::string format_score_table(const ScoreTable& t)
{
    std::size_t width = 7;
    for (const auto& r : t.rows)
        width = std::max(width, r.name.size());
    auto pad = [&](const std::string& s) { return s + std::string(width - std::min(width, s.size()), ' '); };
    std::string out;
    char buf[128];
    auto line = [&](std::size_t idx, const ScoreRow& r) {
        std::snprintf(buf, sizeof buf, "%3s  %s  %7ld  %7ld  %7s\n", idx ? std::to_string(idx).c_str() : "",
                      pad(r.name).c_str(), r.correct, r.count, format_percent(r.percent).c_str());
        out += buf;
    };
    std::snprintf(buf, sizeof buf, "%3s  %s  %7s  %7s  %7s\n", "#", pad("Article").c_str(), "correct", "count",
                  "percent");
    out += buf;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        line(i + 1, t.rows[i]);
    line(0, t.total);
    std::snprintf(buf, sizeof buf, "%3s  %s  %7s  %7s  %7s\n", "", pad("Average").c_str(), "", "",
                  format_percent(t.average).c_str());
    out += buf;
    out += "total = micro average over questions; average = macro average over articles\n";
    return out;
}

// ---------------------------------------------------------------------------
// Question files

ParseResult<std::vector<Question>> parse_questions(std::string_view text, const std::string& base_dir)
{
    ParseResult<std::vector<Question>> result;
    std::vector<Question> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (blank_or_comment(line))
            continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            result.diagnostics.push_back(diag(line_no, 1, "expected qid<TAB>...", line));
            continue;
        }
        const auto qid = line.substr(0, tab);
        const auto rest = line.substr(tab + 1);
        if (out.empty() || out.back().qid != qid) {
            if (std::any_of(out.begin(), out.end(), [&](const Question& q) { return q.qid == qid; })) {
                result.diagnostics.push_back(diag(line_no, 1, "rows of question " + qid + " are not contiguous", qid));
                continue;
            }
            out.push_back(Question{qid, {}});
        }
        std::vector<DependencyTriple> triples;
        if (rest.find('\t') == std::string::npos) {
            const auto path = (fs::path(base_dir) / trim(rest)).string();
            std::string body;
            try {
                body = slurp(path, "question triples");
            } catch (const std::exception& e) {
                result.diagnostics.push_back(diag(line_no, tab + 2, e.what(), rest));
                continue;
            }
            auto parsed = parse_dependencies(body);
            if (!parsed) {
                for (auto d : parsed.diagnostics) {
                    d.message = path + ":" + std::to_string(d.line) + ": " + d.message;
                    d.line = line_no;
                    result.diagnostics.push_back(std::move(d));
                }
                continue;
            }
            triples = std::move(*parsed.value);
        } else {
            auto parsed = parse_dependencies(rest);
            if (!parsed) {
                for (auto d : parsed.diagnostics) {
                    d.line = line_no;
                    d.column += tab + 1;
                    result.diagnostics.push_back(std::move(d));
                }
                continue;
            }
            triples = std::move(*parsed.value);
        }
        auto& q = out.back().triples;
        q.insert(q.end(), triples.begin(), triples.end());
    }
    if (result.diagnostics.empty())
        result.value = std::move(out);
    return result;
}

ParseResult<std::vector<Question>> load_questions(const std::string& path)
{
    return parse_questions(slurp(path, "questions"), fs::path(path).parent_path().string());
}

ParseResult<GoldAnswers> parse_gold(std::string_view text)
{
    ParseResult<GoldAnswers> result;
    GoldAnswers out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (blank_or_comment(line))
            continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            result.diagnostics.push_back(diag(line_no, 1, "expected qid<TAB>answer|answer...", line));
            continue;
        }
        const auto qid = line.substr(0, tab);
        std::vector<std::string> answers;
        std::istringstream parts(line.substr(tab + 1));
        std::string a;
        while (std::getline(parts, a, '|')) {
            if (!trim(a).empty())
                answers.push_back(trim(a));
        }
        if (answers.empty()) {
            result.diagnostics.push_back(diag(line_no, tab + 2, "no gold answers for " + qid, qid));
            continue;
        }
        if (!out.emplace(qid, std::move(answers)).second)
            result.diagnostics.push_back(diag(line_no, 1, "duplicate qid " + qid, qid));
    }
    if (result.diagnostics.empty())
        result.value = std::move(out);
    return result;
}

ParseResult<GoldAnswers> load_gold(const std::string& path) { return parse_gold(slurp(path, "gold")); }

// ---------------------------------------------------------------------------
// Answering

QARecord answer_question(const Program& passage, const Program& kb, const Query& q, const SolverConfig& cfg)
{
    QARecord rec;
    rec.query = q;
    const auto combined = passage.extended(kb);
    const auto outcome = solve(combined, q, cfg);
    const bool yes_no = q.is_ground();
    if (outcome.status == SolveOutcome::Status::rejected) {
        rec.reason = std::string("rejected (") + to_string(outcome.rejection) + "): " + outcome.reason;
        return rec;
    }
    if (!outcome.succeeded() || outcome.answers.empty()) {
        if (yes_no) {
            rec.predicted = "no";
            rec.reason = "not derivable";
        } else {
            rec.reason = "no binding derivable";
        }
        if (outcome.status == SolveOutcome::Status::fallback_used)
            rec.reason += " (decided by stable-model fallback)";
        return rec;
    }
    const auto& first = outcome.answers.front();
    rec.justification = first.justification;
    rec.witness = first.witness;
    if (outcome.status == SolveOutcome::Status::fallback_used)
        rec.reason = "decided by stable-model fallback";
    if (yes_no) {
        rec.predicted = "yes";
        return rec;
    }
    const auto& b = first.bindings.bindings();
    auto it = b.find(answer_variable);
    if (it == b.end()) {
        // Query without the answer variable: report the first free variable.
        if (b.empty()) {
            rec.predicted = "yes";
            return rec;
        }
        it = b.begin();
    }
    rec.predicted = to_string(it->second);
    return rec;
}

Program assemble_kb(const Program& passage, const Query& q, const KnowledgeSources& src, const KbConfig& cfg)
{
    ContextProfile ctx;
    ctx.add_program(passage);
    ctx.add_query(q);
    auto kb = compile_kb(src.kb_triples, ctx, src.senses, cfg);
    return kb.program.extended(compile_theory(merge(src.defaults, kb.defaults)));
}

Passage load_passage(const std::string& path, const std::vector<PatternRule>& patterns)
{
    Passage out;
    if (fs::path(path).extension() == ".lp") {
        out.program = load_program_file(path);
        return out;
    }
    auto triples = load_dependencies(path);
    if (!triples)
        throw ParseError(triples.diagnostics);
    auto ex = extract(*triples.value, patterns);
    out.program = relations_to_program(ex.relations);
    out.coverage = std::move(ex.coverage);
    return out;
}

QaRun run_qa(const Program& passage, const std::vector<Question>& questions, const GoldAnswers& gold,
             const KnowledgeSources& src, const QaConfig& cfg)
{
    QaRun run;
    for (const auto& question : questions) {
        QARecord rec;
        try {
            const auto q = translate_question(question.triples, src.patterns);
            rec = answer_question(passage, assemble_kb(passage, q, src, cfg.kb), q, cfg.solver);
        } catch (const QuestionError& e) {
            rec.reason = std::string("question not translated: ") + e.what();
        }
        rec.qid = question.qid;
        if (auto g = gold.find(question.qid); g != gold.end())
            rec.gold = g->second;
        else if (rec.reason.empty())
            rec.reason = "no gold answers";
        rec.correct = match(rec.predicted, rec.gold);
        run.correct += rec.correct ? 1 : 0;
        run.records.push_back(std::move(rec));
    }
    return run;
}

std::string report_csv(const std::vector<QARecord>& records)
{
    std::string out = "qid,predicted,gold,correct,reason\n";
    for (const auto& r : records) {
        std::string gold;
        for (const auto& g : r.gold)
            gold += (gold.empty() ? "" : "|") + g;
        out += csv_field(r.qid) + "," + csv_field(r.predicted) + "," + csv_field(gold) + "," +
               (r.correct ? "true" : "false") + "," + csv_field(r.reason) + "\n";
    }
    return out;
}

Fixture load_fixture(const std::string& dir)
{
    const fs::path root(dir);
    auto need = [](auto parsed, const fs::path& p) {
        if (!parsed) {
            std::string msg = "cannot load " + p.string();
            if (!parsed.diagnostics.empty())
                msg += ": " + to_string(parsed.diagnostics.front());
            throw std::runtime_error(msg);
        }
        return std::move(*parsed.value);
    };
    Fixture f;
    f.name = root.filename().string();
    if (f.name.empty())
        f.name = root.parent_path().filename().string();
    const auto lp = root / "passage.lp";
    f.passage = load_passage((fs::exists(lp) ? lp : root / "passage.tsv").string(), f.sources.patterns);
    f.questions = need(load_questions((root / "questions.tsv").string()), root / "questions.tsv");
    f.gold = need(load_gold((root / "gold.tsv").string()), root / "gold.tsv");
    if (fs::exists(root / "kb.tsv"))
        f.sources.kb_triples = need(load_triples((root / "kb.tsv").string()), root / "kb.tsv");
    if (fs::exists(root / "senses.tsv"))
        f.sources.senses = need(load_senses((root / "senses.tsv").string()), root / "senses.tsv");
    if (fs::exists(root / "defaults.defaults"))
        f.sources.defaults = load_defaults_file((root / "defaults.defaults").string());
    return f;
}

} // namespace caspr
