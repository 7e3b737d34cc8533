#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caspr/defaults.hpp"
#include "caspr/ingest.hpp"
#include "caspr/kb.hpp"
#include "caspr/parser.hpp"
#include "caspr/solver.hpp"

namespace caspr {

// ---------------------------------------------------------------------------
// Answer matching

// Lowercase, `_` to space, trimmed, terminal punctuation and the articles
// a/an/the removed, inner whitespace collapsed.
std::string normalize_answer(std::string_view text);

// True iff the normalized prediction equals, contains, or is contained in
// some normalized gold answer. Empty predictions and "no-answer" never match.
bool match(const std::string& predicted, const std::vector<std::string>& gold);

inline constexpr const char* no_answer = "no-answer";

// ---------------------------------------------------------------------------
// Score tables

struct ArticleResult {
    std::string article;
    long correct = 0;
    long count = 0;
};

// CSV with columns article,correct,count; a header row is optional. Article
// names may be double-quoted.
ParseResult<std::vector<ArticleResult>> parse_results(std::string_view text);
ParseResult<std::vector<ArticleResult>> load_results(const std::string& path);

struct ScoreRow {
    std::string name;
    long correct = 0;
    long count = 0;
    double percent = 0; // rounded to 2 decimals
};

struct ScoreTable {
    std::vector<ScoreRow> rows;
    // Micro average: percent of the summed counts.
    ScoreRow total;
    // Macro average: mean of the unrounded article percents, then rounded.
    double average = 0;
};

// Throws std::invalid_argument for negative counts, correct > count, or an
// empty article.
ScoreTable score_run(const std::vector<ArticleResult>& results);

double round2(double x);
std::string format_percent(double p);
std::string format_score_table(const ScoreTable& t);

// ---------------------------------------------------------------------------
// Question answering

struct Question {
    std::string qid;
    std::vector<DependencyTriple> triples;
};

// Rows are either `qid<TAB>path` (triples file, relative to `base_dir`) or
// `qid<TAB>` followed by the 8 dependency columns. Consecutive rows of one
// qid accumulate; order of first appearance is kept.
ParseResult<std::vector<Question>> parse_questions(std::string_view text, const std::string& base_dir = ".");
ParseResult<std::vector<Question>> load_questions(const std::string& path);

// qid<TAB>answer1|answer2|...
using GoldAnswers = std::map<std::string, std::vector<std::string>>;
ParseResult<GoldAnswers> parse_gold(std::string_view text);
ParseResult<GoldAnswers> load_gold(const std::string& path);

struct QARecord {
    std::string qid;
    std::string predicted = no_answer;
    std::vector<std::string> gold;
    bool correct = false;
    // Why there is no answer, or how it was obtained when not plain success.
    std::string reason;
    std::optional<Query> query;
    std::vector<Justification> justification;
    std::optional<StableModel> witness;
};

// Solves `q` against passage followed by kb and renders the first answer: the
// binding of X, or yes/no for ground queries. Rejections become no-answer with
// the rejection in `reason`. qid and gold are left to the caller.
QARecord answer_question(const Program& passage, const Program& kb, const Query& q, const SolverConfig& cfg = {});

// Background knowledge for a QA run.
struct KnowledgeSources {
    std::vector<ConceptTriple> kb_triples;
    SenseIndex senses;
    DefaultTheory defaults;
    std::vector<PatternRule> patterns = default_patterns();
};

struct QaConfig {
    SolverConfig solver;
    KbConfig kb;
};

// The KB slice and defaults layer for one question: compile_kb over the
// context of passage and query, merged with the user defaults.
Program assemble_kb(const Program& passage, const Query& q, const KnowledgeSources& src, const KbConfig& cfg = {});

// A .lp file is loaded as is; anything else is read as dependency triples and
// run through the patterns.
struct Passage {
    Program program;
    std::optional<Coverage> coverage;
};
Passage load_passage(const std::string& path, const std::vector<PatternRule>& patterns = default_patterns());

struct QaRun {
    std::vector<QARecord> records; // question file order
    std::size_t correct = 0;
};

QaRun run_qa(const Program& passage, const std::vector<Question>& questions, const GoldAnswers& gold,
             const KnowledgeSources& src, const QaConfig& cfg = {});

// Columns qid,predicted,gold,correct,reason with RFC 4180 quoting.
std::string report_csv(const std::vector<QARecord>& records);

// A directory holding passage.tsv (or passage.lp), questions.tsv, gold.tsv and
// optionally kb.tsv, senses.tsv and defaults.defaults.
struct Fixture {
    std::string name;
    Passage passage;
    std::vector<Question> questions;
    GoldAnswers gold;
    KnowledgeSources sources;
};
Fixture load_fixture(const std::string& dir);

} // namespace caspr
