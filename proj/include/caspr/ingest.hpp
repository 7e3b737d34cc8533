#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "caspr/parser.hpp"
#include "caspr/term.hpp"

namespace caspr {

struct Token {
    std::string text;
    std::string lemma;
    std::string pos; // coarse tag: NOUN, PROPN, VERB, ADJ, ...

    friend bool operator==(const Token&, const Token&) = default;
};

// One edge of a sentence's dependency parse.
struct DependencyTriple {
    std::string sentence_id;
    Token head;
    std::string relation;
    Token dependent;

    friend bool operator==(const DependencyTriple&, const DependencyTriple&) = default;
};

// nsubj dobj nmod_of nmod_in amod cop case root wh prt
bool is_dependency_label(std::string_view label);

// TSV, 8 columns:
//   sentence_id head_token head_lemma head_pos relation dep_token dep_lemma dep_pos
// Blank lines and lines starting with `%` are skipped.
ParseResult<std::vector<DependencyTriple>> parse_dependencies(std::string_view text);
ParseResult<std::vector<DependencyTriple>> load_dependencies(const std::string& path);

struct SemanticRelation {
    std::string kind; // part_of isa property event location
    std::vector<Term> args;
    std::string sentence_id;
    std::string pattern_id;

    Literal literal() const;
};

// Argument of a pattern template: Var, Var:POS, `_`, or a lemma constant.
struct PatternArg {
    enum class Kind { variable, wildcard, constant };
    Kind kind = Kind::wildcard;
    std::string name;
    std::string pos; // empty = any

    friend bool operator==(const PatternArg&, const PatternArg&) = default;
};

struct PatternAtom {
    std::string relation;
    std::vector<PatternArg> args;

    friend bool operator==(const PatternAtom&, const PatternAtom&) = default;
};

// pattern ID: rel(A:POS, B), ... => kind(A, B) [unless kind(_, B)].
struct PatternRule {
    std::string id;
    std::vector<PatternAtom> match;
    PatternAtom emit;
    std::optional<PatternAtom> unless;

    friend bool operator==(const PatternRule&, const PatternRule&) = default;
};

// Diagnostics name the pattern id for unbound emit variables, bad arities and
// unknown labels.
ParseResult<std::vector<PatternRule>> parse_patterns(std::string_view text);
ParseResult<std::vector<PatternRule>> load_patterns(const std::string& path);
// The table shipped as data/caspr.patterns, compiled in.
const std::vector<PatternRule>& default_patterns();
const char* default_patterns_text();

struct Coverage {
    std::size_t total = 0;
    std::size_t consumed = 0;
    std::vector<DependencyTriple> unconsumed;

    double percent() const noexcept { return total == 0 ? 100.0 : 100.0 * static_cast<double>(consumed) / static_cast<double>(total); }
};

std::string to_string(const Coverage& c);

struct Extraction {
    std::vector<SemanticRelation> relations;
    Coverage coverage;
};

// Applies the patterns sentence by sentence. Patterns without `unless` fire
// first; the rest fire afterwards unless their condition matches a relation
// emitted in the same sentence by the first pass. Output is deduplicated and
// ordered by sentence, then pattern, then match.
Extraction extract(const std::vector<DependencyTriple>& triples, const std::vector<PatternRule>& patterns);
std::vector<SemanticRelation> extract_relations(const std::vector<DependencyTriple>& triples,
                                                const std::vector<PatternRule>& patterns);

// One fact per distinct relation, provenance "sentence S, pattern P".
Program relations_to_program(const std::vector<SemanticRelation>& rels);

class QuestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The wh token becomes the variable X and is attached to its head as nmod_in
// (for `where`), else nsubj, else dobj, whichever the head lacks. Without a wh
// token the query is ground. Throws QuestionError for several wh tokens or
// when no pattern fires.
Query translate_question(const std::vector<DependencyTriple>& triples, const std::vector<PatternRule>& patterns);

inline constexpr const char* answer_variable = "X";

} // namespace caspr
