#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "caspr/defaults.hpp"
#include "caspr/parser.hpp"
#include "caspr/term.hpp"

namespace caspr {

// subject relation object [weight]. Tokens are lowercase identifiers and may
// carry a sense tag: tree#data_structure.
struct ConceptTriple {
    std::string subject;
    std::string relation; // isa, part_of, synonym, has_property, instance_of
    std::string object;
    double weight = 1.0;

    friend bool operator==(const ConceptTriple&, const ConceptTriple&) = default;
};

bool is_kb_relation(std::string_view r);

// TSV, 3 or 4 columns. Duplicates collapse to the first occurrence carrying
// the maximum weight. Any bad line makes the result carry diagnostics only.
ParseResult<std::vector<ConceptTriple>> parse_triples(std::string_view text);
ParseResult<std::vector<ConceptTriple>> load_triples(const std::string& path);

struct SenseEntry {
    std::string word;
    std::string sense_id;
    std::vector<std::string> gloss_terms;
    std::vector<std::string> domain_tags;
};

// word -> senses in file order.
using SenseIndex = std::map<std::string, std::vector<SenseEntry>>;

// TSV: word, sense_id, gloss terms (space separated), domain tags (space
// separated, optional column).
ParseResult<SenseIndex> parse_senses(std::string_view text);
ParseResult<SenseIndex> load_senses(const std::string& path);

// Bag of lowercase context terms with stop words removed.
class ContextProfile {
public:
    ContextProfile() = default;

    // Splits on anything that is not a letter or digit (so `_` separates too).
    void add_text(std::string_view text, std::size_t times = 1);
    void add_program(const Program& p);
    void add_query(const Query& q);

    std::size_t count(const std::string& term) const;
    bool empty() const noexcept { return terms_.empty(); }
    const std::map<std::string, std::size_t>& terms() const noexcept { return terms_; }

private:
    std::map<std::string, std::size_t> terms_;
};

bool is_stop_word(std::string_view w);

struct SenseScore {
    std::string sense_id;
    double score = 0;
};

struct Disambiguation {
    std::string sense_id;
    double score = 0;
    // Every candidate, in index order.
    std::vector<SenseScore> scores;
};

// score = sum over distinct gloss terms of their context count
//       + domain_bonus * sum over distinct domain tags of their context count.
// A tag like computer_science that is not itself a context term counts as
// the minimum count of its parts. Ties go to the smallest sense_id.
// Throws std::invalid_argument when the word has no senses.
Disambiguation disambiguate(const std::string& word, const SenseIndex& senses, const ContextProfile& ctx,
                            double domain_bonus = 2.0);

struct KbConfig {
    std::size_t hops = 2;
    double domain_bonus = 2.0;
};

struct CompiledKb {
    // Facts and structural rules (transitivity, symmetry, class membership).
    Program program;
    // One inheritance default per has_property triple.
    DefaultTheory defaults;
    // Triples kept after sense selection and the relevance filter.
    std::vector<ConceptTriple> kept;
    // Chosen sense per ambiguous word.
    std::map<std::string, Disambiguation> senses;
    std::vector<std::string> warnings;

    // program followed by the compiled defaults.
    Program full_program() const;
};

// Resolves word#sense tokens against `senses` and the context, then keeps the
// triples with an endpoint at most hops-1 steps from a context term, and
// compiles them. Throws std::invalid_argument for hops == 0.
CompiledKb compile_kb(const std::vector<ConceptTriple>& triples, const ContextProfile& ctx,
                      const SenseIndex& senses = {}, const KbConfig& cfg = {});

// Name of the inheritance default generated for has_property(cls, prop).
std::string inheritance_default_name(const std::string& cls, const std::string& prop);

} // namespace caspr
