#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "caspr/kb.hpp"
#include "caspr/oracle.hpp"
#include "caspr/parser.hpp"
#include "caspr/solver.hpp"
#include "support/paths.hpp"

using namespace caspr;

namespace {

std::vector<ConceptTriple> triples(const char* text)
{
    auto r = parse_triples(text);
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : to_string(r.diagnostics.front()));
    return r.value.value_or(std::vector<ConceptTriple>{});
}

ContextProfile context(const char* text)
{
    ContextProfile c;
    c.add_text(text);
    return c;
}

SenseIndex tree_senses()
{
    auto r = load_senses(paths::data("tree_senses.tsv"));
    EXPECT_TRUE(r.ok());
    return *r.value;
}

std::set<std::string> printed_rules(const Program& p)
{
    std::set<std::string> out;
    for (const auto& r : p.rules())
        out.insert(to_string(r));
    return out;
}

bool includes(const std::set<std::string>& big, const std::set<std::string>& small)
{
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

bool goal_succeeds(const Program& p, const char* q)
{
    return solve(p, parse_query_or_throw(q)).succeeded();
}

} // namespace

TEST(load_triples, part_of_line)
{
    auto t = triples("engine\tpart_of\ttrain\n");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0], (ConceptTriple{"engine", "part_of", "train", 1.0}));
}

TEST(load_triples, isa_line)
{
    auto t = triples("penguin\tisa\tbird");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0], (ConceptTriple{"penguin", "isa", "bird", 1.0}));
}

TEST(load_triples, unknown_relation_reports_line)
{
    auto r = parse_triples("penguin\tisa\tbird\ntree\tfoo\tplant\n");
    EXPECT_FALSE(r.ok());
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].line, 2u);
    EXPECT_EQ(r.diagnostics[0].column, 6u);
    EXPECT_EQ(r.diagnostics[0].token, "foo");
}

TEST(load_triples, malformed_lines)
{
    for (const char* bad : {"a\tisa", "a\tisa\tb\t1\tx", "A\tisa\tb", "a\tisa\tb\t-1", "a\tisa\tb\tlots", "a b\tisa\tc"}) {
        auto r = parse_triples(bad);
        EXPECT_FALSE(r.ok()) << bad;
        ASSERT_EQ(r.diagnostics.size(), 1u) << bad;
        EXPECT_EQ(r.diagnostics[0].line, 1u);
    }
}

TEST(load_triples, empty_input_is_empty_list)
{
    auto r = parse_triples("");
    ASSERT_TRUE(r.ok());
    EXPECT_TRUE(r.value->empty());
}

TEST(load_triples, duplicates_keep_max_weight)
{
    auto t = triples("a\tisa\tb\t0.5\nc\tisa\td\na\tisa\tb\t2\na\tisa\tb\t1.5\n");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0], (ConceptTriple{"a", "isa", "b", 2.0}));
    EXPECT_EQ(t[1].subject, "c");
}

TEST(load_triples, fixture_files_load)
{
    for (const char* f : {"kb/animals.tsv", "kb/trains.tsv"}) {
        auto r = load_triples(paths::data(f));
        EXPECT_TRUE(r.ok()) << f;
    }
    EXPECT_THROW(load_triples("/nonexistent/kb.tsv"), std::runtime_error);
}

TEST(load_senses, rejects_duplicate_and_empty_gloss)
{
    EXPECT_FALSE(parse_senses("tree\ttree#a\tx\ntree\ttree#a\ty\n").ok());
    EXPECT_FALSE(parse_senses("tree\ttree#a\t \n").ok());
    EXPECT_FALSE(parse_senses("tree\tbush#a\tx\n").ok());
    auto ok = parse_senses("tree\ttree#a\tx y\n");
    ASSERT_TRUE(ok.ok());
    EXPECT_EQ(ok.value->at("tree")[0].gloss_terms, (std::vector<std::string>{"x", "y"}));
    EXPECT_TRUE(ok.value->at("tree")[0].domain_tags.empty());
}

TEST(context_profile, lowercases_and_drops_stop_words)
{
    auto c = context("The Engine of the train, the ENGINE!");
    EXPECT_EQ(c.count("engine"), 2u);
    EXPECT_EQ(c.count("train"), 1u);
    EXPECT_EQ(c.count("the"), 0u);
    EXPECT_EQ(c.count("of"), 0u);
}

TEST(context_profile, harvests_program_and_query_constants)
{
    ContextProfile c;
    c.add_program(parse_program_or_throw("part_of(engine, train). event(break_down, engine)."));
    c.add_query(parse_query_or_throw("?- isa(X, vehicle)."));
    EXPECT_EQ(c.count("engine"), 2u);
    EXPECT_EQ(c.count("break"), 1u);
    EXPECT_EQ(c.count("vehicle"), 1u);
    EXPECT_EQ(c.count("part"), 0u) << "predicate names are not context";
}

TEST(disambiguate, computer_science_context)
{
    auto d = disambiguate("tree", tree_senses(), context("computer science node algorithm"));
    EXPECT_EQ(d.sense_id, "tree#data_structure");
    // One gloss overlap (node) plus the bonus for computer_science.
    EXPECT_DOUBLE_EQ(d.score, 3.0);
    ASSERT_EQ(d.scores.size(), 2u);
    EXPECT_DOUBLE_EQ(d.scores[1].score, 0.0);
}

TEST(disambiguate, botany_context)
{
    auto d = disambiguate("tree", tree_senses(), context("botany of the forest: a leaf falls from the trunk"));
    EXPECT_EQ(d.sense_id, "tree#plant");
    EXPECT_DOUBLE_EQ(d.score, 3.0 + 2.0);
}

TEST(disambiguate, single_sense_ignores_context)
{
    auto s = *parse_senses("bank\tbank#river\twater shore\n").value;
    EXPECT_EQ(disambiguate("bank", s, context("money loan account")).sense_id, "bank#river");
}

TEST(disambiguate, empty_context_takes_smallest_id)
{
    auto d = disambiguate("tree", tree_senses(), ContextProfile{});
    EXPECT_EQ(d.sense_id, "tree#data_structure");
    EXPECT_DOUBLE_EQ(d.score, 0.0);
}

TEST(disambiguate, multiplicity_counts_on_context_side)
{
    auto d = disambiguate("tree", tree_senses(), context("leaf leaf leaf node"));
    EXPECT_EQ(d.sense_id, "tree#plant");
    EXPECT_DOUBLE_EQ(d.score, 3.0);
}

TEST(disambiguate, unknown_word_throws)
{
    EXPECT_THROW(disambiguate("bush", tree_senses(), ContextProfile{}), std::invalid_argument);
}

TEST(disambiguate, scaling_context_keeps_the_choice)
{
    const auto senses = tree_senses();
    const std::vector<std::string> vocab{"node", "edge", "root", "child", "leaf", "trunk", "forest",
                                         "botany", "computer", "science", "algorithm", "river"};
    std::mt19937 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        ContextProfile base;
        const int n = std::uniform_int_distribution<int>(0, 8)(rng);
        for (int i = 0; i < n; ++i)
            base.add_text(vocab[rng() % vocab.size()]);
        const auto chosen = disambiguate("tree", senses, base).sense_id;
        const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 9)(rng);
        ContextProfile scaled;
        for (const auto& [term, count] : base.terms())
            scaled.add_text(term, count * k);
        EXPECT_EQ(disambiguate("tree", senses, scaled).sense_id, chosen) << "trial " << trial;
    }
}

TEST(compile_kb, penguin_inherits_flying)
{
    auto kb = compile_kb(triples("penguin\tisa\tbird\nbird\thas_property\tflies\n"), context("penguin"));
    ASSERT_EQ(kb.kept.size(), 2u);
    ASSERT_EQ(kb.defaults.defaults.size(), 1u);
    EXPECT_EQ(kb.defaults.defaults[0].name, "d_bird_flies");
    const auto passage = parse_program_or_throw("instance_of(tweety, penguin).");
    const auto full = passage.extended(kb.full_program());
    const auto q = parse_literal_or_throw("holds(tweety, flies)");
    EXPECT_TRUE(brave_entails(full, q));
    EXPECT_TRUE(goal_succeeds(full, "?- holds(tweety, flies)."));
    EXPECT_FALSE(goal_succeeds(full, "?- holds(tweety, swims)."));
}

TEST(compile_kb, exception_blocks_inherited_property)
{
    auto kb = compile_kb(triples("penguin\tisa\tbird\nbird\thas_property\tflies\n"), context("penguin"));
    kb.defaults.exceptions.push_back(ExceptionDecl{"d_bird_flies", parse_literal_or_throw("penguin(X)"), true});
    const auto passage = parse_program_or_throw("instance_of(tweety, penguin). instance_of(polly, bird). penguin(X) :- isa(X, penguin).");
    const auto full = passage.extended(kb.full_program());
    EXPECT_FALSE(brave_entails(full, parse_literal_or_throw("holds(tweety, flies)")));
    EXPECT_FALSE(goal_succeeds(full, "?- holds(tweety, flies)."));
    EXPECT_TRUE(goal_succeeds(full, "?- -holds(tweety, flies)."));
    EXPECT_TRUE(goal_succeeds(full, "?- holds(polly, flies)."));
}

TEST(compile_kb, emitted_rules)
{
    auto kb = compile_kb(*load_triples(paths::data("kb/trains.tsv")).value, context("engine"), {}, {3, 2.0});
    const auto rules = printed_rules(kb.program);
    for (const char* r : {"part_of(engine, train).", "part_of(wheel, engine).", "synonym(locomotive, engine).",
                          "part_of(X, Z) :- part_of(X, Y), part_of(Y, Z).", "synonym(X, Y) :- synonym(Y, X).",
                          "isa(X, Z) :- isa(X, Y), isa(Y, Z)."})
        EXPECT_TRUE(rules.count(r)) << r;
    EXPECT_TRUE(kb.defaults.empty());
    EXPECT_TRUE(goal_succeeds(kb.program, "?- part_of(wheel, train)."));
    EXPECT_TRUE(goal_succeeds(kb.program, "?- synonym(engine, locomotive)."));
}

TEST(compile_kb, unreachable_context_gives_empty_program)
{
    auto kb = compile_kb(*load_triples(paths::data("kb/trains.tsv")).value, context("banana"));
    EXPECT_TRUE(kb.program.rules().empty());
    EXPECT_TRUE(kb.kept.empty());
    EXPECT_TRUE(kb.defaults.empty());
}

TEST(compile_kb, hops_radius)
{
    const auto t = *load_triples(paths::data("kb/trains.tsv")).value;
    const auto one = compile_kb(t, context("wheel"), {}, {1, 2.0});
    const auto two = compile_kb(t, context("wheel"), {}, {2, 2.0});
    EXPECT_EQ(one.kept.size(), 1u);
    EXPECT_EQ(two.kept.size(), 3u);
    EXPECT_TRUE(includes(printed_rules(two.program), printed_rules(one.program)));
    EXPECT_THROW(compile_kb(t, context("wheel"), {}, {0, 2.0}), std::invalid_argument);
}

TEST(compile_kb, compound_tokens_match_by_parts)
{
    auto kb = compile_kb(triples("fire_engine\tisa\tvehicle\n"), context("the fire engine"));
    EXPECT_EQ(kb.kept.size(), 1u);
}

TEST(compile_kb, sense_tags_follow_disambiguation)
{
    const char* text = "tree#data_structure\tisa\tgraph\ntree#plant\tisa\tplant\nleaf\tpart_of\ttree#plant\n";
    auto cs = compile_kb(triples(text), context("tree node algorithm computer science"), tree_senses());
    EXPECT_EQ(cs.senses.at("tree").sense_id, "tree#data_structure");
    ASSERT_EQ(cs.kept.size(), 1u);
    EXPECT_EQ(cs.kept[0], (ConceptTriple{"tree", "isa", "graph", 1.0}));

    auto bot = compile_kb(triples(text), context("tree forest leaf botany"), tree_senses());
    EXPECT_EQ(bot.senses.at("tree").sense_id, "tree#plant");
    EXPECT_EQ(bot.kept.size(), 2u);
    EXPECT_TRUE(printed_rules(bot.program).count("part_of(leaf, tree)."));
}

TEST(compile_kb, unknown_sense_word_warns)
{
    auto kb = compile_kb(triples("bank#river\tisa\tshore\nbank#money\tisa\tinstitution\n"), context("bank"));
    ASSERT_EQ(kb.kept.size(), 1u);
    EXPECT_EQ(kb.kept[0].object, "institution");
    ASSERT_EQ(kb.warnings.size(), 1u);
}

TEST(compile_kb, isa_cycle_warns_and_terminates)
{
    auto kb = compile_kb(triples("x\tisa\ty\ny\tisa\tz\nz\tisa\tx\n"), context("x"), {}, {3, 2.0});
    EXPECT_EQ(kb.kept.size(), 3u);
    ASSERT_EQ(kb.warnings.size(), 1u);
    EXPECT_NE(kb.warnings[0].find("x -> y -> z -> x"), std::string::npos) << kb.warnings[0];
    EXPECT_TRUE(goal_succeeds(kb.program, "?- isa(x, x)."));
    EXPECT_TRUE(brave_entails(kb.program, parse_literal_or_throw("isa(z, y)")));
}

namespace {

// Independent reachability over a directed edge list.
bool reachable(const std::vector<std::pair<int, int>>& edges, int from, int to)
{
    std::set<int> seen;
    std::vector<int> stack;
    for (const auto& [a, b] : edges) {
        if (a == from)
            stack.push_back(b);
    }
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (n == to)
            return true;
        if (!seen.insert(n).second)
            continue;
        for (const auto& [a, b] : edges) {
            if (a == n)
                stack.push_back(b);
        }
    }
    return false;
}

std::string node(int i) { return "n" + std::to_string(i); }

} // namespace

TEST(compile_kb_property, isa_transitivity_matches_reachability)
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 6)(rng);
        std::vector<std::pair<int, int>> edges;
        std::string text;
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                if (rng() % 3 == 0) {
                    edges.emplace_back(a, b);
                    text += node(a) + "\tisa\t" + node(b) + "\n";
                }
            }
        }
        ContextProfile ctx;
        for (int i = 0; i < n; ++i)
            ctx.add_text(node(i));
        const auto kb = compile_kb(triples(text.c_str()), ctx, {}, {static_cast<std::size_t>(n), 2.0});
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                const std::string q = "?- isa(" + node(a) + ", " + node(b) + ").";
                EXPECT_EQ(goal_succeeds(kb.program, q.c_str()), reachable(edges, a, b)) << text << q;
            }
        }
    }
}

TEST(compile_kb_property, relevance_monotone_in_context_and_hops)
{
    const std::vector<std::string> rels{"isa", "part_of", "synonym", "has_property", "instance_of"};
    std::mt19937 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int m = std::uniform_int_distribution<int>(0, 10)(rng);
        for (int i = 0; i < m; ++i)
            text += node(rng() % 7) + "\t" + rels[rng() % rels.size()] + "\t" + node(rng() % 7) + "\n";
        const auto t = triples(text.c_str());
        ContextProfile small, large;
        for (int i = 0; i < 7; ++i) {
            const auto r = rng() % 3;
            if (r == 0)
                small.add_text(node(i));
            if (r != 2)
                large.add_text(node(i));
        }
        const std::size_t h = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
        const auto base = printed_rules(compile_kb(t, small, {}, {h, 2.0}).program);
        EXPECT_TRUE(includes(printed_rules(compile_kb(t, large, {}, {h, 2.0}).program), base)) << text;
        EXPECT_TRUE(includes(printed_rules(compile_kb(t, small, {}, {h + 1, 2.0}).program), base)) << text;
    }
}

TEST(compile_kb_property, output_round_trips_and_is_safe)
{
    const std::vector<std::string> rels{"isa", "part_of", "synonym", "has_property", "instance_of"};
    std::mt19937 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int m = std::uniform_int_distribution<int>(1, 10)(rng);
        for (int i = 0; i < m; ++i)
            text += node(rng() % 6) + "\t" + rels[rng() % rels.size()] + "\t" + node(rng() % 6) + "\n";
        ContextProfile ctx;
        ctx.add_text(node(rng() % 6));
        const auto full = compile_kb(triples(text.c_str()), ctx, {}, {2, 2.0}).full_program();
        const auto printed = to_string(full);
        auto again = parse_program(printed);
        ASSERT_TRUE(again.ok()) << printed;
        EXPECT_EQ(to_string(*again.value), printed);
        EXPECT_NO_THROW(check_safety(full)) << printed;
    }
}
