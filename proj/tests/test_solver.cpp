#include <gtest/gtest.h>

#include <random>

#include "caspr/oracle.hpp"
#include "caspr/parser.hpp"
#include "caspr/solver.hpp"
#include "support/paths.hpp"
#include "support/random_programs.hpp"
#include "support/reference.hpp"

using namespace caspr;

namespace {

const char* tweety_rules = R"(
bird(tweety).
flies(X) :- bird(X), not ab(d1(X)), not -flies(X).
ab(d1(X)) :- bird(X), penguin(X).
-flies(X) :- bird(X), penguin(X).
)";

SolveOutcome run(const std::string& program, const std::string& query, SolverConfig cfg = {})
{
    return solve(parse_program_or_throw(program), parse_query_or_throw(query), cfg);
}

void expect_replays(const std::string& program, const SolveOutcome& out)
{
    const Program p = parse_program_or_throw(program);
    for (const auto& a : out.answers) {
        for (const auto& j : a.justification) {
            auto r = replay_justification(p, j, a.witness ? &*a.witness : nullptr);
            EXPECT_TRUE(r.ok) << r.failure;
        }
    }
}

} // namespace

TEST(goal_solver, naf_rule_succeeds_with_assumption)
{
    const std::string prog = "p(a) :- not q(a).";
    auto out = run(prog, "?- p(a).");
    ASSERT_EQ(out.status, SolveOutcome::Status::success);
    ASSERT_EQ(out.answers.size(), 1u);
    const auto& j = out.answers[0].justification.at(0);
    EXPECT_EQ(j.kind, Justification::Kind::rule_application);
    EXPECT_EQ(j.rule_index, 0u);
    ASSERT_EQ(j.children.size(), 1u);
    EXPECT_EQ(j.children[0].kind, Justification::Kind::naf_assumption);
    EXPECT_EQ(to_string(j.children[0].conclusion), "q(a)");
    expect_replays(prog, out);
}

TEST(goal_solver, naf_rule_fails_once_q_is_known)
{
    EXPECT_EQ(run("p(a) :- not q(a). q(a).", "?- p(a).").status, SolveOutcome::Status::failure);
}

TEST(goal_solver, tweety_flies_without_penguin)
{
    auto out = run(tweety_rules, "?- flies(tweety).");
    EXPECT_EQ(out.status, SolveOutcome::Status::success);
    expect_replays(tweety_rules, out);
    EXPECT_TRUE(ref::brave(ref::stable_models(ref::rules_of("bird(tweety). flies(tweety) :- bird(tweety), "
                                                            "not ab(d1(tweety)), not -flies(tweety).")),
                           ref::lit("flies(tweety)")));
}

TEST(goal_solver, penguin_withdraws_flying)
{
    const std::string prog = std::string(tweety_rules) + "penguin(tweety).";
    EXPECT_EQ(run(prog, "?- flies(tweety).").status, SolveOutcome::Status::failure);
    auto neg = run(prog, "?- -flies(tweety).");
    EXPECT_EQ(neg.status, SolveOutcome::Status::success);
    expect_replays(prog, neg);
    auto all = answer_all(parse_program_or_throw(prog), parse_query_or_throw("?- -flies(X)."));
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(to_string(all[0]), "{X = tweety}");
}

TEST(goal_solver, answer_all_in_rule_order)
{
    const std::string prog = "bird(tweety). bird(sam). flies(X) :- bird(X), not ab(d1(X)), not -flies(X).";
    auto all = answer_all(parse_program_or_throw(prog), parse_query_or_throw("?- flies(X)."));
    ASSERT_EQ(all.size(), 2u);
    EXPECT_EQ(to_string(all[0]), "{X = tweety}");
    EXPECT_EQ(to_string(all[1]), "{X = sam}");
    EXPECT_TRUE(answer_all(Program{}, parse_query_or_throw("?- flies(X).")).empty());
}

TEST(goal_solver, max_answers_limits_collection)
{
    SolverConfig cfg;
    cfg.max_answers = 1;
    auto all = answer_all(parse_program_or_throw("b(x). b(y). b(z)."), parse_query_or_throw("?- b(X)."), cfg);
    EXPECT_EQ(all.size(), 1u);
}

TEST(goal_solver, even_loop_falls_back)
{
    auto out = run("p :- not q. q :- not p.", "?- p.");
    ASSERT_EQ(out.status, SolveOutcome::Status::fallback_used);
    ASSERT_TRUE(out.fallback);
    EXPECT_TRUE(out.fallback->verdict);
    EXPECT_EQ(out.fallback->slice_rules, 2u);
    EXPECT_TRUE(out.succeeded());
    expect_replays("p :- not q. q :- not p.", out);
}

TEST(goal_solver, odd_loop_falls_back_negative)
{
    auto out = run("p :- not p.", "?- p.");
    ASSERT_EQ(out.status, SolveOutcome::Status::fallback_used);
    EXPECT_FALSE(out.fallback->verdict);
    EXPECT_FALSE(out.succeeded());
}

TEST(goal_solver, fallback_disabled_rejects)
{
    SolverConfig cfg;
    cfg.fallback = false;
    auto out = run("p :- not q. q :- not p.", "?- p.", cfg);
    EXPECT_EQ(out.status, SolveOutcome::Status::rejected);
    EXPECT_EQ(out.rejection, SolveOutcome::Rejection::negative_loop);
}

TEST(goal_solver, rejects_non_ground_naf)
{
    auto out = run("p(X) :- not q(X).", "?- p(X).");
    EXPECT_EQ(out.status, SolveOutcome::Status::rejected);
    EXPECT_EQ(out.rejection, SolveOutcome::Rejection::non_ground_naf);
}

TEST(goal_solver, naf_is_delayed_until_ground)
{
    auto out = run("p(X) :- not q(X), r(X). r(a). r(b). q(a).", "?- p(X).");
    ASSERT_EQ(out.status, SolveOutcome::Status::success);
    ASSERT_EQ(out.answers.size(), 1u);
    EXPECT_EQ(to_string(out.answers[0].bindings), "{X = b}");
}

TEST(goal_solver, rejects_constraints)
{
    auto out = run("p. :- q.", "?- p.");
    EXPECT_EQ(out.rejection, SolveOutcome::Rejection::constraint);
}

TEST(goal_solver, depth_limit_reports_chain)
{
    SolverConfig cfg;
    cfg.max_depth = 50;
    auto out = run("n(z). n(s(X)) :- n(X).", "?- n(Y), fail(Y).", cfg);
    EXPECT_EQ(out.rejection, SolveOutcome::Rejection::depth);
    EXPECT_FALSE(out.call_chain.empty());
}

TEST(goal_solver, left_recursion_terminates)
{
    const std::string prog = "e(a, b). e(b, c). e(c, a). path(X, Y) :- path(X, Z), e(Z, Y). path(X, Y) :- e(X, Y).";
    auto all = answer_all(parse_program_or_throw(prog), parse_query_or_throw("?- path(a, Y)."));
    EXPECT_EQ(all.size(), 3u);
}

TEST(goal_solver, inconsistent_program_yields_no_success)
{
    // q holds in no stable model because of the odd loop on r.
    auto out = run("q. r :- not r, q.", "?- q.");
    EXPECT_EQ(out.status, SolveOutcome::Status::failure);
    EXPECT_TRUE(out.consistency_checked);
}

TEST(goal_solver, trace_lines_are_tab_separated)
{
    SolverConfig cfg;
    cfg.trace = true;
    auto out = run("p(a) :- not q(a).", "?- p(a).", cfg);
    ASSERT_FALSE(out.trace.empty());
    EXPECT_EQ(out.trace.front(), "0\tcall\tp(a)");
    bool saw_assume = false;
    for (const auto& line : out.trace)
        saw_assume = saw_assume || line.find("\tassume\tnot q(a)") != std::string::npos;
    EXPECT_TRUE(saw_assume);
}

TEST(goal_solver, format_is_deterministic)
{
    const std::string prog = std::string(tweety_rules) + "bird(sam).";
    auto q = parse_query_or_throw("?- flies(X).");
    auto a = format_outcome(run(prog, "?- flies(X)."), q, true, true);
    auto b = format_outcome(run(prog, "?- flies(X)."), q, true, true);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.find("X = tweety"), std::string::npos);
}

TEST(goal_solver_property, agrees_with_reference_on_random_programs)
{
    std::mt19937 rng(7);
    std::size_t rejected = 0, checked = 0;
    for (int i = 0; i < 300; ++i) {
        auto rules = gen::random_program(rng);
        const auto models = ref::stable_models(rules);
        Program p(rules);
        GoalSolver s(p);
        for (const auto& l : ref::literals_of(rules)) {
            for (const auto& q : {l, complement(l)}) {
                auto out = s.solve(make_query({BodyLiteral{q, false}}));
                if (out.status == SolveOutcome::Status::rejected) {
                    ++rejected;
                    continue;
                }
                ++checked;
                ASSERT_EQ(out.succeeded(), ref::brave(models, q))
                    << to_string(p) << "query " << to_string(q);
            }
        }
    }
    EXPECT_GT(checked, rejected);
}

TEST(goal_solver_property, stratified_never_rejects_or_falls_back)
{
    std::mt19937 rng(11);
    for (int i = 0; i < 200; ++i) {
        auto rules = gen::random_stratified_program(rng);
        const auto models = ref::stable_models(rules);
        ASSERT_EQ(models.size(), 1u);
        Program p(rules);
        GoalSolver s(p);
        for (const auto& l : ref::literals_of(rules)) {
            auto out = s.solve(make_query({BodyLiteral{l, false}}));
            ASSERT_TRUE(out.status == SolveOutcome::Status::success || out.status == SolveOutcome::Status::failure)
                << to_string(p) << to_string(l);
            ASSERT_EQ(out.succeeded(), models[0].count(l) > 0) << to_string(p) << to_string(l);
        }
    }
}

TEST(goal_solver_property, justifications_replay)
{
    std::mt19937 rng(5);
    for (int i = 0; i < 150; ++i) {
        auto rules = gen::random_program(rng);
        Program p(rules);
        GoalSolver s(p);
        for (const auto& l : ref::literals_of(rules)) {
            auto out = s.solve(make_query({BodyLiteral{l, false}}));
            for (const auto& a : out.answers) {
                for (const auto& j : a.justification) {
                    auto r = replay_justification(p, j, a.witness ? &*a.witness : nullptr);
                    ASSERT_TRUE(r.ok) << to_string(p) << r.failure;
                }
            }
        }
    }
}

TEST(solve_with_oracle, honours_constraints)
{
    const auto p = parse_program_or_throw("p :- not q. q :- not p. :- p.");
    EXPECT_EQ(solve(p, parse_query_or_throw("?- q.")).rejection, SolveOutcome::Rejection::constraint);
    const auto q = solve_with_oracle(p, parse_query_or_throw("?- q."));
    EXPECT_EQ(q.status, SolveOutcome::Status::success);
    ASSERT_EQ(q.answers.size(), 1u);
    ASSERT_TRUE(q.answers[0].witness);
    EXPECT_EQ(to_string(*q.answers[0].witness), "{q}");
    EXPECT_EQ(solve_with_oracle(p, parse_query_or_throw("?- p.")).status, SolveOutcome::Status::failure);
}

TEST(solve_with_oracle, bindings_and_replayable_trees)
{
    const auto p = load_program_file(paths::data("tweety_penguin.lp"));
    const auto out = solve_with_oracle(p, parse_query_or_throw("?- bird(X), -flies(X)."));
    ASSERT_EQ(out.answers.size(), 1u);
    EXPECT_EQ(to_string(out.answers[0].bindings), to_string(answer_all(p, parse_query_or_throw("?- bird(X), -flies(X).")).at(0)));
    for (const auto& j : out.answers[0].justification)
        EXPECT_TRUE(replay_justification(p, j, &*out.answers[0].witness).ok);
}

TEST(solve_with_oracle, rejections)
{
    const auto p = parse_program_or_throw("p(a). q(b).");
    EXPECT_EQ(solve_with_oracle(p, parse_query_or_throw("?- p(X), not q(Y).")).rejection,
              SolveOutcome::Rejection::non_ground_naf);
    SolverConfig tiny;
    tiny.oracle.ceiling = 5;
    const auto big = parse_program_or_throw("n(1). n(2). n(3). t(X, Y) :- n(X), n(Y).");
    EXPECT_EQ(solve_with_oracle(big, parse_query_or_throw("?- t(1, 2)."), tiny).rejection,
              SolveOutcome::Rejection::slice_too_large);
}
