#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "json.hpp"

#include "caspr/parser.hpp"
#include "support/paths.hpp"
#include "support/run.hpp"

using json = nlohmann::json;

namespace {

std::string arg(const std::string& s) { return cli::quote(s); }

std::vector<std::vector<std::string>> tsv_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '%' || line[0] == ' ')
            continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            f.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos)
                break;
            start = tab + 1;
        }
        rows.push_back(f);
    }
    return rows;
}

std::string fixture_qa_args(const std::string& name)
{
    const auto dir = paths::data("passages/" + name) + "/";
    std::string args = "qa --facts " + arg(dir + "passage.tsv") + " --questions " + arg(dir + "questions.tsv") +
                       " --gold " + arg(dir + "gold.tsv");
    if (std::filesystem::exists(dir + "kb.tsv"))
        args += " --kb-triples " + arg(dir + "kb.tsv");
    if (std::filesystem::exists(dir + "senses.tsv"))
        args += " --senses " + arg(dir + "senses.tsv");
    return args;
}

} // namespace

TEST(cli_solve, tweety_with_justification)
{
    const auto r = cli::run("solve --program " + arg(paths::data("tweety.lp")) + " --query '?- flies(tweety).' --justify");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "yes\n"
                     "  flies(tweety)  [rule 2]\n"
                     "    bird(tweety)  [fact 1]\n"
                     "    not ab(d1(tweety))  [assumed]\n"
                     "    not -flies(tweety)  [assumed]\n");
}

TEST(cli_solve, engines_agree_on_fixtures)
{
    for (const char* q : {"?- flies(X).", "?- -flies(X).", "?- penguin(X).", "?- bird(X), not penguin(X)."}) {
        for (const char* file : {"tweety.lp", "tweety_penguin.lp"}) {
            const auto base = "solve --all --program " + arg(paths::data(file)) + " --query " + arg(q);
            const auto goal = cli::run(base);
            const auto oracle = cli::run(base + " --engine oracle");
            EXPECT_EQ(goal.status, 0);
            EXPECT_EQ(goal.out, oracle.out) << file << " " << q;
        }
    }
}

TEST(cli_solve, query_without_prefix_or_period)
{
    const auto r = cli::run("solve --program " + arg(paths::data("tweety.lp")) + " --query 'bird(X)'");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "X = tweety\n");
}

TEST(cli_solve, rejection_exits_one)
{
    const auto tmp = std::filesystem::temp_directory_path() / "caspr_cli_constraint.lp";
    {
        std::ofstream(tmp) << "p :- not q.\n:- p.\n";
    }
    const auto goal = cli::run("solve --program " + arg(tmp.string()) + " --query '?- p.'");
    EXPECT_EQ(goal.status, 1);
    EXPECT_NE(goal.out.find("rejected (constraint)"), std::string::npos) << goal.out;
    const auto oracle = cli::run("solve --engine oracle --program " + arg(tmp.string()) + " --query '?- p.'");
    EXPECT_EQ(oracle.status, 0);
    EXPECT_EQ(oracle.out, "no\n");
    std::filesystem::remove(tmp);
}

TEST(cli_solve, parse_errors_exit_one_with_position)
{
    const auto tmp = std::filesystem::temp_directory_path() / "caspr_cli_broken.lp";
    {
        std::ofstream(tmp) << "p(a).\nq(X :- p(X).\n";
    }
    const auto r = cli::run("solve --program " + arg(tmp.string()) + " --query '?- q(a).'", true);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find(tmp.string() + ":2:"), std::string::npos) << r.out;
    const auto bad_query = cli::run("solve --program " + arg(paths::data("tweety.lp")) + " --query '?- p(.'", true);
    EXPECT_EQ(bad_query.status, 1);
    EXPECT_NE(bad_query.out.find("query:1:"), std::string::npos) << bad_query.out;
    std::filesystem::remove(tmp);
}

TEST(cli_usage, errors_exit_two)
{
    EXPECT_EQ(cli::run("").status, 2);
    EXPECT_EQ(cli::run("frobnicate").status, 2);
    const auto flag = cli::run("solve --program " + arg(paths::data("tweety.lp")) + " --query 'p.' --nope", true);
    EXPECT_EQ(flag.status, 2);
    EXPECT_NE(flag.out.find("--nope"), std::string::npos);
    EXPECT_EQ(cli::run("solve --query 'p.'").status, 2);
    EXPECT_EQ(cli::run("solve --program /nonexistent.lp --query 'p.'").status, 2);
    EXPECT_EQ(cli::run("solve --program " + arg(paths::data("tweety.lp")) + " --query 'p.' --engine magic").status, 2);
    EXPECT_EQ(cli::run("--help").status, 0);
}

TEST(cli_models, pq)
{
    const auto r = cli::run("models --program " + arg(paths::data("pq.lp")));
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "{p}\n{q}\n% 2 models\n");
    EXPECT_EQ(cli::run("models --max 1 --program " + arg(paths::data("pq.lp"))).out, "{p}\n% 1 model\n");
}

TEST(cli_models, ceiling_is_a_diagnostic)
{
    const auto tmp = std::filesystem::temp_directory_path() / "caspr_cli_big.lp";
    {
        std::ofstream out(tmp);
        for (int i = 0; i < 30; ++i)
            out << "n(" << i << ").\n";
        out << "t(X, Y, Z) :- n(X), n(Y), n(Z).\n";
    }
    const auto r = cli::run("models --ceiling 1000 --program " + arg(tmp.string()), true);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("error:"), std::string::npos) << r.out;
    std::filesystem::remove(tmp);
}

TEST(cli_score, table_and_json_agree)
{
    const auto human = cli::run("score --results " + arg(paths::data("table1.csv")));
    const auto js = cli::run("score --json --results " + arg(paths::data("table1.csv")));
    ASSERT_EQ(human.status, 0);
    ASSERT_EQ(js.status, 0);
    const auto j = json::parse(js.out);
    ASSERT_EQ(j["rows"].size(), 20u);
    for (const auto& row : j["rows"]) {
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.2f", row["percent"].get<double>());
        const auto name = row["article"].get<std::string>();
        const auto at = human.out.find(name);
        ASSERT_NE(at, std::string::npos) << name;
        const auto line = human.out.substr(at, human.out.find('\n', at) - at);
        EXPECT_NE(line.find(pct), std::string::npos) << line;
    }
    EXPECT_DOUBLE_EQ(j["total"]["percent"].get<double>(), 78.95);
    EXPECT_DOUBLE_EQ(j["average"].get<double>(), 77.76);
    EXPECT_NE(human.out.find("78.95"), std::string::npos);
    EXPECT_NE(human.out.find("77.76"), std::string::npos);
}

TEST(cli_ingest, writes_a_parseable_program)
{
    const auto out = std::filesystem::temp_directory_path() / "caspr_cli_train.lp";
    const auto r = cli::run("ingest --triples " + arg(paths::data("passages/train/passage.tsv")) + " --patterns " +
                                arg(paths::data("caspr.patterns")) + " --out " + arg(out.string()),
                            true);
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("coverage: 5/5"), std::string::npos) << r.out;
    const auto p = caspr::load_program_file(out.string());
    EXPECT_EQ(caspr::to_string(p), "part_of(engine, train).\nevent(break_down, engine).\n");
    std::filesystem::remove(out);
}

TEST(cli_qa, json_and_text_carry_the_same_records)
{
    for (const char* name : {"train", "tweety", "forest_tree"}) {
        const auto report = std::filesystem::temp_directory_path() / "caspr_cli_report.csv";
        const auto human = cli::run(fixture_qa_args(name) + " --report " + arg(report.string()));
        const auto js = cli::run(fixture_qa_args(name) + " --json");
        ASSERT_EQ(human.status, 0) << name;
        ASSERT_EQ(js.status, 0) << name;
        const auto j = json::parse(js.out);
        const auto rows = tsv_rows(human.out);
        ASSERT_EQ(rows.size(), j["records"].size()) << name;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& rec = j["records"][i];
            std::string gold;
            for (const auto& g : rec["gold"])
                gold += (gold.empty() ? "" : "|") + g.get<std::string>();
            ASSERT_EQ(rows[i].size(), 5u);
            EXPECT_EQ(rows[i][0], rec["qid"].get<std::string>());
            EXPECT_EQ(rows[i][1], rec["predicted"].get<std::string>());
            EXPECT_EQ(rows[i][2] == "correct", rec["correct"].get<bool>());
            EXPECT_EQ(rows[i][3], gold);
            EXPECT_EQ(rows[i][4], rec["reason"].get<std::string>());
        }
        EXPECT_EQ(j["correct"].get<std::size_t>(), j["total"].get<std::size_t>()) << name;
        const auto csv = paths::slurp(report.string());
        EXPECT_EQ(csv.rfind("qid,predicted,gold,correct,reason\n", 0), 0u);
        EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(rows.size() + 1));
        std::filesystem::remove(report);
    }
}

TEST(cli_repl, matches_batch_solve)
{
    const std::vector<std::string> queries{"?- flies(X).", "-flies(tweety)", "?- bird(X), not penguin(X).",
                                           "?- p(X), not q(Y)."};
    const auto program = paths::data("tweety_penguin.lp");
    std::string batch;
    std::string input;
    for (const auto& q : queries) {
        batch += cli::run("solve --justify --program " + arg(program) + " --query " + arg(q)).out;
        input += q + "\n";
    }
    const auto repl = cli::run("repl --justify --program " + arg(program), false, input + ":quit\n");
    EXPECT_EQ(repl.out, batch);
}

TEST(cli_repl, load_and_toggles)
{
    const std::string input = "flies(tweety)\n:load " + paths::data("tweety.lp") + "\n:justify on\nflies(tweety)\n:bogus\n";
    const auto r = cli::run("repl", false, input);
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("no\n% loaded"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("yes\n  flies(tweety)  [rule 2]"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("unknown command :bogus"), std::string::npos) << r.out;
}

TEST(cli_repl, kb_flags_compile_background_knowledge)
{
    const auto tmp = std::filesystem::temp_directory_path() / "caspr_cli_penguin.lp";
    {
        std::ofstream(tmp) << "instance_of(tweety, penguin).\n";
    }
    const auto args = "--program " + arg(tmp.string()) + " --kb-triples " + arg(paths::data("kb/animals.tsv"));
    const auto solved = cli::run("solve " + args + " --query '?- holds(tweety, flies).'");
    EXPECT_EQ(solved.out, "yes\n");
    const auto repl = cli::run("repl " + args, false, "holds(tweety, flies)\nisa(tweety, animal)\n");
    EXPECT_EQ(repl.out, "yes\nyes\n");
    std::filesystem::remove(tmp);
}
