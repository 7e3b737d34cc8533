// caspr: command-line front end for the solver, ingestion and QA harness.
//
// Exit status: 0 on success, 1 when inputs carry diagnostics or a solve is
// rejected, 2 on usage errors.

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "caspr/defaults.hpp"
#include "caspr/ingest.hpp"
#include "caspr/kb.hpp"
#include "caspr/oracle.hpp"
#include "caspr/parser.hpp"
#include "caspr/qa.hpp"
#include "caspr/solver.hpp"

using namespace caspr;
using json = nlohmann::json;

namespace {

// Raised after the diagnostics have been printed.
struct InputError {};

void report(const std::string& file, const std::vector<Diagnostic>& ds)
{
    for (const auto& d : ds)
        std::cerr << file << ":" << to_string(d) << "\n";
}

template <typename T>
T need(ParseResult<T> r, const std::string& file)
{
    if (!r) {
        report(file, r.diagnostics);
        throw InputError{};
    }
    return std::move(*r.value);
}

Program load_program(const std::string& path)
{
    try {
        return load_program_file(path);
    } catch (const ParseError& e) {
        report(path, e.diagnostics());
        throw InputError{};
    }
}

Query read_query(std::string text)
{
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos)
        text.clear();
    else if (text.compare(first, 2, "?-") != 0)
        text = "?- " + text;
    const auto last = text.find_last_not_of(" \t\r\n");
    if (last != std::string::npos && text[last] != '.')
        text = text.substr(0, last + 1) + ".";
    return need(parse_query(text), "query");
}

// Background knowledge flags shared by solve, repl and qa.
struct KnowledgeFlags {
    std::string kb_triples;
    std::string senses;
    std::string defaults;
    std::string patterns;
    std::size_t hops = 2;

    void add_to(CLI::App* app, bool with_patterns)
    {
        app->add_option("--kb-triples", kb_triples, "Concept triples TSV")->check(CLI::ExistingFile);
        app->add_option("--senses", senses, "Sense index TSV")->check(CLI::ExistingFile);
        app->add_option("--defaults", defaults, "Default theory (.defaults)")->check(CLI::ExistingFile);
        app->add_option("--hops", hops, "Relevance radius for KB import")->check(CLI::PositiveNumber);
        if (with_patterns)
            app->add_option("--patterns", patterns, "Pattern table")->check(CLI::ExistingFile);
    }

    KnowledgeSources load() const
    {
        KnowledgeSources src;
        if (!kb_triples.empty())
            src.kb_triples = need(load_triples(kb_triples), kb_triples);
        if (!senses.empty())
            src.senses = need(load_senses(senses), senses);
        if (!defaults.empty()) {
            try {
                src.defaults = load_defaults_file(defaults);
            } catch (const ParseError& e) {
                report(defaults, e.diagnostics());
                throw InputError{};
            }
        }
        if (!patterns.empty())
            src.patterns = need(load_patterns(patterns), patterns);
        return src;
    }

    bool any() const { return !kb_triples.empty() || !defaults.empty(); }
};

struct Session {
    Program program;
    KnowledgeSources sources;
    KbConfig kb;
    bool with_knowledge = false;
    std::string engine = "goal";
    SolverConfig cfg;

    Program combined(const Query& q) const
    {
        if (!with_knowledge)
            return program;
        return program.extended(assemble_kb(program, q, sources, kb));
    }

    // Prints the outcome; returns false when the solve was rejected.
    bool answer(const Query& q, bool all, bool justify, std::ostream& out) const
    {
        const auto p = combined(q);
        const auto o = engine == "oracle" ? solve_with_oracle(p, q, cfg) : solve(p, q, cfg);
        out << format_outcome(o, q, all, justify);
        for (const auto& line : o.trace)
            std::cerr << line << "\n";
        return o.status != SolveOutcome::Status::rejected;
    }
};

json record_json(const QARecord& r)
{
    json j{{"qid", r.qid},         {"predicted", r.predicted}, {"gold", r.gold},
           {"correct", r.correct}, {"reason", r.reason},       {"query", r.query ? to_string(*r.query) : ""}};
    json trees = json::array();
    for (const auto& t : r.justification)
        trees.push_back(to_string(t));
    j["justification"] = trees;
    return j;
}

json score_json(const ScoreTable& t)
{
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"article", r.name}, {"correct", r.correct}, {"count", r.count}, {"percent", r.percent}});
    return {{"rows", rows},
            {"total", {{"correct", t.total.correct}, {"count", t.total.count}, {"percent", t.total.percent}}},
            {"average", t.average}};
}

int run_repl(Session& s, bool justify, bool all)
{
    const bool interactive = isatty(STDIN_FILENO);
    std::string line;
    bool ok = true;
    while (true) {
        if (interactive)
            std::cout << "?- " << std::flush;
        if (!std::getline(std::cin, line))
            break;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '%')
            continue;
        line = line.substr(first);
        try {
            if (line == ":quit" || line == ":q")
                break;
            if (line == ":help") {
                std::cout << "queries: p(X), not q(X).   commands: :load FILE  :justify on|off  :all on|off  :quit\n";
            } else if (line.rfind(":load ", 0) == 0) {
                const auto path = line.substr(6);
                s.program = s.program.extended(load_program(path));
                std::cout << "% loaded " << path << " (" << s.program.size() << " rules)\n";
            } else if (line.rfind(":justify ", 0) == 0) {
                justify = line.substr(9) == "on";
            } else if (line.rfind(":all ", 0) == 0) {
                all = line.substr(5) == "on";
            } else if (line[0] == ':') {
                std::cout << "unknown command " << line << " (:help lists them)\n";
            } else {
                ok = s.answer(read_query(line), all, justify, std::cout) && ok;
            }
        } catch (const InputError&) {
            ok = false;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            ok = false;
        }
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"caspr: answer set programming with goal-directed solving, defaults and question answering"};
    app.require_subcommand(1);

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Answer a query against a program");
    std::string program_file, query_text, engine = "goal";
    bool all = false, justify = false, trace = false;
    std::size_t max_depth = SolverConfig{}.max_depth;
    KnowledgeFlags solve_kb;
    solve_cmd->add_option("--program", program_file, "Program file (.lp)")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--query", query_text, "Query, e.g. \"?- flies(X).\"")->required();
    solve_cmd->add_option("--engine", engine, "goal or oracle")->check(CLI::IsMember({"goal", "oracle"}));
    solve_cmd->add_flag("--all", all, "Print every answer");
    solve_cmd->add_flag("--justify", justify, "Print justification trees");
    solve_cmd->add_flag("--trace", trace, "Print the call trace to stderr");
    solve_cmd->add_option("--max-depth", max_depth, "Derivation depth limit")->check(CLI::PositiveNumber);
    solve_kb.add_to(solve_cmd, false);

    // models
    auto* models_cmd = app.add_subcommand("models", "Enumerate stable models");
    std::string models_program;
    std::optional<std::size_t> max_models, depth;
    std::size_t ceiling = OracleConfig{}.ceiling;
    models_cmd->add_option("--program", models_program, "Program file (.lp)")->required()->check(CLI::ExistingFile);
    models_cmd->add_option("--max", max_models, "Stop after N models");
    models_cmd->add_option("--depth", depth, "Term depth bound for grounding");
    models_cmd->add_option("--ceiling", ceiling, "Instantiation ceiling");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Translate dependency triples into facts");
    std::string triples_file, patterns_file, out_file;
    ingest_cmd->add_option("--triples", triples_file, "Dependency triples TSV")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--patterns", patterns_file, "Pattern table (default: built in)")->check(CLI::ExistingFile);
    ingest_cmd->add_option("--out", out_file, "Output program (default: stdout)");

    // qa
    auto* qa_cmd = app.add_subcommand("qa", "Answer a question set and write a report");
    std::string facts_file, questions_file, gold_file, report_file;
    bool as_json = false, qa_justify = false;
    KnowledgeFlags qa_kb;
    qa_cmd->add_option("--facts", facts_file, "Passage: .lp program or dependency triples TSV")
        ->required()
        ->check(CLI::ExistingFile);
    qa_cmd->add_option("--questions", questions_file, "Questions file")->required()->check(CLI::ExistingFile);
    qa_cmd->add_option("--gold", gold_file, "Gold answers file")->required()->check(CLI::ExistingFile);
    qa_cmd->add_option("--report", report_file, "Write the CSV report here");
    qa_cmd->add_flag("--json", as_json, "Print results as JSON");
    qa_cmd->add_flag("--justify", qa_justify, "Print justification trees");
    qa_kb.add_to(qa_cmd, true);

    // score
    auto* score_cmd = app.add_subcommand("score", "Score table from per-article results");
    std::string results_file;
    bool score_json_flag = false;
    score_cmd->add_option("--results", results_file, "CSV: article,correct,count")->required()->check(CLI::ExistingFile);
    score_cmd->add_flag("--json", score_json_flag, "Print as JSON");

    // repl
    auto* repl_cmd = app.add_subcommand("repl", "Interactive queries");
    std::string repl_program;
    std::string repl_engine = "goal";
    bool repl_justify = false, repl_all = false;
    KnowledgeFlags repl_kb;
    repl_cmd->add_option("--program", repl_program, "Program file (.lp)")->check(CLI::ExistingFile);
    repl_cmd->add_option("--engine", repl_engine, "goal or oracle")->check(CLI::IsMember({"goal", "oracle"}));
    repl_cmd->add_flag("--justify", repl_justify, "Print justification trees");
    repl_cmd->add_flag("--all", repl_all, "Print every answer");
    repl_kb.add_to(repl_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*solve_cmd) {
            Session s;
            s.program = load_program(program_file);
            s.sources = solve_kb.load();
            s.with_knowledge = solve_kb.any();
            s.kb.hops = solve_kb.hops;
            s.engine = engine;
            s.cfg.trace = trace;
            s.cfg.max_depth = max_depth;
            return s.answer(read_query(query_text), all, justify, std::cout) ? 0 : 1;
        }
        if (*models_cmd) {
            const auto p = load_program(models_program);
            OracleConfig oc;
            oc.depth_bound = depth;
            oc.ceiling = ceiling;
            oc.max_models = max_models;
            const auto ms = stable_models(p, oc);
            for (const auto& m : ms)
                std::cout << to_string(m) << "\n";
            std::cout << "% " << ms.size() << (ms.size() == 1 ? " model" : " models") << "\n";
            return 0;
        }
        if (*ingest_cmd) {
            const auto triples = need(load_dependencies(triples_file), triples_file);
            const auto patterns =
                patterns_file.empty() ? default_patterns() : need(load_patterns(patterns_file), patterns_file);
            const auto ex = extract(triples, patterns);
            const auto text = to_string_with_provenance(relations_to_program(ex.relations));
            if (out_file.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(out_file);
                if (!out) {
                    std::cerr << "cannot write " << out_file << "\n";
                    return 1;
                }
                out << text;
            }
            std::cerr << to_string(ex.coverage);
            return 0;
        }
        if (*qa_cmd) {
            auto src = qa_kb.load();
            const auto passage = load_passage(facts_file, src.patterns);
            const auto questions = need(load_questions(questions_file), questions_file);
            const auto gold = need(load_gold(gold_file), gold_file);
            QaConfig cfg;
            cfg.kb.hops = qa_kb.hops;
            const auto run = run_qa(passage.program, questions, gold, src, cfg);
            if (!report_file.empty()) {
                std::ofstream out(report_file);
                if (!out) {
                    std::cerr << "cannot write " << report_file << "\n";
                    return 1;
                }
                out << report_csv(run.records);
            }
            const double pct = run.records.empty() ? 0.0
                                                   : round2(100.0 * static_cast<double>(run.correct) /
                                                            static_cast<double>(run.records.size()));
            if (as_json) {
                json j{{"correct", run.correct}, {"total", run.records.size()}, {"percent", pct}};
                j["records"] = json::array();
                for (const auto& r : run.records)
                    j["records"].push_back(record_json(r));
                if (passage.coverage)
                    j["coverage"] = {{"consumed", passage.coverage->consumed}, {"total", passage.coverage->total}};
                std::cout << j.dump(2) << "\n";
            } else {
                for (const auto& r : run.records) {
                    std::string g;
                    for (const auto& a : r.gold)
                        g += (g.empty() ? "" : "|") + a;
                    std::cout << r.qid << "\t" << r.predicted << "\t" << (r.correct ? "correct" : "wrong") << "\t"
                              << g << "\t" << r.reason << "\n";
                    if (qa_justify) {
                        for (const auto& t : r.justification)
                            std::cout << to_string(t, 1);
                    }
                }
                if (passage.coverage)
                    std::cout << "% " << to_string(*passage.coverage);
                std::cout << "% correct " << run.correct << "/" << run.records.size() << " (" << format_percent(pct)
                          << "%)\n";
            }
            return 0;
        }
        if (*score_cmd) {
            const auto table = score_run(need(load_results(results_file), results_file));
            if (score_json_flag)
                std::cout << score_json(table).dump(2) << "\n";
            else
                std::cout << format_score_table(table);
            return 0;
        }
        if (*repl_cmd) {
            Session s;
            if (!repl_program.empty())
                s.program = load_program(repl_program);
            s.sources = repl_kb.load();
            s.with_knowledge = repl_kb.any();
            s.kb.hops = repl_kb.hops;
            s.engine = repl_engine;
            return run_repl(s, repl_justify, repl_all);
        }
    } catch (const InputError&) {
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
