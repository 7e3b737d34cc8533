#include "caspr/solver.hpp"

#include <pthread.h>

#include <algorithm>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace caspr {

namespace {

std::string relation_of(const Literal& l)
{
    return (l.negated ? "-" : "") + l.atom.predicate + "/" + std::to_string(l.atom.arity());
}

// Printed literal with variables renamed by order of first occurrence, so that
// variants share a key.
std::string variant_key(const Literal& l)
{
    if (l.is_ground())
        return to_string(l);
    std::vector<std::string> vars;
    collect_variables(l.atom, vars);
    if (vars.empty())
        return to_string(l);
    Substitution s;
    for (std::size_t i = 0; i < vars.size(); ++i)
        s.bind(vars[i], Term::variable("V" + std::to_string(i)));
    return to_string(s.apply(l));
}

struct NegativeLoop {
    std::vector<Literal> cycle;
};
struct DepthExceeded {
    std::vector<std::string> chain;
};
struct NonGroundNaf {
    Literal literal;
};

// Relation-level dependency analysis of a program.
struct DependencyInfo {
    std::map<std::string, std::vector<std::size_t>> rules_by_head;
    std::map<std::string, std::set<std::string>> edges;
    // Relations whose rules can make the program lack a consistent stable
    // model: members of a dependency cycle through `not`, and both halves of a
    // complementary pair p / -p that are each defined by some rule.
    std::set<std::string> risk;
    bool has_constraints = false;
};

DependencyInfo analyse(const Program& p)
{
    DependencyInfo info;
    std::map<std::string, std::set<std::string>> negative_edges;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Rule& r = p.rules()[i];
        if (!r.head) {
            info.has_constraints = true;
            continue;
        }
        const auto head = relation_of(*r.head);
        info.rules_by_head[head].push_back(i);
        auto& out = info.edges[head];
        for (const auto& b : r.body) {
            const auto rel = relation_of(b.literal);
            out.insert(rel);
            info.edges.try_emplace(rel);
            if (b.naf)
                negative_edges[head].insert(rel);
        }
    }

    // Tarjan's SCC over relations.
    std::map<std::string, int> index, low;
    std::set<std::string> on_stack;
    std::vector<std::string> stack;
    std::map<std::string, int> component;
    int counter = 0, components = 0;
    std::function<void(const std::string&)> connect = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto& w : info.edges[v]) {
            if (!index.count(w)) {
                connect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack.count(w)) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            while (true) {
                auto w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                component[w] = components;
                if (w == v)
                    break;
            }
            ++components;
        }
    };
    for (const auto& [v, _] : info.edges) {
        if (!index.count(v))
            connect(v);
    }
    std::set<int> risky_components;
    for (const auto& [from, tos] : negative_edges) {
        for (const auto& to : tos) {
            if (component[from] == component[to])
                risky_components.insert(component[from]);
        }
    }
    for (const auto& [rel, comp] : component) {
        if (risky_components.count(comp))
            info.risk.insert(rel);
    }
    for (const auto& [rel, _] : info.rules_by_head) {
        if (rel.front() == '-' && info.rules_by_head.count(rel.substr(1))) {
            info.risk.insert(rel);
            info.risk.insert(rel.substr(1));
        }
    }
    return info;
}

std::set<std::string> dependency_closure(const DependencyInfo& info, std::set<std::string> roots)
{
    std::vector<std::string> todo(roots.begin(), roots.end());
    while (!todo.empty()) {
        auto rel = todo.back();
        todo.pop_back();
        auto it = info.edges.find(rel);
        if (it == info.edges.end())
            continue;
        for (const auto& next : it->second) {
            if (roots.insert(next).second)
                todo.push_back(next);
        }
    }
    return roots;
}

// Rules whose head relation is in `rels`; origin maps slice index to program
// index.
Program slice_program(const Program& p, const std::set<std::string>& rels, std::vector<std::size_t>& origin)
{
    std::vector<Rule> rules;
    std::vector<std::string> prov;
    origin.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Rule& r = p.rules()[i];
        if (r.head && rels.count(relation_of(*r.head))) {
            rules.push_back(r);
            prov.push_back(p.provenance(i));
            origin.push_back(i);
        }
    }
    return Program(std::move(rules), std::move(prov));
}

// Proof DAG used while solving: tabled answers share subproofs, and a proof
// is turned into a Justification tree only when an answer is reported.
struct Proof;
using ProofPtr = std::shared_ptr<const Proof>;
struct Proof {
    Justification::Kind kind = Justification::Kind::fact;
    Literal conclusion;
    std::size_t rule_index = 0;
    std::vector<ProofPtr> children;
    bool ground = true;
    std::size_t depth = 1;
};

ProofPtr make_proof(Justification::Kind kind, Literal conclusion, std::size_t rule_index,
                    std::vector<ProofPtr> children)
{
    auto p = std::make_shared<Proof>();
    p->kind = kind;
    p->ground = conclusion.is_ground();
    p->conclusion = std::move(conclusion);
    p->rule_index = rule_index;
    for (const auto& c : children) {
        p->ground = p->ground && c->ground;
        p->depth = std::max(p->depth, c->depth + 1);
    }
    p->children = std::move(children);
    return p;
}

ProofPtr instantiate(const ProofPtr& p, const Substitution& s)
{
    if (p->ground)
        return p;
    std::vector<ProofPtr> children;
    for (const auto& c : p->children)
        children.push_back(instantiate(c, s));
    return make_proof(p->kind, s.apply(p->conclusion), p->rule_index, std::move(children));
}

void proof_variables(const Proof& p, std::vector<std::string>& out)
{
    if (p.ground)
        return;
    collect_variables(p.conclusion.atom, out);
    for (const auto& c : p.children)
        proof_variables(*c, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

Justification materialize(const Proof& p)
{
    Justification j;
    j.kind = p.kind;
    j.conclusion = p.conclusion;
    j.rule_index = p.rule_index;
    for (const auto& c : p.children)
        j.children.push_back(materialize(*c));
    return j;
}

Justification naf_node(const Literal& l)
{
    Justification j;
    j.kind = Justification::Kind::naf_assumption;
    j.conclusion = l;
    return j;
}

// Proofs read off a stable model: the least model of the reduct is built in
// stages and each literal is justified by the first rule instance deriving it.
class ModelProver {
public:
    ModelProver(const GroundProgram& g, const StableModel& m, const std::vector<std::size_t>& slice_origin)
        : g_(g), origin_(slice_origin)
    {
        std::set<Literal> model(m.literals.begin(), m.literals.end());
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t ri = 0; ri < g.rules.size(); ++ri) {
                const Rule& r = g.rules[ri];
                if (!r.head || support_.count(*r.head))
                    continue;
                bool fires = std::all_of(r.body.begin(), r.body.end(), [&](const BodyLiteral& b) {
                    return b.naf ? model.count(b.literal) == 0 : support_.count(b.literal) > 0;
                });
                if (fires) {
                    support_.emplace(*r.head, ri);
                    grew = true;
                }
            }
        }
    }

    Justification prove(const Literal& l) const
    {
        const std::size_t ri = support_.at(l);
        const Rule& r = g_.rules[ri];
        Justification j;
        j.conclusion = l;
        j.rule_index = origin_.at(g_.origin.at(ri));
        if (r.body.empty()) {
            j.kind = l.negated ? Justification::Kind::classical_fact : Justification::Kind::fact;
            return j;
        }
        j.kind = Justification::Kind::rule_application;
        for (const auto& b : r.body)
            j.children.push_back(b.naf ? naf_node(b.literal) : prove(b.literal));
        return j;
    }

private:
    const GroundProgram& g_;
    const std::vector<std::size_t>& origin_;
    std::map<Literal, std::size_t> support_;
};

FallbackResult run_fallback(const Program& p, const DependencyInfo& info, const Query& q,
                            const std::vector<Literal>& cycle, const SolverConfig& cfg, bool whole_program = false)
{
    std::vector<std::size_t> origin;
    Program slice;
    if (whole_program) {
        slice = p;
        for (std::size_t i = 0; i < p.size(); ++i)
            origin.push_back(i);
    } else {
        std::set<std::string> roots = info.risk;
        for (const auto& b : q.body)
            roots.insert(relation_of(b.literal));
        for (const auto& l : cycle)
            roots.insert(relation_of(l));
        slice = slice_program(p, dependency_closure(info, roots), origin);
    }

    FallbackResult result;
    result.slice_rules = slice.size();
    OracleConfig oc = cfg.oracle;
    oc.max_models.reset();
    const GroundProgram g = ground(slice, oc);
    const auto models = stable_models(g, oc);

    std::set<std::string> seen;
    for (const auto& m : models) {
        ModelProver prover(g, m, origin);
        std::vector<const BodyLiteral*> positives;
        for (const auto& b : q.body) {
            if (!b.naf)
                positives.push_back(&b);
        }
        Substitution s;
        std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
            if (i < positives.size()) {
                const Literal& pattern = positives[i]->literal;
                for (const auto& cand : m.literals) {
                    if (cand.negated != pattern.negated)
                        continue;
                    Substitution saved = s;
                    if (match_into(pattern.atom, cand.atom, s) && rec(i + 1))
                        return true;
                    s = std::move(saved);
                }
                return false;
            }
            std::vector<Justification> proofs;
            for (const auto& b : q.body) {
                Literal l = s.apply(b.literal);
                if (!l.is_ground())
                    throw NonGroundNaf{l};
                if (b.naf) {
                    if (m.contains(l))
                        return false;
                    proofs.push_back(naf_node(l));
                } else {
                    proofs.push_back(prover.prove(l));
                }
            }
            Substitution bindings = s.restricted(q.free_variables);
            if (seen.insert(to_string(bindings)).second) {
                result.answers.push_back(Answer{std::move(bindings), std::move(proofs), m});
                if (cfg.max_answers && result.answers.size() >= *cfg.max_answers)
                    return true;
            }
            return false;
        };
        if (rec(0))
            break;
    }
    result.verdict = !result.answers.empty();
    return result;
}

// Runs `fn` on a thread with a large stack; derivations recurse deeply.
void run_with_large_stack(const std::function<void()>& fn)
{
    struct Payload {
        const std::function<void()>* fn;
        std::exception_ptr error;
    } payload{&fn, nullptr};
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setstacksize(&attr, std::size_t{512} << 20);
    pthread_t thread;
    auto entry = [](void* arg) -> void* {
        auto* pl = static_cast<Payload*>(arg);
        try {
            (*pl->fn)();
        } catch (...) {
            pl->error = std::current_exception();
        }
        return nullptr;
    };
    if (pthread_create(&thread, &attr, entry, &payload) != 0) {
        pthread_attr_destroy(&attr);
        fn();
        return;
    }
    pthread_join(thread, nullptr);
    pthread_attr_destroy(&attr);
    if (payload.error)
        std::rethrow_exception(payload.error);
}

} // namespace

const char* to_string(SolveOutcome::Status s)
{
    switch (s) {
    case SolveOutcome::Status::success: return "success";
    case SolveOutcome::Status::failure: return "failure";
    case SolveOutcome::Status::fallback_used: return "fallback-used";
    case SolveOutcome::Status::rejected: return "rejected";
    }
    return "?";
}

const char* to_string(SolveOutcome::Rejection r)
{
    switch (r) {
    case SolveOutcome::Rejection::none: return "none";
    case SolveOutcome::Rejection::non_ground_naf: return "non-ground-naf";
    case SolveOutcome::Rejection::constraint: return "constraint";
    case SolveOutcome::Rejection::depth: return "depth";
    case SolveOutcome::Rejection::slice_too_large: return "slice-too-large";
    case SolveOutcome::Rejection::unsafe_slice: return "unsafe-slice";
    case SolveOutcome::Rejection::negative_loop: return "negative-loop";
    }
    return "?";
}

std::string to_string(const Justification& j, std::size_t indent)
{
    std::ostringstream os;
    os << std::string(indent * 2, ' ');
    switch (j.kind) {
    case Justification::Kind::fact:
    case Justification::Kind::classical_fact:
        os << to_string(j.conclusion) << "  [fact " << j.rule_index + 1 << "]\n";
        break;
    case Justification::Kind::rule_application:
        os << to_string(j.conclusion) << "  [rule " << j.rule_index + 1 << "]\n";
        break;
    case Justification::Kind::naf_assumption:
        os << "not " << to_string(j.conclusion) << "  [assumed]\n";
        break;
    }
    for (const auto& c : j.children)
        os << to_string(c, indent + 1);
    return os.str();
}

struct GoalSolver::Impl {
    using CallK = std::function<bool(const Substitution&, const ProofPtr&)>;
    using BodyK = std::function<bool(const Substitution&)>;

    struct TableEntry {
        std::vector<Literal> answers;
        std::vector<ProofPtr> proofs;
        std::unordered_set<std::string> seen;
    };
    struct Frame {
        std::string key;
        std::size_t naf_level;
        Literal call;
    };

    Program program;
    SolverConfig cfg;
    DependencyInfo info;
    std::optional<bool> consistent;

    // Per-query state.
    std::unordered_map<std::string, TableEntry> tables;
    std::unordered_map<std::string, bool> naf_memo;
    std::vector<Frame> ancestors;
    std::unordered_map<std::string, std::vector<std::size_t>> ancestor_levels;
    std::size_t naf_level = 0;
    std::size_t insertions = 0;
    std::size_t loop_hits = 0;
    std::size_t rename_counter = 0;
    std::size_t rounds = 0;
    std::vector<std::string>* trace = nullptr;

    Impl(Program p, SolverConfig c) : program(std::move(p)), cfg(std::move(c)), info(analyse(program)) {}

    void reset()
    {
        tables.clear();
        naf_memo.clear();
        ancestors.clear();
        ancestor_levels.clear();
        naf_level = 0;
        insertions = 0;
        loop_hits = 0;
        rename_counter = 0;
        rounds = 0;
    }

    void emit(std::size_t depth, const char* event, const std::string& what)
    {
        trace->push_back(std::to_string(depth) + "\t" + event + "\t" + what);
    }

    [[noreturn]] void too_deep(const Literal& last)
    {
        DepthExceeded e;
        for (const auto& f : ancestors)
            e.chain.push_back(to_string(f.call));
        e.chain.push_back(to_string(last));
        throw e;
    }

    void push_frame(Frame f)
    {
        ancestor_levels[f.key].push_back(f.naf_level);
        ancestors.push_back(std::move(f));
    }

    Frame pop_frame()
    {
        Frame f = std::move(ancestors.back());
        ancestors.pop_back();
        ancestor_levels[f.key].pop_back();
        return f;
    }

    void record(const std::string& key, const ProofPtr& proof)
    {
        if (proof->depth > cfg.max_depth)
            too_deep(proof->conclusion);
        auto& entry = tables[key];
        if (entry.seen.insert(variant_key(proof->conclusion)).second) {
            entry.answers.push_back(proof->conclusion);
            entry.proofs.push_back(proof);
            ++insertions;
        }
    }

    // Each extra round of the tabling fixpoint lengthens the derivations it can
    // find, so rounds count against the same budget as nested calls.
    void next_round(const Literal& goal)
    {
        if (++rounds > cfg.max_depth)
            too_deep(goal);
    }

    bool call(const Literal& goal_in, const Substitution& s, std::size_t depth, const CallK& k)
    {
        const Literal goal = s.apply(goal_in);
        if (depth > cfg.max_depth)
            too_deep(goal);
        const std::string key = variant_key(goal);
        if (auto it = ancestor_levels.find(key); it != ancestor_levels.end() && !it->second.empty()) {
            if (it->second.front() < naf_level) {
                NegativeLoop loop;
                bool inside = false;
                for (const auto& f : ancestors) {
                    inside = inside || f.key == key;
                    if (inside)
                        loop.cycle.push_back(f.call);
                }
                throw loop;
            }
            return consume_table(goal, key, s, depth, k);
        }

        if (trace)
            emit(depth, "call", to_string(goal));
        push_frame(Frame{key, naf_level, goal});
        bool stop = false;
        auto rules_it = info.rules_by_head.find(relation_of(goal));
        if (rules_it != info.rules_by_head.end()) {
            for (std::size_t idx : rules_it->second) {
                const Rule r = rename_apart(program.rules()[idx], ++rename_counter);
                Substitution s2 = s;
                if (!unify_into(r.head->atom, goal.atom, s2))
                    continue;
                std::vector<ProofPtr> slots(r.body.size());
                std::vector<bool> done(r.body.size(), false);
                stop = solve_body(r.body, done, slots, s2, depth + 1, [&](const Substitution& s3) {
                    std::vector<ProofPtr> children;
                    for (const auto& slot : slots)
                        children.push_back(instantiate(slot, s3));
                    Justification::Kind kind = Justification::Kind::rule_application;
                    if (r.body.empty())
                        kind = goal.negated ? Justification::Kind::classical_fact : Justification::Kind::fact;
                    ProofPtr proof = make_proof(kind, s3.apply(goal), idx, std::move(children));
                    record(key, proof);
                    if (trace)
                        emit(depth, "exit", to_string(proof->conclusion));
                    Frame self = pop_frame();
                    const bool st = k(s3, proof);
                    push_frame(std::move(self));
                    return st;
                });
                if (stop)
                    break;
            }
        }
        pop_frame();
        if (!stop && trace)
            emit(depth, "fail", to_string(goal));
        return stop;
    }

    // Positive loop: consume the answers tabled for this variant, including
    // those added while consuming.
    bool consume_table(const Literal& goal, const std::string& key, const Substitution& s, std::size_t depth,
                       const CallK& k)
    {
        ++loop_hits;
        if (trace)
            emit(depth, "call", to_string(goal));
        for (std::size_t i = 0;; ++i) {
            const TableEntry& entry = tables[key];
            if (i >= entry.answers.size())
                break;
            Literal answer = entry.answers[i];
            ProofPtr proof = entry.proofs[i];
            if (answer.negated != goal.negated)
                continue;
            if (!proof->ground) {
                std::vector<std::string> vars;
                proof_variables(*proof, vars);
                Substitution fresh;
                for (const auto& v : vars)
                    fresh.bind(v, Term::variable(v + "#" + std::to_string(++rename_counter)));
                proof = instantiate(proof, fresh);
                answer = proof->conclusion;
            }
            Substitution s2 = s;
            if (!unify_into(goal.atom, answer.atom, s2))
                continue;
            if (trace)
                emit(depth, "exit", to_string(s2.apply(goal)));
            if (k(s2, proof))
                return true;
        }
        if (trace)
            emit(depth, "fail", to_string(goal));
        return false;
    }

    bool solve_body(const std::vector<BodyLiteral>& body, std::vector<bool>& done, std::vector<ProofPtr>& slots,
                    const Substitution& s, std::size_t depth, const BodyK& k)
    {
        std::optional<std::size_t> pick;
        std::optional<std::size_t> first_pending;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (done[i])
                continue;
            if (!first_pending)
                first_pending = i;
            if (!body[i].naf || s.apply(body[i].literal).is_ground()) {
                pick = i;
                break;
            }
        }
        if (!first_pending)
            return k(s);
        if (!pick)
            throw NonGroundNaf{s.apply(body[*first_pending].literal)};

        const std::size_t i = *pick;
        if (body[i].naf) {
            const Literal l = s.apply(body[i].literal);
            if (provable(l, depth)) {
                if (trace)
                    emit(depth, "fail", "not " + to_string(l));
                return false;
            }
            if (trace)
                emit(depth, "assume", "not " + to_string(l));
            slots[i] = make_proof(Justification::Kind::naf_assumption, l, 0, {});
            done[i] = true;
            const bool stop = solve_body(body, done, slots, s, depth, k);
            done[i] = false;
            slots[i].reset();
            return stop;
        }
        return call(body[i].literal, s, depth, [&](const Substitution& s2, const ProofPtr& proof) {
            slots[i] = proof;
            done[i] = true;
            const bool stop = solve_body(body, done, slots, s2, depth, k);
            done[i] = false;
            slots[i].reset();
            return stop;
        });
    }

    // Finite failure check for a ground literal, memoised per query.
    bool provable(const Literal& l, std::size_t depth)
    {
        const std::string key = to_string(l);
        if (auto it = naf_memo.find(key); it != naf_memo.end())
            return it->second;
        ++naf_level;
        bool found = false;
        while (true) {
            const std::size_t ins = insertions, hits = loop_hits;
            call(l, Substitution{}, depth + 1, [&](const Substitution&, const ProofPtr&) {
                found = true;
                return true;
            });
            if (found || loop_hits == hits || insertions == ins)
                break;
            next_round(l);
        }
        --naf_level;
        naf_memo.emplace(key, found);
        return found;
    }

    void top_down(const Query& q, SolveOutcome& out)
    {
        std::set<std::string> seen;
        while (true) {
            const std::size_t ins = insertions, hits = loop_hits;
            std::vector<bool> done(q.body.size(), false);
            std::vector<ProofPtr> slots(q.body.size());
            const bool stop = solve_body(q.body, done, slots, Substitution{}, 0, [&](const Substitution& s) {
                Substitution bindings = s.restricted(q.free_variables);
                if (seen.insert(to_string(bindings)).second) {
                    Answer a;
                    a.bindings = std::move(bindings);
                    for (const auto& slot : slots)
                        a.justification.push_back(materialize(*instantiate(slot, s)));
                    out.answers.push_back(std::move(a));
                }
                return cfg.max_answers && out.answers.size() >= *cfg.max_answers;
            });
            if (stop || loop_hits == hits || insertions == ins)
                break;
            next_round(q.body.front().literal);
        }
    }

    bool program_consistent()
    {
        if (!consistent) {
            if (info.risk.empty()) {
                consistent = true;
            } else {
                std::vector<std::size_t> origin;
                const Program slice = slice_program(program, dependency_closure(info, info.risk), origin);
                consistent = has_stable_model(ground(slice, cfg.oracle), cfg.oracle);
            }
        }
        return *consistent;
    }

    SolveOutcome solve(const Query& q)
    {
        SolveOutcome out;
        reset();
        trace = cfg.trace ? &out.trace : nullptr;
        auto reject = [&](SolveOutcome::Rejection r, std::string reason) {
            out.status = SolveOutcome::Status::rejected;
            out.rejection = r;
            out.reason = std::move(reason);
            out.answers.clear();
        };
        if (info.has_constraints) {
            reject(SolveOutcome::Rejection::constraint,
                   "the goal-directed engine does not support integrity constraints; use the oracle engine");
            return out;
        }
        try {
            try {
                top_down(q, out);
                out.status = out.answers.empty() ? SolveOutcome::Status::failure : SolveOutcome::Status::success;
                if (!out.answers.empty() && !info.risk.empty()) {
                    out.consistency_checked = true;
                    if (!program_consistent()) {
                        out.answers.clear();
                        out.status = SolveOutcome::Status::failure;
                        out.reason = "program has no consistent stable model";
                    }
                }
            } catch (const NegativeLoop& loop) {
                out.answers.clear();
                if (!cfg.fallback) {
                    reject(SolveOutcome::Rejection::negative_loop,
                           "negative loop through " + to_string(loop.cycle.front()) + " and fallback is disabled");
                    return out;
                }
                auto fb = run_fallback(program, info, q, loop.cycle, cfg);
                out.status = SolveOutcome::Status::fallback_used;
                out.fallback = FallbackInfo{fb.verdict, fb.slice_rules, loop.cycle};
                out.answers = std::move(fb.answers);
            }
        } catch (const DepthExceeded& e) {
            out.call_chain = e.chain;
            std::string tail;
            const std::size_t from = e.chain.size() > 8 ? e.chain.size() - 8 : 0;
            for (std::size_t i = from; i < e.chain.size(); ++i)
                tail += (i > from ? " -> " : "") + e.chain[i];
            reject(SolveOutcome::Rejection::depth, "depth limit " + std::to_string(cfg.max_depth) +
                                                       " exceeded; call chain ends " + (from ? "... -> " : "") +
                                                       tail);
        } catch (const NonGroundNaf& e) {
            reject(SolveOutcome::Rejection::non_ground_naf,
                   "naf literal `not " + to_string(e.literal) + "` is not ground when selected");
        } catch (const CeilingExceeded& e) {
            reject(SolveOutcome::Rejection::slice_too_large, e.what());
        } catch (const UnsafeRule& e) {
            reject(SolveOutcome::Rejection::unsafe_slice, e.what());
        }
        trace = nullptr;
        reset();
        return out;
    }
};

GoalSolver::GoalSolver(Program program, SolverConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(program), std::move(cfg)))
{
}

GoalSolver::~GoalSolver() = default;
GoalSolver::GoalSolver(GoalSolver&&) noexcept = default;
GoalSolver& GoalSolver::operator=(GoalSolver&&) noexcept = default;

const Program& GoalSolver::program() const noexcept { return impl_->program; }
const SolverConfig& GoalSolver::config() const noexcept { return impl_->cfg; }

SolveOutcome GoalSolver::solve(const Query& q)
{
    SolveOutcome out;
    run_with_large_stack([&] { out = impl_->solve(q); });
    return out;
}

SolveOutcome solve(const Program& p, const Query& q, const SolverConfig& cfg)
{
    return GoalSolver(p, cfg).solve(q);
}

std::vector<Substitution> answer_all(const Program& p, const Query& q, const SolverConfig& cfg)
{
    auto out = solve(p, q, cfg);
    if (out.status == SolveOutcome::Status::rejected)
        throw std::runtime_error(std::string("query rejected (") + to_string(out.rejection) + "): " + out.reason);
    std::vector<Substitution> result;
    for (auto& a : out.answers)
        result.push_back(std::move(a.bindings));
    return result;
}

FallbackResult check_consistency_fallback(const Program& p, const Query& q, const std::vector<Literal>& naf_cycle_atoms,
                                          const SolverConfig& cfg)
{
    return run_fallback(p, analyse(p), q, naf_cycle_atoms, cfg);
}

SolveOutcome solve_with_oracle(const Program& p, const Query& q, const SolverConfig& cfg)
{
    SolveOutcome out;
    auto reject = [&](SolveOutcome::Rejection r, std::string reason) {
        out.status = SolveOutcome::Status::rejected;
        out.rejection = r;
        out.reason = std::move(reason);
    };
    try {
        auto fb = run_fallback(p, DependencyInfo{}, q, {}, cfg, true);
        out.answers = std::move(fb.answers);
        out.status = out.answers.empty() ? SolveOutcome::Status::failure : SolveOutcome::Status::success;
    } catch (const NonGroundNaf& e) {
        reject(SolveOutcome::Rejection::non_ground_naf,
               "naf literal `not " + to_string(e.literal) + "` is not ground after matching the positive literals");
    } catch (const CeilingExceeded& e) {
        reject(SolveOutcome::Rejection::slice_too_large, e.what());
    } catch (const UnsafeRule& e) {
        reject(SolveOutcome::Rejection::unsafe_slice, e.what());
    }
    return out;
}

namespace {

ReplayResult replay_node(const Program& p, const Justification& j, const StableModel* witness,
                         const SolverConfig& cfg)
{
    auto fail = [&](const std::string& why) {
        return ReplayResult{false, why + " at `" + to_string(j.conclusion) + "`"};
    };
    switch (j.kind) {
    case Justification::Kind::fact:
    case Justification::Kind::classical_fact: {
        if (j.rule_index >= p.size())
            return fail("rule index out of range");
        const Rule& r = p.rules()[j.rule_index];
        if (!r.is_fact() || !j.children.empty())
            return fail("not a fact");
        if ((j.kind == Justification::Kind::classical_fact) != j.conclusion.negated ||
            r.head->negated != j.conclusion.negated)
            return fail("sign mismatch");
        Substitution s;
        if (!match_into(r.head->atom, j.conclusion.atom, s))
            return fail("fact does not match");
        return {};
    }
    case Justification::Kind::rule_application: {
        if (j.rule_index >= p.size())
            return fail("rule index out of range");
        const Rule& r = p.rules()[j.rule_index];
        if (!r.head || r.body.empty())
            return fail("not a rule with a body");
        if (r.body.size() != j.children.size())
            return fail("child count differs from body length");
        if (r.head->negated != j.conclusion.negated)
            return fail("sign mismatch");
        Substitution s;
        if (!match_into(r.head->atom, j.conclusion.atom, s))
            return fail("head does not match");
        for (std::size_t i = 0; i < r.body.size(); ++i) {
            const auto& b = r.body[i];
            const auto& c = j.children[i];
            if (b.naf != (c.kind == Justification::Kind::naf_assumption))
                return fail("naf/plain mismatch in body literal " + std::to_string(i + 1));
            if (b.literal.negated != c.conclusion.negated || !match_into(b.literal.atom, c.conclusion.atom, s))
                return fail("body literal " + std::to_string(i + 1) + " inconsistent with the rule instance");
            auto sub = replay_node(p, c, witness, cfg);
            if (!sub.ok)
                return sub;
        }
        return {};
    }
    case Justification::Kind::naf_assumption: {
        if (!j.conclusion.is_ground())
            return fail("non-ground naf assumption");
        if (!j.children.empty())
            return fail("naf assumption with children");
        if (witness)
            return witness->contains(j.conclusion) ? fail("assumed literal holds in the witness model")
                                                   : ReplayResult{};
        auto out = solve(p, make_query({BodyLiteral{j.conclusion, false}}), cfg);
        if (out.status == SolveOutcome::Status::rejected)
            return fail(std::string("re-check rejected: ") + out.reason);
        if (out.succeeded())
            return fail("assumed literal is derivable");
        return {};
    }
    }
    return fail("unknown node kind");
}

} // namespace

ReplayResult replay_justification(const Program& p, const Justification& j, const StableModel* witness,
                                  const SolverConfig& cfg)
{
    return replay_node(p, j, witness, cfg);
}

std::string format_outcome(const SolveOutcome& o, const Query& q, bool all_answers, bool justify)
{
    std::ostringstream os;
    if (o.status == SolveOutcome::Status::rejected) {
        os << "rejected (" << to_string(o.rejection) << "): " << o.reason << '\n';
        return os.str();
    }
    if (o.fallback)
        os << "% negative loop delegated to the oracle (slice of " << o.fallback->slice_rules << " rules)\n";
    if (o.answers.empty()) {
        os << "no\n";
        return os.str();
    }
    const std::size_t n = all_answers ? o.answers.size() : 1;
    for (std::size_t i = 0; i < n; ++i) {
        const Answer& a = o.answers[i];
        if (q.free_variables.empty()) {
            os << "yes\n";
        } else {
            for (std::size_t v = 0; v < q.free_variables.size(); ++v) {
                const auto& name = q.free_variables[v];
                os << (v ? ", " : "") << name << " = ";
                const Term* t = a.bindings.lookup(name);
                os << (t ? to_string(*t) : name);
            }
            os << '\n';
        }
        if (justify) {
            for (const auto& j : a.justification)
                os << to_string(j, 1);
        }
    }
    return os.str();
}

} // namespace caspr
