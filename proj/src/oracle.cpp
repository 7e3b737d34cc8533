#include "caspr/oracle.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "caspr/parser.hpp"

namespace caspr {

bool StableModel::contains(const Literal& l) const
{
    return std::find(literals.begin(), literals.end(), l) != literals.end();
}

std::string to_string(const StableModel& m)
{
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < m.literals.size(); ++i) {
        if (i)
            os << ", ";
        os << to_string(m.literals[i]);
    }
    os << '}';
    return os.str();
}

std::vector<std::string> unsafe_variables(const Rule& r)
{
    std::vector<std::string> all;
    collect_variables(r, all);
    std::vector<std::string> bound;
    for (const auto& b : r.body) {
        if (!b.naf)
            collect_variables(b.literal.atom, bound);
    }
    std::vector<std::string> out;
    for (const auto& v : all) {
        if (std::find(bound.begin(), bound.end(), v) == bound.end())
            out.push_back(v);
    }
    return out;
}

void check_safety(const Program& p)
{
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& r = p.rules()[i];
        auto bad = unsafe_variables(r);
        if (bad.empty())
            continue;
        std::string vars;
        for (const auto& v : bad)
            vars += (vars.empty() ? "" : ", ") + v;
        throw UnsafeRule("unsafe rule " + std::to_string(i + 1) + " `" + to_string(r) + "`: variable(s) " +
                         vars + " occur in no positive body literal; add a domain guard such as c(" +
                         bad.front() + ") to the body");
    }
}

std::size_t max_term_depth(const Program& p)
{
    std::size_t d = 0;
    auto visit = [&d](const Atom& a) {
        for (const auto& t : a.args)
            d = std::max(d, t.depth());
    };
    for (const auto& r : p.rules()) {
        if (r.head)
            visit(r.head->atom);
        for (const auto& b : r.body)
            visit(b.literal.atom);
    }
    return d;
}

namespace {

// Relation key: sign, predicate and arity.
std::string relation_key(const Literal& l)
{
    return (l.negated ? "-" : "") + l.atom.predicate + "/" + std::to_string(l.atom.arity());
}

std::size_t literal_depth(const Literal& l)
{
    std::size_t d = 0;
    for (const auto& t : l.atom.args)
        d = std::max(d, t.depth());
    return d;
}

class LiteralStore {
public:
    bool insert(const Literal& l)
    {
        if (!seen_.insert(l).second)
            return false;
        by_relation_[relation_key(l)].push_back(l);
        return true;
    }
    const std::vector<Literal>& relation(const std::string& key) const
    {
        static const std::vector<Literal> none;
        auto it = by_relation_.find(key);
        return it == by_relation_.end() ? none : it->second;
    }
    std::size_t size() const { return seen_.size(); }

private:
    std::set<Literal> seen_;
    std::unordered_map<std::string, std::vector<Literal>> by_relation_;
};

// Enumerates substitutions that map every positive body literal of `r` onto a
// literal of `store`.
template <typename F>
void join_positive(const Rule& r, const LiteralStore& store, F&& emit)
{
    std::vector<const Literal*> positives;
    for (const auto& b : r.body) {
        if (!b.naf)
            positives.push_back(&b.literal);
    }
    Substitution s;
    auto rec = [&](auto& self, std::size_t i) -> void {
        if (i == positives.size()) {
            emit(s);
            return;
        }
        const Literal& pattern = *positives[i];
        for (const auto& cand : store.relation(relation_key(pattern))) {
            Substitution saved = s;
            if (match_into(pattern.atom, cand.atom, s))
                self(self, i + 1);
            s = std::move(saved);
        }
    };
    rec(rec, 0);
}

} // namespace

GroundProgram ground(const Program& p, const OracleConfig& cfg)
{
    check_safety(p);
    const std::size_t depth = cfg.depth_bound.value_or(max_term_depth(p));

    // Over-approximate the derivable literals: fixpoint of the rules with naf
    // literals ignored.
    LiteralStore possible;
    bool changed = true;
    while (changed) {
        changed = false;
        std::size_t work = 0;
        for (const auto& r : p.rules()) {
            if (!r.head)
                continue;
            std::vector<Literal> heads;
            join_positive(r, possible, [&](const Substitution& s) {
                if (++work > cfg.ceiling)
                    throw CeilingExceeded("grounding exceeds the instantiation ceiling of " +
                                              std::to_string(cfg.ceiling),
                                          work);
                heads.push_back(s.apply(*r.head));
            });
            for (const auto& h : heads) {
                if (literal_depth(h) <= depth && possible.insert(h))
                    changed = true;
            }
        }
    }

    GroundProgram g;
    std::set<Literal> base;
    for (std::size_t ri = 0; ri < p.size(); ++ri) {
        const Rule& r = p.rules()[ri];
        join_positive(r, possible, [&](const Substitution& s) {
            Rule inst = s.apply(r);
            if (inst.head && literal_depth(*inst.head) > depth)
                return;
            if (++g.instantiations > cfg.ceiling)
                throw CeilingExceeded("grounding exceeds the instantiation ceiling of " +
                                          std::to_string(cfg.ceiling),
                                      g.instantiations);
            if (inst.head)
                base.insert(*inst.head);
            for (const auto& b : inst.body)
                base.insert(b.literal);
            g.rules.push_back(std::move(inst));
            g.origin.push_back(ri);
        });
    }
    g.base.assign(base.begin(), base.end());
    return g;
}

GroundProgram reduct(const GroundProgram& g, const std::set<Literal>& candidate)
{
    GroundProgram out;
    out.base = g.base;
    for (std::size_t ri = 0; ri < g.rules.size(); ++ri) {
        const Rule& r = g.rules[ri];
        bool blocked = std::any_of(r.body.begin(), r.body.end(), [&](const BodyLiteral& b) {
            return b.naf && candidate.count(b.literal) > 0;
        });
        if (blocked)
            continue;
        Rule kept;
        kept.head = r.head;
        for (const auto& b : r.body) {
            if (!b.naf)
                kept.body.push_back(b);
        }
        out.rules.push_back(std::move(kept));
        if (ri < g.origin.size())
            out.origin.push_back(g.origin[ri]);
    }
    out.instantiations = out.rules.size();
    return out;
}

namespace {

struct IndexedRule {
    int head = -1; // -1: constraint
    std::vector<int> pos;
    std::vector<int> naf;
};

// Enumerates models by guessing the truth of every naf literal that some rule
// can derive. A stable model M is determined by M ∩ guessed: the reduct only
// depends on it. Each guess G yields at most one model, the least model L of
// the reduct under G, accepted when L ∩ guessed == G.
class Enumerator {
public:
    explicit Enumerator(const GroundProgram& g)
    {
        for (const auto& l : g.base)
            id(l);
        for (const auto& r : g.rules) {
            IndexedRule ir;
            if (r.head)
                ir.head = id(*r.head);
            for (const auto& b : r.body)
                (b.naf ? ir.naf : ir.pos).push_back(id(b.literal));
            rules_.push_back(std::move(ir));
        }
        std::vector<bool> derivable(literals_.size(), false);
        for (const auto& r : rules_) {
            if (r.head >= 0)
                derivable[r.head] = true;
        }
        std::vector<bool> in_guess(literals_.size(), false);
        for (const auto& r : rules_) {
            for (int n : r.naf) {
                if (derivable[n] && !in_guess[n]) {
                    in_guess[n] = true;
                    guessed_.push_back(n);
                }
            }
        }
        for (std::size_t i = 0; i < literals_.size(); ++i) {
            auto it = ids_.find(complement(literals_[i]));
            complement_.push_back(it == ids_.end() ? -1 : it->second);
        }
        watchers_.resize(literals_.size());
        for (std::size_t ri = 0; ri < rules_.size(); ++ri) {
            for (int p : rules_[ri].pos)
                watchers_[p].push_back(ri);
        }
    }

    std::vector<StableModel> run(const OracleConfig& cfg, bool first_only = false)
    {
        if (guessed_.size() >= 63 || (std::size_t{1} << guessed_.size()) > cfg.ceiling)
            throw CeilingExceeded("stable-model search over " + std::to_string(guessed_.size()) +
                                      " guessed literals exceeds the ceiling of " +
                                      std::to_string(cfg.ceiling) + " candidates",
                                  guessed_.size());
        std::vector<StableModel> models;
        const std::uint64_t total = std::uint64_t{1} << guessed_.size();
        std::vector<bool> guess(literals_.size(), false);
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            std::fill(guess.begin(), guess.end(), false);
            for (std::size_t i = 0; i < guessed_.size(); ++i) {
                if (mask >> i & 1)
                    guess[guessed_[i]] = true;
            }
            auto lm = least_model(guess);
            if (!accepted(lm, guess))
                continue;
            StableModel m;
            for (std::size_t i = 0; i < lm.size(); ++i) {
                if (lm[i])
                    m.literals.push_back(literals_[i]);
            }
            sort_canonically(m.literals);
            models.push_back(std::move(m));
            if (first_only)
                return models;
        }
        std::sort(models.begin(), models.end(), [](const StableModel& a, const StableModel& b) {
            return printed(a) < printed(b);
        });
        if (cfg.max_models && models.size() > *cfg.max_models)
            models.resize(*cfg.max_models);
        return models;
    }

private:
    int id(const Literal& l)
    {
        auto [it, inserted] = ids_.emplace(l, static_cast<int>(literals_.size()));
        if (inserted)
            literals_.push_back(l);
        return it->second;
    }

    // Least model of the reduct w.r.t. `guess`, by counter propagation.
    std::vector<bool> least_model(const std::vector<bool>& guess) const
    {
        std::vector<bool> truth(literals_.size(), false);
        std::vector<std::size_t> missing(rules_.size());
        std::vector<int> queue;
        auto fire = [&](const IndexedRule& r) {
            if (r.head >= 0 && !truth[r.head]) {
                truth[r.head] = true;
                queue.push_back(r.head);
            }
        };
        std::vector<bool> active(rules_.size(), false);
        for (std::size_t ri = 0; ri < rules_.size(); ++ri) {
            const auto& r = rules_[ri];
            active[ri] = std::none_of(r.naf.begin(), r.naf.end(), [&](int n) { return guess[n]; });
            missing[ri] = r.pos.size();
            if (active[ri] && missing[ri] == 0)
                fire(r);
        }
        while (!queue.empty()) {
            int l = queue.back();
            queue.pop_back();
            for (std::size_t ri : watchers_[l]) {
                if (--missing[ri] == 0 && active[ri])
                    fire(rules_[ri]);
            }
        }
        return truth;
    }

    bool accepted(const std::vector<bool>& lm, const std::vector<bool>& guess) const
    {
        for (int g : guessed_) {
            if (lm[g] != guess[g])
                return false;
        }
        for (std::size_t i = 0; i < lm.size(); ++i) {
            if (lm[i] && complement_[i] >= 0 && lm[complement_[i]])
                return false;
        }
        for (const auto& r : rules_) {
            if (r.head >= 0)
                continue;
            bool body = std::all_of(r.pos.begin(), r.pos.end(), [&](int p) { return lm[p]; }) &&
                        std::none_of(r.naf.begin(), r.naf.end(), [&](int n) { return lm[n]; });
            if (body)
                return false;
        }
        return true;
    }

    static void sort_canonically(std::vector<Literal>& ls)
    {
        std::vector<std::pair<std::string, Literal>> keyed;
        for (auto& l : ls)
            keyed.emplace_back(to_string(l), std::move(l));
        std::sort(keyed.begin(), keyed.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        ls.clear();
        for (auto& [k, l] : keyed)
            ls.push_back(std::move(l));
    }

    static std::vector<std::string> printed(const StableModel& m)
    {
        std::vector<std::string> out;
        for (const auto& l : m.literals)
            out.push_back(to_string(l));
        return out;
    }

    std::map<Literal, int> ids_;
    std::vector<Literal> literals_;
    std::vector<int> complement_;
    std::vector<IndexedRule> rules_;
    std::vector<int> guessed_;
    std::vector<std::vector<std::size_t>> watchers_;
};

} // namespace

std::vector<StableModel> stable_models(const GroundProgram& g, const OracleConfig& cfg)
{
    return Enumerator(g).run(cfg);
}

std::vector<StableModel> stable_models(const Program& p, const OracleConfig& cfg)
{
    return stable_models(ground(p, cfg), cfg);
}

bool has_stable_model(const GroundProgram& g, const OracleConfig& cfg)
{
    return !Enumerator(g).run(cfg, true).empty();
}

bool brave_entails(const Program& p, const Literal& l, const OracleConfig& cfg)
{
    OracleConfig unlimited = cfg;
    unlimited.max_models.reset();
    for (const auto& m : stable_models(p, unlimited)) {
        if (m.contains(l))
            return true;
    }
    return false;
}

// Written independently of Enumerator: plain sets and naive iteration.
ModelCheck check_stable_model(const GroundProgram& g, const std::set<Literal>& candidate)
{
    ModelCheck result;
    result.consistent = std::none_of(candidate.begin(), candidate.end(), [&](const Literal& l) {
        return candidate.count(complement(l)) > 0;
    });

    auto body_holds = [&](const Rule& r) {
        for (const auto& b : r.body) {
            bool in = candidate.count(b.literal) > 0;
            if (b.naf == in)
                return false;
        }
        return true;
    };
    result.satisfies_rules = std::all_of(g.rules.begin(), g.rules.end(), [&](const Rule& r) {
        if (!body_holds(r))
            return true;
        return r.head.has_value() && candidate.count(*r.head) > 0;
    });

    const GroundProgram red = reduct(g, candidate);
    std::set<Literal> lm;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& r : red.rules) {
            if (!r.head || lm.count(*r.head))
                continue;
            bool fires = std::all_of(r.body.begin(), r.body.end(),
                                     [&](const BodyLiteral& b) { return lm.count(b.literal) > 0; });
            if (fires) {
                lm.insert(*r.head);
                grew = true;
            }
        }
    }
    result.least_model_of_reduct = lm == candidate;
    return result;
}

} // namespace caspr
