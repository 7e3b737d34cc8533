#pragma once

// Random ground program generators for the property suites.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "caspr/term.hpp"

namespace gen {

using caspr::Atom;
using caspr::BodyLiteral;
using caspr::Literal;
using caspr::Rule;

inline Atom atom_named(std::size_t i) { return Atom{"a" + std::to_string(i), {}}; }

// Up to `max_atoms` propositional atoms, up to `max_rules` rules with 0-3 body
// literals, naf and classical negation allowed, no constraints.
inline std::vector<Rule> random_program(std::mt19937& rng, std::size_t max_atoms = 8, std::size_t max_rules = 12)
{
    std::uniform_int_distribution<std::size_t> n_atoms(1, max_atoms);
    const std::size_t atoms = n_atoms(rng);
    std::uniform_int_distribution<std::size_t> n_rules(1, max_rules), pick(0, atoms - 1), body_len(0, 3);
    std::bernoulli_distribution coin(0.5), classical(0.2);
    std::vector<Rule> rules;
    const std::size_t count = n_rules(rng);
    for (std::size_t r = 0; r < count; ++r) {
        Rule rule;
        rule.head = Literal{atom_named(pick(rng)), classical(rng)};
        const std::size_t len = body_len(rng);
        for (std::size_t b = 0; b < len; ++b)
            rule.body.push_back(BodyLiteral{Literal{atom_named(pick(rng)), classical(rng)}, coin(rng)});
        rules.push_back(std::move(rule));
    }
    return rules;
}

// Atoms are assigned to levels; positive body literals come from levels <= the
// head's, naf literals from strictly lower levels. No classical negation.
inline std::vector<Rule> random_stratified_program(std::mt19937& rng, std::size_t max_atoms = 8,
                                                   std::size_t max_rules = 12)
{
    std::uniform_int_distribution<std::size_t> n_atoms(2, max_atoms);
    const std::size_t atoms = n_atoms(rng);
    std::uniform_int_distribution<std::size_t> level_of(0, 3), n_rules(1, max_rules), body_len(0, 3);
    std::vector<std::size_t> level(atoms);
    for (auto& l : level)
        l = level_of(rng);
    std::bernoulli_distribution coin(0.4);
    std::uniform_int_distribution<std::size_t> pick(0, atoms - 1);
    std::vector<Rule> rules;
    const std::size_t count = n_rules(rng);
    for (std::size_t r = 0; r < count; ++r) {
        const std::size_t h = pick(rng);
        Rule rule;
        rule.head = Literal{atom_named(h), false};
        const std::size_t len = body_len(rng);
        for (std::size_t b = 0; b < len; ++b) {
            const bool naf = coin(rng);
            std::vector<std::size_t> allowed;
            for (std::size_t a = 0; a < atoms; ++a) {
                if (naf ? level[a] < level[h] : level[a] <= level[h])
                    allowed.push_back(a);
            }
            if (allowed.empty())
                continue;
            std::uniform_int_distribution<std::size_t> choose(0, allowed.size() - 1);
            rule.body.push_back(BodyLiteral{Literal{atom_named(allowed[choose(rng)]), false}, naf});
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

} // namespace gen
