#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "caspr/term.hpp"

namespace caspr {

// Brute-force stable-model machinery. This is the semantic reference the
// goal-directed solver is tested against, and the engine it delegates
// negative loops to. Desk scale only: everything is exponential.

struct GroundProgram {
    std::vector<Rule> rules;
    // Every ground literal occurring in `rules`, sorted.
    std::vector<Literal> base;
    // origin[i]: index of the program rule that rules[i] instantiates.
    std::vector<std::size_t> origin;
    std::size_t instantiations = 0;
};

struct StableModel {
    // Sorted by canonical printed form.
    std::vector<Literal> literals;

    bool contains(const Literal& l) const;
    friend bool operator==(const StableModel&, const StableModel&) = default;
};

std::string to_string(const StableModel& m);

struct OracleConfig {
    // Maximum functor nesting of ground terms. Defaults to the deepest term in
    // the program.
    std::optional<std::size_t> depth_bound;
    // Upper bound on rule instantiations and on candidate sets examined.
    std::size_t ceiling = 1'000'000;
    // Stop enumerating after this many models.
    std::optional<std::size_t> max_models;
};

class CeilingExceeded : public std::runtime_error {
public:
    CeilingExceeded(const std::string& what, std::size_t count)
        : std::runtime_error(what), count_(count)
    {
    }
    std::size_t count() const noexcept { return count_; }

private:
    std::size_t count_;
};

class UnsafeRule : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Variables of `r` that occur in no positive body literal.
std::vector<std::string> unsafe_variables(const Rule& r);
// Throws UnsafeRule naming the first offending rule.
void check_safety(const Program& p);

std::size_t max_term_depth(const Program& p);

// Instantiates every rule over the atoms that can possibly be derived (positive
// bodies joined against an over-approximation of the derivable literals), with
// terms truncated at the depth bound. Throws CeilingExceeded past the ceiling
// and UnsafeRule for rules with variables not bound by a positive literal.
GroundProgram ground(const Program& p, const OracleConfig& cfg = {});

// Gelfond-Lifschitz reduct: drops rules with `not L` for L in the candidate,
// strips the remaining naf literals.
GroundProgram reduct(const GroundProgram& g, const std::set<Literal>& candidate);

std::vector<StableModel> stable_models(const GroundProgram& g, const OracleConfig& cfg = {});
std::vector<StableModel> stable_models(const Program& p, const OracleConfig& cfg = {});

// Stops at the first model found.
bool has_stable_model(const GroundProgram& g, const OracleConfig& cfg = {});

bool brave_entails(const Program& p, const Literal& l, const OracleConfig& cfg = {});

// Independent verification of a candidate model: consistent, satisfies every
// rule and constraint, and equals the least model of its own reduct.
struct ModelCheck {
    bool consistent = false;
    bool satisfies_rules = false;
    bool least_model_of_reduct = false;
    bool ok() const noexcept { return consistent && satisfies_rules && least_model_of_reduct; }
};
ModelCheck check_stable_model(const GroundProgram& g, const std::set<Literal>& candidate);

} // namespace caspr
