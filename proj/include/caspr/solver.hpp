#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "caspr/oracle.hpp"
#include "caspr/parser.hpp"
#include "caspr/term.hpp"

namespace caspr {

// Proof tree for one solved literal. Leaves are facts or naf assumptions; a
// rule application has one child per body literal of its rule, in body order.
struct Justification {
    enum class Kind { fact, classical_fact, rule_application, naf_assumption };

    Kind kind = Kind::fact;
    // For naf_assumption this is the literal under `not`.
    Literal conclusion;
    // 0-based index of the program rule used (facts and rule applications).
    std::size_t rule_index = 0;
    std::vector<Justification> children;

    friend bool operator==(const Justification&, const Justification&) = default;
};

// Indented tree, one node per line.
std::string to_string(const Justification& j, std::size_t indent = 0);

struct SolverConfig {
    std::size_t max_depth = 10'000;
    std::optional<std::size_t> max_answers;
    bool fallback = true;
    bool trace = false;
    // Limits for the oracle slices used by the fallback and consistency check.
    OracleConfig oracle;
};

struct Answer {
    // Bindings of the query's free variables.
    Substitution bindings;
    // One tree per query body literal.
    std::vector<Justification> justification;
    // Set when the answer was read off a stable model (fallback path); naf
    // leaves of the justification are relative to this model.
    std::optional<StableModel> witness;
};

struct FallbackInfo {
    bool verdict = false;
    std::size_t slice_rules = 0;
    // Ground literals on the negative loop that triggered delegation.
    std::vector<Literal> cycle;
};

struct SolveOutcome {
    enum class Status { success, failure, fallback_used, rejected };
    enum class Rejection { none, non_ground_naf, constraint, depth, slice_too_large, unsafe_slice, negative_loop };

    Status status = Status::failure;
    std::vector<Answer> answers;
    std::optional<FallbackInfo> fallback;
    Rejection rejection = Rejection::none;
    std::string reason;
    std::vector<std::string> call_chain;
    // True when a success had to be confirmed by the global consistency check.
    bool consistency_checked = false;
    // `depth<TAB>event<TAB>literal` lines, when tracing.
    std::vector<std::string> trace;

    bool succeeded() const noexcept
    {
        return status == Status::success || (status == Status::fallback_used && fallback && fallback->verdict);
    }
};

const char* to_string(SolveOutcome::Status s);
const char* to_string(SolveOutcome::Rejection r);

// Query-driven evaluation of `q` against `p`:
//  - SLD resolution on positive literals with most general unifiers;
//  - `not L` is evaluated only once L is ground and succeeds iff L finitely
//    fails (naf literals are delayed while non-ground);
//  - a call that is a variant of an ancestor on the same naf level consumes the
//    answers tabled for that variant so far, and evaluation is iterated to a
//    fixpoint;
//  - a call that is a variant of an ancestor across a naf boundary is a
//    negative loop and is delegated to the oracle on the relevant ground slice;
//  - successes are reported only if the program has a consistent stable model.
// A session owns its tables and may be reused for several queries over the
// same program; tables are cleared between queries.
class GoalSolver {
public:
    explicit GoalSolver(Program program, SolverConfig cfg = {});
    ~GoalSolver();
    GoalSolver(GoalSolver&&) noexcept;
    GoalSolver& operator=(GoalSolver&&) noexcept;

    const Program& program() const noexcept;
    const SolverConfig& config() const noexcept;

    SolveOutcome solve(const Query& q);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SolveOutcome solve(const Program& p, const Query& q, const SolverConfig& cfg = {});

// Distinct answer bindings restricted to the query's free variables, up to
// cfg.max_answers. Throws std::runtime_error when the solve is rejected.
std::vector<Substitution> answer_all(const Program& p, const Query& q, const SolverConfig& cfg = {});

// Answers `q` by stable-model enumeration over the slice of `p` reachable from
// the query, the cycle atoms and every consistency-relevant predicate.
struct FallbackResult {
    bool verdict = false;
    std::size_t slice_rules = 0;
    std::vector<Answer> answers;
};
FallbackResult check_consistency_fallback(const Program& p, const Query& q, const std::vector<Literal>& naf_cycle_atoms,
                                          const SolverConfig& cfg = {});

// Answers `q` from the stable models of the whole program (constraints
// included). Answers carry their witness model; naf literals of the query
// must be ground once its positive literals are matched.
SolveOutcome solve_with_oracle(const Program& p, const Query& q, const SolverConfig& cfg = {});

// Replays a justification against the program: facts must be program facts,
// rule applications must instantiate the named rule consistently with their
// children, naf assumptions must be underivable (a fresh solve fails, or for
// model-backed answers, the literal is absent from the witness).
struct ReplayResult {
    bool ok = true;
    std::string failure;
};
ReplayResult replay_justification(const Program& p, const Justification& j, const StableModel* witness = nullptr,
                                  const SolverConfig& cfg = {});

// Human-readable outcome, stable across runs.
std::string format_outcome(const SolveOutcome& o, const Query& q, bool all_answers, bool justify);

} // namespace caspr
