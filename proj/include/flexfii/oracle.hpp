#pragma once

// Independent cross-checks for the forward improvement iteration:
// Bellman value iteration, finite-horizon backward induction, a seeded
// Monte Carlo simulator for arbitrary stopping rules, and exact checks of
// the partial-improvement inequalities via powers of Psi.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexfii/chain_model.hpp"
#include "flexfii/lookahead_set.hpp"
#include "flexfii/stopping_rules.hpp"

namespace flexfii {

struct BellmanResult {
    ValueVector v;
    double residual = 0.0; ///< sup |T v - v|
    std::size_t iterations = 0;
};

inline constexpr std::size_t kBellmanIterationCap = 10'000'000;

/// Value iteration for v(z) = max(g(z), (Psi v)(z)) on stoppable states and
/// v(z) = (Psi v)(z) elsewhere. Stops once successive iterates differ by at
/// most tol * (1 - max alpha). Requires max alpha < 1 unless every state is
/// stoppable. Throws Error(NoConvergence) at kBellmanIterationCap.
BellmanResult bellman_value(const Model& model, const StateSet& stoppable, double tol);

/// Backward induction over `horizon` steps (n_states <= 12, horizon <= 20).
/// At the horizon a stoppable state collects g, any other state 0 (the
/// payoff of never stopping under discounting). Throws Error(TooLarge).
ValueVector exhaustive_optimal(const Model& model, const StateSet& stoppable, int horizon);

// ---------------------------------------------------------------------------
// Monte Carlo

/// Paths are driven by std::mt19937_64; uniforms take the top 53 bits of
/// each draw. Shard s of a run is seeded with seed_seq{seed_lo, seed_hi, s}.
inline constexpr const char* kRngAlgorithm = "mt19937_64/seed_seq(seed_lo,seed_hi,shard)/53-bit";

struct SimulationOptions {
    std::uint64_t n_paths = 10'000;
    std::uint64_t seed = 0;
    /// Defaults to default_horizon_cap(model).
    std::optional<std::uint64_t> horizon_cap;
    std::size_t shards = 8;
    bool parallel = true;
};

struct SimulationReport {
    StateIndex start = 0;
    std::string rule;
    std::uint64_t n_paths = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t horizon_cap = 0;
    std::uint64_t capped_paths = 0;
    /// stopping time -> path count; kNever collects capped paths.
    std::map<std::uint64_t, std::uint64_t> entrance_histogram;
    std::string rng = kRngAlgorithm;
};

/// ceil(log(1e-6 / ||g||_inf) / log(max alpha)) when max alpha < 1,
/// otherwise 10^6.
std::uint64_t default_horizon_cap(const Model& model);

/// Mean of X_tau over independent paths from `start`. Paths that do not stop
/// by the horizon cap contribute the discounted payoff at the cap. Throws
/// Error(CapDominates) when alpha = 1 somewhere and more than 1% of paths
/// hit the cap, Error(IllPosed) for an entrance rule whose target is not
/// reached almost surely under alpha = 1.
SimulationReport simulate(const Model& model, const StoppingRuleSpec& rule, StateIndex start,
                          const SimulationOptions& options = {});

/// Several rules on common paths. `difference_std_error[i]` is the standard
/// error of the paired difference X_{rule i} - X_{rule 0}.
struct MultiRuleReport {
    std::vector<SimulationReport> reports;
    std::vector<double> difference_mean;
    std::vector<double> difference_std_error;
};

MultiRuleReport simulate_rules(const Model& model, const std::vector<StoppingRuleSpec>& rules, StateIndex start,
                               const SimulationOptions& options = {});

/// Number of simulated paths on which evaluating `rule` raises
/// RuleOrderViolation.
std::uint64_t count_order_violations(const Model& model, const StoppingRuleSpec& rule, StateIndex start,
                                     const SimulationOptions& options = {});

/// X_tau on a given path; tau = kNever uses the state at `cap`.
double discounted_payoff(const Model& model, Path& path, std::uint64_t tau, std::uint64_t cap);

/// Samples a path of length cap + 1 from `start` (mostly for tests).
std::vector<StateIndex> sample_path(const Model& model, StateIndex start, std::uint64_t steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Partial-improvement inequalities, checked exactly.
//
// A.1: for A = {Z_n = x} with x in B^{*D_{<j}} \ B^{*D_{<=j}}:
//        E[1_A X_n] <= E[1_A X_{tau_{n+j}(B)}]
// A.2: for A = {Z_s = x} with x in B^{*D} and t - s in D (or t = s):
//        E[1_A X_{tau_t(B)}] <= E[1_A X_s]
// Both sides equal (Psi^n)_{z,x} times g(x) or h'_{B,j}(x).

struct LemmaCheck {
    std::string lemma;             ///< "A.1" or "A.2"
    StateIndex start = 0;          ///< z
    std::uint64_t time = 0;        ///< n (A.1) or s (A.2)
    int depth = 0;                 ///< j (A.1) or t - s (A.2)
    std::optional<StateIndex> at;  ///< x; nullopt for the union over the whole pattern
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

struct LemmaReport {
    std::vector<LemmaCheck> checks;
    /// Configurations whose membership pattern no state realises.
    std::vector<std::string> unsatisfiable;
    std::size_t failures() const;
    bool all_hold() const { return failures() == 0; }
};

/// Requires n_states <= 12 and a well-posed B. Times 0..3 are always
/// checked; `seed` draws two further times from 4..20.
LemmaReport lemma_property_check(const Model& model, const StateSet& base, const LookAheadSet& window,
                                 std::uint64_t seed);

} // namespace flexfii
