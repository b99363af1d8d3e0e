#pragma once

// Forward improvement iteration with a flexible look-ahead window.
//
// Starting from a candidate stopping set B^0, each iteration keeps only the
// states of B^{k-1} where stopping now pays at least as much as waiting p
// steps and then stopping at the first entrance into B^{k-1}, for every
// depth p of the window D_k:
//
//   B^k = { z in B^{k-1} : g(z) >= h'_{B^{k-1},p}(z) for all p in D_k }.
//
// The sets shrink monotonically; the first entrance into their limit F is
// optimal among rules that stop inside B^0.

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "flexfii/chain_model.hpp"
#include "flexfii/entrance_values.hpp"
#include "flexfii/lookahead_set.hpp"

namespace flexfii {

/// States whose look-ahead value exceeds the payoff by no more than this
/// are kept (ties stay in the set).
inline constexpr double kTieTolerance = 1e-9;

/// kappa: iteration index -> look-ahead set. Lists are extended by
/// repeating their last entry.
class WindowSchedule {
public:
    struct Constant { int k; };
    struct Explicit { std::vector<int> ks; };
    struct General { std::vector<LookAheadSet> sets; };

    static WindowSchedule constant(int k);
    static WindowSchedule explicit_list(std::vector<int> ks);
    static WindowSchedule general(std::vector<LookAheadSet> sets);

    /// "k", "k1,k2,...,kn" or "D:{1,3,5};{1,2}".
    static WindowSchedule parse(const std::string& text);

    /// Window for iteration k >= 1.
    LookAheadSet window(std::size_t iteration) const;

    std::string to_string() const;

private:
    explicit WindowSchedule(std::variant<Constant, Explicit, General> v) : v_(std::move(v)) {}
    std::variant<Constant, Explicit, General> v_;
};

struct RunOptions {
    EntranceOptions entrance{};
    double tie_tolerance = kTieTolerance;
    /// Keep h'_{B^{k-1},0} in every record. Off for large models where only
    /// the final values matter.
    bool keep_values = true;
};

struct IterationRecord {
    std::size_t iteration = 0;              ///< k, starting at 1
    LookAheadSet window{1};                 ///< D_k as applied
    bool window_augmented = false;          ///< depth 1 was added to confirm a fixpoint
    std::size_t set_size_before = 0;        ///< |B^{k-1}|
    std::size_t set_size = 0;               ///< |B^k|
    std::vector<StateIndex> removed;        ///< B^{k-1} \ B^k
    ValueVector values;                     ///< h'_{B^{k-1},0} (empty unless keep_values)
    double wall_ms = 0.0;
};

enum class TerminationReason { Converged };

struct IterationTrace {
    StateSet initial_set;
    std::vector<IterationRecord> records;
    StateSet final_set;       ///< F
    ValueVector final_values; ///< h'_{F,0}
    TerminationReason reason = TerminationReason::Converged;
    bool depth_one_augmented = false;
    std::size_t matvecs = 0;
    std::size_t solves = 0;
    double total_ms = 0.0;

    /// Iterations that removed at least one state.
    std::size_t improving_iterations() const;
};

/// One improvement step: { z in B : g(z) >= h'_{B,p}(z) - tie for all p in D }.
StateSet improve_set(const Model& model, const StateSet& set, const LookAheadSet& window,
                     const RunOptions& options = {});

/// Same step from precomputed h'_{B,0}, for callers that already hold it.
StateSet improve_set(const Model& model, const DiscountedKernel& kernel, const StateSet& set,
                     const ValueVector& entrance, const LookAheadSet& window, double tie_tolerance = kTieTolerance,
                     std::size_t* matvecs = nullptr);

/// Iterates until B^k = B^{k-1} under a window containing depth 1. A
/// fixpoint reached under a window without depth 1 is re-checked with depth
/// 1 added, and the trace records the augmentation. Throws
/// Error(EmptyStoppingSet) if an iteration would empty the set.
IterationTrace run(const Model& model, const StateSet& initial_set, const WindowSchedule& schedule,
                   const RunOptions& options = {});

/// (F, h'_{F,0})
std::pair<StateSet, ValueVector> constrained_optimal(const Model& model, const StateSet& initial_set,
                                                     const WindowSchedule& schedule, const RunOptions& options = {});

} // namespace flexfii
