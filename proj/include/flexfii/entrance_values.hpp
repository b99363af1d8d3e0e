#pragma once

// First-entrance expected rewards h'_{B,p}(z) = E[X_{tau_p(B)} | Z_0 = z].
//
// For p = 0 these solve the linear system A h = d with
//   A_ij = delta_ij - (1 - b_i) Psi_ij,   d_i = b_i g(i),
// where b is the indicator of B. Deeper look-aheads follow from the
// Markov recursion h'_{B,p} = Psi h'_{B,p-1}.

#include <map>

#include "flexfii/chain_model.hpp"
#include "flexfii/lookahead_set.hpp"

namespace flexfii {

inline constexpr double kResidualTolerance = 1e-10;

enum class LinearSolver {
    SparseLU,   ///< direct sparse LU with partial pivoting (default)
    FixedPoint, ///< h <- d + (I - A) h, a contraction under the well-posedness condition
};

struct EntranceSystem {
    SparseMatrix a;
    ValueVector d;
    StateSet b;
};

EntranceSystem build_entrance_system(const Model& model, const StateSet& target);

/// ||A h - d||_inf
double residual_inf(const EntranceSystem& system, std::span<const double> h);

/// Checks, for every state z, that alpha(z) < 1 or the chain started at z
/// enters `target` almost surely. Uses graph reachability on the support of
/// the transition matrix. Throws Error(IllPosed, z) or Error(EmptyTarget).
void check_wellposed(const Model& model, const StateSet& target);

/// Non-throwing variant; returns the first offending state if any.
std::optional<StateIndex> find_illposed_state(const Model& model, const StateSet& target);

struct EntranceOptions {
    LinearSolver solver = LinearSolver::SparseLU;
    double fixed_point_tolerance = 1e-12;
    /// Skips check_wellposed when the caller has already established it.
    bool assume_wellposed = false;
};

/// h'_{B,0}. Entries on B equal the payoff exactly. Throws
/// Error(SingularSystem) when the solve breaks down or its residual
/// exceeds kResidualTolerance * (1 + ||d||_inf).
ValueVector entrance_value(const Model& model, const StateSet& target, const EntranceOptions& options = {});

/// h'_{B,p} for every p in `depths`, from a single Psi-matvec chain
/// starting at `h0` = h'_{B,0}. `matvecs`, when given, is incremented by
/// the number of products performed.
std::map<int, ValueVector> lookahead_values(const DiscountedKernel& kernel, const ValueVector& h0,
                                            const LookAheadSet& depths, std::size_t* matvecs = nullptr);

std::map<int, ValueVector> lookahead_values(const Model& model, const StateSet& target, const LookAheadSet& depths,
                                            const EntranceOptions& options = {});

} // namespace flexfii
