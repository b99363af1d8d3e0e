#include "flexfii/entrance_values.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "flexfii/errors.hpp"

namespace flexfii {

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// predecessors[x] = { y : Pi(y, x) > 0 }
std::vector<std::vector<StateIndex>> predecessors(const SparseMatrix& pi) {
    std::vector<std::vector<StateIndex>> pred(pi.rows());
    for (std::size_t y = 0; y < pi.rows(); ++y) {
        auto cols = pi.row_columns(y);
        auto vals = pi.row_values(y);
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (vals[k] > 0.0)
                pred[cols[k]].push_back(y);
    }
    return pred;
}

// Backward closure of `seeds` through states outside `blocked`.
std::vector<bool> backward_closure(const std::vector<std::vector<StateIndex>>& pred, std::vector<bool> seeds,
                                   const StateSet& blocked) {
    std::deque<StateIndex> queue;
    for (std::size_t i = 0; i < seeds.size(); ++i)
        if (seeds[i])
            queue.push_back(i);
    while (!queue.empty()) {
        auto x = queue.front();
        queue.pop_front();
        for (auto y : pred[x]) {
            if (!seeds[y] && !blocked.contains(y)) {
                seeds[y] = true;
                queue.push_back(y);
            }
        }
    }
    return seeds;
}

ValueVector solve_sparse_lu(const Model& model, const StateSet& target, const EntranceSystem& system) {
    const std::size_t n = model.n_states();
    const auto kernel = psi(model);
    const auto& m = kernel.matrix();

    // Reduce to the unknowns outside the target; rows inside are unit rows.
    std::vector<std::ptrdiff_t> slot(n, -1);
    std::vector<StateIndex> unknowns;
    for (std::size_t z = 0; z < n; ++z) {
        if (!target.contains(z)) {
            slot[z] = static_cast<std::ptrdiff_t>(unknowns.size());
            unknowns.push_back(z);
        }
    }

    ValueVector h(n, 0.0);
    for (std::size_t z = 0; z < n; ++z)
        if (target.contains(z))
            h[z] = model.payoff(z);
    if (unknowns.empty())
        return h;

    const auto u = static_cast<Eigen::Index>(unknowns.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(m.nonzeros() + unknowns.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(u);
    for (Eigen::Index i = 0; i < u; ++i) {
        const auto z = unknowns[static_cast<std::size_t>(i)];
        triplets.emplace_back(i, i, 1.0);
        auto cols = m.row_columns(z);
        auto vals = m.row_values(z);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto y = cols[k];
            if (slot[y] >= 0)
                triplets.emplace_back(i, slot[y], -vals[k]);
            else
                rhs[i] += vals[k] * model.payoff(y);
        }
    }
    Eigen::SparseMatrix<double> a(u, u);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorCode::SingularSystem, "sparse LU factorisation failed: " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorCode::SingularSystem, "sparse LU solve failed");

    const double limit = kResidualTolerance * (1.0 + inf_norm(system.d));
    auto scatter = [&] {
        for (Eigen::Index i = 0; i < u; ++i)
            h[unknowns[static_cast<std::size_t>(i)]] = x[i];
    };
    scatter();
    // One round of iterative refinement before giving up.
    if (!(residual_inf(system, h) <= limit)) {
        Eigen::VectorXd r = rhs - a * x;
        x += lu.solve(r);
        scatter();
        const double res = residual_inf(system, h);
        if (!(res <= limit))
            throw Error(ErrorCode::SingularSystem, "residual " + std::to_string(res) + " above tolerance");
    }
    return h;
}

ValueVector solve_fixed_point(const Model& model, const StateSet& target, const EntranceOptions& options) {
    const std::size_t n = model.n_states();
    const auto kernel = psi(model);
    const double amax = model.max_alpha();
    const double cap = amax < 1.0 ? 10.0 * static_cast<double>(n) / (1.0 - amax) : 1e7;

    ValueVector h(n, 0.0), next(n);
    for (std::size_t z = 0; z < n; ++z)
        if (target.contains(z))
            h[z] = model.payoff(z);
    for (double it = 0; it < cap; it += 1.0) {
        kernel.matrix().multiply(h, next);
        double diff = 0.0;
        for (std::size_t z = 0; z < n; ++z) {
            if (target.contains(z))
                next[z] = model.payoff(z);
            diff = std::max(diff, std::abs(next[z] - h[z]));
        }
        h.swap(next);
        if (diff <= options.fixed_point_tolerance)
            return h;
    }
    throw Error(ErrorCode::SingularSystem, "fixed-point iteration did not converge");
}

} // namespace

EntranceSystem build_entrance_system(const Model& model, const StateSet& target) {
    const std::size_t n = model.n_states();
    if (target.universe_size() != n)
        throw Error(ErrorCode::DimensionMismatch, "state set size differs from model size");
    const auto kernel = psi(model);
    const auto& m = kernel.matrix();
    std::vector<SparseMatrix::Triplet> entries;
    entries.reserve(m.nonzeros() + n);
    ValueVector d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        entries.push_back({i, i, 1.0});
        if (target.contains(i)) {
            d[i] = model.payoff(i);
            continue;
        }
        auto cols = m.row_columns(i);
        auto vals = m.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            entries.push_back({i, cols[k], -vals[k]});
    }
    return {SparseMatrix(n, n, std::move(entries)), std::move(d), target};
}

double residual_inf(const EntranceSystem& system, std::span<const double> h) {
    ValueVector ah(system.d.size());
    system.a.multiply(h, ah);
    double m = 0.0;
    for (std::size_t i = 0; i < ah.size(); ++i)
        m = std::max(m, std::abs(ah[i] - system.d[i]));
    return m;
}

std::optional<StateIndex> find_illposed_state(const Model& model, const StateSet& target) {
    const std::size_t n = model.n_states();
    const auto pred = predecessors(model.transitions());

    std::vector<bool> in_target(n);
    for (std::size_t z = 0; z < n; ++z)
        in_target[z] = target.contains(z);
    const auto reaches_target = backward_closure(pred, in_target, target);

    std::vector<bool> stuck(n);
    for (std::size_t z = 0; z < n; ++z)
        stuck[z] = !reaches_target[z];
    // States that can wander into a stuck state without passing the target.
    const auto doomed = backward_closure(pred, stuck, target);

    for (std::size_t z = 0; z < n; ++z)
        if (model.alpha(z) >= 1.0 && doomed[z])
            return z;
    return std::nullopt;
}

void check_wellposed(const Model& model, const StateSet& target) {
    if (target.universe_size() != model.n_states())
        throw Error(ErrorCode::DimensionMismatch, "state set size differs from model size");
    if (target.empty()) {
        for (std::size_t z = 0; z < model.n_states(); ++z)
            if (model.alpha(z) >= 1.0)
                throw Error(ErrorCode::EmptyTarget, "empty target with alpha(" + std::to_string(z) + ") = 1", z);
        return;
    }
    if (auto z = find_illposed_state(model, target))
        throw Error(ErrorCode::IllPosed,
                    "state " + model.label(*z) + " has alpha = 1 and does not enter the target almost surely", *z);
}

ValueVector entrance_value(const Model& model, const StateSet& target, const EntranceOptions& options) {
    if (!options.assume_wellposed)
        check_wellposed(model, target);
    if (options.solver == LinearSolver::FixedPoint)
        return solve_fixed_point(model, target, options);
    return solve_sparse_lu(model, target, build_entrance_system(model, target));
}

std::map<int, ValueVector> lookahead_values(const DiscountedKernel& kernel, const ValueVector& h0,
                                            const LookAheadSet& depths, std::size_t* matvecs) {
    std::map<int, ValueVector> out;
    ValueVector current = h0;
    for (int p = 1; p <= depths.max_depth(); ++p) {
        current = matvec(kernel, current);
        if (matvecs)
            ++*matvecs;
        if (depths.contains(p))
            out.emplace(p, current);
    }
    return out;
}

std::map<int, ValueVector> lookahead_values(const Model& model, const StateSet& target, const LookAheadSet& depths,
                                            const EntranceOptions& options) {
    return lookahead_values(psi(model), entrance_value(model, target, options), depths);
}

} // namespace flexfii
