#pragma once

// Discounted Markov reward model: a finite chain with row-stochastic
// transitions, per-state one-step discount and a stopping payoff.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace flexfii {

using StateIndex = std::size_t;
using ValueVector = std::vector<double>;

inline constexpr double kRowSumTolerance = 1e-12;

/// Row-compressed sparse matrix. Rows are sorted by column, duplicates
/// merged at construction.
class SparseMatrix {
public:
    struct Triplet {
        std::size_t row;
        std::size_t col;
        double value;
    };

    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

    static SparseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_columns(std::size_t r) const {
        return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    double row_sum(std::size_t r) const;
    double at(std::size_t r, std::size_t c) const;

    /// out = this * in. Sizes must match (checked by callers).
    void multiply(std::span<const double> in, std::span<double> out) const;

    /// Same sparsity, each row multiplied by `scale[r]`. Rows whose scale
    /// is zero are dropped entirely.
    SparseMatrix scale_rows(std::span<const double> scale) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Subset of the state space, stored as one bit per state.
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t n_states) : bits_(n_states, false) {}

    static StateSet all(std::size_t n_states);
    static StateSet none(std::size_t n_states) { return StateSet(n_states); }
    static StateSet from_indices(std::size_t n_states, std::span<const StateIndex> members);
    static StateSet from_indices(std::size_t n_states, std::initializer_list<StateIndex> members) {
        return from_indices(n_states, std::span<const StateIndex>(members.begin(), members.size()));
    }

    std::size_t universe_size() const noexcept { return bits_.size(); }
    bool contains(StateIndex s) const { return bits_.at(s); }
    void insert(StateIndex s) { bits_.at(s) = true; }
    void erase(StateIndex s) { bits_.at(s) = false; }

    std::size_t count() const;
    bool empty() const { return count() == 0; }
    bool is_subset_of(const StateSet& other) const;
    std::vector<StateIndex> members() const;
    StateSet complement() const;

    /// "{0,2,5}" style rendering, members ascending.
    std::string to_string() const;

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<bool> bits_;
};

struct GridShape {
    std::size_t width = 0;
    std::size_t height = 0;
};

/// A finite discounted Markov chain with stopping payoff. Constructing a
/// model does not check it; call validate().
class Model {
public:
    Model() = default;
    Model(SparseMatrix transitions, ValueVector alpha, ValueVector payoff,
          std::vector<std::string> labels = {});

    std::size_t n_states() const noexcept { return payoff_.size(); }
    const SparseMatrix& transitions() const noexcept { return transitions_; }
    std::span<const double> alpha() const noexcept { return alpha_; }
    std::span<const double> payoff() const noexcept { return payoff_; }
    double alpha(StateIndex s) const { return alpha_.at(s); }
    double payoff(StateIndex s) const { return payoff_.at(s); }
    double max_alpha() const;

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    /// Display name; the decimal index when no labels were given.
    std::string label(StateIndex s) const;

    const std::optional<GridShape>& grid() const noexcept { return grid_; }
    void set_grid(GridShape shape) { grid_ = shape; }

private:
    SparseMatrix transitions_;
    ValueVector alpha_;
    ValueVector payoff_;
    std::vector<std::string> labels_;
    std::optional<GridShape> grid_;
};

/// Throws Error(RowNotStochastic | EntryOutOfRange | NonFinitePayoff |
/// DimensionMismatch) for the first violation found, scanning rows in order.
void validate(const Model& model);

/// Psi = diag(alpha) * Pi.
class DiscountedKernel {
public:
    explicit DiscountedKernel(SparseMatrix psi) : psi_(std::move(psi)) {}
    const SparseMatrix& matrix() const noexcept { return psi_; }
    std::size_t n_states() const noexcept { return psi_.rows(); }

private:
    SparseMatrix psi_;
};

DiscountedKernel psi(const Model& model);

ValueVector matvec(const DiscountedKernel& kernel, std::span<const double> v);

// ---------------------------------------------------------------------------
// JSON model files
//
//   {"states": <int | [labels]>, "transitions": [[from,to,prob],...],
//    "alpha": <number | [numbers]>, "payoff": [numbers],
//    "initial_set": [indices]              (optional, default all),
//    "grid": {"width": w, "height": h}}    (optional, written by gridgen)

struct ModelDocument {
    Model model;
    std::optional<StateSet> initial_set;
};

/// Parses and validates. Throws Error(Parse) on malformed input.
ModelDocument parse_model_json(const std::string& text);
ModelDocument load_model_file(const std::string& path);

/// Deterministic serialisation (fixed key order, shortest round-trip floats).
std::string model_to_json(const Model& model, const std::optional<StateSet>& initial_set = std::nullopt);

} // namespace flexfii
