#include "flexfii/chain_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flexfii/errors.hpp"

namespace flexfii {

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
    for (const auto& t : entries) {
        if (t.row >= rows || t.col >= cols)
            throw Error(ErrorCode::DimensionMismatch,
                        "entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                            ") outside " + std::to_string(rows) + "x" + std::to_string(cols),
                        t.row);
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    row_ptr_.assign(rows + 1, 0);
    col_idx_.reserve(entries.size());
    values_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col)
            sum += entries[j++].value;
        col_idx_.push_back(entries[i].col);
        values_.push_back(sum);
        ++row_ptr_[entries[i].row + 1];
        i = j;
    }
    for (std::size_t r = 0; r < rows; ++r)
        row_ptr_[r + 1] += row_ptr_[r];
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        t.push_back({i, i, 1.0});
    return SparseMatrix(n, n, std::move(t));
}

double SparseMatrix::row_sum(std::size_t r) const {
    double s = 0.0;
    for (double v : row_values(r))
        s += v;
    return s;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    auto cols = row_columns(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c)
        return 0.0;
    return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

void SparseMatrix::multiply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            sum += values_[k] * in[col_idx_[k]];
        out[r] = sum;
    }
}

SparseMatrix SparseMatrix::scale_rows(std::span<const double> scale) const {
    SparseMatrix out;
    out.rows_ = rows_;
    out.cols_ = cols_;
    out.row_ptr_.assign(rows_ + 1, 0);
    out.col_idx_.reserve(col_idx_.size());
    out.values_.reserve(values_.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        if (scale[r] != 0.0) {
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                out.col_idx_.push_back(col_idx_[k]);
                out.values_.push_back(scale[r] * values_[k]);
            }
        }
        out.row_ptr_[r + 1] = out.col_idx_.size();
    }
    return out;
}

// ---------------------------------------------------------------------------
// StateSet

StateSet StateSet::all(std::size_t n_states) {
    StateSet s(n_states);
    s.bits_.assign(n_states, true);
    return s;
}

StateSet StateSet::from_indices(std::size_t n_states, std::span<const StateIndex> members) {
    StateSet s(n_states);
    for (auto m : members) {
        if (m >= n_states)
            throw Error(ErrorCode::InvalidArgument,
                        "state " + std::to_string(m) + " outside 0.." + std::to_string(n_states - 1), m);
        s.bits_[m] = true;
    }
    return s;
}

std::size_t StateSet::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

bool StateSet::is_subset_of(const StateSet& other) const {
    if (other.bits_.size() != bits_.size())
        return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !other.bits_[i])
            return false;
    return true;
}

std::vector<StateIndex> StateSet::members() const {
    std::vector<StateIndex> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i])
            out.push_back(i);
    return out;
}

StateSet StateSet::complement() const {
    StateSet c(bits_.size());
    for (std::size_t i = 0; i < bits_.size(); ++i)
        c.bits_[i] = !bits_[i];
    return c;
}

std::string StateSet::to_string() const {
    std::string out = "{";
    bool first = true;
    for (auto m : members()) {
        if (!first)
            out += ',';
        out += std::to_string(m);
        first = false;
    }
    return out + "}";
}

// ---------------------------------------------------------------------------
// Model

Model::Model(SparseMatrix transitions, ValueVector alpha, ValueVector payoff, std::vector<std::string> labels)
    : transitions_(std::move(transitions)), alpha_(std::move(alpha)), payoff_(std::move(payoff)),
      labels_(std::move(labels)) {}

double Model::max_alpha() const {
    double m = 0.0;
    for (double a : alpha_)
        m = std::max(m, a);
    return m;
}

std::string Model::label(StateIndex s) const {
    if (!labels_.empty())
        return labels_.at(s);
    if (grid_ && grid_->width > 0)
        return std::to_string(s % grid_->width) + ":" + std::to_string(s / grid_->width);
    return std::to_string(s);
}

void validate(const Model& model) {
    const std::size_t n = model.n_states();
    const auto& pi = model.transitions();
    if (n == 0)
        throw Error(ErrorCode::DimensionMismatch, "model has no states");
    if (pi.rows() != n || pi.cols() != n)
        throw Error(ErrorCode::DimensionMismatch, "transition matrix is " + std::to_string(pi.rows()) + "x" +
                                                      std::to_string(pi.cols()) + ", expected " +
                                                      std::to_string(n) + "x" + std::to_string(n));
    if (model.alpha().size() != n)
        throw Error(ErrorCode::DimensionMismatch, "alpha has " + std::to_string(model.alpha().size()) +
                                                      " entries, expected " + std::to_string(n));
    if (!model.labels().empty() && model.labels().size() != n)
        throw Error(ErrorCode::DimensionMismatch, "label count differs from state count");

    for (std::size_t z = 0; z < n; ++z) {
        auto cols = pi.row_columns(z);
        auto vals = pi.row_values(z);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (!(vals[k] >= 0.0 && vals[k] <= 1.0))
                throw Error(ErrorCode::EntryOutOfRange,
                            "transition (" + std::to_string(z) + "," + std::to_string(cols[k]) +
                                ") = " + std::to_string(vals[k]),
                            z);
        }
        const double a = model.alpha(z);
        if (!(a >= 0.0 && a <= 1.0))
            throw Error(ErrorCode::EntryOutOfRange, "alpha(" + std::to_string(z) + ") = " + std::to_string(a), z);
        const double sum = pi.row_sum(z);
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "row " << z << " sums to " << sum;
            throw Error(ErrorCode::RowNotStochastic, msg.str(), z);
        }
        if (!std::isfinite(model.payoff(z)))
            throw Error(ErrorCode::NonFinitePayoff, "payoff of state " + std::to_string(z), z);
    }
}

DiscountedKernel psi(const Model& model) {
    return DiscountedKernel(model.transitions().scale_rows(model.alpha()));
}

ValueVector matvec(const DiscountedKernel& kernel, std::span<const double> v) {
    if (v.size() != kernel.n_states())
        throw Error(ErrorCode::DimensionMismatch,
                    "vector of length " + std::to_string(v.size()) + " for " + std::to_string(kernel.n_states()) +
                        " states");
    ValueVector out(v.size());
    kernel.matrix().multiply(v, out);
    return out;
}

} // namespace flexfii
