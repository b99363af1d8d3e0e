#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <vector>

namespace flexfii {

/// Finite nonempty set of look-ahead depths, all >= 1.
class LookAheadSet {
public:
    LookAheadSet(std::initializer_list<int> depths) : LookAheadSet(std::vector<int>(depths)) {}
    explicit LookAheadSet(const std::vector<int>& depths);

    /// {1, ..., k}
    static LookAheadSet initial_segment(int k);

    const std::set<int>& depths() const noexcept { return depths_; }
    int max_depth() const { return *depths_.rbegin(); }
    bool contains(int d) const { return depths_.count(d) != 0; }
    bool is_initial_segment() const { return static_cast<int>(depths_.size()) == max_depth(); }

    /// Depths <= limit (possibly empty, so returned as a raw set).
    std::set<int> prefix(int limit) const;
    LookAheadSet with_depth(int d) const;

    std::string to_string() const;

    friend bool operator==(const LookAheadSet&, const LookAheadSet&) = default;

private:
    std::set<int> depths_;
};

} // namespace flexfii
