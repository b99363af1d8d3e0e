#include "flexfii/lookahead_set.hpp"

#include "flexfii/errors.hpp"

namespace flexfii {

LookAheadSet::LookAheadSet(const std::vector<int>& depths) : depths_(depths.begin(), depths.end()) {
    if (depths_.empty())
        throw Error(ErrorCode::InvalidSchedule, "look-ahead set must not be empty");
    if (*depths_.begin() < 1)
        throw Error(ErrorCode::InvalidSchedule, "look-ahead depths must be >= 1");
}

LookAheadSet LookAheadSet::initial_segment(int k) {
    if (k < 1)
        throw Error(ErrorCode::InvalidSchedule, "window size must be >= 1, got " + std::to_string(k));
    std::vector<int> d(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        d[static_cast<std::size_t>(i)] = i + 1;
    return LookAheadSet(d);
}

std::set<int> LookAheadSet::prefix(int limit) const {
    return {depths_.begin(), depths_.upper_bound(limit)};
}

LookAheadSet LookAheadSet::with_depth(int d) const {
    std::vector<int> v(depths_.begin(), depths_.end());
    v.push_back(d);
    return LookAheadSet(v);
}

std::string LookAheadSet::to_string() const {
    std::string out = "{";
    bool first = true;
    for (int d : depths_) {
        if (!first)
            out += ',';
        out += std::to_string(d);
        first = false;
    }
    return out + "}";
}

} // namespace flexfii
