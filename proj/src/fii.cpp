#include "flexfii/fii.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>

#include "flexfii/errors.hpp"

namespace flexfii {

namespace {

int parse_positive(std::string_view s) {
    while (!s.empty() && s.front() == ' ')
        s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ')
        s.remove_suffix(1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::InvalidSchedule, "not an integer: '" + std::string(s) + "'");
    if (value < 1)
        throw Error(ErrorCode::InvalidSchedule, "window sizes must be >= 1, got " + std::to_string(value));
    return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

} // namespace

// ---------------------------------------------------------------------------
// WindowSchedule

WindowSchedule WindowSchedule::constant(int k) {
    if (k < 1)
        throw Error(ErrorCode::InvalidSchedule, "window size must be >= 1");
    return WindowSchedule(Constant{k});
}

WindowSchedule WindowSchedule::explicit_list(std::vector<int> ks) {
    if (ks.empty())
        throw Error(ErrorCode::InvalidSchedule, "empty window list");
    for (int k : ks)
        if (k < 1)
            throw Error(ErrorCode::InvalidSchedule, "window sizes must be >= 1");
    return WindowSchedule(Explicit{std::move(ks)});
}

WindowSchedule WindowSchedule::general(std::vector<LookAheadSet> sets) {
    if (sets.empty())
        throw Error(ErrorCode::InvalidSchedule, "empty list of look-ahead sets");
    return WindowSchedule(General{std::move(sets)});
}

WindowSchedule WindowSchedule::parse(const std::string& text) {
    std::string_view s(text);
    if (s.starts_with("D:")) {
        std::vector<LookAheadSet> sets;
        for (auto part : split(s.substr(2), ';')) {
            while (!part.empty() && part.front() == ' ')
                part.remove_prefix(1);
            while (!part.empty() && part.back() == ' ')
                part.remove_suffix(1);
            if (part.size() < 2 || part.front() != '{' || part.back() != '}')
                throw Error(ErrorCode::InvalidSchedule, "expected {d1,d2,...}, got '" + std::string(part) + "'");
            std::vector<int> depths;
            for (auto d : split(part.substr(1, part.size() - 2), ','))
                depths.push_back(parse_positive(d));
            sets.emplace_back(depths);
        }
        return general(std::move(sets));
    }
    auto parts = split(s, ',');
    if (parts.size() == 1)
        return constant(parse_positive(parts[0]));
    std::vector<int> ks;
    for (auto p : parts)
        ks.push_back(parse_positive(p));
    return explicit_list(std::move(ks));
}

LookAheadSet WindowSchedule::window(std::size_t iteration) const {
    const std::size_t i = iteration == 0 ? 0 : iteration - 1;
    if (const auto* c = std::get_if<Constant>(&v_))
        return LookAheadSet::initial_segment(c->k);
    if (const auto* e = std::get_if<Explicit>(&v_))
        return LookAheadSet::initial_segment(e->ks[std::min(i, e->ks.size() - 1)]);
    const auto& g = std::get<General>(v_);
    return g.sets[std::min(i, g.sets.size() - 1)];
}

std::string WindowSchedule::to_string() const {
    if (const auto* c = std::get_if<Constant>(&v_))
        return std::to_string(c->k);
    std::string out;
    if (const auto* e = std::get_if<Explicit>(&v_)) {
        for (std::size_t i = 0; i < e->ks.size(); ++i)
            out += (i ? "," : "") + std::to_string(e->ks[i]);
        return out;
    }
    out = "D:";
    const auto& g = std::get<General>(v_);
    for (std::size_t i = 0; i < g.sets.size(); ++i)
        out += (i ? ";" : "") + g.sets[i].to_string();
    return out;
}

// ---------------------------------------------------------------------------

std::size_t IterationTrace::improving_iterations() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const IterationRecord& r) { return !r.removed.empty(); }));
}

StateSet improve_set(const Model& model, const DiscountedKernel& kernel, const StateSet& set,
                     const ValueVector& entrance, const LookAheadSet& window, double tie_tolerance,
                     std::size_t* matvecs) {
    StateSet kept = set;
    const auto ahead = lookahead_values(kernel, entrance, window, matvecs);
    for (auto z : set.members()) {
        const double g = model.payoff(z);
        for (const auto& [depth, h] : ahead) {
            if (g < h[z] - tie_tolerance) {
                kept.erase(z);
                break;
            }
        }
    }
    return kept;
}

StateSet improve_set(const Model& model, const StateSet& set, const LookAheadSet& window, const RunOptions& options) {
    if (set.empty())
        throw Error(ErrorCode::EmptyStoppingSet, "improvement of an empty set");
    const auto h0 = entrance_value(model, set, options.entrance);
    return improve_set(model, psi(model), set, h0, window, options.tie_tolerance);
}

IterationTrace run(const Model& model, const StateSet& initial_set, const WindowSchedule& schedule,
                   const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    if (initial_set.universe_size() != model.n_states())
        throw Error(ErrorCode::DimensionMismatch, "initial set size differs from model size");
    if (initial_set.empty())
        throw Error(ErrorCode::EmptyStoppingSet, "initial set is empty");

    IterationTrace trace;
    trace.initial_set = initial_set;
    const auto kernel = psi(model);
    auto entrance_opts = options.entrance;
    entrance_opts.assume_wellposed = true;

    StateSet current = initial_set;
    bool augment_next = false;
    for (std::size_t k = 1;; ++k) {
        const auto iter_started = std::chrono::steady_clock::now();
        IterationRecord rec;
        rec.iteration = k;
        rec.window = schedule.window(k);
        if (augment_next && !rec.window.contains(1)) {
            rec.window = rec.window.with_depth(1);
            rec.window_augmented = true;
        }

        // Shrinking the set can break well-posedness when alpha = 1 somewhere.
        check_wellposed(model, current);
        auto h0 = entrance_value(model, current, entrance_opts);
        ++trace.solves;
        auto next = improve_set(model, kernel, current, h0, rec.window, options.tie_tolerance, &trace.matvecs);

        rec.set_size_before = current.count();
        rec.set_size = next.count();
        for (auto z : current.members())
            if (!next.contains(z))
                rec.removed.push_back(z);
        if (options.keep_values)
            rec.values = h0;
        rec.wall_ms = elapsed_ms(iter_started);
        const bool fixpoint = rec.removed.empty();
        const bool confirms = rec.window.contains(1);
        trace.records.push_back(std::move(rec));

        if (next.empty())
            throw Error(ErrorCode::EmptyStoppingSet,
                        "iteration " + std::to_string(k) + " removed every remaining state");
        if (fixpoint) {
            if (confirms) {
                trace.final_set = std::move(current);
                trace.final_values = std::move(h0);
                break;
            }
            augment_next = true;
            trace.depth_one_augmented = true;
        } else {
            augment_next = false;
        }
        current = std::move(next);
    }
    trace.total_ms = elapsed_ms(started);
    return trace;
}

std::pair<StateSet, ValueVector> constrained_optimal(const Model& model, const StateSet& initial_set,
                                                     const WindowSchedule& schedule, const RunOptions& options) {
    auto opts = options;
    opts.keep_values = false;
    auto trace = run(model, initial_set, schedule, opts);
    return {std::move(trace.final_set), std::move(trace.final_values)};
}

} // namespace flexfii
