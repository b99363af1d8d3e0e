#include "flexfii/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "flexfii/entrance_values.hpp"
#include "flexfii/errors.hpp"
#include "flexfii/fii.hpp"

namespace flexfii {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

StateIndex step(const SparseMatrix& pi, StateIndex from, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    auto cols = pi.row_columns(from);
    auto vals = pi.row_values(from);
    double acc = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        acc += vals[k];
        if (u < acc)
            return cols[k];
    }
    // Rounding left u above the accumulated mass; take the last positive entry.
    for (std::size_t k = cols.size(); k-- > 0;)
        if (vals[k] > 0.0)
            return cols[k];
    return from;
}

class SampledPath final : public Path {
public:
    SampledPath(const Model& model, StateIndex start, std::uint64_t cap, std::mt19937_64& rng)
        : pi_(model.transitions()), cap_(cap), rng_(rng) {
        states_.push_back(start);
    }

    std::optional<StateIndex> at(std::uint64_t t) override {
        if (t > cap_)
            return std::nullopt;
        while (states_.size() <= t)
            states_.push_back(step(pi_, states_.back(), rng_));
        return states_[t];
    }

private:
    const SparseMatrix& pi_;
    std::uint64_t cap_;
    std::mt19937_64& rng_;
    std::vector<StateIndex> states_;
};

std::mt19937_64 shard_rng(std::uint64_t seed, std::size_t shard) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shard)};
    return std::mt19937_64(seq);
}

struct ShardStats {
    std::vector<double> sum, sum_sq;           // per rule
    std::vector<double> diff_sum, diff_sum_sq; // per rule vs rule 0
    std::vector<std::uint64_t> capped;
    std::vector<std::map<std::uint64_t, std::uint64_t>> histogram;
    std::optional<Error> error;
    std::uint64_t violations = 0;
};

double mean_of(double sum, std::uint64_t n) {
    return n ? sum / static_cast<double>(n) : 0.0;
}

double std_error_of(double sum, double sum_sq, std::uint64_t n) {
    if (n < 2)
        return 0.0;
    const double dn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - sum * sum / dn) / (dn - 1.0));
    return std::sqrt(var / dn);
}

// Runs `per_path` over options.n_paths paths split into fixed shards and
// merges shard results in shard order.
template <class PerPath>
std::vector<ShardStats> run_shards(const Model& model, StateIndex start, const SimulationOptions& options,
                                   std::uint64_t cap, std::size_t n_rules, PerPath per_path) {
    const std::size_t shards = std::max<std::size_t>(1, options.shards);
    std::vector<ShardStats> stats(shards);
    auto work = [&](std::size_t s) {
        auto& st = stats[s];
        st.sum.assign(n_rules, 0.0);
        st.sum_sq.assign(n_rules, 0.0);
        st.diff_sum.assign(n_rules, 0.0);
        st.diff_sum_sq.assign(n_rules, 0.0);
        st.capped.assign(n_rules, 0);
        st.histogram.resize(n_rules);
        auto rng = shard_rng(options.seed, s);
        const std::uint64_t begin = options.n_paths * s / shards;
        const std::uint64_t end = options.n_paths * (s + 1) / shards;
        try {
            for (std::uint64_t p = begin; p < end; ++p) {
                SampledPath path(model, start, cap, rng);
                per_path(path, st);
            }
        } catch (const Error& e) {
            st.error = e;
        }
    };
    if (options.parallel && shards > 1 && options.n_paths >= 2000) {
        std::vector<std::thread> threads;
        for (std::size_t s = 0; s < shards; ++s)
            threads.emplace_back(work, s);
        for (auto& t : threads)
            t.join();
    } else {
        for (std::size_t s = 0; s < shards; ++s)
            work(s);
    }
    for (auto& st : stats)
        if (st.error)
            throw *st.error;
    return stats;
}

void check_simulation_inputs(const Model& model, const std::vector<StoppingRuleSpec>& rules, StateIndex start) {
    if (start >= model.n_states())
        throw Error(ErrorCode::InvalidArgument, "start state " + std::to_string(start) + " out of range", start);
    if (model.max_alpha() < 1.0)
        return;
    for (const auto& r : rules)
        if (auto target = r.entrance_target(); target && !target->empty())
            check_wellposed(model, *target);
}

// Psi^n as dense rows, n = 0..max_power.
std::vector<std::vector<std::vector<double>>> dense_powers(const Model& model, std::uint64_t max_power) {
    const std::size_t n = model.n_states();
    const auto kernel = psi(model);
    std::vector<std::vector<std::vector<double>>> powers;
    std::vector<std::vector<double>> current(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        current[i][i] = 1.0;
    powers.push_back(current);
    for (std::uint64_t p = 1; p <= max_power; ++p) {
        std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                if (current[i][k] == 0.0)
                    continue;
                auto cols = kernel.matrix().row_columns(k);
                auto vals = kernel.matrix().row_values(k);
                for (std::size_t c = 0; c < cols.size(); ++c)
                    next[i][cols[c]] += current[i][k] * vals[c];
            }
        current = std::move(next);
        powers.push_back(current);
    }
    return powers;
}

bool weak_leq(double lhs, double rhs) {
    return lhs <= rhs + kTieTolerance * (1.0 + std::abs(rhs));
}

} // namespace

// ---------------------------------------------------------------------------

BellmanResult bellman_value(const Model& model, const StateSet& stoppable, double tol) {
    const std::size_t n = model.n_states();
    const double amax = model.max_alpha();
    if (stoppable.universe_size() != n)
        throw Error(ErrorCode::DimensionMismatch, "stoppable set size differs from model size");
    if (amax >= 1.0 && stoppable != StateSet::all(n))
        throw Error(ErrorCode::InvalidArgument, "value iteration with alpha = 1 requires every state stoppable");

    const auto kernel = psi(model);
    ValueVector v(n, 0.0), next(n);
    for (std::size_t z = 0; z < n; ++z)
        if (stoppable.contains(z))
            v[z] = model.payoff(z);
    const double threshold = tol * (1.0 - std::min(amax, 1.0));

    auto apply = [&](const ValueVector& in, ValueVector& out) {
        kernel.matrix().multiply(in, out);
        for (std::size_t z = 0; z < n; ++z)
            if (stoppable.contains(z))
                out[z] = std::max(model.payoff(z), out[z]);
    };

    for (std::size_t it = 1; it <= kBellmanIterationCap; ++it) {
        apply(v, next);
        double diff = 0.0;
        for (std::size_t z = 0; z < n; ++z)
            diff = std::max(diff, std::abs(next[z] - v[z]));
        v.swap(next);
        if (diff <= threshold) {
            apply(v, next);
            double residual = 0.0;
            for (std::size_t z = 0; z < n; ++z)
                residual = std::max(residual, std::abs(next[z] - v[z]));
            return {std::move(v), residual, it};
        }
    }
    throw Error(ErrorCode::NoConvergence,
                "value iteration hit " + std::to_string(kBellmanIterationCap) + " iterations");
}

ValueVector exhaustive_optimal(const Model& model, const StateSet& stoppable, int horizon) {
    const std::size_t n = model.n_states();
    if (n > 12 || horizon > 20)
        throw Error(ErrorCode::TooLarge, "backward induction limited to 12 states and horizon 20");
    if (horizon < 0)
        throw Error(ErrorCode::InvalidArgument, "negative horizon");
    const auto kernel = psi(model);
    ValueVector v(n, 0.0), next(n);
    for (std::size_t z = 0; z < n; ++z)
        if (stoppable.contains(z))
            v[z] = model.payoff(z);
    for (int t = 0; t < horizon; ++t) {
        kernel.matrix().multiply(v, next);
        for (std::size_t z = 0; z < n; ++z)
            if (stoppable.contains(z))
                next[z] = std::max(model.payoff(z), next[z]);
        v.swap(next);
    }
    return v;
}

std::uint64_t default_horizon_cap(const Model& model) {
    const double amax = model.max_alpha();
    if (amax >= 1.0)
        return 1'000'000;
    double gmax = 0.0;
    for (double g : model.payoff())
        gmax = std::max(gmax, std::abs(g));
    if (gmax <= 1e-6 || amax <= 0.0)
        return 1;
    return static_cast<std::uint64_t>(std::ceil(std::log(1e-6 / gmax) / std::log(amax)));
}

double discounted_payoff(const Model& model, Path& path, std::uint64_t tau, std::uint64_t cap) {
    const std::uint64_t t = tau == kNever ? cap : tau;
    double discount = 1.0;
    for (std::uint64_t i = 0; i < t; ++i)
        discount *= model.alpha(*path.at(i));
    return discount * model.payoff(*path.at(t));
}

std::vector<StateIndex> sample_path(const Model& model, StateIndex start, std::uint64_t steps, std::uint64_t seed) {
    auto rng = shard_rng(seed, 0);
    SampledPath path(model, start, steps, rng);
    std::vector<StateIndex> out;
    for (std::uint64_t t = 0; t <= steps; ++t)
        out.push_back(*path.at(t));
    return out;
}

MultiRuleReport simulate_rules(const Model& model, const std::vector<StoppingRuleSpec>& rules, StateIndex start,
                               const SimulationOptions& options) {
    if (rules.empty())
        throw Error(ErrorCode::InvalidArgument, "no rules to simulate");
    check_simulation_inputs(model, rules, start);
    const std::uint64_t cap = options.horizon_cap.value_or(default_horizon_cap(model));
    const std::size_t m = rules.size();

    auto stats = run_shards(model, start, options, cap, m, [&](SampledPath& path, ShardStats& st) {
        double first = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const auto tau = rules[r].stopping_time(path);
            const double x = discounted_payoff(model, path, tau, cap);
            st.sum[r] += x;
            st.sum_sq[r] += x * x;
            if (r == 0)
                first = x;
            const double d = x - first;
            st.diff_sum[r] += d;
            st.diff_sum_sq[r] += d * d;
            if (tau == kNever)
                ++st.capped[r];
            ++st.histogram[r][tau];
        }
    });

    MultiRuleReport out;
    for (std::size_t r = 0; r < m; ++r) {
        double sum = 0, sq = 0, dsum = 0, dsq = 0;
        SimulationReport rep;
        rep.start = start;
        rep.rule = rules[r].describe();
        rep.n_paths = options.n_paths;
        rep.horizon_cap = cap;
        for (const auto& st : stats) {
            sum += st.sum[r];
            sq += st.sum_sq[r];
            dsum += st.diff_sum[r];
            dsq += st.diff_sum_sq[r];
            rep.capped_paths += st.capped[r];
            for (const auto& [t, c] : st.histogram[r])
                rep.entrance_histogram[t] += c;
        }
        rep.mean = mean_of(sum, options.n_paths);
        rep.std_error = std_error_of(sum, sq, options.n_paths);
        if (model.max_alpha() >= 1.0 && rep.capped_paths * 100 > options.n_paths)
            throw Error(ErrorCode::CapDominates, std::to_string(rep.capped_paths) + " of " +
                                                     std::to_string(options.n_paths) + " paths hit the cap " +
                                                     std::to_string(cap));
        out.reports.push_back(std::move(rep));
        out.difference_mean.push_back(mean_of(dsum, options.n_paths));
        out.difference_std_error.push_back(std_error_of(dsum, dsq, options.n_paths));
    }
    return out;
}

SimulationReport simulate(const Model& model, const StoppingRuleSpec& rule, StateIndex start,
                          const SimulationOptions& options) {
    return std::move(simulate_rules(model, {rule}, start, options).reports.front());
}

std::uint64_t count_order_violations(const Model& model, const StoppingRuleSpec& rule, StateIndex start,
                                     const SimulationOptions& options) {
    check_simulation_inputs(model, {rule}, start);
    const std::uint64_t cap = options.horizon_cap.value_or(default_horizon_cap(model));
    auto stats = run_shards(model, start, options, cap, 1, [&](SampledPath& path, ShardStats& st) {
        try {
            (void)rule.stopping_time(path);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RuleOrderViolation)
                throw;
            ++st.violations;
        }
    });
    std::uint64_t total = 0;
    for (const auto& st : stats)
        total += st.violations;
    return total;
}

// ---------------------------------------------------------------------------

std::size_t LemmaReport::failures() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const LemmaCheck& c) { return !c.holds; }));
}

LemmaReport lemma_property_check(const Model& model, const StateSet& base, const LookAheadSet& window,
                                 std::uint64_t seed) {
    const std::size_t n = model.n_states();
    if (n > 12)
        throw Error(ErrorCode::TooLarge, "lemma checks limited to 12 states");
    check_wellposed(model, base);

    std::vector<std::uint64_t> times{0, 1, 2, 3};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> extra(4, 20);
    for (int i = 0; i < 2; ++i)
        times.push_back(extra(rng));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const auto powers = dense_powers(model, times.back());
    const auto h0 = entrance_value(model, base);
    const auto kernel = psi(model);
    const auto ahead = lookahead_values(kernel, h0, window);

    auto improved_by = [&](const std::set<int>& depths) {
        if (depths.empty())
            return base; // B^{*emptyset} = B
        return improve_set(model, kernel, base, h0, LookAheadSet(std::vector<int>(depths.begin(), depths.end())));
    };

    LemmaReport report;

    auto record = [&](const char* lemma, std::uint64_t time, int depth, const std::vector<StateIndex>& pattern,
                      const ValueVector& lhs_vec, const ValueVector& rhs_vec) {
        for (std::size_t z = 0; z < n; ++z) {
            double lhs_sum = 0.0, rhs_sum = 0.0;
            bool any = false;
            for (auto x : pattern) {
                const double w = powers[time][z][x];
                if (w == 0.0)
                    continue;
                any = true;
                LemmaCheck c{lemma, z, time, depth, x, w * lhs_vec[x], w * rhs_vec[x], true};
                c.holds = weak_leq(c.lhs, c.rhs);
                lhs_sum += c.lhs;
                rhs_sum += c.rhs;
                report.checks.push_back(c);
            }
            if (any && pattern.size() > 1) {
                LemmaCheck c{lemma, z, time, depth, std::nullopt, lhs_sum, rhs_sum, true};
                c.holds = weak_leq(lhs_sum, rhs_sum);
                report.checks.push_back(c);
            }
        }
    };

    ValueVector g(model.payoff().begin(), model.payoff().end());

    // A.1: removed at depth j.
    for (int j : window.depths()) {
        const auto before = improved_by(window.prefix(j - 1));
        const auto after = improved_by(window.prefix(j));
        std::vector<StateIndex> pattern;
        for (auto x : before.members())
            if (!after.contains(x))
                pattern.push_back(x);
        if (pattern.empty()) {
            report.unsatisfiable.push_back("A.1 j=" + std::to_string(j) + ": B*D<j \\ B*D<=j is empty");
            continue;
        }
        for (auto t : times)
            record("A.1", t, j, pattern, g, ahead.at(j));
    }

    // A.2: states kept by the whole window, t - s in D plus the trivial t = s.
    const auto kept = improved_by(window.depths()).members();
    if (kept.empty()) {
        report.unsatisfiable.push_back("A.2: B*D is empty");
    } else {
        for (auto s : times) {
            record("A.2", s, 0, kept, h0, g);
            for (int d : window.depths())
                record("A.2", s, d, kept, ahead.at(d), g);
        }
    }
    return report;
}

} // namespace flexfii
