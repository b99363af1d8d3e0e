#pragma once

// Pathwise stopping rules: first-entrance times tau_sigma(B) and the
// improved rule built from a base rule rho and a look-ahead set D.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flexfii/chain_model.hpp"
#include "flexfii/fii.hpp"
#include "flexfii/lookahead_set.hpp"

namespace flexfii {

/// Stopping time meaning "not stopped within the observed horizon".
inline constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

/// A single trajectory, generated on demand.
class Path {
public:
    virtual ~Path() = default;
    /// State at time t, or nullopt once t lies beyond the horizon.
    virtual std::optional<StateIndex> at(std::uint64_t t) = 0;
};

/// Path over a fixed sequence of states; used by tests and exact checks.
class FixedPath final : public Path {
public:
    explicit FixedPath(std::vector<StateIndex> states) : states_(std::move(states)) {}
    std::optional<StateIndex> at(std::uint64_t t) override {
        if (t >= states_.size())
            return std::nullopt;
        return states_[t];
    }

private:
    std::vector<StateIndex> states_;
};

class StoppingRuleSpec {
public:
    /// inf{ k >= offset : Z_k in target }. An empty target never stops.
    static StoppingRuleSpec first_entrance(StateSet target, std::uint64_t offset = 0);
    /// inf{ k >= after : Z_k in target }.
    static StoppingRuleSpec first_entrance_after(StateSet target, const StoppingRuleSpec& after);
    static StoppingRuleSpec stop_immediately(std::size_t n_states);
    static StoppingRuleSpec never(std::size_t n_states);

    /// Stopping time on `path`, kNever if not stopped within its horizon.
    /// Improved rules throw Error(RuleOrderViolation) when the ordering
    /// sigma <= rho <= tau_sigma(B^{*D}) (or the ordering of the result)
    /// fails on this path.
    std::uint64_t stopping_time(Path& path) const;

    bool is_improved() const noexcept;
    /// Target set of a plain first-entrance rule (no base rule, any offset).
    std::optional<StateSet> entrance_target() const;
    std::string describe() const;

private:
    friend StoppingRuleSpec improved_rule(const Model&, const StateSet&, const LookAheadSet&,
                                          const StoppingRuleSpec&, const StoppingRuleSpec&, const RunOptions&);
    friend StoppingRuleSpec uncapped_improved_rule(const Model&, const StateSet&, const LookAheadSet&,
                                                   const StoppingRuleSpec&, const StoppingRuleSpec&,
                                                   const RunOptions&);

    struct Entrance {
        StateSet target;
        std::uint64_t offset = 0;
        std::shared_ptr<const StoppingRuleSpec> after;
    };
    struct Improved {
        StateSet base;                                  // B
        LookAheadSet window;                            // D
        std::vector<std::pair<int, StateSet>> prefixes; // (i, B^{*D_{<=i}}) for i in D, ascending
        StateSet improved;                              // B^{*D}
        std::shared_ptr<const StoppingRuleSpec> sigma;
        std::shared_ptr<const StoppingRuleSpec> rho;
        bool capped = true;
    };

    explicit StoppingRuleSpec(std::variant<Entrance, Improved> v) : v_(std::move(v)) {}
    std::uint64_t evaluate(const Improved& r, Path& path) const;

    std::variant<Entrance, Improved> v_;
};

/// First entrance into `target` at or after `from`, kNever if none within
/// the path horizon.
std::uint64_t entrance_time(Path& path, const StateSet& target, std::uint64_t from);

/// The improved rule rho-hat: equals rho where rho already stops in B^{*D},
/// otherwise with n = rho and j the first depth of D whose prefix set
/// B^{*D_{<=j}} excludes Z_n, stops at tau_{n+j}(B) min tau_sigma(B^{*D}).
/// The value-improvement guarantee needs D = {1..k}; other D only keep the
/// ordering properties.
StoppingRuleSpec improved_rule(const Model& model, const StateSet& base, const LookAheadSet& window,
                               const StoppingRuleSpec& sigma, const StoppingRuleSpec& rho,
                               const RunOptions& options = {});

/// rho-hat without the cap at tau_sigma(B^{*D}). Not a valid improvement in
/// general; evaluating it throws RuleOrderViolation on paths where it
/// overshoots tau_sigma(B^{*D}).
StoppingRuleSpec uncapped_improved_rule(const Model& model, const StateSet& base, const LookAheadSet& window,
                                        const StoppingRuleSpec& sigma, const StoppingRuleSpec& rho,
                                        const RunOptions& options = {});

} // namespace flexfii
