#include "flexfii/stopping_rules.hpp"

#include <algorithm>

#include "flexfii/errors.hpp"

namespace flexfii {

namespace {

std::string time_str(std::uint64_t t) {
    return t == kNever ? std::string("inf") : std::to_string(t);
}

std::pair<std::vector<std::pair<int, StateSet>>, StateSet>
prefix_family(const Model& model, const StateSet& base, const LookAheadSet& window, const RunOptions& options) {
    if (base.empty())
        throw Error(ErrorCode::EmptyStoppingSet, "improved rule over an empty set");
    check_wellposed(model, base);
    auto opts = options.entrance;
    opts.assume_wellposed = true;
    const auto h0 = entrance_value(model, base, opts);
    const auto kernel = psi(model);
    std::vector<std::pair<int, StateSet>> prefixes;
    for (int i : window.depths()) {
        const auto p = window.prefix(i);
        LookAheadSet prefix(std::vector<int>(p.begin(), p.end()));
        prefixes.emplace_back(i, improve_set(model, kernel, base, h0, prefix, options.tie_tolerance));
    }
    StateSet improved = prefixes.back().second;
    return {std::move(prefixes), std::move(improved)};
}

} // namespace

std::uint64_t entrance_time(Path& path, const StateSet& target, std::uint64_t from) {
    if (from == kNever || target.empty())
        return kNever;
    for (std::uint64_t t = from;; ++t) {
        auto s = path.at(t);
        if (!s)
            return kNever;
        if (target.contains(*s))
            return t;
    }
}

StoppingRuleSpec StoppingRuleSpec::first_entrance(StateSet target, std::uint64_t offset) {
    return StoppingRuleSpec(Entrance{std::move(target), offset, nullptr});
}

StoppingRuleSpec StoppingRuleSpec::first_entrance_after(StateSet target, const StoppingRuleSpec& after) {
    return StoppingRuleSpec(Entrance{std::move(target), 0, std::make_shared<const StoppingRuleSpec>(after)});
}

StoppingRuleSpec StoppingRuleSpec::stop_immediately(std::size_t n_states) {
    return first_entrance(StateSet::all(n_states), 0);
}

StoppingRuleSpec StoppingRuleSpec::never(std::size_t n_states) {
    return first_entrance(StateSet::none(n_states), 0);
}

bool StoppingRuleSpec::is_improved() const noexcept {
    return std::holds_alternative<Improved>(v_);
}

std::optional<StateSet> StoppingRuleSpec::entrance_target() const {
    if (const auto* e = std::get_if<Entrance>(&v_); e && !e->after)
        return e->target;
    return std::nullopt;
}

std::uint64_t StoppingRuleSpec::stopping_time(Path& path) const {
    if (const auto* e = std::get_if<Entrance>(&v_)) {
        std::uint64_t from = e->offset;
        if (e->after) {
            const auto a = e->after->stopping_time(path);
            from = a == kNever ? kNever : a + e->offset;
        }
        return entrance_time(path, e->target, from);
    }
    return evaluate(std::get<Improved>(v_), path);
}

std::uint64_t StoppingRuleSpec::evaluate(const Improved& r, Path& path) const {
    const auto sigma = r.sigma->stopping_time(path);
    const auto rho = r.rho->stopping_time(path);
    const auto target_time = entrance_time(path, r.improved, sigma);
    if (!(sigma <= rho && rho <= target_time))
        throw Error(ErrorCode::RuleOrderViolation, "base rule outside [sigma, tau_sigma(B*D)]: sigma=" +
                                                       time_str(sigma) + " rho=" + time_str(rho) +
                                                       " tau=" + time_str(target_time));
    if (rho == target_time)
        return rho;

    // rho < target_time, so Z_rho lies outside B^{*D} and some prefix set excludes it.
    const auto z = *path.at(rho);
    int j = 0;
    for (const auto& [depth, set] : r.prefixes) {
        if (!set.contains(z)) {
            j = depth;
            break;
        }
    }
    if (j == 0)
        throw Error(ErrorCode::RuleOrderViolation, "state " + std::to_string(z) + " at rho lies in B*D");

    const auto lookahead = entrance_time(path, r.base, rho + static_cast<std::uint64_t>(j));
    if (!r.capped) {
        if (lookahead > target_time)
            throw Error(ErrorCode::RuleOrderViolation, "uncapped rule stops at " + time_str(lookahead) +
                                                           " after tau_sigma(B*D) = " + time_str(target_time));
        return lookahead;
    }
    const auto result = std::min(lookahead, target_time);
    if (!(sigma <= result && result <= target_time && rho + 1 <= result))
        throw Error(ErrorCode::RuleOrderViolation, "improved rule ordering failed: rho=" + time_str(rho) +
                                                       " result=" + time_str(result));
    return result;
}

std::string StoppingRuleSpec::describe() const {
    if (const auto* e = std::get_if<Entrance>(&v_)) {
        if (e->target.empty())
            return "never";
        std::string from = e->after ? "(" + e->after->describe() + ")" : "";
        if (e->offset != 0 || !e->after)
            from += (e->after ? "+" : "") + std::to_string(e->offset);
        return "tau_" + from + e->target.to_string();
    }
    const auto& r = std::get<Improved>(v_);
    return std::string(r.capped ? "improved" : "uncapped") + "[B=" + r.base.to_string() +
           ",D=" + r.window.to_string() + ",sigma=" + r.sigma->describe() + ",rho=" + r.rho->describe() + "]";
}

StoppingRuleSpec improved_rule(const Model& model, const StateSet& base, const LookAheadSet& window,
                               const StoppingRuleSpec& sigma, const StoppingRuleSpec& rho,
                               const RunOptions& options) {
    auto [prefixes, improved] = prefix_family(model, base, window, options);
    return StoppingRuleSpec(StoppingRuleSpec::Improved{
        base, window, std::move(prefixes), std::move(improved), std::make_shared<const StoppingRuleSpec>(sigma),
        std::make_shared<const StoppingRuleSpec>(rho), true});
}

StoppingRuleSpec uncapped_improved_rule(const Model& model, const StateSet& base, const LookAheadSet& window,
                                        const StoppingRuleSpec& sigma, const StoppingRuleSpec& rho,
                                        const RunOptions& options) {
    auto rule = improved_rule(model, base, window, sigma, rho, options);
    std::get<StoppingRuleSpec::Improved>(rule.v_).capped = false;
    return rule;
}

} // namespace flexfii
