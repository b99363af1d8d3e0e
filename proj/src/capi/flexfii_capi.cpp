#include "flexfii/flexfii.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "flexfii/chain_model.hpp"
#include "flexfii/errors.hpp"
#include "flexfii/fii.hpp"
#include "flexfii/gridworld.hpp"
#include "flexfii/oracle.hpp"

struct flexfii_model {
    flexfii::ModelDocument doc;
};

struct flexfii_result {
    flexfii::IterationTrace trace;
    std::vector<std::string> windows;
};

namespace {

thread_local std::string g_last_error;
thread_local std::optional<std::size_t> g_last_state;

flexfii_status map_code(flexfii::ErrorCode code) {
    using flexfii::ErrorCode;
    switch (code) {
    case ErrorCode::Parse:
        return FLEXFII_PARSE;
    case ErrorCode::RowNotStochastic:
    case ErrorCode::EntryOutOfRange:
    case ErrorCode::NonFinitePayoff:
        return FLEXFII_INVALID_MODEL;
    case ErrorCode::IllPosed:
    case ErrorCode::EmptyTarget:
        return FLEXFII_ILL_POSED;
    case ErrorCode::SingularSystem:
        return FLEXFII_SINGULAR;
    case ErrorCode::NoConvergence:
        return FLEXFII_NO_CONVERGENCE;
    case ErrorCode::CapDominates:
        return FLEXFII_CAP_DOMINATES;
    case ErrorCode::RuleOrderViolation:
        return FLEXFII_RULE_ORDER;
    case ErrorCode::EmptyStoppingSet:
        return FLEXFII_EMPTY_SET;
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidSchedule:
    case ErrorCode::TooLarge:
    case ErrorCode::AnchorOutOfGrid:
        return FLEXFII_INVALID_ARGUMENT;
    }
    return FLEXFII_INTERNAL;
}

flexfii_status fail(flexfii_status status, std::string message, std::optional<std::size_t> state = std::nullopt) {
    g_last_error = std::move(message);
    g_last_state = state;
    return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
flexfii_status guarded(F&& body) {
    g_last_error.clear();
    g_last_state.reset();
    try {
        body();
        return FLEXFII_OK;
    } catch (const flexfii::Error& e) {
        return fail(map_code(e.code()), e.what(), e.state());
    } catch (const std::bad_alloc&) {
        return fail(FLEXFII_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(FLEXFII_INTERNAL, e.what());
    } catch (...) {
        return fail(FLEXFII_INTERNAL, "unknown exception");
    }
}

flexfii::StateSet mask_to_set(std::size_t n, const unsigned char* mask) {
    flexfii::StateSet s(n);
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i])
            s.insert(i);
    return s;
}

flexfii_status model_out(flexfii_model** out, flexfii::ModelDocument doc) {
    *out = new flexfii_model{std::move(doc)};
    return FLEXFII_OK;
}

} // namespace

extern "C" {

FLEXFII_API const char* flexfii_version(void) {
    return "1.0.0";
}

FLEXFII_API const char* flexfii_status_string(flexfii_status status) {
    switch (status) {
    case FLEXFII_OK: return "ok";
    case FLEXFII_INVALID_ARGUMENT: return "invalid argument";
    case FLEXFII_PARSE: return "parse error";
    case FLEXFII_INVALID_MODEL: return "invalid model";
    case FLEXFII_ILL_POSED: return "ill-posed";
    case FLEXFII_SINGULAR: return "singular system";
    case FLEXFII_NO_CONVERGENCE: return "no convergence";
    case FLEXFII_CAP_DOMINATES: return "horizon cap dominates";
    case FLEXFII_RULE_ORDER: return "rule order violation";
    case FLEXFII_EMPTY_SET: return "empty stopping set";
    case FLEXFII_INTERNAL: return "internal error";
    }
    return "unknown status";
}

FLEXFII_API const char* flexfii_last_error(void) {
    return g_last_error.c_str();
}

FLEXFII_API int flexfii_last_error_state(size_t* state) {
    if (!g_last_state)
        return 0;
    if (state)
        *state = *g_last_state;
    return 1;
}

FLEXFII_API flexfii_status flexfii_model_load(const char* path, flexfii_model** out) {
    if (!path || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] { model_out(out, flexfii::load_model_file(path)); });
}

FLEXFII_API flexfii_status flexfii_model_parse(const char* json, flexfii_model** out) {
    if (!json || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] { model_out(out, flexfii::parse_model_json(json)); });
}

FLEXFII_API flexfii_status flexfii_model_from_grid_file(const char* path, flexfii_model** out) {
    if (!path || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] { model_out(out, {flexfii::build_grid(flexfii::load_grid_spec_file(path)), std::nullopt}); });
}

FLEXFII_API flexfii_status flexfii_model_from_grid_json(const char* json, flexfii_model** out) {
    if (!json || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] { model_out(out, {flexfii::build_grid(flexfii::parse_grid_spec_json(json)), std::nullopt}); });
}

FLEXFII_API void flexfii_model_free(flexfii_model* model) {
    delete model;
}

FLEXFII_API size_t flexfii_model_num_states(const flexfii_model* model) {
    return model ? model->doc.model.n_states() : 0;
}

FLEXFII_API double flexfii_model_payoff(const flexfii_model* model, size_t state) {
    return model->doc.model.payoff(state);
}

FLEXFII_API int flexfii_model_grid(const flexfii_model* model, size_t* width, size_t* height) {
    const auto& grid = model->doc.model.grid();
    if (!grid)
        return 0;
    if (width)
        *width = grid->width;
    if (height)
        *height = grid->height;
    return 1;
}

FLEXFII_API flexfii_status flexfii_model_label(const flexfii_model* model, size_t state, char* buf,
                                               size_t capacity, size_t* needed) {
    if (!model || state >= model->doc.model.n_states())
        return fail(FLEXFII_INVALID_ARGUMENT, "state out of range");
    const auto label = model->doc.model.label(state);
    if (needed)
        *needed = label.size();
    if (!buf || capacity < label.size() + 1)
        return fail(FLEXFII_INVALID_ARGUMENT, "label buffer too small");
    std::memcpy(buf, label.c_str(), label.size() + 1);
    return FLEXFII_OK;
}

FLEXFII_API flexfii_status flexfii_model_find_state(const flexfii_model* model, const char* name, size_t* state) {
    if (!model || !name || !state)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    const auto& m = model->doc.model;
    const std::string key(name);
    for (std::size_t s = 0; s < m.n_states(); ++s) {
        if (m.label(s) == key) {
            *state = s;
            return FLEXFII_OK;
        }
    }
    if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos) {
        const auto idx = std::strtoull(key.c_str(), nullptr, 10);
        if (idx < m.n_states()) {
            *state = idx;
            return FLEXFII_OK;
        }
    }
    return fail(FLEXFII_INVALID_ARGUMENT, "unknown state '" + key + "'");
}

FLEXFII_API void flexfii_model_initial_set(const flexfii_model* model, unsigned char* mask) {
    const auto n = model->doc.model.n_states();
    for (std::size_t i = 0; i < n; ++i)
        mask[i] = model->doc.initial_set ? model->doc.initial_set->contains(i) : 1;
}

FLEXFII_API flexfii_status flexfii_model_to_json(const flexfii_model* model, char** out) {
    if (!model || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto text = flexfii::model_to_json(model->doc.model, model->doc.initial_set);
        char* buf = static_cast<char*>(std::malloc(text.size() + 1));
        if (!buf)
            throw std::bad_alloc();
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out = buf;
    });
}

FLEXFII_API void flexfii_string_free(char* s) {
    std::free(s);
}

FLEXFII_API void flexfii_solve_options_default(flexfii_solve_options* options) {
    options->tie_tolerance = flexfii::kTieTolerance;
    options->fixed_point = 0;
    options->fixed_point_tolerance = 1e-12;
}

FLEXFII_API flexfii_status flexfii_solve(const flexfii_model* model, const unsigned char* initial_mask,
                                         const char* kappa, const flexfii_solve_options* options,
                                         flexfii_result** out) {
    if (!model || !kappa || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto& m = model->doc.model;
        const auto n = m.n_states();
        flexfii::StateSet initial = initial_mask   ? mask_to_set(n, initial_mask)
                                    : model->doc.initial_set ? *model->doc.initial_set
                                                             : flexfii::StateSet::all(n);
        flexfii::RunOptions run_options;
        run_options.keep_values = false;
        if (options) {
            if (!(options->tie_tolerance >= 0.0) || !(options->fixed_point_tolerance > 0.0))
                throw flexfii::Error(flexfii::ErrorCode::InvalidArgument, "tolerances must be positive");
            run_options.tie_tolerance = options->tie_tolerance;
            run_options.entrance.solver =
                options->fixed_point ? flexfii::LinearSolver::FixedPoint : flexfii::LinearSolver::SparseLU;
            run_options.entrance.fixed_point_tolerance = options->fixed_point_tolerance;
        }
        const auto schedule = flexfii::WindowSchedule::parse(kappa);
        auto result = std::make_unique<flexfii_result>();
        result->trace = flexfii::run(m, initial, schedule, run_options);
        for (const auto& r : result->trace.records)
            result->windows.push_back(r.window.to_string());
        *out = result.release();
    });
}

FLEXFII_API void flexfii_result_free(flexfii_result* result) {
    delete result;
}

FLEXFII_API void flexfii_result_get_summary(const flexfii_result* result, flexfii_result_summary* out) {
    const auto& t = result->trace;
    out->iterations = t.records.size();
    out->improving_iterations = t.improving_iterations();
    out->final_set_size = t.final_set.count();
    out->matvecs = t.matvecs;
    out->solves = t.solves;
    out->total_ms = t.total_ms;
    out->depth_one_augmented = t.depth_one_augmented ? 1 : 0;
}

FLEXFII_API flexfii_status flexfii_result_iteration(const flexfii_result* result, size_t index,
                                                    flexfii_iteration_info* out) {
    if (!result || !out || index >= result->trace.records.size())
        return fail(FLEXFII_INVALID_ARGUMENT, "iteration index out of range");
    const auto& r = result->trace.records[index];
    out->iteration = r.iteration;
    out->window = result->windows[index].c_str();
    out->window_augmented = r.window_augmented ? 1 : 0;
    out->set_size_before = r.set_size_before;
    out->set_size = r.set_size;
    out->removed = r.removed.size();
    out->wall_ms = r.wall_ms;
    return FLEXFII_OK;
}

FLEXFII_API int flexfii_result_in_set(const flexfii_result* result, size_t state) {
    return result->trace.final_set.contains(state) ? 1 : 0;
}

FLEXFII_API double flexfii_result_value(const flexfii_result* result, size_t state) {
    return result->trace.final_values.at(state);
}

FLEXFII_API void flexfii_sim_options_default(flexfii_sim_options* options) {
    options->n_paths = 10'000;
    options->seed = 0;
    options->horizon_cap = 0;
    options->parallel = 1;
}

FLEXFII_API const char* flexfii_rng_algorithm(void) {
    return flexfii::kRngAlgorithm;
}

FLEXFII_API flexfii_status flexfii_simulate_entrance(const flexfii_model* model, const unsigned char* target_mask,
                                                     size_t start, const flexfii_sim_options* options,
                                                     flexfii_sim_report* out) {
    if (!model || !target_mask || !out)
        return fail(FLEXFII_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto& m = model->doc.model;
        if (start >= m.n_states())
            throw flexfii::Error(flexfii::ErrorCode::InvalidArgument, "start state out of range");
        flexfii::SimulationOptions sim;
        if (options) {
            sim.n_paths = options->n_paths;
            sim.seed = options->seed;
            if (options->horizon_cap)
                sim.horizon_cap = options->horizon_cap;
            sim.parallel = options->parallel != 0;
        }
        const auto rule = flexfii::StoppingRuleSpec::first_entrance(mask_to_set(m.n_states(), target_mask));
        const auto report = flexfii::simulate(m, rule, start, sim);
        out->start = report.start;
        out->n_paths = report.n_paths;
        out->mean = report.mean;
        out->std_error = report.std_error;
        out->horizon_cap = report.horizon_cap;
        out->capped_paths = report.capped_paths;
    });
}

} // extern "C"
