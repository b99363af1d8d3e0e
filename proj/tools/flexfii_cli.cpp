// flexfii: batch front-end over the C API.
//
//   flexfii solve    --model m.json | --grid g.json [--kappa 1] [--initial-set all] [--out dir]
//   flexfii bench    --model ... --sweep 1,2,5,10 [--reps 3] [--out dir]
//   flexfii simulate --model ... --start a --rule F|stop|set:a,b [--paths 10000] [--seed 0]
//   flexfii gridgen  --grid g.json [--out model.json]
//
// Exit codes: 0 success, 1 input or model error, 2 numerical failure.

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexfii/flexfii.h"

namespace {

struct Failure : std::runtime_error {
    Failure(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
    int exit_code;
};

int exit_code_for(flexfii_status st) {
    switch (st) {
    case FLEXFII_OK:
        return 0;
    case FLEXFII_SINGULAR:
    case FLEXFII_NO_CONVERGENCE:
    case FLEXFII_RULE_ORDER:
    case FLEXFII_INTERNAL:
        return 2;
    default:
        return 1;
    }
}

void check(flexfii_status st) {
    if (st != FLEXFII_OK)
        throw Failure(exit_code_for(st), std::string(flexfii_status_string(st)) + ": " + flexfii_last_error());
}

struct ModelDeleter {
    void operator()(flexfii_model* m) const { flexfii_model_free(m); }
};
struct ResultDeleter {
    void operator()(flexfii_result* r) const { flexfii_result_free(r); }
};
using ModelPtr = std::unique_ptr<flexfii_model, ModelDeleter>;
using ResultPtr = std::unique_ptr<flexfii_result, ResultDeleter>;

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct Config {
    std::string model_path;
    std::string grid_path;
    std::string kappa = "1";
    std::string initial_set = "all";
    std::string out_dir = ".";
    std::string out_file;
    double tol = 1e-9;
    bool fixed_point = false;
    std::string sweep = "1,2,5,10";
    int reps = 1;
    std::string start;
    std::string rule = "F";
    std::uint64_t paths = 10'000;
    std::uint64_t seed = 0;
    std::uint64_t horizon_cap = 0;
    bool header = false;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

FilePtr open_out(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f)
        throw Failure(1, "cannot write " + path.string() + ": " + std::strerror(errno));
    return f;
}

ModelPtr load_model(const Config& cfg) {
    if (cfg.model_path.empty() == cfg.grid_path.empty())
        throw Failure(1, "exactly one of --model and --grid is required");
    flexfii_model* m = nullptr;
    if (!cfg.model_path.empty())
        check(flexfii_model_load(cfg.model_path.c_str(), &m));
    else
        check(flexfii_model_from_grid_file(cfg.grid_path.c_str(), &m));
    return ModelPtr(m);
}

std::string label_of(const flexfii_model* m, size_t s) {
    size_t needed = 0;
    flexfii_model_label(m, s, nullptr, 0, &needed);
    std::string buf(needed + 1, '\0');
    check(flexfii_model_label(m, s, buf.data(), buf.size(), &needed));
    buf.resize(needed);
    return buf;
}

size_t state_of(const flexfii_model* m, const std::string& name) {
    size_t s = 0;
    check(flexfii_model_find_state(m, name.c_str(), &s));
    return s;
}

// "all", or a comma list of labels / indices / x:y cells.
std::vector<unsigned char> parse_set(const flexfii_model* m, const std::string& text) {
    const size_t n = flexfii_model_num_states(m);
    if (text == "all")
        return std::vector<unsigned char>(n, 1);
    std::vector<unsigned char> mask(n, 0);
    for (const auto& name : split(text, ',')) {
        if (name.empty())
            throw Failure(1, "empty entry in state list '" + text + "'");
        mask[state_of(m, name)] = 1;
    }
    return mask;
}

std::vector<unsigned char> initial_mask(const flexfii_model* m, const Config& cfg) {
    if (cfg.initial_set == "all" && !cfg.model_path.empty()) {
        std::vector<unsigned char> mask(flexfii_model_num_states(m));
        flexfii_model_initial_set(m, mask.data());
        return mask;
    }
    return parse_set(m, cfg.initial_set);
}

flexfii_solve_options solve_options(const Config& cfg) {
    flexfii_solve_options o;
    flexfii_solve_options_default(&o);
    o.tie_tolerance = cfg.tol;
    o.fixed_point = cfg.fixed_point ? 1 : 0;
    return o;
}

ResultPtr solve(const flexfii_model* m, const std::vector<unsigned char>& mask, const std::string& kappa,
                const Config& cfg) {
    const auto opts = solve_options(cfg);
    flexfii_result* r = nullptr;
    check(flexfii_solve(m, mask.data(), kappa.c_str(), &opts, &r));
    return ResultPtr(r);
}

int cmd_solve(const Config& cfg) {
    auto model = load_model(cfg);
    const auto* m = model.get();
    const auto result = solve(m, initial_mask(m, cfg), cfg.kappa, cfg);
    const auto* r = result.get();
    const size_t n = flexfii_model_num_states(m);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);

    {
        auto f = open_out(dir / "stopping_set.csv");
        std::fprintf(f.get(), "state,label,in_F\n");
        for (size_t s = 0; s < n; ++s)
            std::fprintf(f.get(), "%zu,%s,%d\n", s, csv_field(label_of(m, s)).c_str(), flexfii_result_in_set(r, s));
    }
    {
        auto f = open_out(dir / "values.csv");
        std::fprintf(f.get(), "state,value\n");
        for (size_t s = 0; s < n; ++s)
            std::fprintf(f.get(), "%zu,%s\n", s, fmt(flexfii_result_value(r, s)).c_str());
    }
    flexfii_result_summary sum;
    flexfii_result_get_summary(r, &sum);
    {
        auto f = open_out(dir / "trace.csv");
        std::fprintf(f.get(), "iteration,window,window_augmented,set_size,removed,wall_ms\n");
        for (size_t i = 0; i < sum.iterations; ++i) {
            flexfii_iteration_info info;
            check(flexfii_result_iteration(r, i, &info));
            std::fprintf(f.get(), "%zu,%s,%d,%zu,%zu,%s\n", info.iteration, csv_field(info.window).c_str(),
                         info.window_augmented, info.set_size, info.removed, fmt(info.wall_ms).c_str());
        }
    }
    size_t width = 0, height = 0;
    if (flexfii_model_grid(m, &width, &height)) {
        // One line per y, one column per x.
        auto values = open_out(dir / "values_grid.csv");
        auto stops = open_out(dir / "stopping_grid.csv");
        for (size_t y = 0; y < height; ++y) {
            for (size_t x = 0; x < width; ++x) {
                const size_t s = y * width + x;
                const char* sep = x + 1 < width ? "," : "\n";
                std::fprintf(values.get(), "%s%s", fmt(flexfii_result_value(r, s)).c_str(), sep);
                std::fprintf(stops.get(), "%d%s", flexfii_result_in_set(r, s), sep);
            }
        }
    }

    std::printf("solve: kappa=%s states=%zu |F|=%zu iterations=%zu improving=%zu matvecs=%zu solves=%zu "
                "total_ms=%.3f%s\n",
                cfg.kappa.c_str(), n, sum.final_set_size, sum.iterations, sum.improving_iterations, sum.matvecs,
                sum.solves, sum.total_ms, sum.depth_one_augmented ? " (depth 1 added to confirm)" : "");
    return 0;
}

int cmd_bench(const Config& cfg) {
    if (cfg.reps < 1)
        throw Failure(1, "--reps must be >= 1");
    std::vector<int> ks;
    for (const auto& part : split(cfg.sweep, ',')) {
        try {
            size_t used = 0;
            const int k = std::stoi(part, &used);
            if (used != part.size() || k < 1)
                throw std::invalid_argument(part);
            ks.push_back(k);
        } catch (const std::exception&) {
            throw Failure(1, "bad --sweep entry '" + part + "'");
        }
    }
    auto model = load_model(cfg);
    const auto mask = initial_mask(model.get(), cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    auto f = open_out(dir / "bench.csv");
    std::fprintf(f.get(), "k,rep,iterations,matvecs,solves,total_ms\n");
    for (int k : ks) {
        for (int rep = 0; rep < cfg.reps; ++rep) {
            const auto result = solve(model.get(), mask, std::to_string(k), cfg);
            flexfii_result_summary sum;
            flexfii_result_get_summary(result.get(), &sum);
            std::fprintf(f.get(), "%d,%d,%zu,%zu,%zu,%s\n", k, rep, sum.iterations, sum.matvecs, sum.solves,
                         fmt(sum.total_ms).c_str());
            std::fflush(f.get());
            std::printf("bench: k=%d rep=%d iterations=%zu matvecs=%zu total_ms=%.3f\n", k, rep, sum.iterations,
                        sum.matvecs, sum.total_ms);
        }
    }
    return 0;
}

int cmd_simulate(const Config& cfg) {
    if (cfg.start.empty())
        throw Failure(1, "--start is required");
    auto model = load_model(cfg);
    const auto* m = model.get();
    const size_t n = flexfii_model_num_states(m);
    const size_t start = state_of(m, cfg.start);

    std::vector<unsigned char> target;
    if (cfg.rule == "F") {
        const auto result = solve(m, initial_mask(m, cfg), cfg.kappa, cfg);
        target.resize(n);
        for (size_t s = 0; s < n; ++s)
            target[s] = static_cast<unsigned char>(flexfii_result_in_set(result.get(), s));
    } else if (cfg.rule == "stop") {
        target.assign(n, 1);
    } else if (cfg.rule.rfind("set:", 0) == 0) {
        target = parse_set(m, cfg.rule.substr(4));
    } else {
        throw Failure(1, "--rule must be F, stop or set:<states>");
    }

    flexfii_sim_options opts;
    flexfii_sim_options_default(&opts);
    opts.n_paths = cfg.paths;
    opts.seed = cfg.seed;
    opts.horizon_cap = cfg.horizon_cap;
    flexfii_sim_report rep;
    check(flexfii_simulate_entrance(m, target.data(), start, &opts, &rep));
    if (cfg.header)
        std::printf("start,rule,n_paths,seed,mean,std_error,horizon_cap,capped_paths,rng\n");
    std::printf("%s,%s,%llu,%llu,%s,%s,%llu,%llu,%s\n", csv_field(label_of(m, start)).c_str(),
                csv_field(cfg.rule).c_str(), static_cast<unsigned long long>(rep.n_paths),
                static_cast<unsigned long long>(cfg.seed), fmt(rep.mean).c_str(), fmt(rep.std_error).c_str(),
                static_cast<unsigned long long>(rep.horizon_cap), static_cast<unsigned long long>(rep.capped_paths),
                csv_field(flexfii_rng_algorithm()).c_str());
    return 0;
}

int cmd_gridgen(const Config& cfg) {
    if (cfg.grid_path.empty())
        throw Failure(1, "--grid is required");
    flexfii_model* raw = nullptr;
    check(flexfii_model_from_grid_file(cfg.grid_path.c_str(), &raw));
    ModelPtr model(raw);
    char* json = nullptr;
    check(flexfii_model_to_json(model.get(), &json));
    std::unique_ptr<char, void (*)(char*)> text(json, flexfii_string_free);
    if (cfg.out_file.empty()) {
        std::fputs(text.get(), stdout);
    } else {
        auto f = open_out(cfg.out_file);
        std::fputs(text.get(), f.get());
    }
    return 0;
}

void add_model_options(CLI::App* sub, Config& cfg) {
    auto* model = sub->add_option("--model", cfg.model_path, "model JSON file");
    auto* grid = sub->add_option("--grid", cfg.grid_path, "grid spec JSON file");
    model->excludes(grid);
    sub->add_option("--kappa", cfg.kappa, "window schedule: k | k1,k2,... | D:{1,3};{1,2}");
    sub->add_option("--initial-set", cfg.initial_set, "B^0 as a comma list of states, or all");
    sub->add_option("--tol", cfg.tol, "tie tolerance of the improvement step")->check(CLI::NonNegativeNumber);
    sub->add_flag("--fixed-point", cfg.fixed_point, "solve entrance values by fixed-point iteration");
}

} // namespace

int main(int argc, char** argv) {
    Config cfg;
    CLI::App app{"Forward improvement iteration for discounted Markov stopping problems"};
    app.require_subcommand(1);

    auto* solve_cmd = app.add_subcommand("solve", "compute F and h'_{F,0}");
    add_model_options(solve_cmd, cfg);
    solve_cmd->add_option("--out", cfg.out_dir, "output directory");

    auto* bench_cmd = app.add_subcommand("bench", "runtime sweep over constant windows");
    add_model_options(bench_cmd, cfg);
    bench_cmd->add_option("--sweep", cfg.sweep, "comma list of window sizes");
    bench_cmd->add_option("--reps", cfg.reps, "repetitions per window size");
    bench_cmd->add_option("--out", cfg.out_dir, "output directory");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo value of a first-entrance rule");
    add_model_options(sim_cmd, cfg);
    sim_cmd->add_option("--start", cfg.start, "start state (label, index or x:y)");
    sim_cmd->add_option("--rule", cfg.rule, "F | stop | set:<states>");
    sim_cmd->add_option("--paths", cfg.paths, "number of paths")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", cfg.seed, "RNG seed");
    sim_cmd->add_option("--horizon-cap", cfg.horizon_cap, "path length cap (0: derived)");
    sim_cmd->add_flag("--header", cfg.header, "print the CSV header first");

    auto* gridgen_cmd = app.add_subcommand("gridgen", "grid spec JSON to model JSON");
    gridgen_cmd->add_option("--grid", cfg.grid_path, "grid spec JSON file")->required();
    gridgen_cmd->add_option("--out", cfg.out_file, "output model file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*solve_cmd)
            return cmd_solve(cfg);
        if (*bench_cmd)
            return cmd_bench(cfg);
        if (*sim_cmd)
            return cmd_simulate(cfg);
        return cmd_gridgen(cfg);
    } catch (const Failure& e) {
        std::fprintf(stderr, "flexfii: %s\n", e.what());
        return e.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "flexfii: %s\n", e.what());
        return 1;
    }
}
