#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "flexfii/flexfii.h"

namespace {

const char* kFixture = R"({"states":["a","b","c","d","e"],
  "transitions":[[0,2,0.3333333333333333],[0,1,0.3333333333333333],[0,3,0.3333333333333334],
                 [2,1,1],[3,4,1],[1,1,1],[4,4,1]],
  "alpha":1,"payoff":[3,4,1.5,2.5,2]})";

struct Model {
    flexfii_model* p = nullptr;
    ~Model() { flexfii_model_free(p); }
};
struct Result {
    flexfii_result* p = nullptr;
    ~Result() { flexfii_result_free(p); }
};

} // namespace

TEST_CASE("C API: solve the fixture") {
    Model m;
    REQUIRE(flexfii_model_parse(kFixture, &m.p) == FLEXFII_OK);
    CHECK(std::string(flexfii_last_error()).empty());
    CHECK(flexfii_model_num_states(m.p) == 5);
    CHECK(flexfii_model_payoff(m.p, 2) == 1.5);
    CHECK(flexfii_model_grid(m.p, nullptr, nullptr) == 0);

    char buf[8];
    size_t needed = 0;
    CHECK(flexfii_model_label(m.p, 3, buf, sizeof buf, &needed) == FLEXFII_OK);
    CHECK(std::string(buf) == "d");
    CHECK(needed == 1);
    CHECK(flexfii_model_label(m.p, 3, buf, 1, &needed) == FLEXFII_INVALID_ARGUMENT);
    CHECK(flexfii_model_label(m.p, 9, buf, sizeof buf, &needed) == FLEXFII_INVALID_ARGUMENT);

    size_t s = 99;
    CHECK(flexfii_model_find_state(m.p, "c", &s) == FLEXFII_OK);
    CHECK(s == 2);
    CHECK(flexfii_model_find_state(m.p, "4", &s) == FLEXFII_OK);
    CHECK(s == 4);
    CHECK(flexfii_model_find_state(m.p, "zz", &s) == FLEXFII_INVALID_ARGUMENT);

    Result r;
    REQUIRE(flexfii_solve(m.p, nullptr, "1", nullptr, &r.p) == FLEXFII_OK);
    flexfii_result_summary sum;
    flexfii_result_get_summary(r.p, &sum);
    CHECK(sum.iterations == 3);
    CHECK(sum.improving_iterations == 2);
    CHECK(sum.final_set_size == 3);
    CHECK(sum.solves == 3);
    const int in_f[] = {0, 1, 0, 1, 1};
    const double values[] = {3.5, 4, 4, 2.5, 2};
    for (size_t z = 0; z < 5; ++z) {
        CHECK(flexfii_result_in_set(r.p, z) == in_f[z]);
        CHECK(std::abs(flexfii_result_value(r.p, z) - values[z]) <= 1e-10);
    }
    flexfii_iteration_info info;
    REQUIRE(flexfii_result_iteration(r.p, 0, &info) == FLEXFII_OK);
    CHECK(info.iteration == 1);
    CHECK(std::string(info.window) == "{1}");
    CHECK(info.set_size_before == 5);
    CHECK(info.set_size == 4);
    CHECK(info.removed == 1);
    CHECK(flexfii_result_iteration(r.p, 3, &info) == FLEXFII_INVALID_ARGUMENT);
}

TEST_CASE("C API: options, initial masks and fixed-point solves") {
    Model m;
    REQUIRE(flexfii_model_parse(kFixture, &m.p) == FLEXFII_OK);
    std::vector<unsigned char> mask(5, 1);
    flexfii_model_initial_set(m.p, mask.data());
    CHECK(mask == std::vector<unsigned char>(5, 1));

    flexfii_solve_options o;
    flexfii_solve_options_default(&o);
    CHECK(o.tie_tolerance == 1e-9);
    o.fixed_point = 1;
    Result r;
    const unsigned char bde[] = {0, 1, 0, 1, 1};
    REQUIRE(flexfii_solve(m.p, bde, "2", &o, &r.p) == FLEXFII_OK);
    flexfii_result_summary sum;
    flexfii_result_get_summary(r.p, &sum);
    CHECK(sum.iterations == 1);
    CHECK(std::abs(flexfii_result_value(r.p, 0) - 3.5) <= 1e-10);
}

TEST_CASE("C API: error codes") {
    Model m;
    CHECK(flexfii_model_parse("{", &m.p) == FLEXFII_PARSE);
    CHECK(std::string(flexfii_last_error()).find("Parse") != std::string::npos);
    CHECK(m.p == nullptr);
    CHECK(flexfii_model_parse(R"({"states":1,"transitions":[[0,0,0.5]],"alpha":1,"payoff":[0]})", &m.p) ==
          FLEXFII_INVALID_MODEL);
    size_t state = 7;
    CHECK(flexfii_last_error_state(&state) == 1);
    CHECK(state == 0);
    CHECK(flexfii_model_load("/nonexistent.json", &m.p) == FLEXFII_PARSE);
    CHECK(flexfii_model_parse(nullptr, &m.p) == FLEXFII_INVALID_ARGUMENT);

    REQUIRE(flexfii_model_parse(kFixture, &m.p) == FLEXFII_OK);
    Result r;
    const unsigned char only_b[] = {0, 1, 0, 0, 0};
    CHECK(flexfii_solve(m.p, only_b, "1", nullptr, &r.p) == FLEXFII_ILL_POSED);
    CHECK(flexfii_last_error_state(&state) == 1);
    const unsigned char none[] = {0, 0, 0, 0, 0};
    CHECK(flexfii_solve(m.p, none, "1", nullptr, &r.p) == FLEXFII_EMPTY_SET);
    CHECK(flexfii_solve(m.p, nullptr, "0", nullptr, &r.p) == FLEXFII_INVALID_ARGUMENT);
    CHECK(flexfii_solve(m.p, nullptr, nullptr, nullptr, &r.p) == FLEXFII_INVALID_ARGUMENT);
    CHECK(r.p == nullptr);
    CHECK(std::string(flexfii_status_string(FLEXFII_SINGULAR)) == "singular system");
}

TEST_CASE("C API: simulation") {
    Model m;
    REQUIRE(flexfii_model_parse(kFixture, &m.p) == FLEXFII_OK);
    flexfii_sim_options o;
    flexfii_sim_options_default(&o);
    o.n_paths = 50'000;
    o.seed = 3;
    const unsigned char bde[] = {0, 1, 0, 1, 1};
    flexfii_sim_report rep;
    REQUIRE(flexfii_simulate_entrance(m.p, bde, 0, &o, &rep) == FLEXFII_OK);
    CHECK(std::abs(rep.mean - 3.5) <= 4 * rep.std_error);
    CHECK(rep.n_paths == 50'000);
    flexfii_sim_report again;
    REQUIRE(flexfii_simulate_entrance(m.p, bde, 0, &o, &again) == FLEXFII_OK);
    CHECK(again.mean == rep.mean);
    const unsigned char only_b[] = {0, 1, 0, 0, 0};
    CHECK(flexfii_simulate_entrance(m.p, only_b, 0, &o, &rep) == FLEXFII_ILL_POSED);
    CHECK(flexfii_simulate_entrance(m.p, bde, 5, &o, &rep) == FLEXFII_INVALID_ARGUMENT);
    CHECK(std::string(flexfii_rng_algorithm()).find("mt19937_64") == 0);
}

TEST_CASE("C API: grid models and JSON export") {
    Model m;
    REQUIRE(flexfii_model_from_grid_json(
                R"({"width":3,"height":2,"alpha":0.9,"default_payoff":1,"anchors":[[2,1,4]]})", &m.p) == FLEXFII_OK);
    size_t w = 0, h = 0;
    CHECK(flexfii_model_grid(m.p, &w, &h) == 1);
    CHECK(w == 3);
    CHECK(h == 2);
    size_t s = 0;
    CHECK(flexfii_model_find_state(m.p, "2:1", &s) == FLEXFII_OK);
    CHECK(s == 5);
    CHECK(flexfii_model_payoff(m.p, 5) == 4.0);
    char* json = nullptr;
    REQUIRE(flexfii_model_to_json(m.p, &json) == FLEXFII_OK);
    Model back;
    CHECK(flexfii_model_parse(json, &back.p) == FLEXFII_OK);
    CHECK(flexfii_model_num_states(back.p) == 6);
    CHECK(flexfii_model_grid(back.p, &w, &h) == 1);
    flexfii_string_free(json);

    Model bad;
    CHECK(flexfii_model_from_grid_json(R"({"width":3,"height":2,"alpha":0.9,"anchors":[[3,1,4]]})", &bad.p) ==
          FLEXFII_INVALID_ARGUMENT);
}
