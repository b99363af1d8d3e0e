#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "flexfii/chain_model.hpp"
#include "flexfii/errors.hpp"
#include "support/test_support.hpp"

using namespace flexfii;
using namespace flexfii::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

Model one_state(double alpha, double payoff) {
    return Model(SparseMatrix(1, 1, {{0, 0, 1.0}}), {alpha}, {payoff});
}

} // namespace

TEST_CASE("sparse matrix merges duplicates and sorts columns") {
    SparseMatrix m(2, 3, {{0, 2, 0.25}, {0, 0, 0.5}, {0, 2, 0.25}, {1, 1, 1.0}});
    CHECK(m.nonzeros() == 3);
    CHECK(m.at(0, 0) == 0.5);
    CHECK(m.at(0, 2) == 0.5);
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.row_sum(0) == 1.0);
    CHECK(m.row_columns(0)[0] == 0);
    CHECK(m.row_columns(0)[1] == 2);
    CHECK_THROWS_AS(SparseMatrix(2, 2, {{2, 0, 1.0}}), Error);
}

TEST_CASE("state set basics") {
    auto s = StateSet::from_indices(5, {0, 2, 4});
    CHECK(s.count() == 3);
    CHECK(s.contains(2));
    CHECK_FALSE(s.contains(1));
    CHECK(s.to_string() == "{0,2,4}");
    CHECK(s.complement().members() == std::vector<StateIndex>{1, 3});
    CHECK(StateSet::from_indices(5, {2}).is_subset_of(s));
    CHECK_FALSE(StateSet::from_indices(5, {1}).is_subset_of(s));
    CHECK(StateSet::none(5).empty());
    CHECK(StateSet::all(5).count() == 5);
    s.erase(0);
    s.insert(1);
    CHECK(s == StateSet::from_indices(5, {1, 2, 4}));
    CHECK(code_of([] { StateSet::from_indices(3, {3}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("validate accepts the one-state identity chain") {
    CHECK_NOTHROW(validate(one_state(1.0, 0.0)));
}

TEST_CASE("validate accepts the five-state fixture") {
    CHECK_NOTHROW(fixture_chain());
}

TEST_CASE("validate rejects a row summing to 0.9") {
    Model m(SparseMatrix(2, 2, {{0, 1, 0.9}, {1, 1, 1.0}}), {1.0, 1.0}, {0.0, 0.0});
    try {
        validate(m);
        FAIL("expected RowNotStochastic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RowNotStochastic);
        CHECK(e.state() == std::optional<std::size_t>(0));
    }
}

TEST_CASE("validate reports the first violating row") {
    Model m(SparseMatrix(3, 3, {{0, 0, 1.0}, {1, 1, 0.5}, {2, 2, 0.5}}), {1, 1, 1}, {0, 0, 0});
    try {
        validate(m);
        FAIL("expected RowNotStochastic");
    } catch (const Error& e) {
        CHECK(e.state() == std::optional<std::size_t>(1));
    }
}

TEST_CASE("validate error paths") {
    SUBCASE("negative entry") {
        Model m(SparseMatrix(2, 2, {{0, 0, 1.5}, {0, 1, -0.5}, {1, 1, 1.0}}), {1, 1}, {0, 0});
        CHECK(code_of([&] { validate(m); }) == ErrorCode::EntryOutOfRange);
    }
    SUBCASE("alpha above one") {
        CHECK(code_of([] { validate(one_state(1.5, 0.0)); }) == ErrorCode::EntryOutOfRange);
    }
    SUBCASE("alpha negative") {
        CHECK(code_of([] { validate(one_state(-0.1, 0.0)); }) == ErrorCode::EntryOutOfRange);
    }
    SUBCASE("non-finite payoff") {
        CHECK(code_of([] { validate(one_state(0.5, std::nan(""))); }) == ErrorCode::NonFinitePayoff);
        CHECK(code_of([] { validate(one_state(0.5, INFINITY)); }) == ErrorCode::NonFinitePayoff);
    }
    SUBCASE("dimension mismatch") {
        Model m(SparseMatrix(1, 1, {{0, 0, 1.0}}), {1.0, 1.0}, {0.0});
        CHECK(code_of([&] { validate(m); }) == ErrorCode::DimensionMismatch);
    }
    SUBCASE("row sum within 1e-12 is accepted") {
        Model m(SparseMatrix(1, 1, {{0, 0, 1.0 + 5e-13}}), {1.0}, {0.0});
        CHECK_THROWS(validate(m)); // entry above 1
        Model m2(SparseMatrix(2, 2, {{0, 0, 0.5}, {0, 1, 0.5 - 5e-13}, {1, 1, 1.0}}), {1, 1}, {0, 0});
        CHECK_NOTHROW(validate(m2));
        Model m3(SparseMatrix(2, 2, {{0, 0, 0.5}, {0, 1, 0.5 - 5e-12}, {1, 1, 1.0}}), {1, 1}, {0, 0});
        CHECK(code_of([&] { validate(m3); }) == ErrorCode::RowNotStochastic);
    }
}

TEST_CASE("psi with alpha one equals the transition matrix") {
    const auto m = fixture_chain();
    const auto k = psi(m);
    for (std::size_t z = 0; z < 5; ++z)
        for (std::size_t y = 0; y < 5; ++y)
            CHECK(k.matrix().at(z, y) == m.transitions().at(z, y));
}

TEST_CASE("psi with alpha zero is the zero matrix") {
    const auto k = psi(fixture_chain(0.0));
    CHECK(k.matrix().nonzeros() == 0);
    const auto out = matvec(k, std::vector<double>{1, 2, 3, 4, 5});
    for (double x : out)
        CHECK(x == 0.0);
}

TEST_CASE("psi scales by a constant alpha") {
    const double a = std::pow(0.98, 1.0 / 20.0);
    const auto m = fixture_chain(a);
    const auto k = psi(m);
    CHECK(k.matrix().at(A, B) == doctest::Approx(a / 3.0).epsilon(1e-15));
    CHECK(k.matrix().at(C, B) == a);
}

TEST_CASE("matvec on identity returns the input") {
    Model m(SparseMatrix::identity(3), {1, 1, 1}, {0, 0, 0});
    const std::vector<double> v{1.25, -3.0, 7.5};
    CHECK(matvec(psi(m), v) == v);
}

TEST_CASE("matvec of the payoff at a is 8/3") {
    const auto m = fixture_chain();
    const ValueVector g(m.payoff().begin(), m.payoff().end());
    const auto out = matvec(psi(m), g);
    CHECK(out[A] == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
    CHECK(out[B] == 4.0);
    CHECK(out[C] == 4.0);
    CHECK(out[D] == 2.0);
    CHECK(out[E] == 2.0);
}

TEST_CASE("matvec rejects a wrong-length vector") {
    CHECK(code_of([] { matvec(psi(fixture_chain()), std::vector<double>{1.0}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("labels") {
    const auto m = fixture_chain();
    CHECK(m.label(A) == "a");
    Model plain(SparseMatrix::identity(2), {1, 1}, {0, 0});
    CHECK(plain.label(1) == "1");
    plain.set_grid({2, 1});
    CHECK(plain.label(1) == "1:0");
}

TEST_CASE("property: psi row sums equal alpha") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_model(rng, {.max_states = 50, .alpha_lo = 0.0, .alpha_hi = 1.0});
        const auto k = psi(m);
        for (std::size_t z = 0; z < m.n_states(); ++z)
            REQUIRE(std::abs(k.matrix().row_sum(z) - m.alpha(z)) <= 1e-12);
    }
}

TEST_CASE("property: matvec is linear") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_model(rng);
        const auto k = psi(m);
        const auto n = m.n_states();
        std::vector<double> x(n), y(n), comb(n);
        const double a = u(rng), b = u(rng);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = u(rng);
            y[i] = u(rng);
            comb[i] = a * x[i] + b * y[i];
        }
        const auto kx = matvec(k, x), ky = matvec(k, y), kc = matvec(k, comb);
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(std::abs(kc[i] - (a * kx[i] + b * ky[i])) <= 1e-10);
    }
}

TEST_CASE("property: matvec agrees with a dense triple loop") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_model(rng, {.max_states = 20});
        std::vector<double> v(m.n_states());
        for (auto& x : v)
            x = u(rng);
        REQUIRE(max_abs_diff(matvec(psi(m), v), dense_apply(dense_psi(m), v)) <= 1e-12);
    }
}

TEST_CASE("model JSON round trip") {
    const auto text = R"({"states":["a","b"],"transitions":[[0,1,1],[1,1,0.5],[1,0,0.5]],
                          "alpha":0.9,"payoff":[1,2],"initial_set":[1]})";
    const auto doc = parse_model_json(text);
    CHECK(doc.model.n_states() == 2);
    CHECK(doc.model.alpha(1) == 0.9);
    CHECK(doc.model.label(0) == "a");
    REQUIRE(doc.initial_set.has_value());
    CHECK(*doc.initial_set == StateSet::from_indices(2, {1}));
    const auto again = parse_model_json(model_to_json(doc.model, doc.initial_set));
    CHECK(model_to_json(again.model, again.initial_set) == model_to_json(doc.model, doc.initial_set));
}

TEST_CASE("model JSON variants") {
    const auto doc = parse_model_json(R"({"states":2,"transitions":[[0,0,1],[1,0,1]],"alpha":[1,0.5],"payoff":[0,1]})");
    CHECK(doc.model.alpha(1) == 0.5);
    CHECK_FALSE(doc.initial_set.has_value());
    const auto grid = parse_model_json(
        R"({"states":2,"transitions":[[0,1,1],[1,0,1]],"alpha":1,"payoff":[0,1],"grid":{"width":2,"height":1}})");
    REQUIRE(grid.model.grid().has_value());
    CHECK(grid.model.label(1) == "1:0");
}

TEST_CASE("model JSON errors") {
    auto code = [](const char* text) { return code_of([&] { parse_model_json(text); }); };
    CHECK(code("not json") == ErrorCode::Parse);
    CHECK(code("[]") == ErrorCode::Parse);
    CHECK(code(R"({"states":1,"transitions":[[0,0,1]],"alpha":1})") == ErrorCode::Parse);
    CHECK(code(R"({"states":1,"transitions":[[0,3,1]],"alpha":1,"payoff":[0]})") == ErrorCode::Parse);
    CHECK(code(R"({"states":2,"transitions":[[0,0,1],[1,1,1]],"alpha":[1],"payoff":[0,0]})") == ErrorCode::Parse);
    CHECK(code(R"({"states":1,"transitions":[[0,0,1]],"alpha":1,"payoff":[0],"initial_set":[4]})") ==
          ErrorCode::Parse);
    CHECK(code(R"({"states":2,"transitions":[[0,0,0.9],[1,1,1]],"alpha":1,"payoff":[0,0]})") ==
          ErrorCode::RowNotStochastic);
    CHECK(code_of([] { load_model_file("/nonexistent/model.json"); }) == ErrorCode::Parse);
}
