#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const char* kFixture = R"({"states":["a","b","c","d","e"],
  "transitions":[[0,2,0.3333333333333333],[0,1,0.3333333333333333],[0,3,0.3333333333333334],
                 [2,1,1],[3,4,1],[1,1,1],[4,4,1]],
  "alpha":1,"payoff":[3,4,1.5,2.5,2]})";

const char* kToySpec =
    R"({"width":21,"height":21,"px":0.5,"py":0.5,"alpha":0.99899038471359014,"default_payoff":5,)"
    R"("anchors":[[5,5,10],[5,15,0],[15,15,0]]})";

struct Run {
    int status;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string(FLEXFII_CLI_PATH) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p))
        out.append(buf, n);
    const int raw = pclose(p);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::string cell;
        bool quoted = false;
        for (char c : line) {
            if (c == '"')
                quoted = !quoted;
            else if (c == ',' && !quoted) {
                row.push_back(cell);
                cell.clear();
            } else
                cell += c;
        }
        row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

struct Workdir {
    fs::path dir;
    Workdir() {
        dir = fs::temp_directory_path() / ("flexfii_cli_" + std::to_string(::getpid()) + "_" +
                                           std::to_string(std::rand()));
        fs::create_directories(dir);
        std::ofstream(dir / "fixture.json") << kFixture;
        std::ofstream(dir / "toy.json") << kToySpec;
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string operator/(const char* name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("cli solve on the fixture") {
    Workdir w;
    const auto r = cli("solve --model " + (w / "fixture.json") + " --kappa 1 --out " + (w / "out"));
    REQUIRE_MESSAGE(r.status == 0, r.out);
    CHECK(r.out.find("|F|=3") != std::string::npos);
    const auto set = csv(w.dir / "out" / "stopping_set.csv");
    REQUIRE(set.size() == 6);
    CHECK(set[0] == std::vector<std::string>{"state", "label", "in_F"});
    CHECK(set[1] == std::vector<std::string>{"0", "a", "0"});
    CHECK(set[2][2] == "1");
    CHECK(set[3][2] == "0");
    CHECK(set[4][2] == "1");
    CHECK(set[5][2] == "1");
    const auto values = csv(w.dir / "out" / "values.csv");
    const double expected[] = {3.5, 4, 4, 2.5, 2};
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(std::stod(values[i + 1][1]) - expected[i]) <= 1e-10);
    const auto trace = csv(w.dir / "out" / "trace.csv");
    CHECK(trace.size() == 4);
    CHECK(trace[1][1] == "{1}");
    CHECK_FALSE(fs::exists(w.dir / "out" / "values_grid.csv"));
}

TEST_CASE("cli solve output is byte-stable and schedule-independent in value") {
    Workdir w;
    REQUIRE(cli("solve --model " + (w / "fixture.json") + " --kappa 1 --out " + (w / "k1")).status == 0);
    REQUIRE(cli("solve --model " + (w / "fixture.json") + " --kappa 1 --out " + (w / "k1b")).status == 0);
    REQUIRE(cli("solve --model " + (w / "fixture.json") + " --kappa 5 --out " + (w / "k5")).status == 0);
    CHECK(slurp(w.dir / "k1" / "values.csv") == slurp(w.dir / "k1b" / "values.csv"));
    CHECK(slurp(w.dir / "k1" / "stopping_set.csv") == slurp(w.dir / "k1b" / "stopping_set.csv"));
    const auto a = csv(w.dir / "k1" / "values.csv");
    const auto b = csv(w.dir / "k5" / "values.csv");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 1; i < a.size(); ++i)
        CHECK(std::abs(std::stod(a[i][1]) - std::stod(b[i][1])) <= 1e-8);
}

TEST_CASE("cli solve from the optimum and from a restricted initial set") {
    Workdir w;
    auto r = cli("solve --model " + (w / "fixture.json") + " --initial-set b,d,e --out " + (w / "o"));
    REQUIRE(r.status == 0);
    CHECK(csv(w.dir / "o" / "trace.csv").size() == 2);
    r = cli("solve --model " + (w / "fixture.json") + " --initial-set b --out " + (w / "o"));
    CHECK(r.status == 1);
    CHECK(r.out.find("ill-posed") != std::string::npos);
}

TEST_CASE("cli bench on the fixture") {
    Workdir w;
    const auto r = cli("bench --model " + (w / "fixture.json") + " --sweep 1,2 --reps 2 --out " + (w / "b"));
    REQUIRE_MESSAGE(r.status == 0, r.out);
    const auto rows = csv(w.dir / "b" / "bench.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"k", "rep", "iterations", "matvecs", "solves", "total_ms"});
    CHECK(rows[1][0] == "1");
    CHECK(rows[1][2] == "3");
    CHECK(rows[2][2] == "3");
    CHECK(rows[3][0] == "2");
    CHECK(rows[3][2] == "2");
    CHECK(cli("bench --model " + (w / "fixture.json") + " --sweep 1,x --out " + (w / "b")).status == 1);
}

TEST_CASE("cli simulate") {
    Workdir w;
    auto r = cli("simulate --model " + (w / "fixture.json") + " --start c --rule stop --paths 1000");
    REQUIRE(r.status == 0);
    std::stringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("c,stop,1000,0,1.5,0,", 0) == 0);

    r = cli("simulate --model " + (w / "fixture.json") + " --start a --rule F --paths 100000 --seed 4 --header");
    REQUIRE(r.status == 0);
    std::stringstream in2(r.out);
    std::getline(in2, line);
    CHECK(line.rfind("start,rule,n_paths,seed,mean,std_error", 0) == 0);
    std::getline(in2, line);
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');)
        cells.push_back(c);
    REQUIRE(cells.size() >= 6);
    const double mean = std::stod(cells[4]), se = std::stod(cells[5]);
    CHECK(std::abs(mean - 3.5) <= 4 * se);

    r = cli("simulate --model " + (w / "fixture.json") + " --start a --rule set:b --paths 100");
    CHECK(r.status == 1);
    r = cli("simulate --model " + (w / "fixture.json") + " --start q --rule stop");
    CHECK(r.status == 1);
}

TEST_CASE("cli gridgen and grid solve") {
    Workdir w;
    auto r = cli("gridgen --grid " + (w / "toy.json") + " --out " + (w / "toy_model.json"));
    REQUIRE_MESSAGE(r.status == 0, r.out);
    const auto first = slurp(w.dir / "toy_model.json");
    REQUIRE(cli("gridgen --grid " + (w / "toy.json") + " --out " + (w / "toy_model2.json")).status == 0);
    CHECK(first == slurp(w.dir / "toy_model2.json"));
    CHECK(first.rfind("{\"states\":441,", 0) == 0);

    std::ofstream(w.dir / "one.json") << R"({"width":1,"height":1,"alpha":0.5,"default_payoff":2})";
    REQUIRE(cli("gridgen --grid " + (w / "one.json") + " --out " + (w / "one_model.json")).status == 0);
    CHECK(slurp(w.dir / "one_model.json").rfind("{\"states\":1,", 0) == 0);

    r = cli("solve --grid " + (w / "toy.json") + " --out " + (w / "g"));
    REQUIRE_MESSAGE(r.status == 0, r.out);
    const auto grid = csv(w.dir / "g" / "values_grid.csv");
    REQUIRE(grid.size() == 21);
    CHECK(grid[0].size() == 21);
    const auto stops = csv(w.dir / "g" / "stopping_grid.csv");
    CHECK(stops[5][5] == "1");
    CHECK(stops[15][5] == "0");
    const auto set = csv(w.dir / "g" / "stopping_set.csv");
    CHECK(set[1 + 5 * 21 + 5][1] == "5:5");

    // tau_0(F) from (10,10) against the solved value.
    r = cli("simulate --grid " + (w / "toy.json") + " --start 10:10 --rule F --paths 40000 --seed 2");
    REQUIRE(r.status == 0);
    std::vector<std::string> cells;
    std::stringstream ls(r.out);
    for (std::string c; std::getline(ls, c, ',');)
        cells.push_back(c);
    const double mean = std::stod(cells[4]), se = std::stod(cells[5]);
    const auto values = csv(w.dir / "g" / "values.csv");
    const double v = std::stod(values[1 + 10 * 21 + 10][1]);
    CHECK(std::abs(mean - v) <= 4 * se);
}

TEST_CASE("cli argument errors") {
    Workdir w;
    CHECK(cli("").status == 1);
    CHECK(cli("solve").status == 1);
    CHECK(cli("solve --model " + (w / "fixture.json") + " --grid " + (w / "toy.json")).status == 1);
    CHECK(cli("solve --model /nonexistent.json").status == 1);
    CHECK(cli("solve --model " + (w / "fixture.json") + " --kappa 0 --out " + (w / "x")).status == 1);
    CHECK(cli("gridgen").status == 1);
    CHECK(cli("frobnicate").status == 1);
    CHECK(cli("--help").status == 0);
}
