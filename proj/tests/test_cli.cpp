#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rime/dataset_io.hpp"
#include "rime/kv_config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(RIME_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path workdir() {
    const auto dir = fs::temp_directory_path() / "rime_cli_test";
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("generate then estimate") {
    const auto dir = workdir();
    write(dir / "sc.kv",
          "class = p1\neta = 1\nmu = constant:1\nn = 600\nd = 6\ngamma = 0.5\nepsilon = 0.02\n"
          "strategy = far-outliers\nseed = 4\n");
    auto g = run("generate --scenario " + (dir / "sc.kv").string() + " --out " + (dir / "data.csv").string() +
                 " --truth " + (dir / "truth.kv").string());
    REQUIRE(g.code == 0);
    const auto m = rime::load_matrix(dir / "data.csv");
    CHECK(m.n_examples() == 600);
    CHECK(m.n_dims() == 6);
    const auto truth = rime::KvConfig::load(dir / "truth.kv");
    CHECK(truth.get_double_list("mu").size() == 6);
    CHECK(truth.get_u64_list("corrupted_rows").size() == 12);
    CHECK(truth.get_u64("seed") == 4);

    auto b = run("generate --scenario " + (dir / "sc.kv").string() + " --out " + (dir / "data.bin").string() +
                 " --format bin");
    REQUIRE(b.code == 0);
    CHECK(rime::load_matrix(dir / "data.bin") == m);

    auto e = run("estimate --data " + (dir / "data.bin").string() +
                 " --epsilon 0.02 --gamma 0.5 --delta 0.1 --class p1:1 --seed 3 --trace " +
                 (dir / "trace.csv").string());
    REQUIRE(e.code == 0);
    CHECK(std::count(e.out.begin(), e.out.end(), ',') == 5);
    CHECK(std::count(e.out.begin(), e.out.end(), '\n') == 1);
    const auto tr = read(dir / "trace.csv");
    CHECK(tr.rfind("t,rho,time_ms\n0,", 0) == 0);

    auto again = run("estimate --data " + (dir / "data.csv").string() +
                     " --epsilon 0.02 --gamma 0.5 --delta 0.1 --class p1:1 --seed 3");
    CHECK(again.out == e.out);

    CHECK(run("estimate --data " + (dir / "data.csv").string() + " --epsilon 0.02 --gamma 0.5 --class p2 --hash-B 8")
              .code == 0);
}

TEST_CASE("exit codes") {
    const auto dir = workdir();
    write(dir / "small.csv", "# dims=2\n1,*\n2,3\n*,4\n");
    CHECK(run("estimate --data " + (dir / "small.csv").string() + " --epsilon 0 --gamma 0.6").code == 0);
    CHECK(run("estimate --data " + (dir / "small.csv").string() + " --epsilon 0 --gamma 0.9").code == 2);
    CHECK(run("estimate --data " + (dir / "small.csv").string() + " --epsilon 0 --gamma 0.5 --delta 0.7").code == 3);
    CHECK(run("estimate --data " + (dir / "small.csv").string() + " --epsilon 0 --gamma 0.5 --class p3").code == 3);
    CHECK(run("estimate --data " + (dir / "small.csv").string()).code == 3);
    CHECK(run("estimate --data " + (dir / "missing.csv").string() + " --epsilon 0 --gamma 0.5").code == 1);
    write(dir / "ragged.csv", "# dims=2\n1\n");
    CHECK(run("estimate --data " + (dir / "ragged.csv").string() + " --epsilon 0 --gamma 0.5").code == 1);
    CHECK(run("frobnicate").code == 3);
}

TEST_CASE("experiment and hashdemo") {
    const auto dir = workdir();
    write(dir / "exp.kv", "d = 4\nN = 200\ngamma = 0.5\nepsilon = 0.02\nstrategy = far-outliers\n"
                          "variants = full,median-only\nreps = 2\n");
    auto r = run("experiment --spec " + (dir / "exp.kv").string() + " --out " + (dir / "res.csv").string() +
                 " --summary " + (dir / "sum.txt").string());
    REQUIRE(r.code == 0);
    const auto csv = read(dir / "res.csv");
    CHECK(csv.rfind("d,N,gamma,epsilon,class,strategy,variant,rep,seed,l2_error,g_error,iters,time_ms,status\n", 0) ==
          0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(fs::exists(dir / "sum.txt"));

    auto h = run("hashdemo --C 1 --gamma 0.05 --n 2000 --d 100");
    REQUIRE(h.code == 0);
    const auto kv = rime::KvConfig::parse(h.out);
    CHECK(kv.get_u64("n_prime") == 100);
    CHECK(kv.get_double("missing_fraction") > 0.0);
    CHECK(kv.has("prediction_exp_minus_4C"));
}
