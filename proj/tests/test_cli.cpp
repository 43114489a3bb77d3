#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sim.hpp"
#include "znib_cli/cli.hpp"

#ifndef ZNIB_DATA_DIR
#define ZNIB_DATA_DIR "data"
#endif

using namespace znib;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const fs::path p = fs::temp_directory_path() / "znib_cli_tests";
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const std::string kGender = std::string(ZNIB_DATA_DIR) + "/sibships_size8.csv";
const std::vector<std::string> kGenderRoles{"--input", kGender, "--y-col", "males", "--mult-col", "count", "-N", "8"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST_CASE("pmf subcommand") {
    const Run r = run({"pmf", "-N", "2", "--p", "0.5", "--q0", "0.2", "--qN", "0.3"});
    CHECK(r.code == 0);
    CHECK(r.out == "k,pmf\n0,0.325\n1,0.25\n2,0.425\n");
    CHECK(run({"pmf", "-N", "2", "--p", "0.5", "--q0", "0.8", "--qN", "0.3"}).code == 1);
    CHECK(run({"pmf", "--family", "poisson"}).code == 1);
}

TEST_CASE("fit writes a round-tripping report") {
    const fs::path out = scratch() / "gender.json";
    const Run r = run(with({"fit"}, with(kGenderRoles, {"--family", "znibb", "--out", out.string()})));
    REQUIRE(r.code == 0);
    const std::string text = slurp(out);
    const auto doc = nlohmann::ordered_json::parse(text);
    CHECK(std::abs(doc["aic"].get<double>() - 191137) < 10);
    CHECK(doc["converged"].get<bool>());
    CHECK(doc["estimates"].size() == 4);
    CHECK(doc["estimates"][0]["name"] == "log_r1");
    for (const char* key : {"spec", "estimates", "loglik", "aic", "converged", "iterations", "fitted_path"}) {
        CHECK(doc.contains(key));
    }
    CHECK(cli::dump(doc) == text);
    CHECK(fs::exists(doc["fitted_path"].get<std::string>()));
    CHECK(r.out.find("AIC 191136.030") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run(with({"fit"}, with(kGenderRoles, {"--family", "znibb", "--inflation", "power"}))).code == 1);
    CHECK(run(with({"fit"}, with(kGenderRoles, {"--family", "znibb", "--success", "x"}))).code == 1);
    CHECK(run({"fit", "--input", "/nonexistent.csv", "--n-col", "n"}).code == 2);
    CHECK(run({"fit", "--n-col", "n"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"--help"}).code == 0);

    const fs::path bad = scratch() / "bad.csv";
    std::ofstream(bad) << "y,n\n1,3\n4,3\n";
    const Run r = run({"fit", "--input", bad.string(), "--n-col", "n", "--family", "binomial"});
    CHECK(r.code == 2);
    CHECK(r.err.find("row 2") != std::string::npos);
}

TEST_CASE("compare subcommand") {
    const Run r = run(with({"compare"}, with(kGenderRoles, {"--families", "binomial,betabin,znibb", "--format", "json"})));
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::ordered_json::parse(r.out);
    REQUIRE(doc["models"].size() == 3);
    CHECK(doc["models"][0]["family"] == "znibb");
    CHECK(doc["models"][2]["family"] == "binomial");
    CHECK(run(with({"compare"}, with(kGenderRoles, {"--families", "znibb"}))).code == 1);
}

TEST_CASE("simulate is deterministic and fits back") {
    const std::vector<std::string> law{"simulate", "-N", "10", "--p", "0.4", "--q0", "0.15", "--qN", "0.1",
                                       "--count", "5000", "--seed", "11"};
    const Run a = run(law);
    const Run b = run(law);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(run(with(law, {"--seed", "12"})).out != a.out);

    const fs::path csv = scratch() / "sim.csv";
    std::ofstream(csv, std::ios::binary) << a.out;
    const Run f = run({"fit", "--input", csv.string(), "--n-col", "n", "--family", "znib", "--format", "json"});
    REQUIRE(f.code == 0);
    const auto doc = nlohmann::ordered_json::parse(f.out);
    const double q_body = 1 - 0.15 - 0.1;
    const double want[] = {std::log(0.4 / 0.6), std::log(0.15 / q_body), std::log(0.1 / q_body)};
    for (int j = 0; j < 3; ++j) {
        const auto& e = doc["estimates"][j];
        CHECK(std::abs(e["value"].get<double>() - want[j]) < 4 * e["se"].get<double>());
    }

    const Run zz = run({"simulate", "-N", "10", "--p", "0.4", "--q0", "0.15", "--qN", "0.1", "--count", "5000"});
    const fs::path big = scratch() / "znib.csv";
    std::ofstream(big, std::ios::binary) << zz.out;
    const Run cmp = run({"compare", "--input", big.string(), "--n-col", "n", "--families", "zib,znib", "--format", "json"});
    REQUIRE(cmp.code == 0);
    const auto t = nlohmann::ordered_json::parse(cmp.out);
    CHECK(t["models"][0]["family"] == "znib");
    CHECK(t["models"][1]["delta_aic"].get<double>() > 2.0);
}

TEST_CASE("bootstrap subcommand") {
    const Dataset d = sim::power_link({0.2, 0.8, 0.0, 0.0}, 150, 10, 30, 3);
    const fs::path csv = scratch() / "power.csv";
    {
        std::ofstream f(csv);
        f << "y,n,c\n";
        for (std::size_t i = 0; i < d.size(); ++i) f << d.y[i] << ',' << d.n[i] << ',' << d.X(i, 1) << '\n';
    }
    const std::vector<std::string> args{"bootstrap", "--input", csv.string(), "--n-col", "n", "--covariates", "c",
                                        "--success", "1,c", "--inflation", "power", "--boot-B", "20", "--seed", "5"};
    const Run r = run(args);
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 101);
    CHECK(r.out.rfind("c,point,lower,upper\n", 0) == 0);
    CHECK(run(args).out == r.out);
}

TEST_CASE("verify subcommand") {
    const auto t0 = std::chrono::steady_clock::now();
    const Run s = run({"verify", "--grid", "small"});
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 10.0);
    CHECK(s.code == 0);
    const Run full = run({"verify"});
    CHECK(full.code == 0);
    CHECK(full.out.find("FAIL") == std::string::npos);
    for (const auto& suite : cli::verify_suites(false, false)) {
        if (suite.name == "conditioning") CHECK(suite.max_discrepancy < 1e-12);
    }
    CHECK(run({"verify", "--fault-inject"}).code == 4);
    CHECK(run({"verify", "--grid", "huge"}).code == 1);
}

TEST_CASE("config file supplies defaults and flags win") {
    const fs::path cfg = scratch() / "gender.ini";
    std::ofstream(cfg) << "input = \"" << kGender << "\"\ny-col = males\nmult-col = count\ntrials = 8\nfamily = binomial\n";
    const Run a = run({"fit", "--config", cfg.string(), "--format", "json"});
    REQUIRE(a.code == 0);
    CHECK(nlohmann::ordered_json::parse(a.out)["spec"]["family"] == "binomial");
    const Run b = run({"fit", "--config", cfg.string(), "--family", "betabin", "--format", "json"});
    REQUIRE(b.code == 0);
    CHECK(nlohmann::ordered_json::parse(b.out)["spec"]["family"] == "betabin");
}

TEST_CASE("report numbers carry ten significant digits") {
    CHECK(cli::round10(1.0 / 3) == 0.3333333333);
    CHECK(cli::round10(191136.03041234) == 191136.0304);
    CHECK(cli::round10(0.0) == 0.0);
}
