#pragma once

// Library behind the `znib` executable. `run` parses argv, dispatches a
// subcommand and returns the process exit code; the pieces are exposed so
// tests can drive them without spawning processes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "znib/fit.hpp"
#include "znib/inference.hpp"
#include "znib/model.hpp"

namespace znib::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kNotConverged = 3, kVerifyFailed = 4 };

struct RunConfig {
    std::string subcommand;
    std::string input;
    std::string y_col = "y";
    std::string n_col;
    std::optional<int> n_constant;
    std::string mult_col;
    std::vector<std::string> covariates;
    std::vector<std::string> zero_covariates;
    std::vector<std::string> n_covariates;
    bool standardize = false;
    std::string family = "znib";
    std::vector<std::string> families;
    std::string inflation = "constant";
    std::string success = "constant";
    std::uint64_t seed = 1;
    int boot_b = 200;
    std::string column;
    int grid_points = 100;
    unsigned threads = 0;
    std::string out;
    std::string format;

    // pmf and simulate
    int trials = 0;
    double p = 0.5;
    double q0 = 0.0;
    double qN = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    int count = 100;

    // verify
    std::string grid = "full";
    bool fault_inject = false;
};

/// Parses argv (CLI11, optional --config file; flags win) and runs it.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Column roles implied by the config. Every covariate token referenced by
/// the success or inflation links is loaded.
CsvColumns csv_roles(const RunConfig& config);

/// Model spec for `family` under the config's link choices.
ModelSpec build_spec(const RunConfig& config, Family family);

/// Rounds to 10 significant digits so that printed reports are stable.
double round10(double v);

nlohmann::ordered_json fit_report(const FitResult& fit, const std::string& fitted_path);
nlohmann::ordered_json comparison_report(const ComparisonTable& table);

/// Canonical serialisation: re-parsing and re-dumping reproduces the bytes.
std::string dump(const nlohmann::ordered_json& doc);

std::string fit_table(const FitResult& fit);
std::string comparison_table(const ComparisonTable& table);
std::string fitted_csv(const FitResult& fit, const Dataset& data);
std::string bands_csv(const BootstrapBands& bands);

struct SuiteResult {
    std::string name;
    int cases = 0;
    double max_discrepancy = 0.0;
    double tolerance = 0.0;
    bool pass() const { return max_discrepancy <= tolerance; }
};

/// Built-in oracle suites. `fault` perturbs q0 by 1e-6 on the library side.
std::vector<SuiteResult> verify_suites(bool small_grid, bool fault);

}  // namespace znib::cli
