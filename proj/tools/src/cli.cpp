#include "znib_cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "znib/distributions.hpp"
#include "znib/error.hpp"
#include "znib/sampling.hpp"

namespace znib::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string column_name(const std::string& token) { return token == "1" ? std::string(kInterceptColumn) : token; }

std::vector<std::string> column_names(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) out.push_back(column_name(t));
    return out;
}

std::vector<std::string> success_tokens(const RunConfig& c) {
    if (c.success == "constant") return {};
    if (c.success == "covariate") return c.covariates;
    std::vector<std::string> out;
    std::stringstream ss(c.success);
    for (std::string t; std::getline(ss, t, ',');) out.push_back(t);
    return out;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    sink->set_pattern("znib: %l: %v");
    auto log = std::make_shared<spdlog::logger>("znib", sink);
    const char* env = std::getenv("ZNIB_LOG");
    const std::string level = env ? env : "info";
    log->set_level(level == "debug" ? spdlog::level::debug
                   : level == "error" ? spdlog::level::err
                                      : spdlog::level::info);
    return log;
}

class OutputError : public Error {
  public:
    using Error::Error;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw OutputError("cannot write '" + path + "'");
    f << text;
}

// Output goes to --out when given, else to the standard stream.
void emit(const RunConfig& c, std::ostream& out, const std::string& text) {
    if (c.out.empty()) {
        out << text;
    } else {
        write_file(c.out, text);
    }
}

std::string format_or(const RunConfig& c, const std::string& fallback) { return c.format.empty() ? fallback : c.format; }

void require_input(const RunConfig& c) {
    if (c.input.empty()) throw ValidationError(c.subcommand + ": --input is required");
}

ZnibParams znib_law(const RunConfig& c) {
    ZnibParams x{c.trials, c.p, c.q0, c.qN};
    x.validate();
    return x;
}

ZnibbParams znibb_law(const RunConfig& c) {
    ZnibbParams x{{c.trials, c.r1, c.r2}, c.q0, c.qN};
    x.validate();
    return x;
}

Dataset load(const RunConfig& c) {
    require_input(c);
    return load_csv(c.input, csv_roles(c));
}

int cmd_fit(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    const ModelSpec spec = build_spec(c, parse_family(c.family));
    const Dataset data = load(c);
    log.info("fitting {} to {} rows", spec.label(), data.size());
    const FitResult fit = fit_model(data, spec);
    std::string fitted_path;
    if (!c.out.empty()) {
        fitted_path = std::filesystem::path(c.out).replace_extension(".fitted.csv").string();
        write_file(fitted_path, fitted_csv(fit, data));
        write_file(c.out, dump(fit_report(fit, fitted_path)));
    }
    const std::string fmt = format_or(c, c.out.empty() ? "json" : "table");
    if (fmt == "json") {
        out << dump(fit_report(fit, fitted_path));
    } else if (fmt == "csv") {
        out << fitted_csv(fit, data);
    } else {
        out << fit_table(fit);
    }
    if (!fit.converged) {
        log.error("{} did not converge: {}", spec.label(), fit.message);
        return kNotConverged;
    }
    return kOk;
}

int cmd_compare(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    if (c.families.size() < 2) throw ValidationError("compare: give at least two families (use fit for one)");
    std::vector<ModelSpec> specs;
    for (const auto& f : c.families) specs.push_back(build_spec(c, parse_family(f)));
    const Dataset data = load(c);
    std::vector<FitResult> fits;
    bool all = true;
    for (const auto& s : specs) {
        fits.push_back(fit_model(data, s));
        if (!fits.back().converged) {
            all = false;
            log.error("{} did not converge: {}", s.label(), fits.back().message);
        }
    }
    const ComparisonTable table = compare(fits);
    const std::string fmt = format_or(c, "table");
    emit(c, out, fmt == "json" ? dump(comparison_report(table)) : comparison_table(table));
    if (!c.out.empty()) out << comparison_table(table);
    return all ? kOk : kNotConverged;
}

int cmd_pmf(const RunConfig& c, std::ostream& out) {
    const Family f = parse_family(c.family);
    std::vector<double> pmf;
    if (is_beta_binomial(f)) {
        ZnibbParams x = znibb_law(c);
        if (f == Family::BetaBinomial) x.q0 = x.qN = 0.0;
        pmf = znibb_pmf_table(x);
    } else {
        ZnibParams x = znib_law(c);
        if (!has_zero_inflation(f)) x.q0 = 0.0;
        if (!has_n_inflation(f)) x.qN = 0.0;
        pmf = znib_pmf_table(x);
    }
    const std::string fmt = format_or(c, "csv");
    std::ostringstream os;
    if (fmt == "json") {
        Json j;
        j["family"] = to_string(f);
        j["trials"] = c.trials;
        Json rows = Json::array();
        for (std::size_t k = 0; k < pmf.size(); ++k) rows.push_back(Json{{"k", k}, {"pmf", round10(pmf[k])}});
        j["pmf"] = rows;
        os << dump(j);
    } else {
        const bool table = fmt == "table";
        os << (table ? "    k    pmf\n" : "k,pmf\n");
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            char buf[64];
            if (table) {
                std::snprintf(buf, sizeof buf, "%5zu  %.3f\n", k, pmf[k]);
            } else {
                std::snprintf(buf, sizeof buf, "%zu,%.10g\n", k, pmf[k]);
            }
            os << buf;
        }
    }
    emit(c, out, os.str());
    return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const Family f = parse_family(c.family);
    if (c.count < 1) throw ValidationError("simulate: --count must be positive");
    Sampler rng(c.seed);
    std::ostringstream os;
    os << "y,n\n";
    if (is_beta_binomial(f)) {
        ZnibbParams x = znibb_law(c);
        if (f == Family::BetaBinomial) x.q0 = x.qN = 0.0;
        for (int i = 0; i < c.count; ++i) os << rng.draw(x) << ',' << c.trials << '\n';
    } else {
        ZnibParams x = znib_law(c);
        if (!has_zero_inflation(f)) x.q0 = 0.0;
        if (!has_n_inflation(f)) x.qN = 0.0;
        for (int i = 0; i < c.count; ++i) os << rng.draw(x) << ',' << c.trials << '\n';
    }
    emit(c, out, os.str());
    return kOk;
}

int cmd_bootstrap(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    const ModelSpec spec = build_spec(c, parse_family(c.family));
    const Dataset data = load(c);
    const FitResult fit = fit_model(data, spec);
    if (!fit.converged) {
        log.error("{} did not converge: {}", spec.label(), fit.message);
        return kNotConverged;
    }
    BootstrapOptions o;
    o.replicates = c.boot_b;
    o.seed = c.seed;
    o.column = column_name(c.column);
    o.grid_points = c.grid_points;
    o.threads = c.threads;
    if (o.column.empty()) {
        for (const auto& t : c.covariates) {
            if (t != "1" && t.find('^') == std::string::npos) {
                o.column = t;
                break;
            }
        }
    }
    log.info("bootstrap: {} replicates over '{}'", o.replicates, o.column);
    const BootstrapBands bands = bootstrap_bands(fit, data, o);
    if (bands.low_replicates) log.warn("bootstrap: fewer than 50 replicates; quantiles are crude");
    if (bands.unreliable) log.warn("bootstrap: {} of {} replicates failed; bands unreliable", bands.failed, bands.replicates);
    const std::string fmt = format_or(c, "csv");
    if (fmt == "json") {
        Json j;
        j["column"] = bands.column;
        j["replicates"] = bands.replicates;
        j["succeeded"] = bands.succeeded;
        j["failed"] = bands.failed;
        j["seed"] = bands.seed;
        j["unreliable"] = bands.unreliable;
        Json rows = Json::array();
        for (std::size_t i = 0; i < bands.grid.size(); ++i) {
            rows.push_back(Json{{"x", round10(bands.grid[i])},
                                {"point", round10(bands.point[i])},
                                {"lower", round10(bands.lower[i])},
                                {"upper", round10(bands.upper[i])}});
        }
        j["bands"] = rows;
        emit(c, out, dump(j));
    } else {
        emit(c, out, bands_csv(bands));
    }
    return bands.unreliable ? kNotConverged : kOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
    if (c.grid != "small" && c.grid != "full") throw ValidationError("verify: --grid must be small or full");
    const auto suites = verify_suites(c.grid == "small", c.fault_inject);
    bool ok = true;
    std::ostringstream os;
    for (const auto& s : suites) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-14s %5d cases  max discrepancy %.3e  tol %.0e  %s\n", s.name.c_str(), s.cases,
                      s.max_discrepancy, s.tolerance, s.pass() ? "PASS" : "FAIL");
        os << buf;
        ok = ok && s.pass();
    }
    emit(c, out, os.str());
    return ok ? kOk : kVerifyFailed;
}

int dispatch(const RunConfig& c, std::ostream& out, spdlog::logger& log) {
    if (c.subcommand == "fit") return cmd_fit(c, out, log);
    if (c.subcommand == "compare") return cmd_compare(c, out, log);
    if (c.subcommand == "pmf") return cmd_pmf(c, out);
    if (c.subcommand == "simulate") return cmd_simulate(c, out);
    if (c.subcommand == "bootstrap") return cmd_bootstrap(c, out, log);
    return cmd_verify(c, out);
}

}  // namespace

CsvColumns csv_roles(const RunConfig& c) {
    CsvColumns r;
    r.y = c.y_col;
    r.n = c.n_col;
    r.n_constant = c.n_constant;
    if (r.n.empty() && !r.n_constant) throw ValidationError("give --n-col or --trials for the number of trials");
    r.multiplicity = c.mult_col;
    r.standardize = c.standardize;
    auto add = [&](const std::vector<std::string>& tokens) {
        for (const auto& t : tokens) {
            if (std::find(r.covariates.begin(), r.covariates.end(), t) == r.covariates.end()) r.covariates.push_back(t);
        }
    };
    add(c.covariates);
    add(success_tokens(c));
    if (c.inflation == "covariate") {
        add(c.zero_covariates);
        add(c.n_covariates);
    }
    return r;
}

ModelSpec build_spec(const RunConfig& c, Family family) {
    ModelSpec spec;
    spec.family = family;
    const auto succ = success_tokens(c);
    if (is_beta_binomial(family)) {
        if (!succ.empty()) throw ValidationError(to_string(family) + ": success probability cannot take covariates");
        spec.success = BetaShape{};
    } else if (succ.empty()) {
        spec.success = ConstantLogit{};
    } else {
        spec.success = LogitLinear{column_names(succ)};
    }

    const bool inflated = has_zero_inflation(family) || has_n_inflation(family);
    if (!inflated) {
        spec.inflation = NoInflation{};
    } else if (c.inflation == "constant") {
        spec.inflation = ConstantHurdle{};
    } else if (c.inflation == "power") {
        spec.inflation = PowerLink{};
    } else if (c.inflation == "covariate") {
        const auto zero = column_names(c.zero_covariates.empty() ? c.covariates : c.zero_covariates);
        const auto nn = column_names(c.n_covariates.empty() ? c.covariates : c.n_covariates);
        if (zero.empty() && nn.empty()) throw ValidationError("covariate inflation needs --covariates");
        spec.inflation = SoftmaxCovariate{has_zero_inflation(family) ? zero : std::vector<std::string>{},
                                          has_n_inflation(family) ? nn : std::vector<std::string>{}};
    } else if (c.inflation == "none") {
        spec.inflation = NoInflation{};
    } else {
        throw ValidationError("unknown inflation link '" + c.inflation + "'");
    }
    spec.validate();
    return spec;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Zero & N-inflated binomial models"};
    app.set_config("--config", "", "TOML or INI file with option defaults (flags win)");
    app.require_subcommand(1, 1);

    app.add_option("--input", c.input, "Input CSV");
    app.add_option("--y-col", c.y_col, "Success-count column")->capture_default_str();
    app.add_option("--n-col", c.n_col, "Trials column");
    app.add_option("-N,--trials", c.trials, "Number of trials (pmf, simulate; constant N for CSV input)");
    app.add_option("--mult-col", c.mult_col, "Multiplicity column for grouped counts");
    app.add_option("--covariates", c.covariates, "Covariate tokens: 1, name or name^k")->delimiter(',');
    app.add_option("--zero-covariates", c.zero_covariates, "Zero-inflation columns (default --covariates)")->delimiter(',');
    app.add_option("--n-covariates", c.n_covariates, "N-inflation columns (default --covariates)")->delimiter(',');
    app.add_flag("--standardize", c.standardize, "Standardise raw covariates before forming powers");
    app.add_option("--family", c.family, "binomial | betabin | zib | nib | znib | znibb")->capture_default_str();
    app.add_option("--families", c.families, "Families to compare")->delimiter(',');
    app.add_option("--inflation", c.inflation, "none | constant | covariate | power")->capture_default_str();
    app.add_option("--success", c.success, "constant | covariate | comma-separated tokens")->capture_default_str();
    app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app.add_option("--boot-B", c.boot_b, "Bootstrap replicates")->capture_default_str();
    app.add_option("--column", c.column, "Covariate spanned by the bootstrap grid");
    app.add_option("--grid-points", c.grid_points, "Bootstrap grid size")->capture_default_str();
    app.add_option("--threads", c.threads, "Bootstrap threads (0: all cores)");
    app.add_option("--out", c.out, "Output path");
    app.add_option("--format", c.format, "json | csv | table")->check(CLI::IsMember({"json", "csv", "table"}));
    app.add_option("--p", c.p, "Success probability");
    app.add_option("--q0", c.q0, "Zero-inflation weight");
    app.add_option("--qN", c.qN, "N-inflation weight");
    app.add_option("--r1", c.r1, "Beta shape r1");
    app.add_option("--r2", c.r2, "Beta shape r2");
    app.add_option("--count", c.count, "Number of draws")->capture_default_str();
    app.add_option("--grid", c.grid, "verify grid: small | full")->capture_default_str();
    app.add_flag("--fault-inject", c.fault_inject, "Perturb q0 by 1e-6 inside verify")->group("");

    for (const char* name : {"fit", "compare", "pmf", "simulate", "bootstrap", "verify"}) {
        app.add_subcommand(name)->fallthrough();
    }
    app.get_subcommand("fit")->description("Fit one model to a CSV");
    app.get_subcommand("compare")->description("Fit several families and rank them by AIC");
    app.get_subcommand("pmf")->description("Print the probability mass function of a law");
    app.get_subcommand("simulate")->description("Draw a CSV sample from a law");
    app.get_subcommand("bootstrap")->description("Parametric-bootstrap bands of the predicted proportion");
    app.get_subcommand("verify")->description("Run the built-in oracle suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    c.subcommand = app.get_subcommands().front()->get_name();
    if (!c.input.empty() && c.n_col.empty() && c.trials > 0) c.n_constant = c.trials;

    auto log = make_logger(err);
    try {
        return dispatch(c, out, *log);
    } catch (const DataError& e) {
        log->error("{}", e.what());
        return kDataError;
    } catch (const DegenerateInputError& e) {
        log->error("{}", e.what());
        return kDataError;
    } catch (const OutputError& e) {
        log->error("{}", e.what());
        return kDataError;
    } catch (const ConditioningError& e) {
        log->error("fit failed: {}", e.what());
        return kNotConverged;
    } catch (const LineSearchError& e) {
        log->error("fit failed: {}", e.what());
        return kNotConverged;
    } catch (const Error& e) {
        log->error("{}", e.what());
        return kConfigError;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"znib"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace znib::cli
