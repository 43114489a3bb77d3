#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "znib_cli/cli.hpp"

namespace znib::cli {

namespace {

using Json = nlohmann::ordered_json;

Json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return round10(v);
}

std::string g10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string f3(double v, int width) {
    char buf[64];
    if (std::isfinite(v)) {
        std::snprintf(buf, sizeof buf, "%*.3f", width, v);
    } else {
        std::snprintf(buf, sizeof buf, "%*s", width, "-");
    }
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

Json string_list(const std::vector<std::string>& v) {
    Json out = Json::array();
    for (const auto& s : v) out.push_back(s);
    return out;
}

Json spec_json(const ModelSpec& spec) {
    Json j;
    j["family"] = to_string(spec.family);
    j["success"] = success_kind(spec.success);
    j["inflation"] = inflation_kind(spec.inflation);
    j["label"] = spec.label();
    if (const auto* lin = std::get_if<LogitLinear>(&spec.success)) j["success_columns"] = string_list(lin->columns);
    if (const auto* soft = std::get_if<SoftmaxCovariate>(&spec.inflation)) {
        j["zero_columns"] = string_list(soft->zero_columns);
        j["n_columns"] = string_list(soft->n_columns);
    }
    return j;
}

Json estimates_json(const std::vector<std::string>& names, const Eigen::VectorXd& x, const Eigen::VectorXd& se,
                    const std::vector<bool>* boundary) {
    Json out = Json::array();
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        Json e;
        e["name"] = names[j];
        e["value"] = number(x[i]);
        e["se"] = i < se.size() ? number(se[i]) : Json(nullptr);
        if (boundary) e["boundary"] = static_cast<bool>((*boundary)[j]);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

double round10(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    return std::strtod(g10(v).c_str(), nullptr);
}

Json fit_report(const FitResult& fit, const std::string& fitted_path) {
    Json j;
    j["spec"] = spec_json(fit.spec);
    j["estimates"] = estimates_json(fit.names, fit.estimates, fit.std_errors, &fit.boundary);
    j["loglik"] = number(fit.loglik);
    j["aic"] = number(fit.aic);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["fitted_path"] = fitted_path.empty() ? Json(nullptr) : Json(fitted_path);
    return j;
}

Json comparison_report(const ComparisonTable& table) {
    Json models = Json::array();
    for (const auto& r : table.rows) {
        Json m;
        m["label"] = r.label;
        m["family"] = to_string(r.family);
        m["n_params"] = r.n_params;
        m["loglik"] = number(r.loglik);
        m["aic"] = number(r.aic);
        m["delta_aic"] = number(r.delta_aic);
        m["converged"] = r.converged;
        m["estimates"] = estimates_json(r.names, r.estimates, r.std_errors, nullptr);
        models.push_back(std::move(m));
    }
    Json j;
    j["models"] = std::move(models);
    return j;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

std::string fit_table(const FitResult& fit) {
    std::ostringstream os;
    os << "model " << fit.spec.label() << "  (" << fit.method << ")\n";
    std::size_t w = 10;
    for (const auto& n : fit.names) w = std::max(w, n.size() + 2);
    os << pad("parameter", w) << "  estimate        se\n";
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        os << pad(fit.names[j], w) << f3(fit.estimates[i], 10) << f3(fit.std_errors[i], 10)
           << (fit.boundary[j] ? "  boundary" : "") << "\n";
    }
    os << "loglik " << f3(fit.loglik, 0) << "  AIC " << f3(fit.aic, 0) << "  "
       << (fit.converged ? "converged" : "NOT converged") << " after " << fit.iterations << " iterations\n";
    if (!fit.expected_counts.empty() && fit.expected_counts.size() <= 51) {
        os << "    k    expected\n";
        for (std::size_t k = 0; k < fit.expected_counts.size(); ++k) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%5zu", k);
            os << buf << f3(fit.expected_counts[k], 12) << "\n";
        }
    }
    return os.str();
}

std::string comparison_table(const ComparisonTable& table) {
    std::ostringstream os;
    std::size_t w = 8;
    for (const auto& r : table.rows) w = std::max(w, r.label.size() + 2);
    os << pad("model", w) << "  k       loglik           AIC      dAIC\n";
    for (const auto& r : table.rows) {
        char k[16];
        std::snprintf(k, sizeof k, "%3d", r.n_params);
        os << pad(r.label, w) << k << f3(r.loglik, 13) << f3(r.aic, 14) << f3(r.delta_aic, 10)
           << (r.converged ? "" : "  not converged") << "\n";
    }
    return os.str();
}

std::string fitted_csv(const FitResult& fit, const Dataset& data) {
    std::ostringstream os;
    os << "row,y,n,weight,p,q0,qN\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const RowLaw& law = fit.fitted[i];
        os << i + 1 << ',' << data.y[i] << ',' << data.n[i] << ',' << g10(data.weight(i)) << ',' << g10(law.p) << ','
           << g10(law.q0) << ',' << g10(law.qN) << '\n';
    }
    return os.str();
}

std::string bands_csv(const BootstrapBands& bands) {
    std::ostringstream os;
    os << (bands.column.empty() ? "x" : bands.column) << ",point,lower,upper\n";
    for (std::size_t j = 0; j < bands.grid.size(); ++j) {
        os << g10(bands.grid[j]) << ',' << g10(bands.point[j]) << ',' << g10(bands.lower[j]) << ','
           << g10(bands.upper[j]) << '\n';
    }
    return os.str();
}

}  // namespace znib::cli
