#include <algorithm>
#include <cmath>

#include "detail/fit_common.hpp"
#include "znib/error.hpp"
#include "znib/fit.hpp"

namespace znib {

double FitResult::estimate(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == name) return estimates[static_cast<Eigen::Index>(j)];
    }
    throw ValidationError("fit has no parameter '" + name + "'");
}

ModelSpec hurdle_spec(Family family) {
    ModelSpec spec;
    spec.family = family;
    spec.success = is_beta_binomial(family) ? SuccessLink{BetaShape{}} : SuccessLink{ConstantLogit{}};
    const bool inflated = has_zero_inflation(family) || has_n_inflation(family);
    spec.inflation = inflated ? LinkSpec{ConstantHurdle{}} : LinkSpec{NoInflation{}};
    return spec;
}

FitResult fit_newton(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
    spec.validate();
    if (data.empty()) throw ValidationError("fit: dataset is empty");
    const Likelihood lik(spec, data);

    Eigen::VectorXd x0;
    if (options.start) {
        x0 = *options.start;
        if (x0.size() != lik.arity()) throw ValidationError("fit: start has the wrong length");
    } else if (spec.family == Family::ZNIBB) {
        FitOptions inner = options;
        inner.standard_errors = false;
        const FitResult base = fit_newton(data, hurdle_spec(Family::BetaBinomial), inner);
        x0 = Eigen::VectorXd::Zero(lik.arity());
        x0.head(2) = base.estimates;
        detail::initialise_inflation(lik, data, x0);
    } else {
        x0 = detail::initial_parameters(lik, data);
    }

    Objective obj;
    obj.value = [&lik](const Eigen::VectorXd& v) { return lik.value(v); };
    if (!options.numeric_gradient) obj.gradient = [&lik](const Eigen::VectorXd& v) { return lik.gradient(v); };
    std::tie(obj.lower, obj.upper) = parameter_bounds(spec);
    const OptimResult r = newton_maximize(obj, x0, options.newton);

    FitResult fit;
    fit.method = "newton";
    fit.estimates = r.argmax;
    fit.converged = r.converged;
    fit.iterations = r.iterations;
    fit.loglik_trace = r.trace;
    fit.message = r.message;
    detail::finalize(fit, lik, data, options);
    return fit;
}

double powerlink_loglik(const ModelSpec& spec, const Eigen::VectorXd& params, const Dataset& data) {
    if (!std::holds_alternative<PowerLink>(spec.inflation)) throw ValidationError("powerlink_loglik: spec has no power link");
    return Likelihood(spec, data).value(params);
}

FitResult fit_powerlink(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
    spec.validate();
    if (!std::holds_alternative<PowerLink>(spec.inflation)) throw ValidationError("fit_powerlink: spec has no power link");
    return fit_newton(data, spec, options);
}

FitResult fit_grouped_hurdle(const Dataset& data, Family family, const FitOptions& options) {
    if (!data.common_n()) throw ValidationError("fit_grouped_hurdle: rows must share one N");
    return fit_newton(data, hurdle_spec(family), options);
}

FitResult fit_model(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
    spec.validate();
    if (std::holds_alternative<SoftmaxCovariate>(spec.inflation)) return fit_em(data, spec, options);
    if (std::holds_alternative<PowerLink>(spec.inflation)) return fit_powerlink(data, spec, options);
    return fit_newton(data, spec, options);
}

ModelSpec mirror_spec(const ModelSpec& spec) {
    ModelSpec out = spec;
    if (spec.family == Family::ZIB) out.family = Family::NIB;
    if (spec.family == Family::NIB) out.family = Family::ZIB;
    if (const auto* soft = std::get_if<SoftmaxCovariate>(&spec.inflation)) {
        out.inflation = SoftmaxCovariate{soft->n_columns, soft->zero_columns};
    }
    return out;
}

Eigen::VectorXd mirror_parameters(const ModelSpec& spec, const Eigen::VectorXd& params) {
    const auto names = parameter_names(spec);
    if (static_cast<std::size_t>(params.size()) != names.size()) {
        throw ValidationError("mirror_parameters: parameter length does not match the spec");
    }
    int s = 0;
    if (const auto* lin = std::get_if<LogitLinear>(&spec.success)) s = static_cast<int>(lin->columns.size());
    if (!std::holds_alternative<LogitLinear>(spec.success)) s = is_beta_binomial(spec.family) ? 2 : 1;
    int zs = 0, ns = 0;
    for (const auto& nm : names) {
        if (nm == "theta0" || nm == "log_alpha0" || nm.rfind("q0:", 0) == 0) ++zs;
        if (nm == "thetaN" || nm == "log_alphaN" || nm.rfind("qN:", 0) == 0) ++ns;
    }
    Eigen::VectorXd out(params.size());
    if (is_beta_binomial(spec.family)) {
        out[0] = params[1];
        out[1] = params[0];
    } else {
        out.head(s) = -params.head(s);
    }
    out.segment(s, ns) = params.segment(s + zs, ns);
    out.segment(s + ns, zs) = params.segment(s, zs);
    return out;
}

}  // namespace znib
