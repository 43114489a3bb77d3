#pragma once

// Maximum-likelihood fitters: EM for softmax/hurdle inflation, Newton for
// power-link, hurdle and beta-binomial families.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "znib/likelihood.hpp"
#include "znib/model.hpp"
#include "znib/optim.hpp"

namespace znib {

struct FitOptions {
    NewtonOptions newton;
    int em_max_iter = 500;
    double em_tol = 1e-8;
    std::optional<Eigen::VectorXd> start;
    bool standard_errors = true;
    /// Use central differences of the value instead of the analytic gradient.
    bool numeric_gradient = false;
};

struct FitResult {
    ModelSpec spec;
    std::vector<std::string> names;
    Eigen::VectorXd estimates;
    double loglik = 0.0;
    double aic = 0.0;
    Eigen::VectorXd std_errors;
    std::vector<bool> boundary;
    int n_params = 0;
    bool converged = false;
    int iterations = 0;
    std::vector<RowLaw> fitted;
    std::vector<double> loglik_trace;
    double gradient_norm = 0.0;
    double condition_number = 0.0;
    std::string method;
    std::string message;
    std::uint64_t data_fingerprint = 0;
    /// Expected counts n pmf(k), k = 0..N, when every row shares one N.
    std::vector<double> expected_counts;

    double estimate(const std::string& name) const;
};

Responsibilities e_step(const Dataset& data, const ModelSpec& spec, const Eigen::VectorXd& params);

/// EM for ZIB/NIB/ZNIB with constant or softmax-covariate inflation.
FitResult fit_em(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Observed-data log-likelihood of a power-link ZNIB model.
double powerlink_loglik(const ModelSpec& spec, const Eigen::VectorXd& params, const Dataset& data);

FitResult fit_powerlink(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Newton fit of any non-EM spec.
FitResult fit_newton(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Constant-parameter fit of grouped data with a common N. Family binomial,
/// beta-binomial, ZIB, NIB, ZNIB or ZNIBB.
FitResult fit_grouped_hurdle(const Dataset& data, Family family, const FitOptions& options = {});

/// Softmax-covariate specs go to EM, everything else to Newton.
FitResult fit_model(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {});

/// Spec with an intercept-only success link (if any) and constant inflation
/// matching `family`.
ModelSpec hurdle_spec(Family family);

/// Parameters of the same law with successes and failures exchanged:
/// success coefficients negated, shapes and inflation parameters swapped.
Eigen::VectorXd mirror_parameters(const ModelSpec& spec, const Eigen::VectorXd& params);

/// Spec describing the reflected data: ZIB <-> NIB, zero and N columns swapped.
ModelSpec mirror_spec(const ModelSpec& spec);

}  // namespace znib
