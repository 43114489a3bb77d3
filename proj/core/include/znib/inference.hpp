#pragma once

// Post-fit quantities: observed-information standard errors, AIC tables and
// parametric-bootstrap bands for the predicted proportion E[y/N | x].

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "znib/fit.hpp"
#include "znib/model.hpp"
#include "znib/optim.hpp"
#include "znib/sampling.hpp"

namespace znib {

inline double aic(double loglik, int n_params) { return 2.0 * n_params - 2.0 * loglik; }

/// Recomputes the curvature summary of `fit` on `data`.
CovarianceSummary observed_info_se(const FitResult& fit, const Dataset& data);

/// E[y/N | x] = qN + (1 - q0 - qN) p at a covariate row aligned with the data columns.
double predicted_proportion(const BoundModel& model, const Eigen::VectorXd& params, const Eigen::RowVectorXd& covariates);

struct BootstrapOptions {
    int replicates = 200;
    std::uint64_t seed = 1;
    /// Covariate spanned by the grid; empty for models without covariates.
    std::string column;
    int grid_points = 100;
    unsigned threads = 0;  // 0: hardware concurrency
    double level = 0.95;
};

struct BootstrapBands {
    std::string column;
    std::vector<double> grid;
    std::vector<double> point;
    std::vector<double> lower;
    std::vector<double> upper;
    int replicates = 0;
    int succeeded = 0;
    int failed = 0;
    std::uint64_t seed = 0;
    bool unreliable = false;      // more than 20% of replicates failed
    bool low_replicates = false;  // fewer than 50 replicates
};

/// Type-1 empirical quantile (inverse ECDF) of `values`, which it sorts.
double empirical_quantile(std::vector<double>& values, double prob);

/// Simulates one dataset from the fitted law at the observed N_i and X_i.
/// Grouped rows are redrawn individually and regrouped.
Dataset simulate_from_fit(const FitResult& fit, const Dataset& data, std::uint64_t seed);
Dataset simulate_from_fit(const FitResult& fit, const Dataset& data, Sampler& rng);

BootstrapBands bootstrap_bands(const FitResult& fit, const Dataset& data, const BootstrapOptions& options = {});

struct ComparisonRow {
    std::string label;
    Family family = Family::Binomial;
    std::vector<std::string> names;
    Eigen::VectorXd estimates;
    Eigen::VectorXd std_errors;
    double loglik = 0.0;
    double aic = 0.0;
    double delta_aic = 0.0;
    int n_params = 0;
    bool converged = false;
    std::size_t input_index = 0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;  // ascending AIC, ties in input order
};

ComparisonTable compare(const std::vector<FitResult>& fits);

}  // namespace znib
