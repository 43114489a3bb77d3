#pragma once

// Starting values and result assembly shared by the EM and Newton fitters.

#include <Eigen/Dense>

#include "znib/fit.hpp"

namespace znib::detail {

/// Pooled proportion over interior rows, stepping back from 0 and 1.
double pooled_interior_proportion(const Dataset& data);

/// Starting point: interior-row logistic fit (or method of moments for
/// beta-binomial bodies) and inflation logits from the excess of observed
/// zeros and N's over the body's prediction. Power-link exponents start at 1.
Eigen::VectorXd initial_parameters(const Likelihood& lik, const Dataset& data);

/// Inflation part of `x` reset from the excess-mass heuristic for the body
/// already in `x`.
void initialise_inflation(const Likelihood& lik, const Dataset& data, Eigen::VectorXd& x);

/// Fills everything derived from the estimate: loglik, AIC, fitted rows,
/// standard errors, boundary flags and expected counts.
void finalize(FitResult& fit, const Likelihood& lik, const Dataset& data, const FitOptions& options);

}  // namespace znib::detail
