#pragma once

// Newton maximisation with step halving, weighted logistic regression (IRLS),
// soft-target multinomial logit regression and central differences.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace znib {

struct NewtonOptions {
    int max_iter = 200;
    double gradient_tol = 1e-6;  // sup-norm of the projected gradient
    int max_halvings = 30;
    double hessian_ridge = 1e-10;
    double max_step = 25.0;      // sup-norm cap on one Newton step
};

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Objective to maximise. Missing derivatives fall back to central
/// differences: the Hessian from the gradient when one is given, otherwise
/// from the value. Empty bounds mean unbounded.
struct Objective {
    ScalarFn value;
    VectorFn gradient;
    MatrixFn hessian;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct OptimResult {
    Eigen::VectorXd argmax;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd hessian;
    std::vector<double> trace;
    std::vector<bool> at_bound;
    std::string message;
};

OptimResult newton_maximize(const Objective& objective, const Eigen::VectorXd& start,
                            const NewtonOptions& options = {});

/// Step rule h_j = 1e-4 max(1, |x_j|).
Eigen::VectorXd difference_steps(const Eigen::VectorXd& x);

Eigen::VectorXd central_diff_gradient(const ScalarFn& f, const Eigen::VectorXd& x);
/// Second differences of f, symmetrised.
Eigen::MatrixXd central_diff_hessian(const ScalarFn& f, const Eigen::VectorXd& x);
/// Central differences of an analytic gradient, symmetrised.
Eigen::MatrixXd gradient_jacobian(const VectorFn& g, const Eigen::VectorXd& x);

// -- logistic regressions ------------------------------------------------------

struct IrlsOptions {
    int max_iter = 100;
    double tol = 1e-8;
    double clamp = 35.0;
    Eigen::VectorXd start;
};

struct IrlsResult {
    Eigen::VectorXd coef;
    double loglik = 0.0;
    double residual = 0.0;  // sup-norm of X'(w (y - N p)) over free coefficients
    int iterations = 0;
    bool converged = false;
    std::vector<bool> at_bound;
};

/// Maximises sum_i w_i [y_i t_i - N_i log(1 + e^{t_i})], t = X coef.
/// Rank deficiency on the weighted support throws ConditioningError;
/// diverging coefficients stop at +-clamp and are flagged.
IrlsResult irls_binomial(std::span<const int> y, std::span<const int> n, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& w, const IrlsOptions& options = {});

struct MultinomialOptions {
    Eigen::VectorXd weights;  // empty: all 1
    int max_iter = 100;
    double tol = 1e-8;
    double clamp = 35.0;
    Eigen::VectorXd start_zero;
    Eigen::VectorXd start_n;
};

struct MultinomialResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
    double loglik = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<bool> beta_at_bound;
    std::vector<bool> gamma_at_bound;
};

/// Soft-target fit of (q0, qN, rest) = softmax(X0 beta, XN gamma, 0) to the
/// responsibility columns of Z (n x 3). A design with no columns drops that
/// category.
MultinomialResult multinomial_logit_fit(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X0,
                                        const Eigen::MatrixXd& XN, const MultinomialOptions& options = {});

// -- curvature -------------------------------------------------------------

struct CovarianceSummary {
    Eigen::VectorXd std_errors;
    std::vector<bool> flagged;  // loads on a flat or negative-curvature direction
    double condition_number = 0.0;
    bool positive_definite = false;
};

/// Standard errors from the inverse of -H. Eigen-directions with curvature
/// below 1e-12 of the largest are floored there and every parameter loading
/// on them is flagged.
CovarianceSummary covariance_summary(const Eigen::MatrixXd& hessian);

}  // namespace znib
