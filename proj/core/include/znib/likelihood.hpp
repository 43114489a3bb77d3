#pragma once

// Observed-data log-likelihood of a bound model with its analytic gradient.
// Includes the log C(N_i, y_i) terms.

#include <Eigen/Dense>

#include "znib/model.hpp"

namespace znib {

/// n x 3 matrix of posterior component probabilities, columns (structural
/// zero, structural N, body).
using Responsibilities = Eigen::MatrixXd;

class Likelihood {
  public:
    Likelihood(ModelSpec spec, const Dataset& data) : model_(std::move(spec), data) {}

    const BoundModel& model() const { return model_; }
    int arity() const { return model_.arity(); }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;

    /// Unweighted per-row log-probabilities.
    Eigen::VectorXd row_log_pmf(const Eigen::VectorXd& x) const;

    /// Throws DegenerateInputError naming the first row with zero total mass.
    Responsibilities responsibilities(const Eigen::VectorXd& x) const;

  private:
    BoundModel model_;
};

}  // namespace znib
