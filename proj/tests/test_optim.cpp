#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sim.hpp"
#include "znib/error.hpp"
#include "znib/fit.hpp"
#include "znib/optim.hpp"

using namespace znib;
using doctest::Approx;

TEST_CASE("newton on a quadratic") {
    Objective obj;
    obj.value = [](const Eigen::VectorXd& x) { return -(x[0] - 2) * (x[0] - 2); };
    const OptimResult r = newton_maximize(obj, Eigen::VectorXd::Zero(1));
    CHECK(r.converged);
    CHECK(std::abs(r.argmax[0] - 2.0) < 1e-6);
    CHECK(r.iterations <= 2);
    CHECK(r.hessian(0, 0) == Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("newton on the binomial logit likelihood") {
    Objective obj;
    obj.value = [](const Eigen::VectorXd& x) { return 3 * x[0] - 10 * std::log1p(std::exp(x[0])); };
    const OptimResult r = newton_maximize(obj, Eigen::VectorXd::Zero(1));
    CHECK(r.converged);
    CHECK(oracle::sigmoid(r.argmax[0]) == Approx(0.3).epsilon(1e-7));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
}

TEST_CASE("newton reaches the grid-search optimum of a power-link likelihood") {
    const Dataset d = sim::power_link({0.4, 1.2, 0.3, -0.2}, 150, 20, 40, 17);
    const ModelSpec spec = sim::power_spec();
    auto f = [&](const Eigen::VectorXd& x) { return powerlink_loglik(spec, x, d); };
    const Eigen::VectorXd lo = Eigen::Vector4d(-1, 0, -1.5, -1.5);
    const Eigen::VectorXd hi = Eigen::Vector4d(1.5, 2.5, 1.5, 1.5);
    const Eigen::VectorXd best = oracle::grid_search(f, lo, hi, 6, 1e-5);
    const FitResult fit = fit_powerlink(d, spec);
    REQUIRE(fit.converged);
    for (int j = 0; j < 4; ++j) CHECK(fit.estimates[j] == Approx(best[j]).epsilon(1e-3));
    CHECK(fit.loglik >= f(best) - 1e-8);
}

TEST_CASE("box bounds and pinned coordinates") {
    Objective obj;
    obj.value = [](const Eigen::VectorXd& x) { return -(x[0] - 5) * (x[0] - 5) - (x[1] + 1) * (x[1] + 1); };
    obj.lower = Eigen::Vector2d(-10, -10);
    obj.upper = Eigen::Vector2d(3, 10);
    const OptimResult r = newton_maximize(obj, Eigen::Vector2d(0, 0));
    CHECK(r.converged);
    CHECK(r.argmax[0] == 3.0);
    CHECK(std::abs(r.argmax[1] + 1.0) < 1e-6);
    CHECK(r.at_bound[0]);
    CHECK_FALSE(r.at_bound[1]);
}

TEST_CASE("indefinite curvature still ascends") {
    Objective obj;
    obj.value = [](const Eigen::VectorXd& x) { return std::cos(x[0]) - 0.1 * x[1] * x[1]; };
    const OptimResult r = newton_maximize(obj, Eigen::Vector2d(2.0, 1.0));
    CHECK(r.converged);
    CHECK(std::cos(r.argmax[0]) == Approx(1.0).epsilon(1e-10));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
}

TEST_CASE("newton failure modes") {
    Objective flat;
    flat.value = [](const Eigen::VectorXd& x) { return x[0]; };
    flat.hessian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
    CHECK_THROWS_AS(newton_maximize(flat, Eigen::VectorXd::Zero(1)), ConditioningError);

    Objective spike;
    spike.value = [](const Eigen::VectorXd& x) { return x[0] == 0.0 ? 0.0 : NAN; };
    spike.gradient = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
    spike.hessian = [](const Eigen::VectorXd&) { return -Eigen::MatrixXd::Identity(1, 1); };
    CHECK_THROWS_AS(newton_maximize(spike, Eigen::VectorXd::Zero(1)), LineSearchError);

    Objective nan_start;
    nan_start.value = [](const Eigen::VectorXd&) { return NAN; };
    CHECK_THROWS_AS(newton_maximize(nan_start, Eigen::VectorXd::Zero(1)), ValidationError);
}

TEST_CASE("central differences") {
    Eigen::Matrix3d A;
    A << 4, 1, -2, 1, 3, 0.5, -2, 0.5, 6;
    const Eigen::Vector3d b(1, -2, 0.5);
    ScalarFn q = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(A * x) + b.dot(x); };
    const Eigen::Vector3d x(0.3, -1.2, 2.0);
    const Eigen::MatrixXd H = central_diff_hessian(q, x);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) CHECK(H(i, j) == Approx(A(i, j)).epsilon(1e-6));
    }
    CHECK(H == H.transpose());
    const Eigen::VectorXd g = central_diff_gradient(q, x);
    const Eigen::VectorXd want = A * x + b;
    for (int i = 0; i < 3; ++i) CHECK(g[i] == Approx(want[i]).epsilon(1e-8));
    const Eigen::MatrixXd J = gradient_jacobian([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A * v + b; }, x);
    CHECK(J == J.transpose());

    ScalarFn c = [](const Eigen::VectorXd&) { return 4.0; };
    CHECK(central_diff_gradient(c, x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(central_diff_hessian(c, x).cwiseAbs().maxCoeff() == 0.0);

    ScalarFn wall = [](const Eigen::VectorXd& v) { return v[1] > -1.2 ? NAN : 1.0; };
    try {
        central_diff_gradient(wall, x);
        FAIL("expected a perturbation error");
    } catch (const PerturbationError& e) {
        CHECK(e.coordinate() == 1);
    }
    const Eigen::VectorXd h = difference_steps(Eigen::Vector2d(0.5, -300));
    CHECK(h[0] == 1e-4);
    CHECK(h[1] == Approx(3e-2));
}

TEST_CASE("power-link gradient against a secant slope") {
    const Dataset d = sim::power_link({0.1, 0.8, 0.2, 0.1}, 60, 10, 30, 5);
    const Likelihood lik(sim::power_spec(), d);
    const Eigen::Vector4d x(0.2, 0.5, -0.1, 0.3);
    const Eigen::Vector4d dir = Eigen::Vector4d(1, -2, 0.5, 1).normalized();
    const double slope = lik.gradient(x).dot(dir);
    auto secant = [&](double h) { return (lik.value(x + h * dir) - lik.value(x - h * dir)) / (2 * h); };
    const double e1 = std::abs(secant(1e-2) - slope);
    const double e2 = std::abs(secant(5e-3) - slope);
    CHECK(e1 < 1e-2 * std::max(1.0, std::abs(slope)));
    CHECK(e2 < 0.3 * e1 + 1e-9);
}

TEST_CASE("irls closed forms") {
    const std::vector<int> y{3, 1, 4, 0, 2};
    const std::vector<int> n{5, 5, 6, 2, 7};
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 1);
    const IrlsResult r = irls_binomial(y, n, X, Eigen::VectorXd::Ones(5));
    CHECK(r.converged);
    CHECK(oracle::sigmoid(r.coef[0]) == Approx(10.0 / 25.0).epsilon(1e-10));
    CHECK(r.residual <= 1e-8);

    Eigen::MatrixXd X2(5, 2);
    X2 << 1, -1, 1, 0.5, 1, 1, 1, -0.3, 1, 2;
    const IrlsResult a = irls_binomial(y, n, X2, Eigen::VectorXd::Constant(5, 0.5));
    const IrlsResult b = irls_binomial(y, n, X2, Eigen::VectorXd::Ones(5));
    CHECK(a.coef[0] == Approx(b.coef[0]).epsilon(1e-9));
    CHECK(a.coef[1] == Approx(b.coef[1]).epsilon(1e-9));
}

TEST_CASE("irls recovers simulated coefficients") {
    std::mt19937_64 g(99);
    std::normal_distribution<double> z(0, 1);
    const int m = 10000;
    std::vector<int> y(m), n(m, 3);
    Eigen::MatrixXd X(m, 2);
    for (int i = 0; i < m; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = z(g);
        y[i] = oracle::draw(g, oracle::znib(3, oracle::sigmoid(-0.5 + 0.8 * X(i, 1)), 0, 0));
    }
    const IrlsResult r = irls_binomial(y, n, X, Eigen::VectorXd::Ones(m));
    REQUIRE(r.converged);
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    for (int i = 0; i < m; ++i) {
        const double p = oracle::sigmoid(X.row(i).dot(r.coef));
        info += 3 * p * (1 - p) * X.row(i).transpose() * X.row(i);
    }
    const Eigen::Matrix2d cov = info.inverse();
    CHECK(std::abs(r.coef[0] + 0.5) < 3 * std::sqrt(cov(0, 0)));
    CHECK(std::abs(r.coef[1] - 0.8) < 3 * std::sqrt(cov(1, 1)));
}

TEST_CASE("irls guards") {
    const std::vector<int> y{0, 0, 0};
    const std::vector<int> n{3, 4, 2};
    const IrlsResult r = irls_binomial(y, n, Eigen::MatrixXd::Ones(3, 1), Eigen::VectorXd::Ones(3));
    CHECK(r.coef[0] == -35.0);
    CHECK(r.at_bound[0]);
    Eigen::MatrixXd X(3, 2);
    X << 1, 2, 1, 2, 1, 2;
    CHECK_THROWS_AS(irls_binomial(std::vector<int>{1, 2, 0}, n, X, Eigen::VectorXd::Ones(3)), ConditioningError);
}

TEST_CASE("multinomial logit closed form") {
    Eigen::MatrixXd Z(4, 3);
    Z << 0.5, 0.1, 0.4, 0.2, 0.2, 0.6, 0.0, 0.3, 0.7, 0.1, 0.0, 0.9;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
    const MultinomialResult r = multinomial_logit_fit(Z, X, X);
    const Eigen::RowVector3d zbar = Z.colwise().mean();
    CHECK(r.converged);
    CHECK(r.beta[0] == Approx(std::log(zbar[0] / zbar[2])).epsilon(1e-9));
    CHECK(r.gamma[0] == Approx(std::log(zbar[1] / zbar[2])).epsilon(1e-9));
    CHECK(r.residual <= 1e-8);
}

TEST_CASE("multinomial logit without structural mass") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(5, 3);
    Z.col(2).setOnes();
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 1);
    const MultinomialResult r = multinomial_logit_fit(Z, X, X);
    CHECK(r.beta[0] == -35.0);
    CHECK(r.gamma[0] == -35.0);
    CHECK(r.beta_at_bound[0]);
    CHECK(r.gamma_at_bound[0]);
    Eigen::MatrixXd bad = Z;
    bad(0, 2) = 0.5;
    CHECK_THROWS_AS(multinomial_logit_fit(bad, X, X), ValidationError);
}

TEST_CASE("multinomial logit recovers simulated softmax coefficients") {
    std::mt19937_64 g(5);
    std::normal_distribution<double> z(0, 1);
    const int m = 20000;
    Eigen::MatrixXd X(m, 2), Z = Eigen::MatrixXd::Zero(m, 3);
    for (int i = 0; i < m; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = z(g);
        const double a = -0.5 + 0.7 * X(i, 1), c = -1.0 - 0.4 * X(i, 1);
        const double d = 1 + std::exp(a) + std::exp(c);
        Z(i, oracle::draw(g, {std::exp(a) / d, std::exp(c) / d, 1 / d})) = 1.0;
    }
    const MultinomialResult r = multinomial_logit_fit(Z, X, X);
    REQUIRE(r.converged);
    CHECK(std::abs(r.beta[0] + 0.5) < 0.1);
    CHECK(std::abs(r.beta[1] - 0.7) < 0.1);
    CHECK(std::abs(r.gamma[0] + 1.0) < 0.1);
    CHECK(std::abs(r.gamma[1] + 0.4) < 0.1);
}

TEST_CASE("covariance summary") {
    const CovarianceSummary s = covariance_summary(-Eigen::Matrix2d(Eigen::Vector2d(4.0, 0.25).asDiagonal()));
    CHECK(s.std_errors[0] == Approx(0.5));
    CHECK(s.std_errors[1] == Approx(2.0));
    CHECK(s.positive_definite);
    CHECK(s.condition_number == Approx(16.0));
    const CovarianceSummary flat = covariance_summary(-Eigen::Matrix2d(Eigen::Vector2d(4.0, 0.0).asDiagonal()));
    CHECK_FALSE(flat.flagged[0]);
    CHECK(flat.flagged[1]);
    CHECK(flat.std_errors[1] > 1e5);
    CHECK_FALSE(flat.positive_definite);
}
