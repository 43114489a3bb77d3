#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sim.hpp"
#include "znib/distributions.hpp"
#include "znib/error.hpp"
#include "znib/fit.hpp"
#include "znib/inference.hpp"

using namespace znib;
using doctest::Approx;

namespace {

Dataset gender() {
    const double counts[] = {215, 1485, 5331, 10649, 14959, 11929, 6678, 2092, 342};
    return Dataset::grouped_counts(8, counts);
}

const ModelSpec kHurdle{Family::ZNIB, ConstantLogit{}, ConstantHurdle{}};

double max_relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]) / std::max(1.0, std::abs(b[j])));
    return m;
}

}  // namespace

TEST_CASE("e-step responsibilities") {
    Dataset d({1, 0, 2, 0}, {3, 2, 2, 0});
    const Responsibilities z = e_step(d, kHurdle, Eigen::Vector3d(0, 0, 0));
    CHECK(z(0, 0) == 0.0);
    CHECK(z(0, 1) == 0.0);
    CHECK(z(0, 2) == 1.0);
    CHECK(z(1, 0) == Approx(0.8).epsilon(1e-14));
    CHECK(z(1, 1) == 0.0);
    CHECK(z(2, 1) == Approx(0.8).epsilon(1e-14));
    CHECK(z(3, 0) == Approx(1.0 / 3));
    for (Eigen::Index i = 0; i < z.rows(); ++i) CHECK(std::abs(z.row(i).sum() - 1.0) < 1e-10);

    const Responsibilities plain = e_step(d, {Family::Binomial, ConstantLogit{}, NoInflation{}}, Eigen::VectorXd::Zero(1));
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(plain(i, 0) == 0.0);
        CHECK(plain(i, 1) == 0.0);
        CHECK(plain(i, 2) == 1.0);
    }
    const Responsibilities off = e_step(d, kHurdle, Eigen::Vector3d(0, -35, -35));
    CHECK(off(1, 0) < 1e-14);
}

TEST_CASE("e-step names a row with no mass") {
    Dataset d({1, 2}, {2, 2});
    const ModelSpec zib{Family::ZIB, ConstantLogit{}, ConstantHurdle{}};
    try {
        e_step(d, zib, Eigen::Vector2d(-1e308, 0));
        FAIL("expected a degenerate-row error");
    } catch (const DegenerateInputError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(e_step(d, zib, Eigen::Vector2d(NAN, 0)), ValidationError);
}

TEST_CASE("EM on softmax-inflation data") {
    const sim::SoftmaxTruth truth;
    const Dataset d = sim::softmax(truth, 2000, 6, 314);
    const FitResult fit = fit_em(d, sim::softmax_spec());
    REQUIRE(fit.converged);
    CHECK(fit.method == "em");
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
        CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - 1e-10 * std::abs(fit.loglik_trace[i - 1]));
    }
    const Eigen::VectorXd want = (Eigen::VectorXd(7) << truth.theta, truth.beta[0], truth.beta[1], truth.beta[2],
                                  truth.gamma[0], truth.gamma[1], truth.gamma[2]).finished();
    for (int j = 0; j < 7; ++j) CHECK(std::abs(fit.estimates[j] - want[j]) < 4 * fit.std_errors[j]);
    CHECK(fit.aic == Approx(2 * 7 - 2 * fit.loglik).epsilon(1e-15));

    const FitResult newton = fit_newton(d, sim::softmax_spec());
    CHECK(std::abs(fit.loglik - newton.loglik) < 1e-5);
}

TEST_CASE("EM without boundary outcomes") {
    std::mt19937_64 g(3);
    std::vector<int> y, n;
    std::vector<double> c;
    std::normal_distribution<double> z(0, 1);
    for (int i = 0; i < 300; ++i) {
        c.push_back(z(g));
        n.push_back(10);
        y.push_back(1 + oracle::draw(g, oracle::znib(8, oracle::sigmoid(0.2 + 0.4 * c.back()), 0, 0)));
    }
    Dataset d(y, n);
    d.add_intercept();
    d.add_column("c", c);
    const ModelSpec spec{Family::ZNIB, LogitLinear{{kInterceptColumn, "c"}},
                         SoftmaxCovariate{{kInterceptColumn}, {kInterceptColumn}}};
    const FitResult fit = fit_em(d, spec);
    CHECK(fit.estimate("q0:(intercept)") == -35.0);
    CHECK(fit.estimate("qN:(intercept)") == -35.0);
    CHECK(fit.boundary[2]);
    CHECK(fit.boundary[3]);
    const IrlsResult plain = irls_binomial(d.y, d.n, d.design({kInterceptColumn, "c"}), Eigen::VectorXd::Ones(300));
    CHECK(fit.estimates[0] == Approx(plain.coef[0]).epsilon(1e-7));
    CHECK(fit.estimates[1] == Approx(plain.coef[1]).epsilon(1e-7));
}

TEST_CASE("zero-inflated fits satisfy the Hall identity") {
    std::mt19937_64 g(8);
    std::normal_distribution<double> z(0, 1);
    std::vector<int> y, n;
    std::vector<double> c;
    for (int i = 0; i < 800; ++i) {
        c.push_back(z(g));
        n.push_back(2 + i % 7);
        y.push_back(oracle::draw(g, oracle::znib(n.back(), oracle::sigmoid(-0.2 + 0.5 * c.back()), 0.25, 0)));
    }
    Dataset d(y, n);
    d.add_intercept();
    d.add_column("c", c);
    const ModelSpec spec{Family::ZIB, LogitLinear{{kInterceptColumn, "c"}}, ConstantHurdle{}};
    const FitResult fit = fit_em(d, spec);
    REQUIRE(fit.converged);
    CHECK(fit.estimate("theta0") == Approx(std::log(0.25 / 0.75)).epsilon(0.3));
    for (std::size_t i = 0; i < d.size(); ++i) {
        const RowLaw& law = fit.fitted[i];
        CHECK(law.qN == 0.0);
        const double hall = law.q0 + (1 - law.q0) * std::pow(1 - law.p, d.n[i]);
        CHECK(std::abs(znib_pmf(0, {d.n[i], law.p, law.q0, law.qN}) - hall) < 1e-10);
    }
}

TEST_CASE("fit_em rejects other families") {
    const Dataset d = gender();
    CHECK_THROWS_AS(fit_em(d, hurdle_spec(Family::ZNIBB)), ValidationError);
    CHECK_THROWS_AS(fit_em(d, sim::power_spec()), ValidationError);
    CHECK_THROWS_AS(fit_em(Dataset(), kHurdle), ValidationError);
}

TEST_CASE("power-link objective") {
    const Dataset d = sim::power_link({0.3, 0.9, 0.0, 0.5}, 40, 5, 15, 2);
    const ModelSpec spec = sim::power_spec();
    double thirds = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double p = oracle::sigmoid(0.3 + 0.9 * d.X(i, 1));
        thirds += std::log(oracle::znib(d.n[i], p, 1.0 / 3, 1.0 / 3)[d.y[i]] );
    }
    CHECK(powerlink_loglik(spec, Eigen::Vector4d(0.3, 0.9, -40, -40), d) == Approx(thirds).epsilon(1e-10));

    Dataset one({0}, {2});
    one.add_intercept();
    const ModelSpec s1{Family::ZNIB, LogitLinear{{kInterceptColumn}}, PowerLink{}};
    CHECK(powerlink_loglik(s1, Eigen::Vector3d(0, 0, 0), one) == Approx(std::log(0.375)).epsilon(1e-14));

    const Eigen::Vector4d x(0.2, -0.7, 0.4, -0.3);
    const Dataset r = d.reflected();
    CHECK(std::abs(powerlink_loglik(spec, x, d) - powerlink_loglik(spec, mirror_parameters(spec, x), r)) < 1e-10);
}

TEST_CASE("power-link fit recovers the truth and mirrors") {
    const sim::PowerTruth truth{0.2, 0.6, 0.5, 0.2};
    const Dataset d = sim::power_link(truth, 500, 100, 400, 77);
    const FitResult fit = fit_powerlink(d, sim::power_spec());
    REQUIRE(fit.converged);
    CHECK(fit.gradient_norm <= 1e-6);
    const Eigen::Vector4d want(truth.b0, truth.b1, truth.log_a0, truth.log_an);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(fit.estimates[j] - want[j]) < 3 * fit.std_errors[j]);

    const FitResult back = fit_powerlink(d.reflected(), sim::power_spec());
    REQUIRE(back.converged);
    CHECK(std::abs(back.aic - fit.aic) < 1e-8);
    CHECK(max_relative_gap(back.estimates, mirror_parameters(sim::power_spec(), fit.estimates)) < 1e-6);
}

TEST_CASE("power-link fit flags an absent N component") {
    const Dataset d = sim::power_link({0.0, 0.8, 0.0, 4.0}, 400, 20, 60, 12);
    const FitResult fit = fit_powerlink(d, sim::power_spec());
    CHECK(fit.boundary[3]);
    CHECK_FALSE(fit.boundary[2]);
}

TEST_CASE("grouped gender fits") {
    const Dataset d = gender();
    const FitResult bin = fit_grouped_hurdle(d, Family::Binomial);
    REQUIRE(bin.converged);
    CHECK(bin.fitted[0].p == Approx(221023.0 / 429440.0).epsilon(1e-10));
    CHECK(bin.expected_counts[0] == Approx(165.22).epsilon(1e-4));
    CHECK(bin.aic == Approx(191178).epsilon(1e-5));

    const FitResult bb = fit_grouped_hurdle(d, Family::BetaBinomial);
    const FitResult znibb = fit_grouped_hurdle(d, Family::ZNIBB);
    REQUIRE(bb.converged);
    REQUIRE(znibb.converged);
    CHECK(znibb.gradient_norm <= 1e-6);
    // With free point masses the fitted boundary counts equal the observed ones.
    CHECK(znibb.expected_counts[0] == Approx(215.0).epsilon(1e-6));
    CHECK(znibb.expected_counts[8] == Approx(342.0).epsilon(1e-6));
    CHECK(znibb.aic - bb.aic == Approx(-7).epsilon(0.15));
    CHECK(bb.aic - bin.aic == Approx(-34).epsilon(0.05));
    double total = 0.0;
    for (double c : znibb.expected_counts) total += c;
    CHECK(total == Approx(53680.0).epsilon(1e-12));
}

TEST_CASE("grouped data concentrated at N") {
    const double counts[] = {0, 0, 0, 0, 50};
    const Dataset d = Dataset::grouped_counts(4, counts);
    const FitResult fit = fit_grouped_hurdle(d, Family::ZNIBB);
    CHECK(fit.fitted[0].qN > 0.99);
    CHECK(fit.boundary[0]);
    CHECK(fit.boundary[1]);
    const Dataset uneven = Dataset({1, 2}, {3, 4});
    CHECK_THROWS_AS(fit_grouped_hurdle(uneven, Family::Binomial), ValidationError);
}

TEST_CASE("reflected Hall laws have no moment-matched Hall twin") {
    const int n = 6;
    const ZnibParams zib{n, 0.35, 0.2, 0};
    const ZnibParams ref = reflect(zib);
    const auto mom = znib_moments(ref);
    // ZIB(n, p, q0): mean = (1-q0) n p, second moment = (1-q0) n p (1 - p + n p).
    const double ratio = (mom.variance + mom.mean * mom.mean) / mom.mean;
    const double p = (ratio - 1.0) / (n - 1.0);
    const double q0 = 1.0 - mom.mean / (n * p);
    REQUIRE(p > 0.0);
    REQUIRE(p < 1.0);
    REQUIRE(q0 >= 0.0);
    const auto twin = znib_moments({n, p, q0, 0});
    CHECK(twin.mean == Approx(mom.mean));
    CHECK(twin.variance == Approx(mom.variance));
    double gap = 0.0;
    for (int k = 0; k <= n; ++k) gap = std::max(gap, std::abs(znib_pmf(k, ref) - znib_pmf(k, {n, p, q0, 0})));
    CHECK(gap > 1e-3);
    for (int k = 0; k <= n; ++k) CHECK(znib_pmf(k, ref) == Approx(znib_pmf(n - k, zib)).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 g(21);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const Dataset pw = sim::power_link({0.2, 0.7, 0.1, 0.1}, 80, 2, 30, 4);
    const Dataset sm = sim::softmax({}, 120, 5, 6);
    Dataset grp = gender();
    const std::vector<std::pair<ModelSpec, const Dataset*>> cases{
        {sim::power_spec(), &pw},
        {{Family::ZIB, LogitLinear{{kInterceptColumn, "c"}}, PowerLink{}}, &pw},
        {{Family::NIB, LogitLinear{{kInterceptColumn, "c"}}, PowerLink{}}, &pw},
        {sim::softmax_spec(), &sm},
        {{Family::ZIB, ConstantLogit{}, SoftmaxCovariate{{kInterceptColumn, "x1"}, {}}}, &sm},
        {hurdle_spec(Family::ZNIB), &grp},
        {hurdle_spec(Family::Binomial), &grp},
        {hurdle_spec(Family::BetaBinomial), &grp},
        {hurdle_spec(Family::ZNIBB), &grp},
    };
    for (const auto& [spec, data] : cases) {
        const Likelihood lik(spec, *data);
        for (int rep = 0; rep < 5; ++rep) {
            Eigen::VectorXd x(lik.arity());
            for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = u(g);
            if (is_beta_binomial(spec.family)) x.head(2).array() += 3.0;
            const Eigen::VectorXd a = lik.gradient(x);
            const Eigen::VectorXd f = central_diff_gradient([&](const Eigen::VectorXd& v) { return lik.value(v); }, x);
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                CHECK(std::abs(a[j] - f[j]) <= 1e-4 * std::max(1.0, std::abs(f[j])));
            }
        }
    }
}

TEST_CASE("mirror helpers") {
    const ModelSpec soft{Family::ZIB, ConstantLogit{}, SoftmaxCovariate{{"a", "b"}, {}}};
    const ModelSpec m = mirror_spec(soft);
    CHECK(m.family == Family::NIB);
    CHECK(std::get<SoftmaxCovariate>(m.inflation).n_columns.size() == 2);
    const Eigen::Vector3d x(0.5, 1.0, 2.0);
    CHECK(mirror_parameters(soft, x) == Eigen::Vector3d(-0.5, 1.0, 2.0));
    const Eigen::Vector4d bb(1, 2, 3, 4);
    CHECK(mirror_parameters(hurdle_spec(Family::ZNIBB), bb) == Eigen::Vector4d(2, 1, 4, 3));
    CHECK(mirror_parameters(mirror_spec(kHurdle), mirror_parameters(kHurdle, Eigen::Vector3d(1, 2, 3))) ==
          Eigen::Vector3d(1, 2, 3));
}
