#pragma once

// Simulated datasets drawn with the oracle pmfs and a standard generator.

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "znib/model.hpp"

namespace sim {

struct PowerTruth {
    double b0 = 0.0, b1 = 1.0, log_a0 = 0.0, log_an = 0.0;
};

// logit p_i = b0 + b1 c_i, q0i ~ p^a0, qNi ~ (1-p)^aN, c_i standard normal.
inline znib::Dataset power_link(const PowerTruth& t, int rows, int n_lo, int n_hi, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_int_distribution<int> nd(n_lo, n_hi);
    std::vector<int> y(rows), n(rows);
    std::vector<double> c(rows);
    for (int i = 0; i < rows; ++i) {
        c[i] = z(g);
        n[i] = nd(g);
        const double p = oracle::sigmoid(t.b0 + t.b1 * c[i]);
        const double e0 = std::pow(p, std::exp(t.log_a0));
        const double en = std::pow(1 - p, std::exp(t.log_an));
        const double d = 1 + e0 + en;
        y[i] = oracle::draw(g, oracle::znib(n[i], p, e0 / d, en / d));
    }
    znib::Dataset d(y, n);
    d.add_intercept();
    d.add_column("c", c);
    return d;
}

struct SoftmaxTruth {
    double theta = 0.3;
    std::vector<double> beta{-1.0, 0.6, -0.4};
    std::vector<double> gamma{-1.5, -0.5, 0.3};
};

// Constant success logit and softmax inflation on (1, x1, x2) with normal x.
inline znib::Dataset softmax(const SoftmaxTruth& t, int rows, int n_trials, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<int> y(rows), n(rows, n_trials);
    std::vector<double> x1(rows), x2(rows);
    const double p = oracle::sigmoid(t.theta);
    for (int i = 0; i < rows; ++i) {
        x1[i] = z(g);
        x2[i] = z(g);
        const double a = t.beta[0] + t.beta[1] * x1[i] + t.beta[2] * x2[i];
        const double c = t.gamma[0] + t.gamma[1] * x1[i] + t.gamma[2] * x2[i];
        const double d = 1 + std::exp(a) + std::exp(c);
        y[i] = oracle::draw(g, oracle::znib(n_trials, p, std::exp(a) / d, std::exp(c) / d));
    }
    znib::Dataset d(y, n);
    d.add_intercept();
    d.add_column("x1", x1);
    d.add_column("x2", x2);
    return d;
}

inline znib::ModelSpec softmax_spec() {
    const std::vector<std::string> cols{znib::kInterceptColumn, "x1", "x2"};
    return {znib::Family::ZNIB, znib::ConstantLogit{}, znib::SoftmaxCovariate{cols, cols}};
}

inline znib::ModelSpec power_spec() {
    return {znib::Family::ZNIB, znib::LogitLinear{{znib::kInterceptColumn, "c"}}, znib::PowerLink{}};
}

}  // namespace sim
