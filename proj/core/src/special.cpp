#include "znib/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "znib/error.hpp"

namespace znib::special {

namespace {

constexpr int kTableSize = 4096;
constexpr int kDirectSumLimit = 256;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const std::array<double, kTableSize>& factorial_table() {
    static const std::array<double, kTableSize> table = [] {
        std::array<double, kTableSize> t{};
        for (int i = 0; i < kTableSize; ++i) t[i] = boost::math::lgamma(static_cast<double>(i) + 1.0);
        return t;
    }();
    return table;
}

}  // namespace

double log_factorial(int n) {
    if (n < 0) throw DomainError("log_factorial: negative argument");
    if (n < kTableSize) return factorial_table()[static_cast<std::size_t>(n)];
    return boost::math::lgamma(static_cast<double>(n) + 1.0);
}

double log_choose(int n, int k) {
    if (k < 0 || k > n) throw DomainError("log_choose: k outside 0..n");
    return log_factorial(n) - (log_factorial(k) + log_factorial(n - k));
}

double lgamma(double x) { return boost::math::lgamma(x); }

double digamma(double x) { return boost::math::digamma(x); }

double log_rising(double x, int k) {
    // lgamma differences cancel badly once x dwarfs k.
    if (k <= kDirectSumLimit || x > 1e7) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += std::log(x + i);
        return s;
    }
    return boost::math::lgamma(x + k) - boost::math::lgamma(x);
}

double digamma_rising(double x, int k) {
    if (k <= kDirectSumLimit || x > 1e7) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += 1.0 / (x + i);
        return s;
    }
    return boost::math::digamma(x + k) - boost::math::digamma(x);
}

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace znib::special
