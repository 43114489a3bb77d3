#pragma once

#include <span>

namespace znib::special {

/// log(n!) for n >= 0; exact table lookup for small n.
double log_factorial(int n);

/// log C(n, k) = log n! - (log k! + log (n-k)!). The grouping makes the value
/// bit-identical under k <-> n-k.
double log_choose(int n, int k);

double lgamma(double x);
double digamma(double x);

/// log of the rising factorial x (x+1) ... (x+k-1) = lgamma(x+k) - lgamma(x).
double log_rising(double x, int k);

/// digamma(x+k) - digamma(x) = sum_{i<k} 1/(x+i).
double digamma_rising(double x, int k);

/// log(exp(a) + exp(b)) with -inf handled.
double log_add(double a, double b);

double log_sum_exp(std::span<const double> v);

/// Numerically stable log(sigmoid(x)) = -log1p(exp(-x)).
double log_sigmoid(double x);

double sigmoid(double x);

}  // namespace znib::special
