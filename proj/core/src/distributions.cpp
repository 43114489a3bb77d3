#include "znib/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "detail/log_pmf.hpp"
#include "znib/error.hpp"
#include "znib/special.hpp"

namespace znib {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSimplexSlack = 1e-12;

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void check_weights(double q0, double qN, const char* who) {
    if (!is_probability(q0) || !is_probability(qN) || q0 + qN > 1.0 + kSimplexSlack) {
        throw ValidationError(std::string(who) + ": inflation weights must satisfy q0, qN >= 0 and q0 + qN <= 1");
    }
}

void check_support(int k, int n, const char* who) {
    if (k < 0 || k > n) {
        throw DomainError(std::string(who) + ": k = " + std::to_string(k) + " outside 0.." + std::to_string(n));
    }
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// log(1 - p) through the rounded complement, so that reflecting p -> 1 - p
// swaps the two logarithms bit-for-bit whenever 1 - p is exact.
double log_complement(double p) { return safe_log(1.0 - p); }

}  // namespace

namespace detail {

double binomial_log_pmf(int k, int n, double log_p, double log_q) {
    const double a = k > 0 ? k * log_p : 0.0;
    const double b = n - k > 0 ? (n - k) * log_q : 0.0;
    const double out = special::log_choose(n, k) + (a + b);
    return std::isnan(out) ? kNegInf : out;
}

double inflated_log_pmf(int k, int n, double log_q0, double log_qN, double log_body, double body_log_pmf) {
    if (n == 0) return 0.0;
    double out = log_body + body_log_pmf;
    if (k == 0) out = special::log_add(out, log_q0);
    if (k == n) out = special::log_add(out, log_qN);
    return out;
}

}  // namespace detail

void ZnibParams::validate() const {
    if (n_trials < 0) throw ValidationError("ZnibParams: n_trials must be nonnegative");
    if (!is_probability(p)) throw ValidationError("ZnibParams: p must lie in [0, 1]");
    check_weights(q0, qN, "ZnibParams");
}

void ZipPair::validate() const {
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || mu1 < 0.0 || mu2 < 0.0) {
        throw ValidationError("ZipPair: rates must be finite and nonnegative");
    }
    if (!(q1 > 0.0 && q1 <= 1.0) || !(q2 > 0.0 && q2 <= 1.0)) {
        throw ValidationError("ZipPair: Poisson weights must lie in (0, 1]");
    }
}

void BetaBinParams::validate() const {
    if (n_trials < 0) throw ValidationError("BetaBinParams: n_trials must be nonnegative");
    if (!(std::isfinite(r1) && r1 > 0.0) || !(std::isfinite(r2) && r2 > 0.0)) {
        throw ValidationError("BetaBinParams: shapes r1, r2 must be positive");
    }
}

void ZnibbParams::validate() const {
    base.validate();
    check_weights(q0, qN, "ZnibbParams");
}

void ZnimParams::validate() const {
    const auto k = p.size();
    if (n_trials < 0) throw ValidationError("ZnimParams: n_trials must be nonnegative");
    if (k < 2) throw ValidationError("ZnimParams: need at least two categories");
    if (q0.size() != k || qN.size() != k) throw ValidationError("ZnimParams: weight vectors must have one entry per category");
    double total = 0.0;
    for (double x : p) {
        if (!is_probability(x)) throw ValidationError("ZnimParams: category probabilities must lie in [0, 1]");
        total += x;
    }
    if (std::abs(total - 1.0) > kSimplexSlack) throw ValidationError("ZnimParams: category probabilities must sum to 1");
    double inflation = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (!is_probability(q0[j]) || !is_probability(qN[j])) throw ValidationError("ZnimParams: inflation weights must be probabilities");
        inflation += q0[j] + qN[j];
    }
    if (inflation > 1.0 + kSimplexSlack) throw ValidationError("ZnimParams: inflation weights sum past 1");
}

double ZnimParams::body_weight() const {
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += q0[j] + qN[j];
    return std::max(0.0, 1.0 - s);
}

// -- binomial ---------------------------------------------------------------

double binomial_log_pmf(int k, int n, double p) {
    if (n < 0) throw ValidationError("binomial_log_pmf: n must be nonnegative");
    check_support(k, n, "binomial_log_pmf");
    if (!is_probability(p)) throw ValidationError("binomial_log_pmf: p must lie in [0, 1]");
    return detail::binomial_log_pmf(k, n, safe_log(p), log_complement(p));
}

double binomial_pmf(int k, int n, double p) { return std::exp(binomial_log_pmf(k, n, p)); }

// -- ZNIB -------------------------------------------------------------------

double znib_log_pmf(int k, const ZnibParams& params) {
    params.validate();
    const int n = params.n_trials;
    check_support(k, n, "znib_log_pmf");
    const double body = detail::binomial_log_pmf(k, n, safe_log(params.p), log_complement(params.p));
    if (params.q0 == 0.0 && params.qN == 0.0) return body;
    return detail::inflated_log_pmf(k, n, safe_log(params.q0), safe_log(params.qN),
                                    safe_log(std::max(0.0, params.body_weight())), body);
}

double znib_pmf(int k, const ZnibParams& params) { return std::exp(znib_log_pmf(k, params)); }

std::vector<double> znib_pmf_table(const ZnibParams& params) {
    params.validate();
    std::vector<double> out(static_cast<std::size_t>(params.n_trials) + 1);
    for (int k = 0; k <= params.n_trials; ++k) out[static_cast<std::size_t>(k)] = znib_pmf(k, params);
    return out;
}

Moments znib_moments(const ZnibParams& params) {
    params.validate();
    const double n = params.n_trials;
    const double p = params.p;
    const double q = std::max(0.0, params.body_weight());
    const double mean = params.qN * n + q * n * p;
    const double second = params.qN * n * n + q * (n * p) * (1.0 - p + n * p);
    return {mean, std::max(0.0, second - mean * mean)};
}

double znib_central_moment(int j, const ZnibParams& params) {
    if (j < 1) throw DomainError("znib_central_moment: order must be positive");
    params.validate();
    const double n = params.n_trials;
    const double p = params.p;
    const double q = std::max(0.0, params.body_weight());
    const double mu = znib_moments(params).mean;

    const auto ju = static_cast<std::size_t>(j);
    std::vector<std::vector<double>> choose(ju + 1, std::vector<double>(ju + 1, 0.0));
    for (std::size_t a = 0; a <= ju; ++a) {
        choose[a][0] = 1.0;
        for (std::size_t b = 1; b <= a; ++b) choose[a][b] = choose[a - 1][b - 1] + (b < a ? choose[a - 1][b] : 0.0);
    }

    // Central moments of one Bernoulli trial, then cumulants, scaled by N for
    // the binomial and converted back to central moments m^(k).
    std::vector<double> bern(ju + 1), kappa(ju + 1, 0.0), central(ju + 1, 0.0);
    for (std::size_t r = 0; r <= ju; ++r) bern[r] = p * std::pow(1.0 - p, r) + (1.0 - p) * std::pow(-p, r);
    for (std::size_t r = 1; r <= ju; ++r) {
        double s = bern[r];
        for (std::size_t m = 1; m < r; ++m) s -= choose[r - 1][m - 1] * kappa[m] * bern[r - m];
        kappa[r] = s;
    }
    central[0] = 1.0;
    for (std::size_t r = 1; r <= ju; ++r) {
        double s = 0.0;
        for (std::size_t m = 1; m <= r; ++m) s += choose[r - 1][m - 1] * n * kappa[m] * central[r - m];
        central[r] = s;
    }

    const double shift = n * p - mu;
    double body = 0.0;
    for (std::size_t k = 0; k <= ju; ++k) body += choose[ju][k] * std::pow(shift, ju - k) * central[k];
    return params.q0 * std::pow(-mu, j) + params.qN * std::pow(n - mu, j) + q * body;
}

InflationWeights logits_to_weights(const InflationLogits& logits) {
    if (!std::isfinite(logits.theta0) || !std::isfinite(logits.thetaN)) {
        throw ValidationError("logits_to_weights: logits must be finite");
    }
    const double a = std::clamp(logits.theta0, -kLogitClamp, kLogitClamp);
    const double c = std::clamp(logits.thetaN, -kLogitClamp, kLogitClamp);
    const double m = std::max({0.0, a, c});
    const double e0 = std::exp(a - m);
    const double eN = std::exp(c - m);
    const double d = std::exp(-m) + e0 + eN;
    return {e0 / d, eN / d};
}

InflationLogits weights_to_logits(const InflationWeights& weights) {
    check_weights(weights.q0, weights.qN, "weights_to_logits");
    const double q = 1.0 - weights.q0 - weights.qN;
    if (!(q > 0.0) || !(weights.q0 > 0.0) || !(weights.qN > 0.0)) {
        throw DomainError("weights_to_logits: weights must be interior");
    }
    return {std::log(weights.q0 / q), std::log(weights.qN / q)};
}

double zip_log_pmf(int k, double mu, double q) {
    if (k < 0) throw DomainError("zip_log_pmf: negative count");
    if (k == 0) return std::log((1.0 - q) + q * std::exp(-mu));
    if (mu == 0.0) return kNegInf;
    return std::log(q) - mu + k * std::log(mu) - special::log_factorial(k);
}

ZnibParams zip_condition(const ZipPair& pair, int n) {
    pair.validate();
    if (n < 0) throw DomainError("zip_condition: n must be nonnegative");
    const double total = pair.mu1 + pair.mu2;
    if (!(total > 0.0)) throw DomainError("zip_condition: mu1 + mu2 must be positive");
    const double p = pair.mu1 / total;
    if (n == 0) return {0, p, 0.0, 0.0};

    const double log_total = std::log(total);
    const double log_p = safe_log(pair.mu1) - log_total;
    const double log_1mp = safe_log(pair.mu2) - log_total;
    // Odds that each process is a structural zero, times e^mu, times the
    // binomial probability of the matching boundary outcome.
    const double log_a = safe_log(1.0 - pair.q1) - std::log(pair.q1) + pair.mu1 + n * log_1mp;
    const double log_b = safe_log(1.0 - pair.q2) - std::log(pair.q2) + pair.mu2 + n * log_p;
    const std::array<double, 3> terms{log_a, log_b, 0.0};
    const double log_d = special::log_sum_exp(terms);
    return {n, p, std::exp(log_a - log_d), std::exp(log_b - log_d)};
}

std::vector<double> conditional_oracle(const ZipPair& pair, int n) {
    pair.validate();
    if (n < 0) throw DomainError("conditional_oracle: n must be nonnegative");
    std::vector<double> joint(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        joint[static_cast<std::size_t>(k)] = zip_log_pmf(k, pair.mu1, pair.q1) + zip_log_pmf(n - k, pair.mu2, pair.q2);
    }
    const double log_norm = special::log_sum_exp(joint);
    if (!std::isfinite(log_norm)) throw DegenerateInputError("conditional_oracle: joint mass at this total is zero");
    for (double& v : joint) v = std::exp(v - log_norm);
    return joint;
}

ZnibParams reflect(const ZnibParams& params) { return {params.n_trials, 1.0 - params.p, params.qN, params.q0}; }

// -- beta-binomial and ZNIBB --------------------------------------------------

double betabin_log_pmf(int k, const BetaBinParams& params) {
    params.validate();
    const int n = params.n_trials;
    check_support(k, n, "betabin_log_pmf");
    return detail::betabin_log_pmf(k, n, params.r1, params.r2);
}

double detail::betabin_log_pmf(int k, int n, double r1, double r2) {
    if (n == 0) return 0.0;
    return special::log_choose(n, k) + special::log_rising(r1, k) + special::log_rising(r2, n - k) -
           special::log_rising(r1 + r2, n);
}

double betabin_pmf(int k, const BetaBinParams& params) { return std::exp(betabin_log_pmf(k, params)); }

double znibb_log_pmf(int k, const ZnibbParams& params) {
    params.validate();
    const int n = params.base.n_trials;
    check_support(k, n, "znibb_log_pmf");
    const double body = detail::betabin_log_pmf(k, n, params.base.r1, params.base.r2);
    if (params.q0 == 0.0 && params.qN == 0.0) return body;
    return detail::inflated_log_pmf(k, n, safe_log(params.q0), safe_log(params.qN),
                                    safe_log(std::max(0.0, 1.0 - (params.q0 + params.qN))), body);
}

double znibb_pmf(int k, const ZnibbParams& params) { return std::exp(znibb_log_pmf(k, params)); }

std::vector<double> znibb_pmf_table(const ZnibbParams& params) {
    params.validate();
    std::vector<double> out(static_cast<std::size_t>(params.base.n_trials) + 1);
    for (int k = 0; k <= params.base.n_trials; ++k) out[static_cast<std::size_t>(k)] = znibb_pmf(k, params);
    return out;
}

// -- multinomial and ZNIM -------------------------------------------------------

double multinomial_log_pmf(std::span<const int> y, std::span<const double> p) {
    if (y.size() != p.size()) throw DomainError("multinomial_log_pmf: count and probability lengths differ");
    int n = 0;
    double out = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (y[j] < 0) throw DomainError("multinomial_log_pmf: negative count");
        n += y[j];
        out -= special::log_factorial(y[j]);
        if (y[j] > 0) {
            if (!(p[j] > 0.0)) return kNegInf;
            out += y[j] * std::log(p[j]);
        }
    }
    return out + special::log_factorial(n);
}

namespace {

void check_counts(std::span<const int> y, int n_trials, std::size_t k, const char* who) {
    if (y.size() != k) throw DomainError(std::string(who) + ": count vector length must equal the category count");
    long total = 0;
    for (int v : y) {
        if (v < 0) throw DomainError(std::string(who) + ": negative count");
        total += v;
    }
    if (total != n_trials) throw DomainError(std::string(who) + ": counts must sum to n_trials");
}

// Multinomial pmf after zeroing the categories where `p` is zero and
// rescaling the rest.
double rescaled_multinomial_pmf(std::span<const int> y, std::span<const double> p) {
    double mass = 0.0;
    for (double v : p) mass += v;
    if (!(mass > 0.0)) throw DegenerateInputError("znim: rescaling undefined when all remaining probabilities are 0");
    std::vector<double> scaled(p.begin(), p.end());
    for (double& v : scaled) v /= mass;
    return std::exp(multinomial_log_pmf(y, scaled));
}

}  // namespace

std::vector<ZnimComponent> znim_components(const ZnimParams& params) {
    params.validate();
    const auto k = params.p.size();
    std::vector<ZnimComponent> out;
    out.push_back({params.body_weight(), params.p});
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> point(k, 0.0);
        point[j] = 1.0;
        out.push_back({params.qN[j], point});
    }
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> emptied = params.p;
        emptied[j] = 0.0;
        out.push_back({params.q0[j], emptied});
    }
    return out;
}

double znim_pmf(std::span<const int> y, const ZnimParams& params) {
    params.validate();
    const auto k = params.p.size();
    check_counts(y, params.n_trials, k, "znim_pmf");
    const double plain = std::exp(multinomial_log_pmf(y, params.p));
    const bool inflated = std::any_of(params.q0.begin(), params.q0.end(), [](double v) { return v != 0.0; }) ||
                          std::any_of(params.qN.begin(), params.qN.end(), [](double v) { return v != 0.0; });
    if (!inflated) return plain;

    double out = params.body_weight() * plain;
    for (std::size_t j = 0; j < k; ++j) {
        if (params.qN[j] > 0.0 && y[j] == params.n_trials) out += params.qN[j];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (!(params.q0[j] > 0.0)) continue;
        std::vector<double> emptied = params.p;
        emptied[j] = 0.0;
        double mass = 0.0;
        for (double v : emptied) mass += v;
        if (!(mass > 0.0)) throw DegenerateInputError("znim_pmf: rescaling undefined when all remaining probabilities are 0");
        if (y[j] == 0) out += params.q0[j] * rescaled_multinomial_pmf(y, emptied);
    }
    return out;
}

double znim_mixture_pmf(std::span<const int> y, int n_trials, std::span<const ZnimComponent> components) {
    if (components.empty()) throw ValidationError("znim_mixture_pmf: empty component list");
    const auto k = components.front().p.size();
    double weight_total = 0.0;
    for (const auto& c : components) {
        if (c.p.size() != k) throw ValidationError("znim_mixture_pmf: components disagree on category count");
        if (!is_probability(c.weight)) throw ValidationError("znim_mixture_pmf: weights must be probabilities");
        for (double v : c.p) {
            if (!is_probability(v)) throw ValidationError("znim_mixture_pmf: component probabilities must lie in [0, 1]");
        }
        weight_total += c.weight;
    }
    if (std::abs(weight_total - 1.0) > 1e-10) throw ValidationError("znim_mixture_pmf: weights must sum to 1");
    check_counts(y, n_trials, k, "znim_mixture_pmf");

    double out = 0.0;
    for (const auto& c : components) {
        if (c.weight == 0.0) continue;
        out += c.weight * rescaled_multinomial_pmf(y, c.p);
    }
    return out;
}

}  // namespace znib
