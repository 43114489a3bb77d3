#pragma once

// Probability functions for the zero & N-inflated binomial family and its
// relatives: the ZIB/NIB submodels, beta-binomial, ZNIBB and the
// zero & N-inflated multinomial. Everything is evaluated in log space.

#include <span>
#include <vector>

namespace znib {

/// Logits are clamped to this magnitude before any softmax; beyond it the
/// weights are 0 or 1 to double precision.
inline constexpr double kLogitClamp = 35.0;

/// One ZNIB law: with probability q0 the outcome is 0, with probability qN it
/// is N, otherwise binomial(N, p).
struct ZnibParams {
    int n_trials = 0;
    double p = 0.5;
    double q0 = 0.0;
    double qN = 0.0;

    void validate() const;
    double body_weight() const { return 1.0 - (q0 + qN); }
    bool operator==(const ZnibParams&) const = default;
};

/// Softmax coordinates of (q0, qN, 1 - q0 - qN) relative to the binomial body.
struct InflationLogits {
    double theta0 = 0.0;
    double thetaN = 0.0;
};

struct InflationWeights {
    double q0 = 0.0;
    double qN = 0.0;
};

/// Two independent zero-inflated Poisson processes. q1 (q2) is the probability
/// that the first (second) process is Poisson rather than a structural zero.
struct ZipPair {
    double mu1 = 1.0;
    double q1 = 1.0;
    double mu2 = 1.0;
    double q2 = 1.0;

    void validate() const;
};

struct BetaBinParams {
    int n_trials = 0;
    double r1 = 1.0;
    double r2 = 1.0;

    void validate() const;
};

struct ZnibbParams {
    BetaBinParams base;
    double q0 = 0.0;
    double qN = 0.0;

    void validate() const;
};

/// k-category zero & N-inflated multinomial. Component j of qN puts all N
/// counts in category j; component j of q0 empties category j and rescales the
/// remaining probabilities.
struct ZnimParams {
    int n_trials = 0;
    std::vector<double> p;
    std::vector<double> q0;
    std::vector<double> qN;

    void validate() const;
    int categories() const { return static_cast<int>(p.size()); }
    double body_weight() const;
};

/// One term of a user-supplied multinomial mixture. Zero entries of `p` mark
/// emptied categories; the non-zero entries are rescaled to sum to one.
struct ZnimComponent {
    double weight = 0.0;
    std::vector<double> p;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

// -- binomial ---------------------------------------------------------------

double binomial_log_pmf(int k, int n, double p);
double binomial_pmf(int k, int n, double p);

// -- ZNIB -------------------------------------------------------------------

double znib_log_pmf(int k, const ZnibParams& params);
double znib_pmf(int k, const ZnibParams& params);

/// pmf over the full support 0..N.
std::vector<double> znib_pmf_table(const ZnibParams& params);

Moments znib_moments(const ZnibParams& params);

/// E[(X - mean)^j] from the three-component mixture decomposition.
double znib_central_moment(int j, const ZnibParams& params);

/// Softmax (e^theta0, e^thetaN, 1) / (1 + e^theta0 + e^thetaN), logits clamped.
InflationWeights logits_to_weights(const InflationLogits& logits);

/// Inverse of logits_to_weights for interior weights.
InflationLogits weights_to_logits(const InflationWeights& weights);

/// Law of Y1 given Y1 + Y2 = n for independent ZIP processes, in closed form.
ZnibParams zip_condition(const ZipPair& pair, int n);

/// pr(Y1 = k | Y1 + Y2 = n), k = 0..n, by normalising the joint ZIP pmf.
std::vector<double> conditional_oracle(const ZipPair& pair, int n);

double zip_log_pmf(int k, double mu, double q);

/// Swaps the roles of successes and failures: (N, 1-p, qN, q0).
ZnibParams reflect(const ZnibParams& params);

// -- beta-binomial and ZNIBB --------------------------------------------------

double betabin_log_pmf(int k, const BetaBinParams& params);
double betabin_pmf(int k, const BetaBinParams& params);

double znibb_log_pmf(int k, const ZnibbParams& params);
double znibb_pmf(int k, const ZnibbParams& params);
std::vector<double> znibb_pmf_table(const ZnibbParams& params);

// -- multinomial and ZNIM -------------------------------------------------------

double multinomial_log_pmf(std::span<const int> y, std::span<const double> p);

double znim_pmf(std::span<const int> y, const ZnimParams& params);

/// General mixture form: sum_j weight_j multinom(y; rescaled p_j).
double znim_mixture_pmf(std::span<const int> y, int n_trials,
                        std::span<const ZnimComponent> components);

/// The single-category components of `params` as an explicit mixture list.
std::vector<ZnimComponent> znim_components(const ZnimParams& params);

}  // namespace znib
