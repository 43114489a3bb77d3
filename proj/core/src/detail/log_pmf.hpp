#pragma once

// Log-pmf kernels shared by the public distribution functions and the
// likelihood code. No validation; callers guarantee 0 <= k <= n.

namespace znib::detail {

/// Binomial log-pmf from precomputed log p and log(1 - p).
double binomial_log_pmf(int k, int n, double log_p, double log_q);

double betabin_log_pmf(int k, int n, double r1, double r2);

/// log(q0 [k=0] + qN [k=n] + body * exp(body_log_pmf)); 0 for n = 0.
double inflated_log_pmf(int k, int n, double log_q0, double log_qN, double log_body, double body_log_pmf);

}  // namespace znib::detail
