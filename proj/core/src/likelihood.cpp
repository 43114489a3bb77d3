#include "znib/likelihood.hpp"

#include <cmath>
#include <limits>

#include "detail/log_pmf.hpp"
#include "znib/error.hpp"
#include "znib/special.hpp"

namespace znib {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RowTerms {
    double loglik = 0.0;
    double z1 = 0.0, z2 = 0.0, z3 = 1.0;
    double q0 = 0.0, qN = 0.0;
    double p = 0.5;
};

// Mixture S = e^a [y=0] + e^c [y=N] + body, normaliser D = 1 + e^a + e^c.
RowTerms row_terms(const BoundModel& m, std::size_t i, const RowPredictor& pr, double r1, double r2) {
    const int y = m.y()[i];
    const int n = m.n()[i];
    RowTerms t;
    double lbody = 0.0;
    if (is_beta_binomial(m.spec().family)) {
        lbody = detail::betabin_log_pmf(y, n, r1, r2);
        t.p = r1 / (r1 + r2);
    } else {
        lbody = detail::binomial_log_pmf(y, n, special::log_sigmoid(pr.eta), special::log_sigmoid(-pr.eta));
        t.p = special::sigmoid(pr.eta);
    }
    const double terms_d[3] = {0.0, pr.a, pr.c};
    const double log_d = special::log_sum_exp(terms_d);
    const double la = y == 0 ? pr.a : kNegInf;
    const double lc = y == n ? pr.c : kNegInf;
    const double terms_s[3] = {lbody, la, lc};
    const double log_s = special::log_sum_exp(terms_s);
    t.loglik = log_s - log_d;
    t.q0 = std::exp(pr.a - log_d);
    t.qN = std::exp(pr.c - log_d);
    t.z1 = std::exp(la - log_s);
    t.z2 = std::exp(lc - log_s);
    t.z3 = std::exp(lbody - log_s);
    return t;
}

}  // namespace

double Likelihood::value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const BoundModel& m = model_;
    if (x.size() != m.arity()) throw ValidationError("likelihood: parameter length does not match the model");
    const bool bb = is_beta_binomial(m.spec().family);
    const bool power = std::holds_alternative<PowerLink>(m.spec().inflation);
    double r1 = 0.0, r2 = 0.0;
    if (bb) std::tie(r1, r2) = m.shapes(x);
    if (grad) grad->setZero(x.size());

    const auto& w = m.weights();
    const int s = m.success_size();
    const int zo = m.zero_offset(), zs = m.zero_size();
    const int no = m.n_offset(), ns = m.n_size();
    double total = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const RowPredictor pr = m.predictor(x, i);
        const RowTerms t = row_terms(m, i, pr, r1, r2);
        total += w[r] * t.loglik;
        if (!grad) continue;
        if (m.n()[i] == 0) continue;
        const double ga = w[r] * (t.z1 - t.q0);
        const double gc = w[r] * (t.z2 - t.qN);
        auto& g = *grad;
        const int y = m.y()[i];
        const int n = m.n()[i];
        if (bb) {
            const double base = special::digamma_rising(r1 + r2, n);
            g[0] += w[r] * t.z3 * r1 * (special::digamma_rising(r1, y) - base);
            g[1] += w[r] * t.z3 * r2 * (special::digamma_rising(r2, n - y) - base);
        } else {
            double geta = w[r] * t.z3 * (y - n * t.p);
            if (power) geta += ga * pr.da_deta + gc * pr.dc_deta;
            g.head(s) += geta * m.success_design().row(r).transpose();
        }
        if (power) {
            if (zs) g[zo] += ga * pr.a;
            if (ns) g[no] += gc * pr.c;
        } else {
            if (zs && !pr.a_clamped) g.segment(zo, zs) += ga * m.zero_design().row(r).transpose();
            if (ns && !pr.c_clamped) g.segment(no, ns) += gc * m.n_design().row(r).transpose();
        }
    }
    return total;
}

double Likelihood::value(const Eigen::VectorXd& x) const { return value_and_gradient(x, nullptr); }

Eigen::VectorXd Likelihood::gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g;
    value_and_gradient(x, &g);
    return g;
}

Eigen::VectorXd Likelihood::row_log_pmf(const Eigen::VectorXd& x) const {
    const BoundModel& m = model_;
    if (x.size() != m.arity()) throw ValidationError("likelihood: parameter length does not match the model");
    double r1 = 0.0, r2 = 0.0;
    if (is_beta_binomial(m.spec().family)) std::tie(r1, r2) = m.shapes(x);
    Eigen::VectorXd out(static_cast<Eigen::Index>(m.rows()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out[static_cast<Eigen::Index>(i)] = row_terms(m, i, m.predictor(x, i), r1, r2).loglik;
    }
    return out;
}

Responsibilities Likelihood::responsibilities(const Eigen::VectorXd& x) const {
    const BoundModel& m = model_;
    if (x.size() != m.arity()) throw ValidationError("likelihood: parameter length does not match the model");
    if (!x.allFinite()) throw ValidationError("e_step: parameters must be finite");
    double r1 = 0.0, r2 = 0.0;
    if (is_beta_binomial(m.spec().family)) std::tie(r1, r2) = m.shapes(x);
    Responsibilities z(static_cast<Eigen::Index>(m.rows()), 3);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const RowTerms t = row_terms(m, i, m.predictor(x, i), r1, r2);
        if (!std::isfinite(t.loglik)) {
            throw DegenerateInputError("e_step: all component masses are zero for row " + std::to_string(i + 1));
        }
        const auto r = static_cast<Eigen::Index>(i);
        z(r, 0) = t.z1;
        z(r, 1) = t.z2;
        z(r, 2) = t.z3;
    }
    return z;
}

}  // namespace znib
