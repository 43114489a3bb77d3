#include "detail/fit_common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "znib/distributions.hpp"
#include "znib/error.hpp"
#include "znib/inference.hpp"
#include "znib/special.hpp"

namespace znib::detail {

namespace {

int constant_column(const Eigen::MatrixXd& X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (X.rows() && (X.col(j).array() == 1.0).all()) return static_cast<int>(j);
    }
    return -1;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void success_start(const Likelihood& lik, const Dataset& data, Eigen::VectorXd& x) {
    const BoundModel& m = lik.model();
    const double p0 = pooled_interior_proportion(data);
    if (is_beta_binomial(m.spec().family)) {
        double sw = 0.0, swn = 0.0, swy = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            sw += data.weight(i);
            swn += data.weight(i) * data.n[i];
            swy += data.weight(i) * data.y[i];
        }
        const double p = std::clamp(swy / std::max(swn, 1.0), 1e-3, 1.0 - 1e-3);
        const double nbar = swn / std::max(sw, 1e-300);
        double ss = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double r = data.y[i] - data.n[i] * p;
            ss += data.weight(i) * r * r;
        }
        const double var = ss / std::max(sw, 1e-300);
        double rho = 0.01;
        if (nbar > 1.0) rho = (var / (nbar * p * (1.0 - p)) - 1.0) / (nbar - 1.0);
        rho = std::clamp(std::isfinite(rho) ? rho : 0.01, 1e-4, 0.5);
        const double total = (1.0 - rho) / rho;
        x[0] = std::log(p * total);
        x[1] = std::log((1.0 - p) * total);
        return;
    }
    const Eigen::MatrixXd& X = m.success_design();
    const int icpt = constant_column(X);
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(X.cols());
    if (icpt >= 0) coef[icpt] = logit(p0);
    if (X.cols() > 1 || icpt < 0) {
        Eigen::VectorXd w = m.weights();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (m.y()[i] == 0 || m.y()[i] == m.n()[i]) w[static_cast<Eigen::Index>(i)] = 0.0;
        }
        try {
            IrlsOptions opt;
            opt.start = coef;
            const IrlsResult r = irls_binomial(m.y(), m.n(), X, w, opt);
            if (r.coef.allFinite()) coef = r.coef;
        } catch (const Error&) {
            // Too few interior rows for the design; keep the intercept start.
        }
    }
    x.head(X.cols()) = coef;
}

}  // namespace

double pooled_interior_proportion(const Dataset& data) {
    double sy = 0.0, sn = 0.0, ay = 0.0, an = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double w = data.weight(i);
        ay += w * data.y[i];
        an += w * data.n[i];
        if (data.y[i] > 0 && data.y[i] < data.n[i]) {
            sy += w * data.y[i];
            sn += w * data.n[i];
        }
    }
    double p = sn > 0.0 ? sy / sn : (an > 0.0 ? ay / an : 0.5);
    return std::clamp(p, 1e-3, 1.0 - 1e-3);
}

void initialise_inflation(const Likelihood& lik, const Dataset& data, Eigen::VectorXd& x) {
    const BoundModel& m = lik.model();
    const ModelSpec& spec = m.spec();
    if (std::holds_alternative<NoInflation>(spec.inflation)) return;
    const int zo = m.zero_offset(), zs = m.zero_size();
    const int no = m.n_offset(), ns = m.n_size();
    if (std::holds_alternative<PowerLink>(spec.inflation)) {
        if (zs) x[zo] = 0.0;
        if (ns) x[no] = 0.0;
        return;
    }
    Eigen::VectorXd probe = x;
    probe.segment(zo, zs + ns).setConstant(-kLogitClamp);
    double r1 = 0.0, r2 = 0.0;
    if (is_beta_binomial(spec.family)) std::tie(r1, r2) = m.shapes(probe);

    double w = 0.0, f0 = 0.0, fn = 0.0, b0 = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const int n = m.n()[i];
        if (n == 0) continue;
        const double wi = data.weight(i);
        double p0 = 0.0, pn = 0.0;
        if (is_beta_binomial(spec.family)) {
            const BetaBinParams bb{n, r1, r2};
            p0 = betabin_pmf(0, bb);
            pn = betabin_pmf(n, bb);
        } else {
            const double p = special::sigmoid(m.predictor(probe, i).eta);
            p0 = binomial_pmf(0, n, p);
            pn = binomial_pmf(n, n, p);
        }
        w += wi;
        b0 += wi * p0;
        bn += wi * pn;
        if (m.y()[i] == 0) f0 += wi;
        if (m.y()[i] == n) fn += wi;
    }
    double q0 = 0.0, qn = 0.0;
    if (w > 0.0) {
        f0 /= w;
        fn /= w;
        b0 /= w;
        bn /= w;
        if (zs && ns) {
            const double det = (1.0 - b0) * (1.0 - bn) - b0 * bn;
            if (std::abs(det) > 1e-12) {
                q0 = ((f0 - b0) * (1.0 - bn) + b0 * (fn - bn)) / det;
                qn = ((1.0 - b0) * (fn - bn) + bn * (f0 - b0)) / det;
            }
        } else if (zs) {
            q0 = b0 < 1.0 ? (f0 - b0) / (1.0 - b0) : 0.0;
        } else if (ns) {
            qn = bn < 1.0 ? (fn - bn) / (1.0 - bn) : 0.0;
        }
    }
    q0 = std::clamp(std::isfinite(q0) ? q0 : 0.0, 1e-4, 0.45);
    qn = std::clamp(std::isfinite(qn) ? qn : 0.0, 1e-4, 0.45);
    const double body = 1.0 - (zs ? q0 : 0.0) - (ns ? qn : 0.0);
    const double t0 = std::clamp(std::log(q0 / body), -5.0, 5.0);
    const double tn = std::clamp(std::log(qn / body), -5.0, 5.0);

    auto place = [&](int offset, int size, const Eigen::MatrixXd& X, double theta) {
        if (!size) return;
        x.segment(offset, size).setZero();
        const int icpt = constant_column(X);
        if (icpt >= 0) x[offset + icpt] = theta;
    };
    place(zo, zs, m.zero_design(), t0);
    place(no, ns, m.n_design(), tn);
}

Eigen::VectorXd initial_parameters(const Likelihood& lik, const Dataset& data) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lik.arity());
    success_start(lik, data, x);
    initialise_inflation(lik, data, x);
    return x;
}

void finalize(FitResult& fit, const Likelihood& lik, const Dataset& data, const FitOptions& options) {
    const BoundModel& m = lik.model();
    const ModelSpec& spec = m.spec();
    const Eigen::VectorXd& x = fit.estimates;
    const auto k = x.size();
    fit.spec = spec;
    fit.names = parameter_names(spec);
    fit.n_params = static_cast<int>(k);
    fit.loglik = lik.value(x);
    fit.aic = aic(fit.loglik, fit.n_params);
    fit.fitted = m.evaluate(x);
    fit.data_fingerprint = data.fingerprint();

    const auto [lo, hi] = parameter_bounds(spec);
    VectorFn grad = [&lik](const Eigen::VectorXd& v) { return lik.gradient(v); };
    if (options.numeric_gradient) {
        grad = [&lik](const Eigen::VectorXd& v) {
            return central_diff_gradient([&lik](const Eigen::VectorXd& u) { return lik.value(u); }, v);
        };
    }
    Eigen::VectorXd g = grad(x);
    for (Eigen::Index j = 0; j < k; ++j) {
        if ((x[j] <= lo[j] && g[j] < 0) || (x[j] >= hi[j] && g[j] > 0)) g[j] = 0.0;
    }
    fit.gradient_norm = k ? g.cwiseAbs().maxCoeff() : 0.0;

    fit.boundary.assign(static_cast<std::size_t>(k), false);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (std::isfinite(hi[j]) && std::abs(x[j]) >= hi[j] - 1e-9) fit.boundary[static_cast<std::size_t>(j)] = true;
    }
    fit.std_errors = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    if (options.standard_errors) {
        const CovarianceSummary cov = covariance_summary(gradient_jacobian(grad, x));
        fit.std_errors = cov.std_errors;
        fit.condition_number = cov.condition_number;
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto u = static_cast<std::size_t>(j);
            const double se = cov.std_errors[j];
            if (cov.flagged[u] || !std::isfinite(se) || se > 100.0 * std::max(1.0, std::abs(x[j]))) {
                fit.boundary[u] = true;
            }
        }
    }

    double w = 0.0, mq0 = 0.0, mqn = 0.0;
    for (std::size_t i = 0; i < fit.fitted.size(); ++i) {
        w += data.weight(i);
        mq0 += data.weight(i) * fit.fitted[i].q0;
        mqn += data.weight(i) * fit.fitted[i].qN;
    }
    if (w > 0.0) {
        mq0 /= w;
        mqn /= w;
        auto flag = [&](int offset, int size) {
            for (int j = offset; j < offset + size; ++j) fit.boundary[static_cast<std::size_t>(j)] = true;
        };
        // A component is unidentified when its mean mass or its expected count is negligible.
        auto negligible = [w](double mass) { return mass < 1e-8 || w * mass < 1e-3; };
        if (m.zero_size() && negligible(mq0)) flag(m.zero_offset(), m.zero_size());
        if (m.n_size() && negligible(mqn)) flag(m.n_offset(), m.n_size());
        if (negligible(1.0 - mq0 - mqn)) flag(0, m.success_size());
    }

    fit.expected_counts.clear();
    if (const auto n = data.common_n(); n && *n <= 100000 && !data.empty()) {
        fit.expected_counts.assign(static_cast<std::size_t>(*n) + 1, 0.0);
        double r1 = 0.0, r2 = 0.0;
        if (is_beta_binomial(spec.family)) std::tie(r1, r2) = m.shapes(x);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const RowLaw& law = fit.fitted[i];
            const double q0 = std::min(law.q0, 1.0);
            const double qn = std::min(law.qN, 1.0 - q0);
            const std::vector<double> pmf = is_beta_binomial(spec.family)
                                                ? znibb_pmf_table({{*n, r1, r2}, q0, qn})
                                                : znib_pmf_table({*n, law.p, q0, qn});
            for (std::size_t kk = 0; kk < pmf.size(); ++kk) fit.expected_counts[kk] += data.weight(i) * pmf[kk];
        }
    }
}

}  // namespace znib::detail
