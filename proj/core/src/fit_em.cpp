#include <algorithm>
#include <cmath>

#include "detail/fit_common.hpp"
#include "znib/error.hpp"
#include "znib/fit.hpp"

namespace znib {

Responsibilities e_step(const Dataset& data, const ModelSpec& spec, const Eigen::VectorXd& params) {
    return Likelihood(spec, data).responsibilities(params);
}

FitResult fit_em(const Dataset& data, const ModelSpec& spec, const FitOptions& options) {
    spec.validate();
    if (is_beta_binomial(spec.family) || spec.family == Family::Binomial) {
        throw ValidationError("fit_em: family must be zib, nib or znib");
    }
    if (!std::holds_alternative<ConstantHurdle>(spec.inflation) &&
        !std::holds_alternative<SoftmaxCovariate>(spec.inflation)) {
        throw ValidationError("fit_em: inflation must be constant or covariate-linked");
    }
    if (data.empty()) throw ValidationError("fit_em: dataset is empty");
    const Likelihood lik(spec, data);
    const BoundModel& m = lik.model();
    const int s = m.success_size();
    const int zo = m.zero_offset(), zs = m.zero_size();
    const int no = m.n_offset(), ns = m.n_size();

    Eigen::VectorXd x = options.start ? *options.start : detail::initial_parameters(lik, data);
    if (x.size() != lik.arity()) throw ValidationError("fit_em: start has the wrong length");
    const auto [lo, hi] = parameter_bounds(spec);
    x = x.cwiseMax(lo).cwiseMin(hi);

    Eigen::VectorXd active = m.weights();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (m.n()[i] == 0) active[static_cast<Eigen::Index>(i)] = 0.0;
    }

    FitResult fit;
    fit.method = "em";
    double ll = lik.value(x);
    fit.loglik_trace.push_back(ll);
    int it = 0;
    for (; it < options.em_max_iter; ++it) {
        const Responsibilities z = lik.responsibilities(x);

        MultinomialOptions mopt;
        mopt.weights = active;
        mopt.start_zero = x.segment(zo, zs);
        mopt.start_n = x.segment(no, ns);
        const MultinomialResult infl = multinomial_logit_fit(z, m.zero_design(), m.n_design(), mopt);

        IrlsOptions iopt;
        iopt.start = x.head(s);
        const Eigen::VectorXd body = active.cwiseProduct(z.col(2));
        const IrlsResult succ = irls_binomial(m.y(), m.n(), m.success_design(), body, iopt);

        Eigen::VectorXd xn = x;
        xn.head(s) = succ.coef;
        xn.segment(zo, zs) = infl.beta;
        xn.segment(no, ns) = infl.gamma;
        const double lln = lik.value(xn);
        if (lln < ll - 1e-10 * std::max(1.0, std::abs(ll))) {
            fit.message = "log-likelihood decreased at iteration " + std::to_string(it + 1);
        }
        x = xn;
        fit.loglik_trace.push_back(lln);
        const double change = std::abs(lln - ll);
        ll = lln;
        if (change < options.em_tol) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    if (!fit.converged && fit.message.empty()) fit.message = "EM iteration limit reached";
    fit.iterations = it;
    fit.estimates = x;
    detail::finalize(fit, lik, data, options);
    return fit;
}

}  // namespace znib
