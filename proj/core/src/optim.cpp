#include "znib/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "znib/error.hpp"
#include "znib/special.hpp"

namespace znib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
    Eigen::VectorXd lo, hi;

    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

    // Zero the components that push against an active bound.
    Eigen::VectorXd projected(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
        Eigen::VectorXd out = g;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            if ((x[j] <= lo[j] && g[j] < 0) || (x[j] >= hi[j] && g[j] > 0)) out[j] = 0.0;
        }
        return out;
    }
};

Box make_box(const Objective& obj, Eigen::Index k) {
    Box b{Eigen::VectorXd::Constant(k, -kInf), Eigen::VectorXd::Constant(k, kInf)};
    if (obj.lower.size() == k) b.lo = obj.lower;
    if (obj.upper.size() == k) b.hi = obj.upper;
    return b;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Ascent direction solving (-H) d = g, repairing a non-positive-definite
// system with an escalating ridge and, failing that, absolute eigenvalues.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, double ridge) {
    const Eigen::MatrixXd A = -0.5 * (H + H.transpose());
    if (!A.allFinite()) throw ConditioningError("Hessian has non-finite entries");
    if (A.size() && A.cwiseAbs().maxCoeff() == 0.0) throw ConditioningError("Hessian is zero beyond ridge repair");
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd d = llt.solve(g);
        if (d.allFinite()) return d;
    }
    const Eigen::VectorXd scale = (1.0 + A.diagonal().cwiseAbs().array()).matrix();
    for (double c = ridge; c <= 1e-2 * (1 + 1e-9); c *= 10.0) {
        Eigen::MatrixXd R = A;
        R.diagonal() += c * scale;
        llt.compute(R);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd d = llt.solve(g);
            if (d.allFinite()) return d;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    if (eig.info() != Eigen::Success) throw ConditioningError("Hessian eigen-decomposition failed");
    const Eigen::VectorXd lam = eig.eigenvalues().cwiseAbs();
    const double lmax = lam.maxCoeff();
    if (!(lmax > 0.0)) throw ConditioningError("Hessian is zero beyond ridge repair");
    const Eigen::VectorXd floored = lam.cwiseMax(1e-10 * lmax);
    const Eigen::MatrixXd& V = eig.eigenvectors();
    return V * (V.transpose() * g).cwiseQuotient(floored);
}

}  // namespace

Eigen::VectorXd difference_steps(const Eigen::VectorXd& x) {
    return (1e-4 * x.cwiseAbs().cwiseMax(1.0).array()).matrix();
}

Eigen::VectorXd central_diff_gradient(const ScalarFn& f, const Eigen::VectorXd& x) {
    const Eigen::VectorXd h = difference_steps(x);
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        xp[j] = x[j] + h[j];
        const double up = f(xp);
        xp[j] = x[j] - h[j];
        const double dn = f(xp);
        xp[j] = x[j];
        if (!std::isfinite(up) || !std::isfinite(dn)) {
            throw PerturbationError("objective not finite when perturbing coordinate " + std::to_string(j),
                                    static_cast<int>(j));
        }
        g[j] = (up - dn) / (2.0 * h[j]);
    }
    return g;
}

Eigen::MatrixXd central_diff_hessian(const ScalarFn& f, const Eigen::VectorXd& x) {
    const Eigen::VectorXd h = difference_steps(x);
    const auto k = x.size();
    Eigen::MatrixXd H(k, k);
    const double f0 = f(x);
    auto eval = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
        Eigen::VectorXd xp = x;
        xp[i] += si * h[i];
        xp[j] += sj * h[j];
        const double v = f(xp);
        if (!std::isfinite(v)) {
            throw PerturbationError("objective not finite when perturbing coordinate " + std::to_string(i),
                                    static_cast<int>(i));
        }
        return v;
    };
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::VectorXd xp = x;
        xp[i] += h[i];
        const double up = f(xp);
        xp[i] = x[i] - h[i];
        const double dn = f(xp);
        if (!std::isfinite(up) || !std::isfinite(dn)) {
            throw PerturbationError("objective not finite when perturbing coordinate " + std::to_string(i),
                                    static_cast<int>(i));
        }
        H(i, i) = (up - 2.0 * f0 + dn) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = eval(i, 1, j, 1) - eval(i, 1, j, -1) - eval(i, -1, j, 1) + eval(i, -1, j, -1);
            H(i, j) = H(j, i) = v / (4.0 * h[i] * h[j]);
        }
    }
    return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd gradient_jacobian(const VectorFn& g, const Eigen::VectorXd& x) {
    const Eigen::VectorXd h = difference_steps(x);
    const auto k = x.size();
    Eigen::MatrixXd J(k, k);
    Eigen::VectorXd xp = x;
    for (Eigen::Index j = 0; j < k; ++j) {
        xp[j] = x[j] + h[j];
        const Eigen::VectorXd up = g(xp);
        xp[j] = x[j] - h[j];
        const Eigen::VectorXd dn = g(xp);
        xp[j] = x[j];
        if (!up.allFinite() || !dn.allFinite()) {
            throw PerturbationError("gradient not finite when perturbing coordinate " + std::to_string(j),
                                    static_cast<int>(j));
        }
        J.col(j) = (up - dn) / (2.0 * h[j]);
    }
    return 0.5 * (J + J.transpose());
}

OptimResult newton_maximize(const Objective& objective, const Eigen::VectorXd& start, const NewtonOptions& options) {
    if (!objective.value) throw ValidationError("newton_maximize: objective has no value function");
    const Box box = make_box(objective, start.size());
    auto gradient = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return objective.gradient ? objective.gradient(x) : central_diff_gradient(objective.value, x);
    };
    auto hessian = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
        if (objective.hessian) return objective.hessian(x);
        if (objective.gradient) return gradient_jacobian(objective.gradient, x);
        return central_diff_hessian(objective.value, x);
    };

    OptimResult res;
    Eigen::VectorXd x = box.project(start);
    double f = objective.value(x);
    if (!std::isfinite(f)) throw ValidationError("newton_maximize: objective is not finite at the start");
    res.trace.push_back(f);
    Eigen::VectorXd pg = box.projected(x, gradient(x));
    double gnorm = sup_norm(pg);

    int it = 0;
    for (; it < options.max_iter; ++it) {
        if (gnorm <= options.gradient_tol) {
            res.converged = true;
            break;
        }
        std::vector<Eigen::Index> free;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            if (pg[j] != 0.0) free.push_back(j);
        }
        const Eigen::MatrixXd H = hessian(x);
        const auto m = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd Hf(m, m);
        Eigen::VectorXd gf(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            gf[a] = pg[free[a]];
            for (Eigen::Index b = 0; b < m; ++b) Hf(a, b) = H(free[a], free[b]);
        }
        Eigen::VectorXd newton = Eigen::VectorXd::Zero(x.size());
        const Eigen::VectorXd df = newton_direction(Hf, gf, options.hessian_ridge);
        for (Eigen::Index a = 0; a < m; ++a) newton[free[a]] = df[a];

        bool any_finite = false;
        auto search = [&](Eigen::VectorXd d) -> bool {
            const double len = sup_norm(d);
            if (len > options.max_step) d *= options.max_step / len;
            double t = 1.0;
            for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
                const Eigen::VectorXd xn = box.project(x + t * d);
                if (xn == x) break;
                const double fn = objective.value(xn);
                if (!std::isfinite(fn)) continue;
                any_finite = true;
                // A step that meets the gradient tolerance may tie within
                // rounding of the sum; it terminates the iteration.
                const double noise = 1e-12 * std::max(1.0, std::abs(f));
                if (fn < f - noise) continue;
                Eigen::VectorXd pgn = box.projected(xn, gradient(xn));
                const double gn = sup_norm(pgn);
                if (fn < f && gn > options.gradient_tol) continue;
                if (fn > f || gn < gnorm) {
                    x = xn;
                    f = fn;
                    pg = std::move(pgn);
                    gnorm = gn;
                    return true;
                }
            }
            return false;
        };
        if (!search(newton) && !search(pg / std::max(1.0, gnorm))) {
            if (!any_finite) {
                throw LineSearchError("newton_maximize: objective non-finite at every step halving (iteration " +
                                      std::to_string(it) + ", value " + std::to_string(f) + ", gradient " +
                                      std::to_string(gnorm) + ")");
            }
            res.message = "line search could not improve the objective";
            break;
        }
        res.trace.push_back(f);
    }
    if (!res.converged && gnorm <= options.gradient_tol) res.converged = true;
    if (!res.converged && res.message.empty()) res.message = "iteration limit reached";
    res.argmax = x;
    res.value = f;
    res.gradient_norm = gnorm;
    res.iterations = it;
    res.hessian = hessian(x);
    res.at_bound.resize(static_cast<std::size_t>(x.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        res.at_bound[static_cast<std::size_t>(j)] = x[j] <= box.lo[j] || x[j] >= box.hi[j];
    }
    return res;
}

// -- IRLS ---------------------------------------------------------------------

namespace {

int constant_column(const Eigen::MatrixXd& X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (X.rows() && (X.col(j).array() == 1.0).all()) return static_cast<int>(j);
    }
    return -1;
}

void check_rank(const Eigen::MatrixXd& X, const Eigen::VectorXd& support, const char* who) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (support[i] > 0.0) rows.push_back(i);
    }
    Eigen::MatrixXd S(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) S.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
    if (X.cols() == 0) return;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    qr.setThreshold(1e-10);
    if (S.rows() < X.cols() || qr.rank() < X.cols()) {
        throw ConditioningError(std::string(who) + ": design is rank deficient on the weighted support");
    }
}

}  // namespace

IrlsResult irls_binomial(std::span<const int> y, std::span<const int> n, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& w, const IrlsOptions& options) {
    const auto rows = X.rows();
    if (static_cast<Eigen::Index>(y.size()) != rows || static_cast<Eigen::Index>(n.size()) != rows || w.size() != rows) {
        throw ValidationError("irls_binomial: y, n, w and X disagree in length");
    }
    if (!(w.array() >= 0.0).all() || !w.allFinite()) throw ValidationError("irls_binomial: weights must be nonnegative");
    Eigen::VectorXd yv(rows), nv(rows), support(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        yv[i] = y[static_cast<std::size_t>(i)];
        nv[i] = n[static_cast<std::size_t>(i)];
        support[i] = w[i] * nv[i];
    }
    check_rank(X, support, "irls_binomial");

    const Eigen::VectorXd wy = w.cwiseProduct(yv);
    const Eigen::VectorXd wn = w.cwiseProduct(nv);
    Objective obj;
    obj.value = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd t = X * b;
        double s = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (support[i] > 0.0) s += wy[i] * special::log_sigmoid(t[i]) + (wn[i] - wy[i]) * special::log_sigmoid(-t[i]);
        }
        return s;
    };
    obj.gradient = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
        const Eigen::VectorXd t = X * b;
        Eigen::VectorXd r(rows);
        for (Eigen::Index i = 0; i < rows; ++i) r[i] = wy[i] - wn[i] * special::sigmoid(t[i]);
        return X.transpose() * r;
    };
    obj.hessian = [&](const Eigen::VectorXd& b) -> Eigen::MatrixXd {
        const Eigen::VectorXd t = X * b;
        Eigen::VectorXd v(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double p = special::sigmoid(t[i]);
            v[i] = wn[i] * p * (1.0 - p);
        }
        return -(X.transpose() * v.asDiagonal() * X);
    };
    obj.lower = Eigen::VectorXd::Constant(X.cols(), -options.clamp);
    obj.upper = Eigen::VectorXd::Constant(X.cols(), options.clamp);

    Eigen::VectorXd start = options.start.size() == X.cols() ? options.start : Eigen::VectorXd::Zero(X.cols());
    const int icpt = constant_column(X);
    const double sy = wy.sum();
    const double sn = wn.sum();
    bool degenerate = false;
    if (icpt >= 0 && (sy == 0.0 || sy == sn)) {
        // All failures (successes): the supremum sits at the intercept clamp.
        start.setZero();
        start[icpt] = sy == 0.0 ? -options.clamp : options.clamp;
        degenerate = true;
    }
    NewtonOptions nopt;
    nopt.max_iter = options.max_iter;
    nopt.gradient_tol = options.tol;
    const OptimResult r = newton_maximize(obj, start, nopt);

    IrlsResult out;
    out.coef = r.argmax;
    out.loglik = r.value;
    out.residual = r.gradient_norm;
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.at_bound = r.at_bound;
    if (degenerate) out.at_bound[static_cast<std::size_t>(icpt)] = true;
    return out;
}

// -- multinomial logit -----------------------------------------------------------

MultinomialResult multinomial_logit_fit(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X0, const Eigen::MatrixXd& XN,
                                        const MultinomialOptions& options) {
    const auto rows = Z.rows();
    if (Z.cols() != 3) throw ValidationError("multinomial_logit_fit: Z must have three columns");
    if (X0.rows() != rows || XN.rows() != rows) throw ValidationError("multinomial_logit_fit: designs and Z disagree in rows");
    for (Eigen::Index i = 0; i < rows; ++i) {
        if ((Z.row(i).array() < 0.0).any() || std::abs(Z.row(i).sum() - 1.0) > 1e-8) {
            throw ValidationError("multinomial_logit_fit: responsibility row " + std::to_string(i + 1) +
                                  " is not a probability vector");
        }
    }
    const Eigen::VectorXd w = options.weights.size() == rows ? options.weights : Eigen::VectorXd::Ones(rows);
    if (!(w.array() >= 0.0).all()) throw ValidationError("multinomial_logit_fit: weights must be nonnegative");
    const auto k0 = X0.cols();
    const auto kn = XN.cols();
    check_rank(X0, w, "multinomial_logit_fit");
    check_rank(XN, w, "multinomial_logit_fit");

    const Eigen::VectorXd wz1 = w.cwiseProduct(Z.col(0));
    const Eigen::VectorXd wz2 = w.cwiseProduct(Z.col(1));

    struct Probs {
        Eigen::VectorXd a, c, q0, qn, logd;
    };
    auto probs = [&](const Eigen::VectorXd& x) {
        Probs p;
        p.a = k0 ? Eigen::VectorXd(X0 * x.head(k0)) : Eigen::VectorXd::Constant(rows, -kInf);
        p.c = kn ? Eigen::VectorXd(XN * x.tail(kn)) : Eigen::VectorXd::Constant(rows, -kInf);
        p.q0.resize(rows);
        p.qn.resize(rows);
        p.logd.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double t[3] = {0.0, p.a[i], p.c[i]};
            p.logd[i] = special::log_sum_exp(t);
            p.q0[i] = std::exp(p.a[i] - p.logd[i]);
            p.qn[i] = std::exp(p.c[i] - p.logd[i]);
        }
        return p;
    };

    Objective obj;
    obj.value = [&](const Eigen::VectorXd& x) {
        const Probs p = probs(x);
        double s = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (w[i] == 0.0) continue;
            if (k0 && wz1[i] > 0) s += wz1[i] * p.a[i];
            if (kn && wz2[i] > 0) s += wz2[i] * p.c[i];
            s -= w[i] * p.logd[i];
        }
        return s;
    };
    obj.gradient = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Probs p = probs(x);
        Eigen::VectorXd g(k0 + kn);
        if (k0) g.head(k0) = X0.transpose() * (wz1 - w.cwiseProduct(p.q0));
        if (kn) g.tail(kn) = XN.transpose() * (wz2 - w.cwiseProduct(p.qn));
        return g;
    };
    obj.hessian = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
        const Probs p = probs(x);
        Eigen::MatrixXd H(k0 + kn, k0 + kn);
        const Eigen::VectorXd v00 = w.array() * p.q0.array() * (1.0 - p.q0.array());
        const Eigen::VectorXd vnn = w.array() * p.qn.array() * (1.0 - p.qn.array());
        const Eigen::VectorXd v0n = -(w.array() * p.q0.array() * p.qn.array());
        if (k0) H.topLeftCorner(k0, k0) = -(X0.transpose() * v00.asDiagonal() * X0);
        if (kn) H.bottomRightCorner(kn, kn) = -(XN.transpose() * vnn.asDiagonal() * XN);
        if (k0 && kn) {
            H.topRightCorner(k0, kn) = -(X0.transpose() * v0n.asDiagonal() * XN);
            H.bottomLeftCorner(kn, k0) = H.topRightCorner(k0, kn).transpose();
        }
        return H;
    };
    obj.lower = Eigen::VectorXd::Constant(k0 + kn, -options.clamp);
    obj.upper = Eigen::VectorXd::Constant(k0 + kn, options.clamp);

    Eigen::VectorXd start = Eigen::VectorXd::Zero(k0 + kn);
    if (options.start_zero.size() == k0) start.head(k0) = options.start_zero;
    if (options.start_n.size() == kn) start.tail(kn) = options.start_n;
    std::vector<bool> forced(static_cast<std::size_t>(k0 + kn), false);
    auto force_empty = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& wz, Eigen::Index offset) {
        if (!X.cols() || wz.sum() > 0.0) return;
        const int icpt = constant_column(X);
        if (icpt < 0) return;
        start.segment(offset, X.cols()).setZero();
        start[offset + icpt] = -options.clamp;
        forced[static_cast<std::size_t>(offset + icpt)] = true;
    };
    force_empty(X0, wz1, 0);
    force_empty(XN, wz2, k0);

    NewtonOptions nopt;
    nopt.max_iter = options.max_iter;
    nopt.gradient_tol = options.tol;
    const OptimResult r = newton_maximize(obj, start, nopt);

    MultinomialResult out;
    out.beta = r.argmax.head(k0);
    out.gamma = r.argmax.tail(kn);
    out.loglik = r.value;
    out.residual = r.gradient_norm;
    out.iterations = r.iterations;
    out.converged = r.converged;
    for (Eigen::Index j = 0; j < k0 + kn; ++j) {
        const bool b = r.at_bound[static_cast<std::size_t>(j)] || forced[static_cast<std::size_t>(j)];
        (j < k0 ? out.beta_at_bound : out.gamma_at_bound).push_back(b);
    }
    return out;
}

// -- curvature ----------------------------------------------------------------

CovarianceSummary covariance_summary(const Eigen::MatrixXd& hessian) {
    const auto k = hessian.rows();
    CovarianceSummary out;
    out.std_errors = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    out.flagged.assign(static_cast<std::size_t>(k), true);
    out.condition_number = kInf;
    if (k == 0) {
        out.positive_definite = true;
        out.condition_number = 1.0;
        return out;
    }
    if (!hessian.allFinite()) return out;
    const Eigen::MatrixXd info = -0.5 * (hessian + hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    if (eig.info() != Eigen::Success) return out;
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const double lmax = lam.maxCoeff();
    const double floor = 1e-12 * std::max(lmax, std::numeric_limits<double>::min());
    std::fill(out.flagged.begin(), out.flagged.end(), false);
    out.std_errors.setZero();
    for (Eigen::Index d = 0; d < k; ++d) {
        const bool flat = lam[d] <= floor;
        const double l = std::max(lam[d], floor);
        for (Eigen::Index j = 0; j < k; ++j) {
            out.std_errors[j] += V(j, d) * V(j, d) / l;
            if (flat && V(j, d) * V(j, d) > 1e-6) out.flagged[static_cast<std::size_t>(j)] = true;
        }
    }
    out.std_errors = out.std_errors.cwiseSqrt();
    out.positive_definite = lam.minCoeff() > floor;
    out.condition_number = lam.minCoeff() > 0.0 ? lmax / lam.minCoeff() : kInf;
    return out;
}

}  // namespace znib
