#include "znib/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <thread>

#include "znib/error.hpp"
#include "znib/likelihood.hpp"
#include "znib/sampling.hpp"

namespace znib {

namespace {

Dataset simulate_with(const FitResult& fit, const Dataset& data, Sampler& rng) {
    const BoundModel model(fit.spec, data);
    const std::vector<RowLaw> laws = model.evaluate(fit.estimates);
    const bool bb = is_beta_binomial(fit.spec.family);
    double r1 = 0.0, r2 = 0.0;
    if (bb) std::tie(r1, r2) = model.shapes(fit.estimates);

    auto draw = [&](std::size_t i) {
        const RowLaw& law = laws[i];
        const double q0 = std::clamp(law.q0, 0.0, 1.0);
        const double qn = std::clamp(law.qN, 0.0, 1.0 - q0);
        if (bb) return rng.draw(ZnibbParams{{data.n[i], r1, r2}, q0, qn});
        return rng.draw(ZnibParams{data.n[i], law.p, q0, qn});
    };

    Dataset out;
    out.columns = data.columns;
    if (!data.grouped()) {
        out.y.resize(data.size());
        out.n = data.n;
        out.X = data.X;
        for (std::size_t i = 0; i < data.size(); ++i) out.y[i] = draw(i);
        return out;
    }
    std::vector<Eigen::Index> source;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double m = data.multiplicity[i];
        if (m != std::floor(m)) throw ValidationError("bootstrap: grouped multiplicities must be integers");
        std::map<int, double> counts;
        for (long long j = 0; j < static_cast<long long>(m); ++j) counts[draw(i)] += 1.0;
        for (const auto& [y, c] : counts) {
            out.y.push_back(y);
            out.n.push_back(data.n[i]);
            out.multiplicity.push_back(c);
            source.push_back(static_cast<Eigen::Index>(i));
        }
    }
    out.X.resize(static_cast<Eigen::Index>(source.size()), data.X.cols());
    for (std::size_t r = 0; r < source.size(); ++r) out.X.row(static_cast<Eigen::Index>(r)) = data.X.row(source[r]);
    return out;
}

}  // namespace

CovarianceSummary observed_info_se(const FitResult& fit, const Dataset& data) {
    const Likelihood lik(fit.spec, data);
    return covariance_summary(
        gradient_jacobian([&lik](const Eigen::VectorXd& v) { return lik.gradient(v); }, fit.estimates));
}

double predicted_proportion(const BoundModel& model, const Eigen::VectorXd& params, const Eigen::RowVectorXd& covariates) {
    const RowLaw law = model.law(params, model.predictor_at(params, covariates));
    return law.qN + (1.0 - law.q0 - law.qN) * law.p;
}

double empirical_quantile(std::vector<double>& values, double prob) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const auto m = static_cast<double>(values.size());
    const double rank = std::ceil(prob * m);
    const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, m - 1.0));
    return values[idx];
}

Dataset simulate_from_fit(const FitResult& fit, const Dataset& data, std::uint64_t seed) {
    Sampler rng(seed);
    return simulate_with(fit, data, rng);
}

Dataset simulate_from_fit(const FitResult& fit, const Dataset& data, Sampler& rng) { return simulate_with(fit, data, rng); }

BootstrapBands bootstrap_bands(const FitResult& fit, const Dataset& data, const BootstrapOptions& options) {
    if (options.replicates < 2) throw ValidationError("bootstrap: need at least two replicates");
    if (options.grid_points < 1) throw ValidationError("bootstrap: grid needs at least one point");
    if (!(options.level > 0.0 && options.level < 1.0)) throw ValidationError("bootstrap: level must lie in (0, 1)");
    if (fit.data_fingerprint != data.fingerprint()) throw ValidationError("bootstrap: fit was made on different data");

    BootstrapBands out;
    out.column = options.column;
    out.replicates = options.replicates;
    out.seed = options.seed;
    out.low_replicates = options.replicates < 50;

    std::vector<Eigen::RowVectorXd> rows;
    if (!options.column.empty()) {
        const auto col = data.X.col(data.column_index(options.column));
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        const int g = options.grid_points;
        for (int j = 0; j < g; ++j) {
            const double v = j == g - 1 ? hi : lo + (hi - lo) * j / (g - 1);
            out.grid.push_back(v);
            rows.push_back(data.grid_row(options.column, v));
        }
    } else {
        Eigen::RowVectorXd mean = data.X.rows() ? Eigen::RowVectorXd(data.X.colwise().mean())
                                                : Eigen::RowVectorXd(data.X.cols());
        out.grid.push_back(0.0);
        rows.push_back(mean);
    }

    const BoundModel model(fit.spec, data);
    for (const auto& r : rows) out.point.push_back(predicted_proportion(model, fit.estimates, r));

    const auto b = static_cast<std::size_t>(options.replicates);
    std::vector<std::optional<std::vector<double>>> curves(b);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < b; i = next++) {
            try {
                Sampler rng = Sampler::for_stream(options.seed, i);
                const Dataset sim = simulate_with(fit, data, rng);
                FitOptions fo;
                fo.start = fit.estimates;
                fo.standard_errors = false;
                const FitResult rf = fit_model(sim, fit.spec, fo);
                if (!rf.converged) continue;
                std::vector<double> c;
                for (const auto& r : rows) c.push_back(predicted_proportion(model, rf.estimates, r));
                curves[i] = std::move(c);
            } catch (const Error&) {
                // Counted as a failed replicate below.
            }
        }
    };
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(b));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    for (const auto& c : curves) (c ? out.succeeded : out.failed)++;
    out.unreliable = out.failed > 0.2 * options.replicates;
    const double tail = 0.5 * (1.0 - options.level);
    std::vector<double> column;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        column.clear();
        for (const auto& c : curves) {
            if (c) column.push_back((*c)[j]);
        }
        out.lower.push_back(empirical_quantile(column, tail));
        out.upper.push_back(empirical_quantile(column, 1.0 - tail));
    }
    return out;
}

ComparisonTable compare(const std::vector<FitResult>& fits) {
    if (fits.empty()) throw ValidationError("compare: no fits given");
    for (const auto& f : fits) {
        if (f.data_fingerprint != fits.front().data_fingerprint) {
            throw ValidationError("compare: fits were made on different datasets");
        }
    }
    ComparisonTable table;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const FitResult& f = fits[i];
        ComparisonRow row;
        row.label = f.spec.label();
        row.family = f.spec.family;
        row.names = f.names;
        row.estimates = f.estimates;
        row.std_errors = f.std_errors;
        row.loglik = f.loglik;
        row.aic = f.aic;
        row.n_params = f.n_params;
        row.converged = f.converged;
        row.input_index = i;
        table.rows.push_back(std::move(row));
    }
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) { return a.aic < b.aic; });
    for (auto& r : table.rows) r.delta_aic = r.aic - table.rows.front().aic;
    return table;
}

}  // namespace znib
