#include <algorithm>
#include <cmath>

#include "znib/distributions.hpp"
#include "znib_cli/cli.hpp"

namespace znib::cli {

namespace {

struct Grid {
    std::vector<double> mu1, mu2, q1, q2;
    std::vector<int> n;
};

Grid grid(bool small) {
    if (small) return {{0.5, 3.0}, {1.0, 4.0}, {0.3, 1.0}, {0.6}, {2, 9, 20}};
    return {{0.3, 1.0, 2.5, 7.0}, {0.5, 1.5, 4.0}, {0.2, 0.6, 1.0}, {0.35, 0.9}, {1, 4, 12, 30}};
}

template <class F>
void each_pair(const Grid& g, F&& f) {
    for (double a : g.mu1)
        for (double b : g.mu2)
            for (double c : g.q1)
                for (double d : g.q2)
                    for (int n : g.n) f(ZipPair{a, c, b, d}, n);
}

ZnibParams perturbed(ZnibParams x, bool fault) {
    if (fault) x.q0 = std::min(x.q0 + 1e-6, 1.0 - x.qN);
    return x;
}

double enum_central(const std::vector<double>& pmf, int j) {
    double mean = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) mean += static_cast<double>(k) * pmf[k];
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) s += std::pow(static_cast<double>(k) - mean, j) * pmf[k];
    return j == 1 ? mean : s;
}

}  // namespace

std::vector<SuiteResult> verify_suites(bool small_grid, bool fault) {
    const Grid g = grid(small_grid);
    SuiteResult cond{"conditioning", 0, 0.0, 1e-12};
    SuiteResult norm{"normalization", 0, 0.0, 1e-12};
    SuiteResult mom{"moments", 0, 0.0, 1e-10};
    SuiteResult refl{"reflection", 0, 0.0, 1e-13};
    SuiteResult sym{"symmetry", 0, 0.0, 1e-13};

    each_pair(g, [&](const ZipPair& pair, int n) {
        const ZnibParams law = zip_condition(pair, n);
        const ZnibParams tested = perturbed(law, fault);
        const std::vector<double> oracle = conditional_oracle(pair, n);
        double total = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double pk = znib_pmf(k, tested);
            cond.max_discrepancy = std::max(cond.max_discrepancy, std::abs(pk - oracle[static_cast<std::size_t>(k)]));
            total += pk;
            const double r = znib_pmf(k, perturbed(reflect(law), fault));
            refl.max_discrepancy = std::max(refl.max_discrepancy, std::abs(r - znib_pmf(n - k, law)));
        }
        norm.max_discrepancy = std::max(norm.max_discrepancy, std::abs(total - 1.0));

        const Moments m = znib_moments(tested);
        mom.max_discrepancy = std::max(mom.max_discrepancy, std::abs(m.mean - enum_central(oracle, 1)));
        mom.max_discrepancy = std::max(mom.max_discrepancy, std::abs(m.variance - enum_central(oracle, 2)));
        for (int j = 2; j <= 4; ++j) {
            mom.max_discrepancy =
                std::max(mom.max_discrepancy, std::abs(znib_central_moment(j, tested) - enum_central(oracle, j)));
        }

        // Equal inflation weights and p = 1/2 give a pmf symmetric about n/2.
        const double q = 0.5 * (law.q0 + law.qN);
        const ZnibParams even{n, 0.5, q, q};
        const ZnibParams tested_even = perturbed(even, fault);
        for (int k = 0; k <= n; ++k) {
            sym.max_discrepancy =
                std::max(sym.max_discrepancy, std::abs(znib_pmf(k, tested_even) - znib_pmf(n - k, tested_even)));
        }

        const ZnibbParams bb{{n, 1.0 + pair.mu1, 1.0 + pair.mu2}, law.q0, law.qN};
        double bb_total = 0.0;
        for (double v : znibb_pmf_table(bb)) bb_total += v;
        norm.max_discrepancy = std::max(norm.max_discrepancy, std::abs(bb_total - 1.0));

        ++cond.cases;
        ++norm.cases;
        ++mom.cases;
        ++refl.cases;
        ++sym.cases;
    });
    return {cond, norm, mom, refl, sym};
}

}  // namespace znib::cli
