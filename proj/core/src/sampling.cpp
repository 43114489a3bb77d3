#include "znib/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "znib/error.hpp"

namespace znib {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr double kSequentialPoissonLimit = 500.0;

}  // namespace

Sampler Sampler::for_stream(std::uint64_t seed, std::uint64_t index) {
    return Sampler(splitmix64(splitmix64(seed) ^ splitmix64(index + 1)));
}

double Sampler::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Sampler::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Sampler::poisson(double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ValidationError("poisson: rate must be finite and nonnegative");
    if (mu == 0.0) return 0;
    if (mu > kSequentialPoissonLimit) {
        std::poisson_distribution<int> dist(mu);
        return dist(engine_);
    }
    const double u = uniform();
    double term = std::exp(-mu);
    double cdf = term;
    int k = 0;
    while (u >= cdf && term > 0.0) {
        ++k;
        term *= mu / k;
        cdf += term;
    }
    return k;
}

int Sampler::from_cdf(std::span<const double> cdf) {
    if (cdf.empty()) throw ValidationError("from_cdf: empty table");
    const double u = uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<int>(it - cdf.begin());
    return std::min(idx, static_cast<int>(cdf.size()) - 1);
}

std::vector<double> cumulative(std::span<const double> pmf) {
    std::vector<double> out(pmf.size());
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        s += pmf[k];
        out[k] = s;
    }
    return out;
}

int Sampler::draw(const ZnibParams& params) {
    const auto pmf = znib_pmf_table(params);
    return from_cdf(cumulative(pmf));
}

int Sampler::draw(const ZnibbParams& params) {
    const auto pmf = znibb_pmf_table(params);
    return from_cdf(cumulative(pmf));
}

std::vector<int> Sampler::draw(const ZnimParams& params) {
    const auto components = znim_components(params);
    std::vector<double> weights;
    weights.reserve(components.size());
    for (const auto& c : components) weights.push_back(c.weight);
    const auto& chosen = components[static_cast<std::size_t>(from_cdf(cumulative(weights)))];

    const auto cdf = cumulative(chosen.p);
    if (!(cdf.back() > 0.0)) throw DegenerateInputError("znim sample: component has no probability mass");
    std::vector<int> counts(chosen.p.size(), 0);
    for (int t = 0; t < params.n_trials; ++t) ++counts[static_cast<std::size_t>(from_cdf(cdf))];
    return counts;
}

std::pair<int, int> Sampler::draw(const ZipPair& pair) {
    pair.validate();
    const int y1 = bernoulli(pair.q1) ? poisson(pair.mu1) : 0;
    const int y2 = bernoulli(pair.q2) ? poisson(pair.mu2) : 0;
    return {y1, y2};
}

std::vector<int> sample(const ZnibParams& params, std::size_t count, std::uint64_t seed) {
    Sampler rng(seed);
    const auto cdf = cumulative(znib_pmf_table(params));
    std::vector<int> out(count);
    for (auto& v : out) v = rng.from_cdf(cdf);
    return out;
}

std::vector<int> sample(const ZnibbParams& params, std::size_t count, std::uint64_t seed) {
    Sampler rng(seed);
    const auto cdf = cumulative(znibb_pmf_table(params));
    std::vector<int> out(count);
    for (auto& v : out) v = rng.from_cdf(cdf);
    return out;
}

std::vector<std::vector<int>> sample(const ZnimParams& params, std::size_t count, std::uint64_t seed) {
    Sampler rng(seed);
    std::vector<std::vector<int>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(rng.draw(params));
    return out;
}

std::vector<std::pair<int, int>> sample(const ZipPair& pair, std::size_t count, std::uint64_t seed) {
    Sampler rng(seed);
    std::vector<std::pair<int, int>> out(count);
    for (auto& v : out) v = rng.draw(pair);
    return out;
}

}  // namespace znib
