#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "znib/distributions.hpp"

namespace znib {

/// Seeded generator for every law in the library. Draws are a pure function of
/// the seed; one instance per thread.
class Sampler {
  public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for replicate `index` of a run seeded with `seed`.
    static Sampler for_stream(std::uint64_t seed, std::uint64_t index);

    /// Uniform on [0, 1) from the top 53 bits of the engine.
    double uniform();
    double normal();
    int poisson(double mu);
    bool bernoulli(double p) { return uniform() < p; }

    /// Inverse-cdf draw from an unnormalised cumulative table.
    int from_cdf(std::span<const double> cdf);

    int draw(const ZnibParams& params);
    int draw(const ZnibbParams& params);
    std::vector<int> draw(const ZnimParams& params);
    std::pair<int, int> draw(const ZipPair& pair);

  private:
    std::mt19937_64 engine_;
};

/// Cumulative table over 0..N for repeated inverse-cdf draws from one law.
std::vector<double> cumulative(std::span<const double> pmf);

std::vector<int> sample(const ZnibParams& params, std::size_t count, std::uint64_t seed);
std::vector<int> sample(const ZnibbParams& params, std::size_t count, std::uint64_t seed);
std::vector<std::vector<int>> sample(const ZnimParams& params, std::size_t count, std::uint64_t seed);
std::vector<std::pair<int, int>> sample(const ZipPair& pair, std::size_t count, std::uint64_t seed);

}  // namespace znib
