#ifndef COAG_RNG_HPP
#define COAG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace coag {

// Seedable 64-bit PRNG with inversion sampling only. The generator is pinned
// to std::mt19937_64 (bit-exact across platforms by the standard); none of the
// std::*_distribution classes are used, so streams are reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0,1) with 53 random bits
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Exp(rate) by inversion
    double exponential(double rate) {
        return -std::log1p(-uniform()) / rate;
    }

    // Exp(rate) conditioned on being < window; returns the sampled value.
    double truncated_exponential(double rate, double window) {
        const double p = -std::expm1(-rate * window);  // P(X < window)
        return -std::log1p(-uniform() * p) / rate;
    }

    // Poisson by chunked inversion: exact, deterministic, O(mean).
    std::int64_t poisson(double mean) {
        std::int64_t total = 0;
        while (mean > 32.0) {
            total += poisson_small(32.0);
            mean -= 32.0;
        }
        return total + poisson_small(mean);
    }

    // index distributed according to weights (need not be normalised)
    std::size_t categorical(std::span<const double> weights, double total_weight) {
        double u = uniform() * total_weight;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.empty() ? throw std::invalid_argument("categorical: empty weights")
                               : weights.size() - 1;
    }

private:
    std::int64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-mean), cum = p;
        std::int64_t k = 0;
        while (u > cum && k < 4096) {
            ++k;
            p *= mean / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    std::mt19937_64 gen_;
};

// Per-replica stream derivation; the scheme (seed XOR index) is part of the
// reproducibility contract.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return seed ^ index;
}

}  // namespace coag

#endif
