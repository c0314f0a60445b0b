#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tabaug::rng {

// splitmix64 step. Used both as a stand-alone mixer and to derive seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic seed derivation: chains the arguments through splitmix64.
// derive(s, a) != derive(s, b) for a != b with overwhelming probability,
// and the resulting streams are statistically independent.
std::uint64_t derive(std::uint64_t seed, std::uint64_t a);
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Tag-based derivation for named sub-streams ("disc", "gen", ...).
std::uint64_t derive_tag(std::uint64_t seed, std::string_view tag);

// Standard-normal helpers. norm_quantile is Wichura's AS241 (PPND16),
// accurate to ~1e-15; norm_cdf goes through erfc.
double norm_cdf(double z);
double norm_pdf(double z);
double norm_quantile(double p);

// Deterministic RNG. The engine (mt19937_64) is pinned by the C++ standard
// and the distributions below are implemented here, so identical seeds give
// identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, n), unbiased (rejection). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via inverse CDF.
    double normal() { return norm_quantile(std::max(uniform(), 0x1.0p-60)); }
    double normal(double mu, double sd) { return mu + sd * normal(); }

    // Normal truncated to [lo, hi] via inverse-CDF; exact bounds, no rejection
    // loop. Degenerate sd <= 0 returns mu clamped into the interval.
    double trunc_normal(double mu, double sd, double lo, double hi);

private:
    std::mt19937_64 engine_;
};

}  // namespace tabaug::rng
