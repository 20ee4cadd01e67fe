#ifndef EVGRID_COMMON_HPP
#define EVGRID_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace evgrid {

enum class errc {
    validation,
    path_explosion,
    budget_exceeded,
    unsupported_pricing,
    no_convergence,
    domain,
    io,
};

struct error : std::runtime_error {
    errc code;
    error(errc c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::validation: return "validation";
        case errc::path_explosion: return "path_explosion";
        case errc::budget_exceeded: return "budget_exceeded";
        case errc::unsupported_pricing: return "unsupported_pricing";
        case errc::no_convergence: return "no_convergence";
        case errc::domain: return "domain";
        case errc::io: return "io";
    }
    return "unknown";
}

inline bool approx_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// SplitMix64; used to derive independent substreams from one user seed so
// results are independent of worker count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    // 53-bit mantissa draw; avoids distribution state for reproducibility
    const double u = (rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    // unbiased rejection sampling
    const std::uint64_t limit = n * (std::numeric_limits<std::uint64_t>::max() / n);
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

// Stateless Box-Muller draw (no cached spare, unlike std::normal_distribution).
inline double normal_draw(std::mt19937_64& rng, double mean, double stddev) {
    double u1 = uniform_real(rng, 0.0, 1.0);
    while (u1 <= 0.0) u1 = uniform_real(rng, 0.0, 1.0);
    const double u2 = uniform_real(rng, 0.0, 1.0);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    return mean + stddev * z;
}

int worker_count();  // EVGRID_WORKERS env var, else hardware concurrency

// Runs fn(i) for i in [0, n); partitioning never affects results because
// tasks write to disjoint slots keyed by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::string format_g(double v, int significant = 12);

}  // namespace evgrid

#endif
