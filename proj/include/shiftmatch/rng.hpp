#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace shiftmatch {

namespace detail {
// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}  // namespace detail

// Derives an independent stream key from a master seed and a tag. Chaining
// calls derives sub-streams: derive_stream(derive_stream(s, a), b).
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t tag) {
    return detail::mix64((master + detail::kGolden) ^ detail::mix64(tag * detail::kGolden + 0x2545f4914f6cdd1dULL));
}
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_stream(derive_stream(master, a), b);
}

// Counter-based generator: output i is mix64(key + i*golden), so a stream is
// fully determined by its key and draws can be replayed from any offset.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

    // Uniform on [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box-Muller, cosine branch. Consumes exactly two uniforms per call.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double exponential(double rate) {
        if (rate <= 0) throw std::invalid_argument("exponential rate must be positive");
        return -std::log(uniform_pos()) / rate;
    }

    // Pareto with density mu*x^{-mu-1} on [1, inf).
    double pareto(double mu) {
        if (mu <= 0) throw std::invalid_argument("pareto exponent must be positive");
        return std::pow(uniform_pos(), -1.0 / mu);
    }

    // Marsaglia-Tsang for shape >= 1; rate parametrisation (mean = shape/rate).
    double gamma(double shape, double rate) {
        if (shape < 1.0 || rate <= 0) throw std::invalid_argument("gamma requires shape >= 1, rate > 0");
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0) continue;
            v = v * v * v;
            const double u = uniform_pos();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
        }
    }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace shiftmatch
