#ifndef RQM_TESTS_ORACLES_HPP
#define RQM_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>

namespace testsupport {

// Modified Bessel I0 by its ascending power series (entire function).
inline double bessel_i0_series(double x) {
    const double q = x * x / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Modified Bessel K0 by the ascending series
//   K0(x) = -(ln(x/2) + gamma) I0(x) + sum_k (x^2/4)^k / (k!)^2 * H_k.
// Accurate to ~1e-13 for x up to ~10; independent of any quadrature.
inline double bessel_k0_series(double x) {
    constexpr double kEulerGamma = 0.57721566490153286061;
    const double q = x * x / 4.0;
    double term = 1.0, harmonic = 0.0, sum = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        harmonic += 1.0 / static_cast<double>(k);
        sum += term * harmonic;
        if (term * harmonic < 1e-18 * (sum + 1.0)) break;
    }
    return -(std::log(x / 2.0) + kEulerGamma) * bessel_i0_series(x) + sum;
}

// Small deterministic generator for property tests (64-bit SplitMix).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    std::uint64_t state_;
};

}  // namespace testsupport

#endif
