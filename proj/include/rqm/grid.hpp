#ifndef RQM_GRID_HPP
#define RQM_GRID_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "rqm/errors.hpp"

namespace rqm {

constexpr double kPi = 3.14159265358979323846;

// Periodic spatial lattice for one slice of 1+1-dimensional spacetime,
// natural units (hbar = c = 1).  Momentum modes are p_k = 2*pi*k/extent with
// integer k in the symmetric range [-n_modes/2, n_modes/2).  Amplitude
// vectors are stored in monotone momentum order, index i <-> k = i - n/2.
// Positions are x_j = (j - n/2)*dx, j in [0, n), spanning [-extent/2,
// extent/2).
struct GridSpec {
    std::size_t n_modes = 0;
    double extent = 0.0;
    double mass = 1.0;
    double band_limit = 0.0;  // defaults to the Nyquist momentum pi/dx

    GridSpec() = default;

    GridSpec(std::size_t n, double ext, double m = 1.0, double band = 0.0)
        : n_modes(n), extent(ext), mass(m), band_limit(band) {
        if (n_modes == 0 || n_modes % 2 != 0)
            throw precondition_error("grid: n_modes must be positive and even");
        if (!(extent > 0.0))
            throw precondition_error("grid: extent must be positive");
        if (!(mass > 0.0))
            throw precondition_error("grid: mass must be positive");
        double nyquist = kPi / dx();
        if (band_limit == 0.0) band_limit = nyquist;
        if (band_limit > nyquist * (1.0 + 1e-12))
            throw precondition_error(
                "grid: band_limit exceeds the lattice Nyquist momentum");
        if (!(band_limit > 0.0))
            throw precondition_error("grid: band_limit must be positive");
    }

    double dx() const { return extent / static_cast<double>(n_modes); }
    double dp() const { return 2.0 * kPi / extent; }
    double compton_length() const { return 1.0 / mass; }

    // integer mode number for storage index i
    long mode_number(std::size_t i) const {
        return static_cast<long>(i) - static_cast<long>(n_modes / 2);
    }
    double momentum(std::size_t i) const {
        return dp() * static_cast<double>(mode_number(i));
    }
    double energy(std::size_t i) const {
        double p = momentum(i);
        return std::sqrt(p * p + mass * mass);
    }
    double position(std::size_t j) const {
        return dx() * (static_cast<double>(j) - static_cast<double>(n_modes) / 2.0);
    }

    std::vector<double> momenta() const {
        std::vector<double> p(n_modes);
        for (std::size_t i = 0; i < n_modes; ++i) p[i] = momentum(i);
        return p;
    }
    std::vector<double> energies() const {
        std::vector<double> e(n_modes);
        for (std::size_t i = 0; i < n_modes; ++i) e[i] = energy(i);
        return e;
    }

    // shortest signed displacement from a to b on the periodic box
    double min_image(double d) const {
        double L = extent;
        d = std::fmod(d, L);
        if (d < -L / 2.0) d += L;
        if (d >= L / 2.0) d -= L;
        return d;
    }

    bool same_as(const GridSpec& o) const {
        return n_modes == o.n_modes && extent == o.extent && mass == o.mass &&
               band_limit == o.band_limit;
    }
};

// A spacetime point (t, x) used as a measurement outcome location.
struct Event {
    double t = 0.0;
    double x = 0.0;
};

// Size of the wrap-around (periodic image) contamination for data whose
// support stays within |x| <= reach: the nearest image sits a distance
// extent - 2*reach away and positive-frequency tails decay like exp(-m r).
inline double wrap_suppression_estimate(const GridSpec& g, double reach) {
    double gap = g.extent - 2.0 * reach;
    if (gap <= 0.0) return 1.0;
    return std::exp(-g.mass * gap);
}

}  // namespace rqm

#endif
