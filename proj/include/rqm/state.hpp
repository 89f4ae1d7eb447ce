#ifndef RQM_STATE_HPP
#define RQM_STATE_HPP

#include <Eigen/Dense>
#include <complex>

#include "rqm/grid.hpp"

namespace rqm {

using cplx = std::complex<double>;

constexpr cplx kI{0.0, 1.0};

// One-particle positive-frequency state on a time slice.  `amps` holds one
// complex amplitude per momentum mode (monotone momentum order); the
// position-space field on the slice is
//
//     phi(x) = sum_k amps[k] * exp(i p_k x) / sqrt(2 E_k extent).
//
// With this normalization the Klein-Gordon inner product
// i * integral dx (conj(phi1) d0 phi2 - d0(conj(phi1)) phi2) reduces to the
// plain l2 product of the amplitude vectors, and free evolution is the exact
// diagonal phase exp(-i E_k dt).  States are positive-frequency by
// construction; no negative-energy components can be represented.
struct SliceState {
    GridSpec grid;
    double t = 0.0;
    Eigen::VectorXcd amps;

    SliceState() = default;
    SliceState(const GridSpec& g, double time)
        : grid(g), t(time), amps(Eigen::VectorXcd::Zero(g.n_modes)) {}
};

// l2 = Klein-Gordon product; conjugation on the first argument.
cplx kg_inner_product(const SliceState& s1, const SliceState& s2);
double kg_norm(const SliceState& s);

// Exact free evolution by any real dt (negative dt runs backward).
SliceState propagate(const SliceState& s, double dt);

// Tabulated position field phi(x_j) on the slice, and its exact time
// derivative (each mode carries d0 -> -i E_k).
Eigen::VectorXcd position_field(const SliceState& s);
Eigen::VectorXcd time_derivative_field(const SliceState& s);

// Inverse of position_field (exact DFT round trip for in-band data).
SliceState from_position_field(const GridSpec& g, double t,
                               const Eigen::VectorXcd& field);

// Field value and exact time derivative at one (possibly off-lattice) point.
void field_at(const SliceState& s, double x, cplx* value, cplx* d0_value);

// Normalized Gaussian wave packet: amps_k ~ exp(-(p_k-p0)^2 sigma^2 / 2)
// * exp(-i p_k x0), scaled so kg_norm == 1.  Requires |p0| + 3/sigma within
// the grid band limit and sigma >= 2 dx.
SliceState make_gaussian_packet(const GridSpec& g, double x0, double p0,
                                double sigma, double t = 0.0);

// Spatial shift by d: phi(x) -> phi(x - d).
SliceState translate(const SliceState& s, double d);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

}  // namespace rqm

#endif
