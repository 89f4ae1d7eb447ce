#ifndef RQM_PROPAGATOR_HPP
#define RQM_PROPAGATOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "rqm/state.hpp"

namespace rqm {

// Three independent evaluation routes for the positive-frequency kernel
//
//     K(dt, u) = sum_k exp(-i E_k dt + i p_k u) / (2 E_k extent)
//
// (spectral: the band-limited lattice sum; proper_time: Schwinger-parameter
// quadrature; oracle: equal-time analytic quadrature).  Tabulated kernels are
// indexed by lattice separation u_j = (j - n/2) dx, same layout as positions.
enum class KernelRoute { spectral, proper_time, oracle };

struct PropagatorKernel {
    GridSpec grid;
    double dt = 0.0;
    KernelRoute route = KernelRoute::spectral;
    Eigen::VectorXcd values;
    Eigen::VectorXcd dvalues;  // d/d(dt); zero when the route cannot supply it
    bool has_dvalues = false;
};

PropagatorKernel spectral_kernel(const GridSpec& g, double dt);

// Band-limited mode sum at an arbitrary (possibly off-lattice) separation.
cplx spectral_kernel_value(const GridSpec& g, double dt, double u);

struct KernelEstimate {
    cplx value{0.0, 0.0};
    double error = 0.0;  // achieved error estimate
};

// Continuum kernel at (dt, u): mode sum plus the |p| > band tail, the latter
// evaluated by rotating the momentum contour into the damped half plane.
// Requires the evaluation point to sit away from the light cone relative to
// the band edge (no stationary phase inside the tail).
KernelEstimate continuum_spectral_kernel(const GridSpec& g, double dt, double u);

// Polynomial extrapolation of tail-corrected mode sums over a refinement
// ladder of mode counts at fixed extent.
KernelEstimate continuum_kernel_estimate(const std::vector<std::size_t>& n_modes,
                                         double extent, double mass, double dt,
                                         double u);

// Fixed-rule Schwinger-parameter quadrature: Gauss-Legendre panels on
// subintervals sized so that neither phase (mass^2 tau nor s^2/4tau) turns
// more than a bounded angle per panel; epsilon damps the large-tau end.
struct ProperTimeQuadrature {
    double epsilon = 0.01;
    double tau_max = 2500.0;
    std::size_t n_tau = 24;  // nodes per subinterval
    std::string scheme = "gauss_legendre_geometric";

    ProperTimeQuadrature(double eps, double tmax, std::size_t n = 24);
};

// Free kernel of d_tau K = -i (d_t^2 - d_x^2) K with K -> delta^2 as tau->0:
// K_tau(dt, dx) = exp(-i (dt^2 - dx^2) / (4 tau)) / (4 pi tau).
cplx proper_time_gaussian_kernel(double tau, double dt, double dx);

// integral_0^tau_max dtau exp(-i (m^2 - i eps) tau) K_tau(dt, dx), with the
// rapidly oscillating tau -> 0 head handled by an asymptotic series.
KernelEstimate proper_time_kernel_value(double dt, double dx,
                                        const ProperTimeQuadrature& q,
                                        double mass);

// eps -> 0 polynomial extrapolation over eps in {0.02, 0.01, 0.005}.
KernelEstimate proper_time_kernel_extrapolated(double dt, double dx, double mass,
                                               double tol = 2e-4);

PropagatorKernel proper_time_kernel(const GridSpec& g, double dt,
                                    double tol = 2e-4);

// Conversion between the proper-time and spectral normalizations, matched
// once at the reference point (dt = 5, dx = 0, mass = 1) and frozen; the
// routes as implemented coincide there, so the factor is exactly one.
inline constexpr double kRouteConventionFactor = 1.0;

// Equal-time continuum kernel (1/2pi) integral_0^inf cos(p r)/sqrt(p^2+m^2) dp,
// evaluated to ~1e-11 relative error via its non-oscillatory exponential
// representation (1/2pi) integral_0^inf exp(-m r cosh(theta)) dtheta.
double equal_time_oracle(double r, double mass);

PropagatorKernel oracle_kernel(const GridSpec& g);

// Klein-Gordon contraction of a tabulated kernel with a state: free
// evolution by the kernel's dt.  Needs the kernel's time-derivative table.
SliceState apply_kernel(const PropagatorKernel& k, const SliceState& s);

// Klein-Gordon composition over a full intermediate slice; the result holds
// value tables only (no derivative tables).
PropagatorKernel kg_compose(const PropagatorKernel& later,
                            const PropagatorKernel& earlier);

struct DecayFit {
    double decay_length = 0.0;
    double r2 = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares fit of log(magnitude) vs r; decay_length = -1/slope.
DecayFit fit_decay_length(const std::vector<double>& r,
                          const std::vector<double>& magnitude);

}  // namespace rqm

#endif
