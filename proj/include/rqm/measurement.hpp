#ifndef RQM_MEASUREMENT_HPP
#define RQM_MEASUREMENT_HPP

#include "rqm/state.hpp"

namespace rqm {

enum class SmearingKind { sharp, gaussian, rectangular, custom };

// Spatial profile rho(|u|) of the detector acceptance around an outcome
// location.  weights holds rho on the offset lattice u_j = (j - n/2) dx;
// rho_hat holds the transform dx * sum_u rho(u) exp(-i d dp u) indexed by
// raw d = 0..n-1 (d = 0 is zero momentum transfer).  Factory-built kernels
// are square-normalized, dx * sum rho^2 = 1; the sharp kernel is the lattice
// delta (rho_hat identically one) and is not square-normalizable.
struct SmearingKernel {
    SmearingKind kind = SmearingKind::sharp;
    double delta_a = 0.0;
    GridSpec grid;
    Eigen::VectorXd weights;
    Eigen::VectorXd rho_hat;
};

SmearingKernel sharp_kernel(const GridSpec& g);
SmearingKernel gaussian_kernel(const GridSpec& g, double delta_a);
SmearingKernel rectangular_kernel(const GridSpec& g, double delta_a);

// Caller-supplied profile, used as given (no renormalization).  Must be
// nonnegative, even under u -> -u, and not identically zero.
SmearingKernel custom_kernel(const GridSpec& g, const Eigen::VectorXd& weights);

struct ReductionResult {
    Event outcome;
    SliceState state;   // post-measurement amplitudes, NOT normalized
    double weight = 0;  // squared Klein-Gordon norm of state
};

// Restricted-propagation reduction for a detection at event a.  The returned
// amplitudes satisfy exact lattice completeness: summing dx * state over all
// lattice outcome locations at fixed a.t reproduces the input propagated to
// a.t (times rho_hat[0] for smeared kernels).
ReductionResult sharp_reduce(const SliceState& s, const Event& a);
ReductionResult smeared_reduce(const SliceState& s, const SmearingKernel& k,
                               const Event& a);

// Momentum-space matrix of the reduction at outcome a (lattice-aligned a.x):
// amps_out = M * amps_in after free propagation to a.t.
Eigen::MatrixXcd reduction_matrix(const SmearingKernel& k, const Event& a);

// Sharp detection weight at every lattice outcome location on the state's
// own slice; entry j equals sharp_reduce(s, {s.t, position(j)}).weight.
Eigen::VectorXd sharp_weight_profile(const SliceState& s);

// Momentum-transfer spectrum of a smearing profile: the Fourier transform of
// the detector autocorrelation, Q(lambda_d) on the symmetric mode ladder.
struct QSpectrum {
    Eigen::VectorXd lambda;
    Eigen::VectorXd q;
    double total = 0.0;  // sum_d dp * q_d
};

QSpectrum q_spectrum(const SmearingKernel& k);

// Smallest momentum radius containing 99% of the Q spectrum, compared
// against the scale m/10 below which measurement cannot resolve Compton
// structure.
struct ComptonReport {
    double lambda_star = 0.0;
    double threshold = 0.0;
    double coverage = 0.99;
    bool satisfied = false;
};

ComptonReport compton_condition_report(const SmearingKernel& k);

}  // namespace rqm

#endif
