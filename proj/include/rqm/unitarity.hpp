#ifndef RQM_UNITARITY_HPP
#define RQM_UNITARITY_HPP

#include "rqm/measurement.hpp"

namespace rqm {

// Gram operator of the reduction family: G = dx * sum_a M(a)^dagger M(a)
// over all lattice outcome locations a.  Generalized unitarity would be
// G = identity; defect holds diag(G) - 1 on the symmetric mode ladder.
struct DefectReport {
    GridSpec grid;
    double band = 0.0;             // momentum window the summary is taken over
    Eigen::VectorXd defect;        // G_kk - 1 per mode
    double max_offdiag = 0.0;      // largest |G_kj|, k != j (roundoff scale)
    double max_defect_in_band = 0.0;
    double defect_at_zero = 0.0;
};

// n_limit guards the O(n^3) assembly; grids beyond it are refused.
DefectReport gram_defect(const SmearingKernel& k, double band,
                         unsigned n_threads = 1, std::size_t n_limit = 768);

// Detection weight per lattice outcome location for a state measured at
// time t_meas; total = dx * sum of weights.
struct OutcomeDistribution {
    Eigen::VectorXd x;
    Eigen::VectorXd weight;
    double total = 0.0;
};

OutcomeDistribution outcome_distribution(const SliceState& s,
                                         const SmearingKernel& k, double t_meas,
                                         unsigned n_threads = 1);

// Outcome-summed (nonselective) density operator in the amplitude basis:
// rho = dx * sum_a |state_a><state_a|.
struct NonselectiveState {
    GridSpec grid;
    double t = 0.0;
    Eigen::MatrixXcd rho;
    double trace = 0.0;
};

NonselectiveState nonselective_state(const SliceState& s,
                                     const SmearingKernel& k, double t_meas,
                                     unsigned n_threads = 1);

}  // namespace rqm

#endif
