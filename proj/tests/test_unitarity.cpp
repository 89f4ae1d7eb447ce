#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "rqm/errors.hpp"
#include "rqm/unitarity.hpp"
#include "support/oracles.hpp"

using namespace rqm;
using testsupport::Rng;

namespace {

SliceState random_state(const GridSpec& g, Rng& rng, double band_frac = 0.5) {
    SliceState s(g, 0.0);
    for (std::size_t i = 0; i < g.n_modes; ++i) {
        if (std::abs(g.momentum(i)) > band_frac * kPi / g.dx()) continue;
        s.amps[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    }
    s.amps /= s.amps.norm();
    return s;
}

std::size_t nearest_mode(const GridSpec& g, double p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.n_modes; ++i) {
        if (std::abs(g.momentum(i) - p) < std::abs(g.momentum(best) - p)) {
            best = i;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("gram operator is diagonal with nonnegative defect") {
    GridSpec g(64, 80.0);
    const DefectReport rep = gram_defect(gaussian_kernel(g, 2.0), 0.5);
    CHECK(rep.max_offdiag < 1e-9);
    CHECK(rep.defect.minCoeff() > -1e-10);
    CHECK(rep.defect_at_zero == rep.defect[g.n_modes / 2]);
    // parity: the defect is even in momentum
    for (std::size_t d = 1; d < g.n_modes / 2; ++d) {
        CHECK(std::abs(rep.defect[g.n_modes / 2 + d] -
                       rep.defect[g.n_modes / 2 - d]) < 1e-9);
    }
}

TEST_CASE("sub-lattice detector width behaves like a sharp detector") {
    GridSpec g(64, 25.0);
    const DefectReport rep = gram_defect(gaussian_kernel(g, 0.1), 0.5);
    CHECK(rep.defect_at_zero > 0.1);
    CHECK(rep.max_defect_in_band > 0.1);
}

TEST_CASE("defect shrinks as the detector width grows") {
    GridSpec g(64, 80.0);
    double prev = 1e300;
    for (double da : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        const DefectReport rep = gram_defect(gaussian_kernel(g, da), 0.5);
        CHECK(rep.max_defect_in_band <= prev * (1.0 + 1e-9) + 1e-12);
        prev = rep.max_defect_in_band;
    }
    CHECK(prev < 1e-3);  // ten compton lengths restores near-unitarity
}

TEST_CASE("sub-compton widths leave high-momentum modes nearly unitary") {
    // the probe sits at three inverse widths, far up the dispersion curve
    GridSpec g(128, 12.5);
    const DefectReport rep = gram_defect(gaussian_kernel(g, 0.1), 31.0);
    const std::size_t hi = nearest_mode(g, 30.0);
    CHECK(rep.defect[hi] < 0.1 * rep.defect_at_zero);
    CHECK(rep.defect_at_zero > 0.1);
}

TEST_CASE("outcome totals match the gram diagonal prediction") {
    GridSpec g(64, 80.0);
    const SliceState s = make_gaussian_packet(g, -5.0, 0.3, 10.0);
    const SmearingKernel k = gaussian_kernel(g, 2.0);
    const double t_meas = 1.0;
    const OutcomeDistribution dist = outcome_distribution(s, k, t_meas);
    CHECK(dist.x.size() == 64);
    CHECK(dist.weight.minCoeff() >= 0.0);
    const DefectReport rep = gram_defect(k, 0.8);
    double predicted = 1.0;
    for (std::size_t i = 0; i < g.n_modes; ++i) {
        predicted += rep.defect[i] * std::norm(s.amps[i]);
    }
    CHECK(dist.total == doctest::Approx(predicted).epsilon(1e-9));
    CHECK(dist.total >= 1.0 - 1e-12);
}

TEST_CASE("narrow detectors disturb slow packets more than fast ones") {
    GridSpec g(128, 25.0);
    const SmearingKernel k = gaussian_kernel(g, 0.3);
    const SliceState slow = make_gaussian_packet(g, 0.0, 0.0, 2.0);
    const SliceState fast = make_gaussian_packet(g, 0.0, 10.0, 2.0);
    const double ex_slow = outcome_distribution(slow, k, 0.5).total - 1.0;
    const double ex_fast = outcome_distribution(fast, k, 0.5).total - 1.0;
    CHECK(ex_slow > 0.0);
    CHECK(ex_fast > 0.0);
    CHECK(ex_slow > 3.0 * ex_fast);
}

TEST_CASE("uniform detector acceptance reduces to a pure projected state") {
    GridSpec g(64, 80.0);
    Rng rng(101);
    const SliceState s = random_state(g, rng);
    const Eigen::VectorXd flat =
        Eigen::VectorXd::Constant(g.n_modes, 1.0 / std::sqrt(g.extent));
    const SmearingKernel k = custom_kernel(g, flat);
    const double t_meas = 2.5;
    const NonselectiveState ns = nonselective_state(s, k, t_meas);
    const SliceState phi = propagate(s, t_meas);
    const Eigen::MatrixXcd expect = phi.amps * phi.amps.adjoint();
    CHECK((ns.rho - expect).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(ns.trace == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(ns.t == doctest::Approx(t_meas));
}

TEST_CASE("outcome-summed state is hermitian and positive") {
    GridSpec g(64, 80.0);
    Rng rng(113);
    const SliceState s = random_state(g, rng);
    const SmearingKernel k = gaussian_kernel(g, 2.0);
    const NonselectiveState ns = nonselective_state(s, k, 1.5);
    CHECK((ns.rho - ns.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ns.rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    const OutcomeDistribution dist = outcome_distribution(s, k, 1.5);
    CHECK(ns.trace == doctest::Approx(dist.total).epsilon(1e-10));
}

TEST_CASE("results are independent of the thread count") {
    GridSpec g(128, 25.0);
    const SmearingKernel k = gaussian_kernel(g, 0.4);
    const DefectReport d1 = gram_defect(k, 8.0, 1);
    const DefectReport d4 = gram_defect(k, 8.0, 4);
    CHECK((d1.defect - d4.defect).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d1.max_defect_in_band == d4.max_defect_in_band);

    const SliceState s = make_gaussian_packet(g, 1.0, 0.5, 3.0);
    const OutcomeDistribution o1 = outcome_distribution(s, k, 0.7, 1);
    const OutcomeDistribution o4 = outcome_distribution(s, k, 0.7, 4);
    CHECK((o1.weight - o4.weight).cwiseAbs().maxCoeff() == 0.0);
    CHECK(o1.total == o4.total);

    const NonselectiveState n1 = nonselective_state(s, k, 0.7, 1);
    const NonselectiveState n4 = nonselective_state(s, k, 0.7, 4);
    CHECK((n1.rho - n4.rho).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unitarity input validation") {
    GridSpec g(64, 80.0);
    const SmearingKernel k = gaussian_kernel(g, 1.0);
    CHECK_THROWS_AS(gram_defect(k, 0.5, 1, 32), Error);
    CHECK_THROWS_AS(gram_defect(k, -1.0), Error);

    GridSpec other(32, 80.0);
    Rng rng(9);
    const SliceState s = random_state(other, rng);
    CHECK_THROWS_AS(outcome_distribution(s, k, 1.0), Error);
    CHECK_THROWS_AS(nonselective_state(s, k, 1.0), Error);
}
