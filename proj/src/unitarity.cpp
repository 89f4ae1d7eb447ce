#include "rqm/unitarity.hpp"

#include <cmath>
#include <vector>

#include "rqm/errors.hpp"
#include "rqm/parallel.hpp"

namespace rqm {

DefectReport gram_defect(const SmearingKernel& k, double band,
                         unsigned n_threads, std::size_t n_limit) {
    const GridSpec& g = k.grid;
    const std::size_t n = g.n_modes;
    if (n > n_limit) {
        throw precondition_error(
            "gram assembly refused: n_modes exceeds the n^3 cost limit");
    }
    if (!(band > 0.0)) throw precondition_error("band must be positive");
    // M(a) = P(a) M(0) P(a)^dagger with P(a) the diagonal translation
    // phases, which is exactly how reduction_matrix builds each outcome's
    // matrix; so M(a)^dagger M(a) = P(a) H P(a)^dagger with H = M0^dag M0.
    const Eigen::MatrixXcd m0 = reduction_matrix(k, Event{0.0, 0.0});
    const Eigen::MatrixXcd h = m0.adjoint() * m0;

    const std::size_t chunk = std::max<std::size_t>(8, n / 32);
    const std::size_t slots = chunk_count(n, chunk);
    std::vector<Eigen::MatrixXcd> partial(slots);
    for_chunks(n, chunk, n_threads,
               [&](std::size_t c, std::size_t b, std::size_t e) {
                   Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
                   Eigen::VectorXcd ph(n);
                   for (std::size_t a = b; a < e; ++a) {
                       const double ax = g.position(a);
                       for (std::size_t i = 0; i < n; ++i) {
                           const double t = -g.momentum(i) * ax;
                           ph[i] = cplx(std::cos(t), std::sin(t));
                       }
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < n; ++j) {
                               acc(i, j) += ph[i] * h(i, j) * std::conj(ph[j]);
                           }
                       }
                   }
                   partial[c] = std::move(acc);
               });
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t c = 0; c < slots; ++c) gram += partial[c];
    gram *= g.dx();

    DefectReport rep;
    rep.grid = g;
    rep.band = band;
    rep.defect = Eigen::VectorXd::Zero(n);
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rep.defect[i] = gram(i, i).real() - 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) off = std::max(off, std::abs(gram(i, j)));
        }
        off = std::max(off, std::abs(gram(i, i).imag()));
    }
    rep.max_offdiag = off;
    // translation invariance of the outcome family makes G diagonal; that is
    // checked here, not assumed
    if (off > 1e-9) {
        throw NumericError("gram operator is not diagonal in the mode basis",
                           off);
    }
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(g.momentum(i)) <= band * (1.0 + 1e-12)) {
            mx = std::max(mx, rep.defect[i]);
        }
    }
    rep.max_defect_in_band = mx;
    rep.defect_at_zero = rep.defect[n / 2];
    return rep;
}

OutcomeDistribution outcome_distribution(const SliceState& s,
                                         const SmearingKernel& k, double t_meas,
                                         unsigned n_threads) {
    const GridSpec& g = s.grid;
    if (!g.same_as(k.grid)) throw precondition_error("grid mismatch");
    const std::size_t n = g.n_modes;
    const SliceState phi = propagate(s, t_meas - s.t);
    OutcomeDistribution out;
    out.x = Eigen::VectorXd::Zero(n);
    out.weight = Eigen::VectorXd::Zero(n);
    const std::size_t chunk = std::max<std::size_t>(8, n / 32);
    for_chunks(n, chunk, n_threads,
               [&](std::size_t, std::size_t b, std::size_t e) {
                   for (std::size_t a = b; a < e; ++a) {
                       const Event ev{t_meas, g.position(a)};
                       const auto r = smeared_reduce(phi, k, ev);
                       out.x[a] = ev.x;
                       out.weight[a] = r.weight;
                   }
               });
    double tot = 0.0;
    for (std::size_t a = 0; a < n; ++a) tot += out.weight[a];
    out.total = tot * g.dx();
    return out;
}

NonselectiveState nonselective_state(const SliceState& s,
                                     const SmearingKernel& k, double t_meas,
                                     unsigned n_threads) {
    const GridSpec& g = s.grid;
    if (!g.same_as(k.grid)) throw precondition_error("grid mismatch");
    const std::size_t n = g.n_modes;
    const SliceState phi = propagate(s, t_meas - s.t);
    const std::size_t chunk = std::max<std::size_t>(8, n / 32);
    const std::size_t slots = chunk_count(n, chunk);
    std::vector<Eigen::MatrixXcd> partial(slots);
    for_chunks(n, chunk, n_threads,
               [&](std::size_t c, std::size_t b, std::size_t e) {
                   Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
                   for (std::size_t a = b; a < e; ++a) {
                       const Event ev{t_meas, g.position(a)};
                       const auto r = smeared_reduce(phi, k, ev);
                       acc.noalias() += r.state.amps * r.state.amps.adjoint();
                   }
                   partial[c] = std::move(acc);
               });
    NonselectiveState out;
    out.grid = g;
    out.t = t_meas;
    out.rho = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t c = 0; c < slots; ++c) out.rho += partial[c];
    out.rho *= g.dx();
    out.trace = out.rho.trace().real();
    return out;
}

}  // namespace rqm
