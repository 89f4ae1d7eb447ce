#include "rqm/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rqm/errors.hpp"

namespace rqm {

namespace {

// dx * sum_u rho(u) exp(-i d dp u); imaginary parts cancel exactly for even
// tables, so only the real part is kept (checked).
Eigen::VectorXd transform_weights(const GridSpec& g, const Eigen::VectorXd& w) {
    const std::size_t n = g.n_modes;
    Eigen::VectorXd out(n);
    const double scale = g.dx() * w.cwiseAbs().sum() + 1e-300;
    for (std::size_t d = 0; d < n; ++d) {
        const double pd = g.dp() * static_cast<double>(d);
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ph = pd * g.position(j);
            re += w[j] * std::cos(ph);
            im -= w[j] * std::sin(ph);
        }
        if (std::abs(im) * g.dx() > 1e-9 * scale) {
            throw precondition_error(
                "smearing profile transform is not real; profile must be even");
        }
        out[d] = re * g.dx();
    }
    return out;
}

void check_even(const GridSpec& g, const Eigen::VectorXd& w) {
    const std::size_t n = g.n_modes;
    if (static_cast<std::size_t>(w.size()) != n) {
        throw precondition_error("smearing profile size does not match grid");
    }
    double top = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(w[j]) || w[j] < 0.0) {
            throw precondition_error(
                "smearing profile must be finite and nonnegative");
        }
        top = std::max(top, w[j]);
    }
    if (top == 0.0) {
        throw precondition_error("smearing profile must not vanish identically");
    }
    for (std::size_t j = 1; j < n; ++j) {
        if (std::abs(w[j] - w[n - j]) > 1e-12 * top) {
            throw precondition_error("smearing profile must be even in u");
        }
    }
}

void normalize_square(const GridSpec& g, Eigen::VectorXd& w) {
    const double s = g.dx() * w.squaredNorm();
    w /= std::sqrt(s);
}

std::size_t lattice_site(const GridSpec& g, double x) {
    const double f = x / g.dx() + static_cast<double>(g.n_modes) / 2.0;
    const double r = std::round(f);
    if (std::abs(f - r) > 1e-9) {
        throw precondition_error(
            "outcome location must lie on the slice lattice");
    }
    const long n = static_cast<long>(g.n_modes);
    long j = static_cast<long>(r) % n;
    if (j < 0) j += n;
    return static_cast<std::size_t>(j);
}

}  // namespace

SmearingKernel sharp_kernel(const GridSpec& g) {
    SmearingKernel k;
    k.kind = SmearingKind::sharp;
    k.delta_a = 0.0;
    k.grid = g;
    k.weights = Eigen::VectorXd::Zero(g.n_modes);
    k.weights[g.n_modes / 2] = 1.0 / g.dx();
    k.rho_hat = Eigen::VectorXd::Ones(g.n_modes);
    return k;
}

SmearingKernel gaussian_kernel(const GridSpec& g, double delta_a) {
    if (!(delta_a > 0.0)) {
        throw precondition_error("measurement error delta_a must be positive");
    }
    if (delta_a > g.extent / 8.0) {
        throw precondition_error(
            "measurement error delta_a too large for the box; profile wraps");
    }
    SmearingKernel k;
    k.kind = SmearingKind::gaussian;
    k.delta_a = delta_a;
    k.grid = g;
    k.weights = Eigen::VectorXd::Zero(g.n_modes);
    for (std::size_t j = 0; j < g.n_modes; ++j) {
        const double u = g.position(j);
        k.weights[j] = std::exp(-u * u / (2.0 * delta_a * delta_a));
    }
    normalize_square(g, k.weights);
    k.rho_hat = transform_weights(g, k.weights);
    return k;
}

SmearingKernel rectangular_kernel(const GridSpec& g, double delta_a) {
    if (!(delta_a > 0.0)) {
        throw precondition_error("measurement error delta_a must be positive");
    }
    if (delta_a > g.extent / 8.0) {
        throw precondition_error(
            "measurement error delta_a too large for the box; profile wraps");
    }
    SmearingKernel k;
    k.kind = SmearingKind::rectangular;
    k.delta_a = delta_a;
    k.grid = g;
    k.weights = Eigen::VectorXd::Zero(g.n_modes);
    for (std::size_t j = 0; j < g.n_modes; ++j) {
        k.weights[j] = std::abs(g.position(j)) <= delta_a * (1.0 + 1e-12) ? 1.0 : 0.0;
    }
    normalize_square(g, k.weights);
    k.rho_hat = transform_weights(g, k.weights);
    return k;
}

SmearingKernel custom_kernel(const GridSpec& g, const Eigen::VectorXd& weights) {
    check_even(g, weights);
    SmearingKernel k;
    k.kind = SmearingKind::custom;
    k.delta_a = 0.0;
    k.grid = g;
    k.weights = weights;
    k.rho_hat = transform_weights(g, k.weights);
    return k;
}

ReductionResult sharp_reduce(const SliceState& s, const Event& a) {
    const GridSpec& g = s.grid;
    const SliceState phi = propagate(s, a.t - s.t);
    cplx value, d0;
    field_at(phi, a.x, &value, &d0);
    ReductionResult r;
    r.outcome = a;
    r.state.grid = g;
    r.state.t = a.t;
    r.state.amps = Eigen::VectorXcd::Zero(g.n_modes);
    double w = 0.0;
    for (std::size_t i = 0; i < g.n_modes; ++i) {
        const double e = g.energy(i);
        const double ph = -g.momentum(i) * a.x;
        const cplx num = e * value + kI * d0;
        r.state.amps[i] =
            cplx(std::cos(ph), std::sin(ph)) * num / std::sqrt(2.0 * e * g.extent);
        w += std::norm(num) / (2.0 * e * g.extent);
    }
    r.weight = w;
    return r;
}

Eigen::MatrixXcd reduction_matrix(const SmearingKernel& k, const Event& a) {
    const GridSpec& g = k.grid;
    const std::size_t n = g.n_modes;
    lattice_site(g, a.x);  // validates alignment
    const auto es = g.energies();
    // phase and transform depend only on the mode-number difference; both are
    // exactly periodic in it because a.x is a lattice point
    std::vector<cplx> tfer(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double ph = -g.dp() * static_cast<double>(d) * a.x;
        tfer[d] = k.rho_hat[d] * cplx(std::cos(ph), std::sin(ph));
    }
    Eigen::MatrixXcd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t d = (i + n - j) % n;
            const double c =
                (es[i] + es[j]) / (2.0 * g.extent * std::sqrt(es[i] * es[j]));
            m(i, j) = tfer[d] * c;
        }
    }
    return m;
}

ReductionResult smeared_reduce(const SliceState& s, const SmearingKernel& k,
                               const Event& a) {
    const GridSpec& g = s.grid;
    if (!g.same_as(k.grid)) throw precondition_error("grid mismatch");
    const std::size_t n = g.n_modes;
    lattice_site(g, a.x);
    const SliceState phi = propagate(s, a.t - s.t);
    const auto es = g.energies();
    std::vector<cplx> tfer(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double ph = -g.dp() * static_cast<double>(d) * a.x;
        tfer[d] = k.rho_hat[d] * cplx(std::cos(ph), std::sin(ph));
    }
    ReductionResult r;
    r.outcome = a;
    r.state.grid = g;
    r.state.t = a.t;
    r.state.amps = Eigen::VectorXcd::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t d = (i + n - j) % n;
            const double c =
                (es[i] + es[j]) / (2.0 * g.extent * std::sqrt(es[i] * es[j]));
            acc += tfer[d] * c * phi.amps[j];
        }
        r.state.amps[i] = acc;
    }
    r.weight = r.state.amps.squaredNorm();
    return r;
}

Eigen::VectorXd sharp_weight_profile(const SliceState& s) {
    const GridSpec& g = s.grid;
    const std::size_t n = g.n_modes;
    // w(a) = sum_k |E_k phi(a) + i d0phi(a)|^2 / (2 E_k extent); expanding the
    // square leaves three moment sums independent of a
    double s_plus = 0.0, s_minus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = g.energy(i);
        s_plus += e / (2.0 * g.extent);
        s_minus += 1.0 / (2.0 * e * g.extent);
    }
    const double s_zero = static_cast<double>(n) / (2.0 * g.extent);
    const auto phi = position_field(s);
    const auto dphi = time_derivative_field(s);
    Eigen::VectorXd w(n);
    for (std::size_t j = 0; j < n; ++j) {
        const cplx a = phi[j];
        const cplx b = dphi[j];
        w[j] = s_plus * std::norm(a) + s_minus * std::norm(b) -
               2.0 * s_zero * std::imag(std::conj(a) * b);
    }
    return w;
}

QSpectrum q_spectrum(const SmearingKernel& k) {
    const GridSpec& g = k.grid;
    const std::size_t n = g.n_modes;
    // detector autocorrelation over the relative offset v
    Eigen::VectorXd corr = Eigen::VectorXd::Zero(n);
    for (std::size_t v = 0; v < n; ++v) {
        double acc = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            acc += k.weights[u] * k.weights[(u + v) % n];
        }
        corr[v] = acc * g.dx();
    }
    // Fourier coefficients of the autocorrelation; corr is indexed by raw
    // offset steps, whose positions are position((v + n/2) % n) relative form
    QSpectrum out;
    out.lambda = Eigen::VectorXd::Zero(n);
    out.q = Eigen::VectorXd::Zero(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = g.momentum(i);
        double re = 0.0, im = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            // offset v steps corresponds to displacement position index
            const double disp = g.position((v + half) % n);
            const double ph = lam * disp;
            re += corr[v] * std::cos(ph);
            im -= corr[v] * std::sin(ph);
        }
        out.lambda[i] = lam;
        out.q[i] = re * g.dx() / (2.0 * kPi);
        if (std::abs(im) * g.dx() > 1e-9 * (1.0 + std::abs(re) * g.dx())) {
            throw precondition_error("momentum-transfer spectrum is not real");
        }
    }
    out.total = out.q.sum() * g.dp();
    return out;
}

ComptonReport compton_condition_report(const SmearingKernel& k) {
    const QSpectrum qs = q_spectrum(k);
    const std::size_t n = k.grid.n_modes;
    std::vector<std::pair<double, double>> byr(n);
    for (std::size_t i = 0; i < n; ++i) {
        byr[i] = {std::abs(qs.lambda[i]), qs.q[i]};
    }
    std::sort(byr.begin(), byr.end());
    const double total = qs.q.sum();
    ComptonReport rep;
    rep.threshold = k.grid.mass / 10.0;
    rep.coverage = 0.99;
    double acc = 0.0;
    double lam = byr.back().first;
    for (std::size_t i = 0; i < n; ++i) {
        acc += byr[i].second;
        // include the whole shell at equal radius before testing coverage
        if (i + 1 < n && byr[i + 1].first == byr[i].first) continue;
        if (acc >= rep.coverage * total) {
            lam = byr[i].first;
            break;
        }
    }
    rep.lambda_star = lam;
    rep.satisfied = rep.lambda_star <= rep.threshold;
    return rep;
}

}  // namespace rqm
