#include "rqm/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rqm/errors.hpp"
#include "rqm/quad.hpp"

namespace rqm {

namespace {

std::string fmt_point(double dt, double u) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "(dt=%.6g, u=%.6g)", dt, u);
    return buf;
}

// integral_U^inf u^{-n} exp(-i sign u) du by repeated integration by parts.
// Terms fall off by (n+k)/U per order; U is chosen large enough that the
// series reaches roundoff before it turns.
cplx oscillatory_tail_integral(int n, double sign, double big_u, double* err) {
    const cplx is{0.0, sign};
    const cplx pre = std::exp(cplx(0.0, -sign * big_u)) / is;
    cplx acc = 0.0;
    cplx term = std::pow(big_u, -n);
    double last = std::abs(term);
    for (int k = 0; k < 16; ++k) {
        acc += term;
        cplx next = term * (-(double)(n + k) / (is * big_u));
        if (std::abs(next) >= last) {
            *err += std::abs(next);
            break;
        }
        term = next;
        last = std::abs(term);
        if (last < 1e-18 * std::abs(acc)) break;
    }
    *err += 1e-17 * std::abs(acc);
    return pre * acc;
}

// Head piece integral_0^tau_min exp(-i(m^2 - i eps) tau) K_tau dtau, with
// exp(-i(m^2 - i eps) tau) expanded in powers of tau (small over the head)
// and each power reduced to an oscillatory tail integral by u = |q|/tau.
cplx head_correction(double q, double tau_min, double m2, double eps,
                     double* err) {
    const double absq = std::abs(q);
    const double sign = q >= 0.0 ? 1.0 : -1.0;
    const double big_u = absq / tau_min;
    const cplx lambda = cplx(0.0, -1.0) * cplx(m2, -eps);
    cplx acc = 0.0;
    cplx cj = 1.0;       // lambda^j / j!
    double qj = 1.0;     // |q|^j
    double tail_err = 0.0;
    for (int j = 0; j <= 5; ++j) {
        acc += cj * qj * oscillatory_tail_integral(j + 1, sign, big_u, &tail_err);
        cj *= lambda / double(j + 1);
        qj *= absq;
    }
    // truncation: next term of the expansion, bounded by its tau_min value
    const double trunc = std::abs(cj) * std::pow(tau_min, 6.0) / 6.0;
    *err += (tail_err + trunc) / (4.0 * kPi);
    return acc / (4.0 * kPi);
}

struct RotatedTail {
    cplx value{0.0, 0.0};
    double error = 0.0;
};

// integral_A^inf exp(i side p u - i E(p) dt) / (2 E(p)) dp for dt >= 0,
// side = +-1, by rotating the contour into the half plane where the
// integrand decays.  Throws when the decay rate vanishes (stationary point
// at or beyond the band edge).
RotatedTail rotated_band_tail(double A, double side, double u, double dt,
                              double mass) {
    const double x = side * u;  // phase is exp(i p x - i E dt), x of either sign
    const double eA = std::hypot(A, mass);
    const double slope = A / eA;  // dE/dp at the band edge, in (0, 1)
    double dir;        // +1: p = A + i v, -1: p = A - i v
    double rate_min;   // lower bound on the damping rate in v
    if (x >= dt) {
        dir = 1.0;
        rate_min = std::min(x - dt, x - dt * slope);
    } else if (x <= dt * slope) {
        dir = -1.0;
        rate_min = std::min(dt - x, dt * slope - x);
    } else {
        throw NumericError(
            "band tail at " + fmt_point(dt, u) +
                " has a stationary point beyond the band edge; "
                "increase n_modes or move the evaluation point",
            1.0);
    }
    if (rate_min < 0.02) {
        throw NumericError("band tail at " + fmt_point(dt, u) +
                               " decays too slowly near the light cone; "
                               "increase n_modes",
                           1.0);
    }
    const double v_max = 45.0 / rate_min;
    auto f = [&](double v) -> cplx {
        const cplx p{A, dir * v};
        const cplx e = std::sqrt(p * p + mass * mass);
        const cplx phase = kI * p * x - kI * e * dt;
        return cplx(0.0, dir) * std::exp(phase) / (2.0 * e);
    };
    auto r = quad::integrate_adaptive_complex(f, 0.0, v_max, 1e-14, 1e-11);
    return {r.value, r.error + 1e-15};
}

// value at zero of the interpolating polynomial through (xs[i], ys[i]);
// delta reports the change from the previous interpolation order.
template <typename T>
T neville_at_zero(const std::vector<double>& xs, std::vector<T> ys,
                  double* delta) {
    const std::size_t n = xs.size();
    T prev = ys[0];
    for (std::size_t m = 1; m < n; ++m) {
        prev = ys[0];
        for (std::size_t i = 0; i + m < n; ++i) {
            ys[i] = (xs[i] * ys[i + 1] - xs[i + m] * ys[i]) / (xs[i] - xs[i + m]);
        }
    }
    if (delta) *delta = n >= 2 ? std::abs(ys[0] - prev) : 0.0;
    return ys[0];
}

}  // namespace

PropagatorKernel spectral_kernel(const GridSpec& g, double dt) {
    const std::size_t n = g.n_modes;
    PropagatorKernel k;
    k.grid = g;
    k.dt = dt;
    k.route = KernelRoute::spectral;
    k.values = Eigen::VectorXcd::Zero(n);
    k.dvalues = Eigen::VectorXcd::Zero(n);
    k.has_dvalues = true;
    std::vector<cplx> coef(n);
    const auto es = g.energies();
    for (std::size_t i = 0; i < n; ++i) {
        const double e = es[i];
        coef[i] = cplx(std::cos(e * dt), -std::sin(e * dt)) / (2.0 * e * g.extent);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double u = g.position(j);
        cplx v = 0.0, dv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = g.momentum(i) * u;
            const cplx c = coef[i] * cplx(std::cos(ph), std::sin(ph));
            v += c;
            dv += c * cplx(0.0, -es[i]);
        }
        k.values[j] = v;
        k.dvalues[j] = dv;
    }
    return k;
}

cplx spectral_kernel_value(const GridSpec& g, double dt, double u) {
    cplx v = 0.0;
    for (std::size_t i = 0; i < g.n_modes; ++i) {
        const double e = g.energy(i);
        const double ph = g.momentum(i) * u - e * dt;
        v += cplx(std::cos(ph), std::sin(ph)) / (2.0 * e * g.extent);
    }
    return v;
}

KernelEstimate continuum_spectral_kernel(const GridSpec& g, double dt, double u) {
    if (dt < 0.0) {
        auto r = continuum_spectral_kernel(g, -dt, u);
        return {std::conj(r.value), r.error};
    }
    const double au = std::min(std::abs(u), g.extent - std::abs(u));
    if (std::abs(g.band_limit - kPi / g.dx()) > 1e-9 * g.band_limit) {
        throw precondition_error(
            "continuum estimates need the full (Nyquist) band");
    }
    // evaluate at the min-image separation so the sum is even in u and
    // consistent with the tail completion below
    const cplx s = spectral_kernel_value(g, dt, au);
    // The mode sum is the midpoint rule over [-(n/2+1/2)dp, (n/2-1/2)dp];
    // complete each side to infinity.
    const double p_hi = (0.5 * double(g.n_modes) - 0.5) * g.dp();
    const double p_lo = (0.5 * double(g.n_modes) + 0.5) * g.dp();
    auto up = rotated_band_tail(p_hi, +1.0, au, dt, g.mass);
    auto dn = rotated_band_tail(p_lo, -1.0, au, dt, g.mass);
    // midpoint-rule boundary term: integral = sum + h^2/24 [f']_a^b + O(h^4),
    // f(p) = exp(i(p u - E dt)) / (4 pi E)
    auto fprime = [&](double p) -> cplx {
        const double e = std::hypot(p, g.mass);
        const cplx f = std::exp(kI * (p * au - e * dt)) / (4.0 * kPi * e);
        return f * (kI * (au - dt * p / e) - p / (e * e));
    };
    const double h2 = g.dp() * g.dp();
    const cplx boundary = (h2 / 24.0) * (fprime(p_hi) - fprime(-p_lo));
    // next Euler-Maclaurin term, with |f'''| bounded by |f| (u + dt)^3
    const double w3 = std::pow(au + std::abs(dt), 3.0);
    const double boundary_err =
        2.0 * (7.0 * h2 * h2 / 5760.0) * w3 *
        (1.0 / (4.0 * kPi * std::hypot(p_hi, g.mass)) +
         1.0 / (4.0 * kPi * std::hypot(p_lo, g.mass)));
    // periodic images of the continuum kernel, at spacelike reach extent-|u|
    const double reach = g.extent - au;
    const double img_s2 = reach * reach - dt * dt;
    const double image = img_s2 > 0.0 ? std::exp(-g.mass * std::sqrt(img_s2)) : 1.0;
    KernelEstimate out;
    out.value = s + (up.value + dn.value) / (2.0 * kPi) + boundary;
    out.error = (up.error + dn.error) / (2.0 * kPi) + image + boundary_err;
    if (image > 1e-8) {
        throw NumericError("periodic images contaminate the continuum estimate at " +
                               fmt_point(dt, u) + "; increase extent",
                           image);
    }
    return out;
}

KernelEstimate continuum_kernel_estimate(const std::vector<std::size_t>& n_modes,
                                         double extent, double mass, double dt,
                                         double u) {
    if (n_modes.size() < 2) {
        throw precondition_error("continuum extrapolation needs >= 2 mode counts");
    }
    std::vector<double> hs;
    std::vector<cplx> vals;
    double err = 0.0;
    for (std::size_t n : n_modes) {
        GridSpec g(n, extent, mass);
        auto r = continuum_spectral_kernel(g, dt, u);
        hs.push_back(1.0 / double(n));
        vals.push_back(r.value);
        err = std::max(err, r.error);
    }
    double delta = 0.0;
    const cplx v = neville_at_zero(hs, vals, &delta);
    return {v, err + delta};
}

ProperTimeQuadrature::ProperTimeQuadrature(double eps, double tmax, std::size_t n)
    : epsilon(eps), tau_max(tmax), n_tau(n) {
    if (!(eps > 0.0)) throw precondition_error("epsilon must be positive");
    if (!(tmax > 0.0)) throw precondition_error("tau_max must be positive");
    if (eps * tmax < 20.0 - 1e-9) {
        throw precondition_error(
            "epsilon * tau_max must be >= 20 so the discarded tail is negligible");
    }
    if (n < 8) throw precondition_error("n_tau must be >= 8");
}

cplx proper_time_gaussian_kernel(double tau, double dt, double dx) {
    if (!(tau > 0.0)) throw precondition_error("tau must be positive");
    const double ph = -(dt * dt - dx * dx) / (4.0 * tau);
    return cplx(std::cos(ph), std::sin(ph)) / (4.0 * kPi * tau);
}

KernelEstimate proper_time_kernel_value(double dt, double dx,
                                        const ProperTimeQuadrature& qd,
                                        double mass) {
    const double s2 = dt * dt - dx * dx;
    const double q = s2 / 4.0;
    const double absq = std::abs(q);
    if (absq < 1e-12) {
        throw NumericError("proper-time route is singular on the light cone at " +
                               fmt_point(dt, dx),
                           1.0);
    }
    const double m2 = mass * mass;
    const double eps = qd.epsilon;
    constexpr double kHeadOscillation = 200.0;  // |q|/tau at the head boundary
    const double tau_min = std::min(absq / kHeadOscillation, 0.5 * qd.tau_max);
    double err = 0.0;
    cplx acc = head_correction(q, tau_min, m2, eps, &err);

    // subinterval boundaries: cap both phases (m^2 dtau and q d(1/tau)) and
    // the geometric growth per panel
    constexpr double kPhaseCap = 12.0;
    std::vector<double> bounds{tau_min};
    double tau = tau_min;
    while (tau < qd.tau_max) {
        double cand = std::min(tau * 1.7, tau + kPhaseCap / m2);
        const double inv = 1.0 / tau - kPhaseCap / absq;
        if (inv > 0.0) cand = std::min(cand, 1.0 / inv);
        tau = std::min(cand, qd.tau_max);
        bounds.push_back(tau);
    }

    auto f = [&](double t) -> cplx {
        const double ph = -(m2 * t + q / t);
        return std::exp(-eps * t) * cplx(std::cos(ph), std::sin(ph)) /
               (4.0 * kPi * t);
    };
    const auto rule_full = quad::gauss_legendre(qd.n_tau);
    const auto rule_half = quad::gauss_legendre(qd.n_tau / 2);
    auto panel = [&](const quad::Rule& r, double a, double b) -> cplx {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        cplx s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            s += r.weights[i] * f(c + h * r.nodes[i]);
        }
        return s * h;
    };
    cplx full = 0.0, half = 0.0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        full += panel(rule_full, bounds[i], bounds[i + 1]);
        half += panel(rule_half, bounds[i], bounds[i + 1]);
    }
    acc += full;
    err += std::abs(full - half);
    // discarded tau > tau_max tail, |integrand| <= exp(-eps tau)/(4 pi tau)
    const double et = eps * qd.tau_max;
    err += std::exp(-et) / (4.0 * kPi * et);
    return {acc, err};
}

KernelEstimate proper_time_kernel_extrapolated(double dt, double dx, double mass,
                                               double tol) {
    const std::vector<double> epss{0.02, 0.01, 0.005};
    std::vector<cplx> vals;
    double err = 0.0;
    for (double e : epss) {
        ProperTimeQuadrature qd(e, 25.0 / e);
        auto r = proper_time_kernel_value(dt, dx, qd, mass);
        vals.push_back(r.value);
        err = std::max(err, r.error);
    }
    double delta = 0.0;
    const cplx v = neville_at_zero(epss, vals, &delta);
    err += delta;
    if (err > tol) {
        throw NumericError("proper-time kernel at " + fmt_point(dt, dx) +
                               " did not reach the requested tolerance",
                           err);
    }
    return {v, err};
}

PropagatorKernel proper_time_kernel(const GridSpec& g, double dt, double tol) {
    PropagatorKernel k;
    k.grid = g;
    k.dt = dt;
    k.route = KernelRoute::proper_time;
    k.values = Eigen::VectorXcd::Zero(g.n_modes);
    k.dvalues = Eigen::VectorXcd::Zero(g.n_modes);
    k.has_dvalues = false;
    for (std::size_t j = 0; j < g.n_modes; ++j) {
        const double u = g.position(j);
        auto r = proper_time_kernel_extrapolated(dt, u, g.mass, tol);
        k.values[j] = kRouteConventionFactor * r.value;
    }
    return k;
}

double equal_time_oracle(double r, double mass) {
    if (!(r > 0.0)) throw precondition_error("separation must be positive");
    if (!(mass > 0.0)) throw precondition_error("mass must be positive");
    const double mr = mass * r;
    const double theta_max = std::acosh(1.0 + 46.0 / mr);
    auto f = [&](double th) { return std::exp(-mr * std::cosh(th)); };
    auto q = quad::integrate_adaptive(f, 0.0, theta_max,
                                      std::exp(-mr) * 1e-13, 1e-12);
    return q.value / (2.0 * kPi);
}

PropagatorKernel oracle_kernel(const GridSpec& g) {
    PropagatorKernel k;
    k.grid = g;
    k.dt = 0.0;
    k.route = KernelRoute::oracle;
    k.values = Eigen::VectorXcd::Zero(g.n_modes);
    k.dvalues = Eigen::VectorXcd::Zero(g.n_modes);
    k.has_dvalues = false;
    for (std::size_t j = 0; j < g.n_modes; ++j) {
        const double u = std::abs(g.position(j));
        if (u == 0.0) {
            // the band-limited self value; the continuum one diverges
            k.values[j] = spectral_kernel_value(g, 0.0, 0.0);
        } else {
            k.values[j] = equal_time_oracle(u, g.mass);
        }
    }
    return k;
}

SliceState apply_kernel(const PropagatorKernel& k, const SliceState& s) {
    if (!k.grid.same_as(s.grid)) throw precondition_error("grid mismatch");
    if (!k.has_dvalues) {
        throw precondition_error(
            "kernel application needs a time-derivative table");
    }
    const std::size_t n = k.grid.n_modes;
    const auto phi = position_field(s);
    const auto dphi = time_derivative_field(s);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    const std::size_t half = n / 2;
    for (std::size_t j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            const std::size_t o = (j + n - v + half) % n;
            // d/d(slice time) of K(t'' - t, .) is -dvalues
            acc += k.values[o] * dphi[v] + k.dvalues[o] * phi[v];
        }
        out[j] = kI * k.grid.dx() * acc;
    }
    return from_position_field(s.grid, s.t + k.dt, out);
}

PropagatorKernel kg_compose(const PropagatorKernel& later,
                            const PropagatorKernel& earlier) {
    if (!later.grid.same_as(earlier.grid)) {
        throw precondition_error("grid mismatch");
    }
    if (!later.has_dvalues || !earlier.has_dvalues) {
        throw precondition_error("composition needs time-derivative tables");
    }
    const std::size_t n = later.grid.n_modes;
    const std::size_t half = n / 2;
    PropagatorKernel out;
    out.grid = later.grid;
    out.dt = later.dt + earlier.dt;
    out.route = later.route;
    out.values = Eigen::VectorXcd::Zero(n);
    out.dvalues = Eigen::VectorXcd::Zero(n);
    out.has_dvalues = false;
    for (std::size_t j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            const std::size_t o = (j + n - v + half) % n;
            acc += later.values[o] * earlier.dvalues[v] +
                   later.dvalues[o] * earlier.values[v];
        }
        out.values[j] = kI * later.grid.dx() * acc;
    }
    return out;
}

DecayFit fit_decay_length(const std::vector<double>& r,
                          const std::vector<double>& magnitude) {
    if (r.size() != magnitude.size()) {
        throw precondition_error("fit inputs must have equal length");
    }
    if (r.size() < 8) throw precondition_error("fit needs at least 8 samples");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(magnitude[i] > 0.0)) {
            throw precondition_error("fit magnitudes must be positive");
        }
        if (i > 0 && !(r[i] > r[i - 1])) {
            throw precondition_error("fit abscissae must be strictly increasing");
        }
    }
    const double n = double(r.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<double> ly(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        ly[i] = std::log(magnitude[i]);
        sx += r[i];
        sy += ly[i];
        sxx += r[i] * r[i];
        sxy += r[i] * ly[i];
    }
    const double det = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / n;
    if (!(slope < 0.0)) {
        throw NumericError("magnitudes do not decay over the fit window", 1.0);
    }
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean = sy / n;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double fit = slope * r[i] + intercept;
        ss_res += (ly[i] - fit) * (ly[i] - fit);
        ss_tot += (ly[i] - mean) * (ly[i] - mean);
    }
    DecayFit out;
    out.slope = slope;
    out.intercept = intercept;
    out.decay_length = -1.0 / slope;
    out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

}  // namespace rqm
