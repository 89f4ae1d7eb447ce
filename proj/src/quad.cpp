#include "rqm/quad.hpp"

#include <cmath>
#include <stdexcept>

#include "rqm/errors.hpp"
#include "rqm/grid.hpp"

namespace rqm::quad {

Rule gauss_legendre(std::size_t n) {
    if (n == 0) throw precondition_error("gauss_legendre: order must be positive");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dxn = p1 / dp;
            x -= dxn;
            if (std::abs(dxn) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

// Kronrod 15 nodes/weights (positive half) with embedded Gauss 7 weights.
namespace {
const double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
const double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
const double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename T>
void gk15(const std::function<T(double)>& f, double a, double b, T* result,
          double* err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    T fc = f(c);
    T result_gauss = kWg[3] * fc;
    T result_kronrod = kWgk[7] * fc;
    for (int j = 0; j < 7; ++j) {
        double x = h * kXgk[j];
        T f1 = f(c - x);
        T f2 = f(c + x);
        result_kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) result_gauss += kWg[j / 2] * (f1 + f2);
    }
    *result = result_kronrod * h;
    *err = std::abs(result_kronrod - result_gauss) * std::abs(h);
}

template <typename T>
struct Acc {
    T value{};
    double error = 0.0;
};

template <typename T>
void adapt(const std::function<T(double)>& f, double a, double b,
           double abs_tol, double rel_tol, int depth, int max_depth,
           Acc<T>* acc) {
    T v;
    double e;
    gk15<T>(f, a, b, &v, &e);
    double local_tol =
        std::max(abs_tol * (b - a), rel_tol * std::abs(v));
    if (e <= local_tol || depth >= max_depth) {
        if (e > local_tol && depth >= max_depth)
            throw NumericError(
                "integrate_adaptive: subdivision limit reached before "
                "requested tolerance",
                e);
        acc->value += v;
        acc->error += e;
        return;
    }
    double c = 0.5 * (a + b);
    adapt<T>(f, a, c, abs_tol, rel_tol, depth + 1, max_depth, acc);
    adapt<T>(f, c, b, abs_tol, rel_tol, depth + 1, max_depth, acc);
}

}  // namespace

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f,
                                  double a, double b, double abs_tol,
                                  double rel_tol, int max_depth) {
    Acc<double> acc;
    adapt<double>(f, a, b, abs_tol / std::max(1.0, b - a), rel_tol, 0,
                  max_depth, &acc);
    return {acc.value, acc.error};
}

AdaptiveResultC integrate_adaptive_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double abs_tol, double rel_tol, int max_depth) {
    Acc<std::complex<double>> acc;
    adapt<std::complex<double>>(f, a, b, abs_tol / std::max(1.0, b - a),
                                rel_tol, 0, max_depth, &acc);
    return {acc.value, acc.error};
}

}  // namespace rqm::quad
