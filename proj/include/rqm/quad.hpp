#ifndef RQM_QUAD_HPP
#define RQM_QUAD_HPP

#include <complex>
#include <functional>
#include <vector>

namespace rqm::quad {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule of order n (Newton iteration on the Legendre
// recurrence; nodes accurate to machine precision).
Rule gauss_legendre(std::size_t n);

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;  // achieved error estimate
};

// Adaptive Gauss-Kronrod 7/15 bisection on [a, b].  Throws NumericError with
// the achieved estimate if the tolerance cannot be met.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f,
                                  double a, double b, double abs_tol,
                                  double rel_tol, int max_depth = 48);

struct AdaptiveResultC {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;
};

AdaptiveResultC integrate_adaptive_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double abs_tol, double rel_tol, int max_depth = 48);

}  // namespace rqm::quad

#endif
