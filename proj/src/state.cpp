#include "rqm/state.hpp"

#include <cmath>
#include <string>

namespace rqm {

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!a.same_as(b))
        throw precondition_error(std::string(where) + ": grid mismatch");
}

static void require_amps(const SliceState& s, const char* where) {
    if (s.amps.size() != static_cast<Eigen::Index>(s.grid.n_modes))
        throw precondition_error(std::string(where) +
                                 ": amplitude count does not match grid");
}

cplx kg_inner_product(const SliceState& s1, const SliceState& s2) {
    require_same_grid(s1.grid, s2.grid, "kg_inner_product");
    require_amps(s1, "kg_inner_product");
    require_amps(s2, "kg_inner_product");
    if (s1.t != s2.t)
        throw precondition_error("kg_inner_product: states on different slices");
    return s1.amps.dot(s2.amps);
}

double kg_norm(const SliceState& s) {
    require_amps(s, "kg_norm");
    return s.amps.norm();
}

SliceState propagate(const SliceState& s, double dt) {
    require_amps(s, "propagate");
    SliceState out = s;
    out.t = s.t + dt;
    const std::size_t n = s.grid.n_modes;
    for (std::size_t i = 0; i < n; ++i) {
        double ph = -s.grid.energy(i) * dt;
        out.amps[i] = s.amps[i] * cplx(std::cos(ph), std::sin(ph));
    }
    return out;
}

Eigen::VectorXcd position_field(const SliceState& s) {
    require_amps(s, "position_field");
    const std::size_t n = s.grid.n_modes;
    const double L = s.grid.extent;
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx c = s.amps[i] / std::sqrt(2.0 * s.grid.energy(i) * L);
        double p = s.grid.momentum(i);
        for (std::size_t j = 0; j < n; ++j) {
            double ph = p * s.grid.position(j);
            f[j] += c * cplx(std::cos(ph), std::sin(ph));
        }
    }
    return f;
}

Eigen::VectorXcd time_derivative_field(const SliceState& s) {
    require_amps(s, "time_derivative_field");
    SliceState d = s;
    for (std::size_t i = 0; i < s.grid.n_modes; ++i)
        d.amps[i] = s.amps[i] * cplx(0.0, -s.grid.energy(i));
    return position_field(d);
}

SliceState from_position_field(const GridSpec& g, double t,
                               const Eigen::VectorXcd& field) {
    if (field.size() != static_cast<Eigen::Index>(g.n_modes))
        throw precondition_error("from_position_field: field size mismatch");
    const std::size_t n = g.n_modes;
    const double dx = g.dx();
    SliceState out(g, t);
    for (std::size_t i = 0; i < n; ++i) {
        double p = g.momentum(i);
        cplx acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            double ph = -p * g.position(j);
            acc += field[j] * cplx(std::cos(ph), std::sin(ph));
        }
        out.amps[i] = acc * dx * std::sqrt(2.0 * g.energy(i) / g.extent);
    }
    return out;
}

void field_at(const SliceState& s, double x, cplx* value, cplx* d0_value) {
    require_amps(s, "field_at");
    const std::size_t n = s.grid.n_modes;
    const double L = s.grid.extent;
    cplx v{0.0, 0.0}, dv{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        double e = s.grid.energy(i);
        cplx c = s.amps[i] / std::sqrt(2.0 * e * L);
        double ph = s.grid.momentum(i) * x;
        cplx w = c * cplx(std::cos(ph), std::sin(ph));
        v += w;
        dv += w * cplx(0.0, -e);
    }
    if (value) *value = v;
    if (d0_value) *d0_value = dv;
}

SliceState make_gaussian_packet(const GridSpec& g, double x0, double p0,
                                double sigma, double t) {
    if (!(sigma > 0.0))
        throw precondition_error("make_gaussian_packet: sigma must be positive");
    if (sigma < 2.0 * g.dx())
        throw precondition_error(
            "make_gaussian_packet: sigma under-resolves the lattice (need sigma >= 2 dx)");
    if (std::abs(p0) + 3.0 / sigma > g.band_limit * (1.0 + 1e-12))
        throw precondition_error(
            "make_gaussian_packet: |p0| + 3/sigma exceeds the grid band limit");
    SliceState s(g, t);
    const std::size_t n = g.n_modes;
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = g.momentum(i);
        double w = std::exp(-0.5 * (p - p0) * (p - p0) * sigma * sigma);
        double ph = -p * x0;
        s.amps[i] = w * cplx(std::cos(ph), std::sin(ph));
        norm2 += w * w;
    }
    s.amps /= std::sqrt(norm2);
    return s;
}

SliceState translate(const SliceState& s, double d) {
    require_amps(s, "translate");
    SliceState out = s;
    for (std::size_t i = 0; i < s.grid.n_modes; ++i) {
        double ph = -s.grid.momentum(i) * d;
        out.amps[i] = s.amps[i] * cplx(std::cos(ph), std::sin(ph));
    }
    return out;
}

}  // namespace rqm
