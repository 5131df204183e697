#include "lwsw/energy.hpp"

#include "detail_acc.hpp"

#include <cmath>
#include <stdexcept>

namespace lwsw {

bool CouplingParams::attractive_regime() const {
    for (double a : alpha)
        if (!(a < 0.0)) return false;
    for (double b : beta)
        if (!(b < 0.0)) return false;
    return true;
}

void CouplingParams::validate() const {
    if (N < 1) throw std::invalid_argument("params: N must be >= 1");
    if (static_cast<int>(alpha.size()) != N)
        throw std::invalid_argument("params: alpha must have N entries");
    if (static_cast<int>(beta.size()) != N)
        throw std::invalid_argument("params: beta must have N entries");
    if (!(d > 0.0)) throw std::invalid_argument("params: d must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("params: lambda must be positive");
    for (double a : alpha)
        if (!std::isfinite(a)) throw std::invalid_argument("params: alpha not finite");
    for (double b : beta)
        if (!std::isfinite(b)) throw std::invalid_argument("params: beta not finite");
}

Profile zero_profile(const GridPtr& g, int N) {
    Profile p;
    p.u.reserve(N);
    for (int j = 0; j < N; ++j) p.u.push_back(real_field(g));
    p.v = real_field(g);
    return p;
}

namespace {

void check_shapes(const Profile& p, const CouplingParams& cp) {
    if (static_cast<int>(p.u.size()) != cp.N)
        throw std::invalid_argument("profile has wrong number of envelopes");
    if (!p.v.grid) throw std::invalid_argument("profile has no grid");
    for (const auto& f : p.u)
        if (f.grid->M != p.v.grid->M)
            throw std::invalid_argument("profile fields on mismatched grids");
}

// h * sum f^2 (extended-precision accumulation: line searches compare
// energies whose true differences sit near 1 ulp, so quadrature noise from
// plain double sums would randomly reject genuinely descending steps)
double mass(const RealField& f) {
    long double s = 0.0L;
    for (double y : f.v) s += (long double)y * y;
    return (double)(s * f.grid->h);
}

} // namespace

double energy(const Profile& p, const CouplingParams& cp) {
    return (double)detail::energy_acc(p, cp);
}

detail::acc_t detail::energy_acc(const Profile& p, const CouplingParams& cp) {
    check_shapes(p, cp);
    const int M = p.v.grid->M;
    const double h = p.v.grid->h;
    acc_t acc = 0;
    for (int j = 0; j < cp.N; ++j) {
        const RealField du = deriv(p.u[j], 1);
        const auto& u = p.u[j].v;
        acc_t kin = 0, quart = 0, coup = 0;
        for (int i = 0; i < M; ++i) {
            kin += (acc_t)du.v[i] * du.v[i];
            const acc_t u2 = (acc_t)u[i] * u[i];
            quart += u2 * u2;
            coup += p.v.v[i] * u2;
        }
        acc += kin + (acc_t)(0.5 * cp.beta[j]) * quart + cp.alpha[j] * coup;
    }
    const RealField dv = deriv(p.v, 1);
    acc_t vkin = 0, vcube = 0;
    for (int i = 0; i < M; ++i) {
        vkin += (acc_t)dv.v[i] * dv.v[i];
        vcube += (acc_t)p.v.v[i] * p.v.v[i] * p.v.v[i];
    }
    acc += vkin - vcube / 3;
    return acc * h;
}

double constraint(const Profile& p, const CouplingParams& cp) {
    return (double)detail::constraint_acc(p, cp);
}

detail::acc_t detail::constraint_acc(const Profile& p, const CouplingParams& cp) {
    check_shapes(p, cp);
    auto m2 = [](const RealField& f) {
        acc_t s = 0;
        for (double y : f.v) s += (acc_t)y * y;
        return s * f.grid->h;
    };
    acc_t s = cp.d * m2(p.v);
    for (const auto& u : p.u) s += m2(u);
    return s;
}

Profile grad_energy(const Profile& p, const CouplingParams& cp) {
    check_shapes(p, cp);
    const int M = p.v.grid->M;
    Profile g = zero_profile(p.v.grid, cp.N);
    for (int j = 0; j < cp.N; ++j) {
        // -2 D(D u): D o D (not the order-2 symbol) is the exact adjoint of
        // the quadrature of (Du)^2, so directional difference quotients of
        // energy() match this gradient for any field, Nyquist content included
        RealField lap = deriv(deriv(p.u[j], 1), 1);
        const auto& u = p.u[j].v;
        for (int i = 0; i < M; ++i)
            g.u[j].v[i] = -2.0 * lap.v[i] + 2.0 * cp.beta[j] * u[i] * u[i] * u[i] +
                          2.0 * cp.alpha[j] * p.v.v[i] * u[i];
    }
    RealField lapv = deriv(deriv(p.v, 1), 1);
    for (int i = 0; i < M; ++i) {
        double src = 0.0;
        for (int j = 0; j < cp.N; ++j)
            src += cp.alpha[j] * p.u[j].v[i] * p.u[j].v[i];
        g.v.v[i] = -2.0 * lapv.v[i] + src - p.v.v[i] * p.v.v[i];
    }
    return g;
}

Profile absolutize(const Profile& p) {
    Profile q = p;
    for (auto& u : q.u)
        for (double& y : u.v) y = std::fabs(y);
    for (double& y : q.v.v) y = std::fabs(y);
    return q;
}

Profile scale_to_constraint(const Profile& p, const CouplingParams& cp) {
    const double c = constraint(p, cp);
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("scale_to_constraint: profile has no mass");
    const double r = std::sqrt(cp.lambda / c);
    Profile q = p;
    for (auto& u : q.u)
        for (double& y : u.v) y *= r;
    for (double& y : q.v.v) y *= r;
    return q;
}

} // namespace lwsw
