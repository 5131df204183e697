#include "lwsw/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lwsw {

namespace {

double max_abs(const RealField& f) {
    double m = 0.0;
    for (double y : f.v) m = std::max(m, std::fabs(y));
    return m;
}

double k_max_of(const Grid& g) { return std::numbers::pi * g.M / (2.0 * g.L); }

// Exact dispersion factors for a half-step tau/2. The v factor exp(+i k^3 t)
// is Hermitian-symmetric so v stays real; the lone Nyquist cosine keeps only
// the real part of its rotation.
struct PhaseTables {
    std::vector<cplx> u_half;
    std::vector<cplx> v_half;
};

PhaseTables phase_tables(const Grid& g, double tau) {
    PhaseTables t;
    t.u_half.resize(g.M);
    t.v_half.resize(g.M);
    for (int i = 0; i < g.M; ++i) {
        const double k = g.k[i];
        t.u_half[i] = std::exp(cplx(0, -k * k * tau / 2.0));
        const double th = k * k * k * tau / 2.0;
        t.v_half[i] = (i == g.M / 2) ? cplx(std::cos(th), 0)
                                     : std::exp(cplx(0, th));
    }
    return t;
}

void dispersion_half_step(EvolutionState& s, const PhaseTables& t) {
    for (auto& u : s.u) {
        auto m = forward_modes(u);
        for (size_t i = 0; i < m.size(); ++i) m[i] *= t.u_half[i];
        u = complex_from_modes(u.grid, m);
    }
    auto m = forward_modes(s.v);
    for (size_t i = 0; i < m.size(); ++i) m[i] *= t.v_half[i];
    s.v = real_from_modes(s.v.grid, m);
}

// dv/dt = -(1/2) d/dx (v^2) + source, products dealiased.
RealField v_rhs(const RealField& v, const RealField& source) {
    RealField v2 = dealiased_product(v, v);
    RealField flux = deriv(v2, 1);
    RealField out = real_field(v.grid);
    for (int i = 0; i < v.grid->M; ++i)
        out.v[i] = -0.5 * flux.v[i] + source.v[i];
    return out;
}

void rk4_advance(RealField& v, const RealField& source, double tau, int nsub) {
    const int M = v.grid->M;
    const double hdt = tau / nsub;
    for (int s = 0; s < nsub; ++s) {
        RealField k1 = v_rhs(v, source);
        RealField y = v;
        for (int i = 0; i < M; ++i) y.v[i] = v.v[i] + 0.5 * hdt * k1.v[i];
        RealField k2 = v_rhs(y, source);
        for (int i = 0; i < M; ++i) y.v[i] = v.v[i] + 0.5 * hdt * k2.v[i];
        RealField k3 = v_rhs(y, source);
        for (int i = 0; i < M; ++i) y.v[i] = v.v[i] + hdt * k3.v[i];
        RealField k4 = v_rhs(y, source);
        for (int i = 0; i < M; ++i)
            v.v[i] += hdt / 6.0 *
                      (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    }
}

// Symmetric nonlinear step: v half-advance, exact u phase rotation with the
// midpoint v, v half-advance. |u_j| is invariant here, so the long-wave
// source is frozen for the whole step.
void nonlinear_step(EvolutionState& s, const CouplingParams& cp, double tau,
                    int nsub) {
    const int M = s.v.grid->M;
    RealField source = real_field(s.v.grid);
    for (int j = 0; j < cp.N; ++j) {
        RealField a2 = dealiased_abs2(s.u[j]);
        for (int i = 0; i < M; ++i)
            source.v[i] += 0.5 * cp.alpha[j] * a2.v[i];
    }
    source = deriv(source, 1);

    rk4_advance(s.v, source, tau / 2.0, nsub);
    for (int j = 0; j < cp.N; ++j) {
        auto& u = s.u[j].v;
        for (int i = 0; i < M; ++i) {
            const double a2 = std::norm(u[i]);
            u[i] *= std::exp(
                cplx(0, -(cp.alpha[j] * s.v.v[i] + cp.beta[j] * a2) * tau));
        }
    }
    rk4_advance(s.v, source, tau / 2.0, nsub);
}

void check_state(const EvolutionState& s, const CouplingParams& cp) {
    if (static_cast<int>(s.u.size()) != cp.N)
        throw std::invalid_argument("evolve: state has wrong number of envelopes");
    for (const auto& u : s.u)
        if (u.grid->M != s.v.grid->M || u.grid->L != s.v.grid->L)
            throw std::invalid_argument("evolve: fields on mismatched grids");
}

} // namespace

EvolutionState synthesize_initial(const Profile& p, const WaveParams& w) {
    EvolutionState s;
    s.t = 0.0;
    const auto& g = p.v.grid;
    for (const auto& phi : p.u) {
        ComplexField u = complex_field(g);
        for (int i = 0; i < g->M; ++i)
            u.v[i] = phi.v[i] * std::exp(cplx(0, w.k * g->x[i]));
        s.u.push_back(std::move(u));
    }
    s.v = p.v;
    return s;
}

double advection_stability_bound(const EvolutionState& s) {
    const double vmax = max_abs(s.v);
    if (!(vmax > 0.0)) return std::numeric_limits<double>::infinity();
    return 2.8 / (k_max_of(*s.v.grid) * vmax);
}

EvolveResult evolve(const EvolutionState& init, const CouplingParams& cp,
                    const EvolveOptions& opts) {
    cp.validate();
    check_state(init, cp);
    if (!(opts.dt > 0.0) || !(opts.T > 0.0))
        throw std::invalid_argument("evolve: T and dt must be positive");
    if (opts.substeps_nl < 1)
        throw std::invalid_argument("evolve: substeps_nl must be >= 1");

    const int steps = static_cast<int>(
        std::ceil(opts.T / opts.dt - 1e-9));
    const double dt_rk0 = opts.dt / (2.0 * opts.substeps_nl);
    {
        const double bound = advection_stability_bound(init);
        if (dt_rk0 > bound) {
            std::ostringstream m;
            m << "evolve: dt " << opts.dt << " exceeds the RK4 advection "
              << "stability bound (max sub-step " << bound
              << "); raise substeps_nl or lower dt";
            throw std::invalid_argument(m.str());
        }
    }

    EvolveResult res;
    res.min_stability_margin = std::numeric_limits<double>::infinity();
    EvolutionState s = init;
    if (opts.record_every > 0) res.snapshots.push_back(s);

    PhaseTables tables = phase_tables(*s.v.grid, opts.dt);
    double t = init.t;
    for (int step = 0; step < steps; ++step) {
        double tau = opts.dt;
        const double remaining = opts.T - step * opts.dt;
        const PhaseTables* tb = &tables;
        PhaseTables last;
        if (remaining < opts.dt * (1.0 - 1e-9)) {
            tau = remaining;  // shorter final step when T is not a multiple of dt
            last = phase_tables(*s.v.grid, tau);
            tb = &last;
        }

        dispersion_half_step(s, *tb);
        nonlinear_step(s, cp, tau, opts.substeps_nl);
        dispersion_half_step(s, *tb);

        t = init.t + (step + 1 < steps ? (step + 1) * opts.dt : opts.T);
        s.t = t;

        const double vmax = max_abs(s.v);
        if (!std::isfinite(vmax) || vmax > 1e12) {
            std::ostringstream m;
            m << "evolve: non-finite long wave at step " << step + 1
              << " (t = " << t << "); the run is unstable";
            throw std::runtime_error(m.str());
        }
        const double dt_rk = tau / (2.0 * opts.substeps_nl);
        if (vmax > 0.0)
            res.min_stability_margin =
                std::min(res.min_stability_margin,
                         2.8 / (k_max_of(*s.v.grid) * vmax) / dt_rk);
        ++res.steps;
        if (opts.record_every > 0 && ((step + 1) % opts.record_every == 0 ||
                                      step + 1 == steps))
            res.snapshots.push_back(s);
    }
    res.final_state = std::move(s);
    return res;
}

TravelingError traveling_error(const EvolutionState& final_state,
                               const Profile& p, const WaveParams& w, double T) {
    const auto& g = *p.v.grid;
    if (std::fabs(w.c * T) > 0.75 * g.L)
        throw std::invalid_argument(
            "traveling_error: |c| T is an appreciable fraction of L; the "
            "periodic wrap makes the comparison ambiguous (enlarge L or "
            "shorten T)");
    if (p.u.size() != final_state.u.size())
        throw std::invalid_argument("traveling_error: component count mismatch");

    const double a = w.c * T;
    TravelingError err;
    auto l2r = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double y : v) s += y * y;
        return std::sqrt(s * g.h);
    };
    for (size_t j = 0; j < p.u.size(); ++j) {
        RealField ref = shift(p.u[j], a);
        const double nrm = l2r(ref.v);
        if (!(nrm > 0.0)) continue;  // dead envelope carries no shape information
        std::vector<double> dmod(g.M), dcplx(g.M);
        for (int i = 0; i < g.M; ++i) {
            const cplx carrier =
                std::exp(cplx(0, w.omega * T + w.k * g.x[i]));
            const cplx refc = carrier * ref.v[i];
            dmod[i] = std::abs(final_state.u[j].v[i]) - std::fabs(ref.v[i]);
            dcplx[i] = std::abs(final_state.u[j].v[i] - refc);
        }
        err.shape_err = std::max(err.shape_err, l2r(dmod) / nrm);
        err.phase_err = std::max(err.phase_err, l2r(dcplx) / nrm);
    }
    {
        RealField refv = shift(p.v, a);
        const double nrm = l2r(refv.v);
        if (nrm > 0.0) {
            std::vector<double> dv(g.M);
            for (int i = 0; i < g.M; ++i)
                dv[i] = final_state.v.v[i] - refv.v[i];
            const double e = l2r(dv) / nrm;
            err.shape_err = std::max(err.shape_err, e);
            err.phase_err = std::max(err.phase_err, e);
        }
    }
    return err;
}

Conserved conserved(const EvolutionState& s) {
    Conserved c;
    const double h = s.v.grid->h;
    for (const auto& u : s.u) {
        double m = 0.0;
        for (const cplx& z : u.v) m += std::norm(z);
        c.masses.push_back(m * h);
    }
    double vm = 0.0;
    for (double y : s.v.v) vm += y;
    c.v_mean = vm * h;
    return c;
}

} // namespace lwsw
