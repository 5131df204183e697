#include "lwsw/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace lwsw {

namespace {

bool is_pow2(int m) { return m > 0 && (m & (m - 1)) == 0; }

// One forward/backward plan pair per size. Plan creation is the only part of
// FFTW that is not thread safe, so it sits behind a mutex; execution goes
// through the new-array interface on per-thread scratch buffers.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

PlanPair plans_for(int M) {
    static std::mutex mtx;
    static std::map<int, PlanPair> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(M);
    if (it != cache.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(M);
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(M, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_1d(M, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
    cache[M] = p;
    return p;
}

// Thread-local aligned scratch, grown on demand and reused across calls.
fftw_complex* scratch(int M) {
    thread_local std::map<int, fftw_complex*> bufs;
    auto it = bufs.find(M);
    if (it != bufs.end()) return it->second;
    fftw_complex* b = fftw_alloc_complex(M);
    bufs[M] = b;
    return b;
}

void fft_inplace(std::vector<cplx>& data, int sign) {
    const int M = static_cast<int>(data.size());
    PlanPair p = plans_for(M);
    fftw_complex* buf = scratch(M);
    std::memcpy(buf, data.data(), sizeof(cplx) * M);
    fftw_execute_dft(sign == FFTW_FORWARD ? p.fwd : p.bwd, buf, buf);
    std::memcpy(data.data(), buf, sizeof(cplx) * M);
    if (sign == FFTW_BACKWARD) {
        const double inv = 1.0 / M;
        for (auto& z : data) z *= inv;
    }
}

void check_grid(const GridPtr& g) {
    if (!g) throw std::invalid_argument("field has no grid");
}

// Spectral symbol of d^order/dx^order at mode m. Odd orders zero the
// Nyquist mode.
cplx deriv_symbol(double k, int order, bool nyquist) {
    switch (order) {
        case 1: return nyquist ? cplx(0, 0) : cplx(0, k);
        case 2: return cplx(-k * k, 0);
        case 3: return nyquist ? cplx(0, 0) : cplx(0, -k * k * k);
        default: throw std::invalid_argument("deriv: order must be 1, 2 or 3");
    }
}

std::vector<cplx> apply_symbol(const GridPtr& g, std::vector<cplx> modes,
                               int order) {
    const int M = g->M;
    for (int m = 0; m < M; ++m)
        modes[m] *= deriv_symbol(g->k[m], order, m == M / 2);
    return modes;
}

// Zero-padded product: both factors are spectrally interpolated onto a 2M
// grid, multiplied there, and the result truncated back to M modes.
std::vector<cplx> padded_product_modes(const GridPtr& g,
                                       const std::vector<cplx>& am,
                                       const std::vector<cplx>& bm) {
    const int M = g->M;
    const int MP = 2 * M;
    auto pad = [&](const std::vector<cplx>& m) {
        std::vector<cplx> out(MP, cplx(0, 0));
        for (int i = 0; i < M / 2; ++i) out[i] = m[i];
        for (int i = M / 2; i < M; ++i) out[i + M] = m[i];
        // split the Nyquist coefficient symmetrically so the padded field
        // stays real for real inputs
        out[M / 2] = 0.5 * m[M / 2];
        out[MP - M / 2] += 0.5 * m[M / 2];
        return out;
    };
    std::vector<cplx> ap = pad(am), bp = pad(bm);
    fft_inplace(ap, FFTW_BACKWARD);
    fft_inplace(bp, FFTW_BACKWARD);
    for (int i = 0; i < MP; ++i) ap[i] *= bp[i];
    fft_inplace(ap, FFTW_FORWARD);
    std::vector<cplx> out(M);
    for (int i = 0; i < M / 2; ++i) out[i] = 2.0 * ap[i];
    for (int i = M / 2; i < M; ++i) out[i] = 2.0 * ap[i + M];
    out[M / 2] = 2.0 * (ap[M / 2] + ap[MP - M / 2]);
    return out;
}

} // namespace

GridPtr make_grid(double L, int M) {
    if (!(L > 0.0)) throw std::invalid_argument("make_grid: L must be positive");
    if (M < 16 || !is_pow2(M))
        throw std::invalid_argument("make_grid: M must be a power of two >= 16");
    auto g = std::make_shared<Grid>();
    g->L = L;
    g->M = M;
    g->h = 2.0 * L / M;
    g->x.resize(M);
    g->k.resize(M);
    const double dk = std::numbers::pi / L;
    for (int i = 0; i < M; ++i) {
        g->x[i] = -L + i * g->h;
        const int m = (i < M / 2) ? i : i - M;
        g->k[i] = dk * m;
    }
    return g;
}

RealField real_field(const GridPtr& g) {
    check_grid(g);
    return RealField{g, std::vector<double>(g->M, 0.0)};
}

ComplexField complex_field(const GridPtr& g) {
    check_grid(g);
    return ComplexField{g, std::vector<cplx>(g->M, cplx(0, 0))};
}

std::vector<cplx> forward_modes(const RealField& f) {
    check_grid(f.grid);
    std::vector<cplx> m(f.v.begin(), f.v.end());
    fft_inplace(m, FFTW_FORWARD);
    return m;
}

std::vector<cplx> forward_modes(const ComplexField& f) {
    check_grid(f.grid);
    std::vector<cplx> m = f.v;
    fft_inplace(m, FFTW_FORWARD);
    return m;
}

RealField real_from_modes(const GridPtr& g, const std::vector<cplx>& modes) {
    check_grid(g);
    std::vector<cplx> m = modes;
    fft_inplace(m, FFTW_BACKWARD);
    RealField out = real_field(g);
    for (int i = 0; i < g->M; ++i) out.v[i] = m[i].real();
    return out;
}

ComplexField complex_from_modes(const GridPtr& g, const std::vector<cplx>& modes) {
    check_grid(g);
    ComplexField out{g, modes};
    fft_inplace(out.v, FFTW_BACKWARD);
    return out;
}

RealField deriv(const RealField& f, int order) {
    return real_from_modes(f.grid, apply_symbol(f.grid, forward_modes(f), order));
}

ComplexField deriv(const ComplexField& f, int order) {
    return complex_from_modes(f.grid, apply_symbol(f.grid, forward_modes(f), order));
}

double integrate(const RealField& f) {
    check_grid(f.grid);
    double s = 0.0;
    for (double y : f.v) s += y;
    return s * f.grid->h;
}

RealField helmholtz_solve(const RealField& f, double s) {
    if (!(s > 0.0))
        throw std::invalid_argument("helmholtz_solve: s must be positive");
    check_grid(f.grid);
    std::vector<cplx> m = forward_modes(f);
    const auto& k = f.grid->k;
    for (int i = 0; i < f.grid->M; ++i) m[i] /= k[i] * k[i] + s;
    return real_from_modes(f.grid, m);
}

RealField shift(const RealField& f, double a) {
    check_grid(f.grid);
    std::vector<cplx> m = forward_modes(f);
    const int M = f.grid->M;
    for (int i = 0; i < M; ++i) {
        if (i == M / 2) {
            // keep the shifted field real: the Nyquist cosine shifts to
            // cos(k(x-a)) whose grid samples scale by cos(k a)
            m[i] *= std::cos(f.grid->k[i] * a);
        } else {
            m[i] *= std::exp(cplx(0, -f.grid->k[i] * a));
        }
    }
    return real_from_modes(f.grid, m);
}

ComplexField shift(const ComplexField& f, double a) {
    check_grid(f.grid);
    std::vector<cplx> m = forward_modes(f);
    const int M = f.grid->M;
    for (int i = 0; i < M; ++i)
        m[i] *= std::exp(cplx(0, -f.grid->k[i] * a));
    return complex_from_modes(f.grid, m);
}

RealField dealiased_product(const RealField& a, const RealField& b) {
    check_grid(a.grid);
    check_grid(b.grid);
    if (a.grid->M != b.grid->M || a.grid->L != b.grid->L)
        throw std::invalid_argument("dealiased_product: grid mismatch");
    auto pm = padded_product_modes(a.grid, forward_modes(a), forward_modes(b));
    return real_from_modes(a.grid, pm);
}

RealField dealiased_abs2(const ComplexField& u) {
    check_grid(u.grid);
    RealField re = real_field(u.grid), im = real_field(u.grid);
    for (int i = 0; i < u.grid->M; ++i) {
        re.v[i] = u.v[i].real();
        im.v[i] = u.v[i].imag();
    }
    RealField rr = dealiased_product(re, re);
    RealField ii = dealiased_product(im, im);
    for (int i = 0; i < u.grid->M; ++i) rr.v[i] += ii.v[i];
    return rr;
}

} // namespace lwsw
