//==============================================================================
// grid.hpp
//
// Periodic pseudospectral toolbox: uniform grid on [-L, L), FFT-based
// differentiation, quadrature, Helmholtz inversion and dealiased products.
//
// Transform convention (used everywhere in this library): the forward DFT is
// unnormalized, F_m = sum_i f_i exp(-i k_m x_i), the inverse carries the 1/M
// factor. Wavenumbers are k_m = pi*m/L in FFT order [0..M/2-1, -M/2..-1].
// Odd-order derivatives zero the Nyquist mode m = -M/2 (its sign is not
// representable); even orders keep it.
//==============================================================================
#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace lwsw {

using cplx = std::complex<double>;

struct Grid {
    double L = 0.0;          // half-length of the box [-L, L)
    int M = 0;               // number of nodes, power of two
    double h = 0.0;          // spacing 2L/M
    std::vector<double> x;   // nodes -L + i*h
    std::vector<double> k;   // wavenumbers pi*m/L, FFT order
};

using GridPtr = std::shared_ptr<const Grid>;

// M must be a power of two >= 16, L > 0.
GridPtr make_grid(double L, int M);

struct RealField {
    GridPtr grid;
    std::vector<double> v;
};

struct ComplexField {
    GridPtr grid;
    std::vector<cplx> v;
};

RealField real_field(const GridPtr& g);      // zero-initialized
ComplexField complex_field(const GridPtr& g);

// Spectral derivative of given order (1, 2 or 3).
RealField deriv(const RealField& f, int order);
ComplexField deriv(const ComplexField& f, int order);

// Periodic trapezoid quadrature h * sum_i f_i (spectrally accurate for
// smooth decayed integrands).
double integrate(const RealField& f);

// Solve (-d2/dx2 + s) g = f by spectral division; requires s > 0.
RealField helmholtz_solve(const RealField& f, double s);

// f(x - a) via modes * exp(-i k a); a need not be a multiple of h.
RealField shift(const RealField& f, double a);
ComplexField shift(const ComplexField& f, double a);

// Pointwise products evaluated on a zero-padded (2M) grid and truncated
// back, so quadratic nonlinearities generate no aliased modes.
RealField dealiased_product(const RealField& a, const RealField& b);
RealField dealiased_abs2(const ComplexField& u);   // |u|^2

// Raw mode access for integrators and tests (forward = unnormalized).
std::vector<cplx> forward_modes(const RealField& f);
std::vector<cplx> forward_modes(const ComplexField& f);
RealField real_from_modes(const GridPtr& g, const std::vector<cplx>& modes);
ComplexField complex_from_modes(const GridPtr& g, const std::vector<cplx>& modes);

} // namespace lwsw
