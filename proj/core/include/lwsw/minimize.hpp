//==============================================================================
// minimize.hpp
//
// Constrained minimization of the coupled energy on the sphere
// d||v||^2 + sum ||u_j||^2 = lambda, plus the diagnostics used to certify a
// result: Lagrange multiplier, Euler-Lagrange residuals, concentration
// function and tail decay fits.
//
// Scheme: projected gradient descent. The direction is the
// multiplier-consistent residual preconditioned by (s - d2/dx2)^-1 with s
// tracking -mu, so a full step reproduces the positive-kernel fixed-point map
// phi <- P_s * (-beta phi^3 - alpha phi psi). The step length is seeded by
// the exact quartic 1D energy model along the direction (halving fallback),
// and acceptance compares the merit E - mu (C - lambda) in extended
// precision, which is immune to the 1-ulp sphere-rescale quantization.
// Each accepted iterate is rescaled to the sphere by a single factor and
// recentered by an integer-node shift; the flow itself runs sign-free (any
// per-iterate sign rectification perturbs the merit by more than a
// late-stage step gains). A flow that plateaus above tolerance -- the
// constrained Hessian can hide near-singular directions whose first-order
// correction rate sits below the roundoff floor of the energy comparison --
// is finished by a few Newton steps, each solved by truncated preconditioned
// CG on the tangent-projected linearized system and accepted only when the
// measured residual norm drops. With enforce_nonneg the initial guess starts
// in the nonnegative cone and the converged result is replaced by its
// positive representative (positivity_polish), kept only when the reported
// residual does not degrade. `converged` certifies the residual of the
// profile actually returned.
//==============================================================================
#pragma once

#include <string>
#include <vector>

#include "energy.hpp"

namespace lwsw {

struct SolveOptions {
    int max_iters = 3000;
    double step0 = 1.0;          // scales the line-search step cap (>= 1)
    double tol_residual = 1e-8;  // stop when max EL residual drops below
    double tol_energy = 1e-11;   // relative energy stagnation threshold
    bool enforce_nonneg = true;  // start in f >= 0, certify a positive result
    bool recenter = true;        // keep the mass centroid at x = 0
    long seed = 0;               // seeds the randomized initial guess
    bool allow_mixed_signs = false; // accept couplings outside the attractive regime
};

struct MinimizerResult {
    Profile profile;
    double energy_value = 0.0;
    double mu = 0.0;                    // Lagrange multiplier at the final iterate
    std::vector<double> residuals;      // N+1 EL residual norms
    int iters = 0;
    std::vector<double> energy_trace;   // accepted energies; non-increasing up
                                        // to rescale roundoff ~ |mu| lambda eps
    bool converged = false;             // final reported residual < tol_residual
    std::string stop_reason;            // "residual" | "energy_stagnation" | ...
    bool possibly_trivial = false;      // final energy not meaningfully below 0
};

// Default initial guess: nonnegative Gaussian bumps (psi wider than the
// phi_j), multiplicatively perturbed via `seed` (seed 0 = unperturbed),
// scaled to the sphere.
Profile gaussian_init(const GridPtr& g, const CouplingParams& cp, long seed);

MinimizerResult minimize(const Profile& init, const CouplingParams& cp,
                         const SolveOptions& opts);

// Closed-form multiplier from the integrated Euler-Lagrange identities,
//   mu = [ sum int phi_j'^2 + int psi'^2 + sum beta_j int phi_j^4
//          + (3/2) sum alpha_j int psi phi_j^2 - (1/2) int psi^3 ] / lambda,
// with lambda = constraint(p). Exact at critical points, a consistent
// estimator elsewhere.
double lagrange_multiplier(const Profile& p, const CouplingParams& cp);

// Norms of  -phi_j'' - mu phi_j + beta_j phi_j^3 + alpha_j phi_j psi  and
// -psi'' - mu d psi - psi^2/2 + (1/2) sum alpha_l phi_l^2, each relative to
// the constraint scale sqrt(lambda) (one scale for all components, so the
// measure stays meaningful for components that vanish at the minimum).
std::vector<double> el_residual(const Profile& p, double mu,
                                const CouplingParams& cp);

// Largest mass of rho = sum phi_j^2 + d psi^2 in any window of half-width r
// (cell-overlap quadrature; exact lambda at r = L, exactly 0 at r = 0).
double concentration(const Profile& p, const CouplingParams& cp, double r);

struct DecayFit {
    double rate = 0.0;        // exponential rate, sign-normalized positive
    double drift = 0.0;       // relative slope change across the fit window
    bool exponential = false; // drift below 5%: tail is a clean exponential
};

// Least-squares slope of log|f| over the outer tail_fraction of the usable
// tail on each side of the peak (usable = above 1e-13 * peak and inside
// 0.8 L, where periodic-image contamination is negligible). Throws when no
// side has a usable tail.
DecayFit decay_rate(const RealField& f, double tail_fraction);

// Positive representative of a (near-)critical profile: flips each field to
// its dominant sign, zeroes dead envelopes (below 1e-8 of the global scale)
// exactly, and rebuilds every live field below 1e-10 * peak from the
// fixed-point image of its nonnegative source - the spectral Helmholtz
// solve (zero residual under the discrete operator), floored by the
// strictly positive periodic kernel
// cosh(sqrt(s)(L-|x|)) / (2 sqrt(s) sinh(sqrt(s) L)) where the spectral
// tail falls below roundoff. Resolved values are never touched.
// Requires mu < 0.
Profile positivity_polish(const Profile& p, double mu, const CouplingParams& cp);

} // namespace lwsw
