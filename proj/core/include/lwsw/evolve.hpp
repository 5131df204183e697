//==============================================================================
// evolve.hpp
//
// Time integration of the coupled system
//
//   i (u_j)_t + (u_j)_xx = alpha_j u_j v + beta_j |u_j|^2 u_j
//   v_t + v_xxx + v v_x  = (1/2) (sum_l alpha_l |u_l|^2)_x
//
// by Strang splitting: exact spectral half-steps for the linear parts
// (u modes * exp(-i k^2 dt/2), v modes * exp(+i k^3 dt/2)), then a symmetric
// nonlinear step in which v is advanced by dealiased RK4 sub-steps with
// |u_l|^2 frozen and each u_j picks up the exact pointwise phase
// exp(-i (alpha_j v_mid + beta_j |u_j|^2) dt). Short-wave masses and the
// v mean are conserved to roundoff by construction.
//==============================================================================
#pragma once

#include <vector>

#include "energy.hpp"
#include "scan.hpp"

namespace lwsw {

struct EvolutionState {
    std::vector<ComplexField> u;
    RealField v;
    double t = 0.0;
};

struct EvolveOptions {
    double T = 1.0;
    double dt = 1e-3;
    int substeps_nl = 1;   // RK4 sub-steps per nonlinear half-advance of v
    int record_every = 0;  // 0 = keep only the final state
};

// Attach the traveling-wave carrier: u_j = exp(i k x) phi_j, v = psi, t = 0.
EvolutionState synthesize_initial(const Profile& p, const WaveParams& w);

struct EvolveResult {
    EvolutionState final_state;
    std::vector<EvolutionState> snapshots;  // includes t=0 when recording
    int steps = 0;
    double min_stability_margin = 0.0;  // min over steps of bound/dt_rk4
};

// Largest RK4 advection sub-step the current v supports, 2.8/(k_max max|v|).
double advection_stability_bound(const EvolutionState& s);

// Throws on non-finite fields (with the step index) and when dt exceeds the
// stability bound at the initial state.
EvolveResult evolve(const EvolutionState& init, const CouplingParams& cp,
                    const EvolveOptions& opts);

struct TravelingError {
    double shape_err = 0.0;  // max over components of rel. L2 modulus error
    double phase_err = 0.0;  // same for the full complex fields
};

// Compare a final state against the profile transported by cT (spectral
// non-integer shift) with carrier phase exp(i(omega T + k x)). Throws when
// |c| T is an appreciable fraction of L (wrap ambiguity).
TravelingError traveling_error(const EvolutionState& final_state,
                               const Profile& p, const WaveParams& w, double T);

struct Conserved {
    std::vector<double> masses;  // int |u_j|^2
    double v_mean = 0.0;         // int v
};

Conserved conserved(const EvolutionState& s);

} // namespace lwsw
