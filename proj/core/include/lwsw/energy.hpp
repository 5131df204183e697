//==============================================================================
// energy.hpp
//
// The variational model: N short-wave envelopes u_1..u_N coupled to one long
// wave v. Energy functional
//
//   E(u, v) = int sum_j [ (u_j')^2 + (beta_j/2) u_j^4 + alpha_j v u_j^2 ]
//             + (v')^2 - v^3/3 dx
//
// minimized over the weighted sphere  d ||v||^2 + sum_j ||u_j||^2 = lambda.
// Bound-state profiles are real, so Profile carries real fields; the complex
// carrier phase is reattached by the evolution module.
//==============================================================================
#pragma once

#include <vector>

#include "grid.hpp"

namespace lwsw {

struct CouplingParams {
    int N = 1;
    std::vector<double> alpha;  // long/short coupling, one per envelope
    std::vector<double> beta;   // self-interaction, one per envelope
    double d = 1.0;             // weight of v in the constraint
    double lambda = 1.0;        // constraint level

    // All couplings strictly negative: the regime in which minimizers are
    // known to exist and can be taken nonnegative.
    bool attractive_regime() const;
    void validate() const;      // throws std::invalid_argument on bad shapes
};

struct Profile {
    std::vector<RealField> u;
    RealField v;
};

Profile zero_profile(const GridPtr& g, int N);

double energy(const Profile& p, const CouplingParams& cp);

// d ||v||^2 + sum_j ||u_j||^2 (the sphere the minimizer lives on).
double constraint(const Profile& p, const CouplingParams& cp);

// Exact discrete L2 gradient of energy(): components -2u'' + 2 beta u^3
// + 2 alpha v u and -2v'' + sum alpha u^2 - v^2. The kinetic part is built
// as D(D(.)) so <grad, eta> matches difference quotients of energy() to
// roundoff for arbitrary directions eta.
Profile grad_energy(const Profile& p, const CouplingParams& cp);

// Pointwise absolute value of every field. Preserves the constraint exactly;
// in the attractive regime it does not raise the (continuum) energy.
Profile absolutize(const Profile& p);

// Scale all fields by one common factor so constraint() == cp.lambda.
Profile scale_to_constraint(const Profile& p, const CouplingParams& cp);

} // namespace lwsw
