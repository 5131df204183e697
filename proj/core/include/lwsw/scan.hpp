//==============================================================================
// scan.hpp
//
// Sweep the constraint level lambda, record the minimum energy curve
// I(lambda) with its multipliers and diagnostics, and check the structural
// properties the curve must satisfy: monotonicity, sublinear scaling
// I(theta lambda) <= theta I(lambda), strict subadditivity, and the
// quadratic/linear lower-bound constants. Also converts multipliers to
// traveling-wave parameters (c, k, omega, sigma).
//==============================================================================
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "minimize.hpp"

namespace lwsw {

struct WaveParams {
    double c = 0.0;      // long-wave speed, c = -d*mu
    double k = 0.0;      // carrier wavenumber, k = c/2
    double omega = 0.0;  // carrier frequency, omega = sigma - k^2
    double sigma = 0.0;  // sigma = -mu
};

// Requires mu < 0 (attractive-regime minimizer).
WaveParams wave_params(double mu, const CouplingParams& cp);

struct ScanRow {
    double lambda = 0.0;
    double I_value = 0.0;        // best converged energy
    double mu = 0.0;
    double residual_max = 0.0;
    std::vector<double> masses;  // int phi_j^2 ... , d int psi^2
    double decay_phi = 0.0;      // fitted rate of the heaviest envelope (NaN if unfittable)
    double decay_psi = 0.0;
    long seed_best = 0;          // 0 = deterministic warm start, 1..n = random seeds
    bool valid = false;          // converged with residual_max <= tolerance
    WaveParams wave;
    int M_used = 0;
};

struct ScanOptions {
    double L = 40.0;
    int M_base = 256;        // floor for the per-row resolution
    int n_seeds = 2;         // random seeds tried per row in addition to the warm start
    SolveOptions solve;      // per-solve settings (seed field is the base offset)
    int jobs = 0;            // 0 = hardware concurrency
    double tail_fraction = 0.3;
};

struct ScanOutput {
    std::vector<ScanRow> rows;
    std::vector<MinimizerResult> best;   // per-row best result (profiles included)
};

// cp.lambda is ignored; each row uses its own lambda. Rows are independent
// deterministic jobs and may run concurrently.
ScanOutput scan(const std::vector<double>& lambdas, const CouplingParams& cp,
                const ScanOptions& opts);

struct CheckReport {
    int violations = 0;
    double min_margin = 0.0;            // smallest slack seen (negative = violation)
    std::vector<std::string> messages;  // one line per comparison
};

// I <= 0, I non-increasing, and I(lambda_j) <= theta I(lambda_i) for every
// pair lambda_j = theta lambda_i with theta > 1. tol_rel scales with |I|.
CheckReport check_monotone_and_scaling(const std::vector<ScanRow>& rows,
                                       double tol_rel);

// Strict subadditivity I(lambda) < I(omega) + I(lambda - omega) for the
// requested (lambda, omega) pairs; all three levels must be present in the
// scan and outside the flat (trivial) regime.
CheckReport check_subadditivity(const std::vector<ScanRow>& rows,
                                const std::vector<std::pair<double, double>>& pairs);

struct BoundsFit {
    double A_quad = 0.0;         // largest A with I <= -A lambda^2 on the stable tail
    double A_lin = 0.0;          // largest A with mu <= -A lambda  (reported separately)
    double lambda_star_est = 0.0;// smallest lambda from which both stay positive
};

// Throws when every row is in the trivial regime.
BoundsFit fit_bounds(const std::vector<ScanRow>& rows);

struct FamilyMember {
    double lambda = 0.0;
    WaveParams wave;
    Profile profile;
    double mu = 0.0;
};

// Solve at each lambda and emit the traveling-wave family; rows that fail to
// converge are skipped with a diagnostic. Throws if the emitted speeds are
// not strictly increasing.
std::vector<FamilyMember> family(const std::vector<double>& lambdas,
                                 const CouplingParams& cp, const ScanOptions& opts,
                                 std::vector<std::string>* diagnostics = nullptr);

// Header: lambda,I,mu,residual_max,c,k,omega,sigma,decay_phi,decay_psi,seed_best
void write_scan_csv(const std::string& path, const std::vector<ScanRow>& rows);
std::vector<ScanRow> read_scan_csv(const std::string& path);

} // namespace lwsw
