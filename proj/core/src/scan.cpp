#include "lwsw/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <numbers>
#include <thread>

namespace lwsw {

namespace {

constexpr double kResolutionFactor = 14.0;  // k_max >= 14 sqrt(sigma) resolves tails to ~1e-10

int pow2_at_least(int n) {
    int m = 16;
    while (m < n) m *= 2;
    return m;
}

double sigma_resolution_scale(double sigma, const CouplingParams& cp) {
    return sigma * std::max(1.0, cp.d);
}

int predict_M(double lambda, const CouplingParams& cp, const ScanOptions& opts) {
    double beta_max = 0.0;
    for (double b : cp.beta) beta_max = std::max(beta_max, std::fabs(b));
    const double sigma_est =
        std::max(0.25, beta_max * beta_max * lambda * lambda / 16.0);
    const double k_need =
        kResolutionFactor * std::sqrt(sigma_resolution_scale(sigma_est, cp));
    const int m = static_cast<int>(std::ceil(2.0 * opts.L * k_need / std::numbers::pi));
    return std::min(pow2_at_least(std::max(opts.M_base, m)), 1 << 16);
}

double heaviest_phi_mass(const MinimizerResult& r, const CouplingParams& cp,
                         int* index) {
    double best = -1.0;
    for (int j = 0; j < cp.N; ++j) {
        double m = 0.0;
        for (double y : r.profile.u[j].v) m += y * y;
        m *= r.profile.v.grid->h;
        if (m > best) {
            best = m;
            if (index) *index = j;
        }
    }
    return best;
}

struct RowSolve {
    ScanRow row;
    MinimizerResult best;
};

// One lambda: deterministic warm start (candidate 0) plus n_seeds randomized
// inits, best converged energy wins; re-solved at doubled resolution when the
// converged multiplier says the grid was too coarse.
RowSolve solve_row(double lambda, const CouplingParams& base,
                   const ScanOptions& opts) {
    CouplingParams cp = base;
    cp.lambda = lambda;
    int M = predict_M(lambda, cp, opts);

    RowSolve out;
    out.row.lambda = lambda;
    out.row.I_value = std::numeric_limits<double>::quiet_NaN();
    out.row.decay_phi = std::numeric_limits<double>::quiet_NaN();
    out.row.decay_psi = std::numeric_limits<double>::quiet_NaN();

    for (int refine = 0; refine < 3; ++refine) {
        GridPtr g = make_grid(opts.L, M);
        bool have = false;
        MinimizerResult best;
        long best_seed = -1;
        for (int cand = 0; cand <= opts.n_seeds; ++cand) {
            SolveOptions so = opts.solve;
            so.seed = (cand == 0) ? 0 : opts.solve.seed * 1000003L + cand;
            MinimizerResult r;
            try {
                r = minimize(gaussian_init(g, cp, so.seed), cp, so);
            } catch (const std::runtime_error&) {
                continue;  // blow-up from a bad random init: try the next seed
            }
            const bool better =
                !have ||
                (r.converged && !best.converged) ||
                (r.converged == best.converged && r.energy_value < best.energy_value);
            if (better) {
                best = std::move(r);
                best_seed = cand;
                have = true;
            }
        }
        if (!have) break;

        const double sigma_act = -best.mu;
        const double k_max = std::numbers::pi * M / (2.0 * opts.L);
        const double k_need =
            kResolutionFactor *
            std::sqrt(sigma_resolution_scale(std::max(sigma_act, 0.25), cp));
        if (refine < 2 && best.converged && k_max < k_need && M < (1 << 16)) {
            M = std::min(
                std::max(2 * M,
                         pow2_at_least(static_cast<int>(std::ceil(
                             2.0 * opts.L * k_need / std::numbers::pi)))),
                1 << 16);
            continue;  // under-resolved: redo the row at the finer grid
        }

        out.best = std::move(best);
        out.row.seed_best = best_seed;
        break;
    }

    out.row.M_used = M;
    if (out.best.profile.v.grid) {
        const auto& r = out.best;
        out.row.I_value = r.energy_value;
        out.row.mu = r.mu;
        out.row.residual_max =
            *std::max_element(r.residuals.begin(), r.residuals.end());
        out.row.valid = r.converged && out.row.residual_max <= opts.solve.tol_residual;
        for (int j = 0; j < cp.N; ++j) {
            double m = 0.0;
            for (double y : r.profile.u[j].v) m += y * y;
            out.row.masses.push_back(m * r.profile.v.grid->h);
        }
        double mv = 0.0;
        for (double y : r.profile.v.v) mv += y * y;
        out.row.masses.push_back(cp.d * mv * r.profile.v.grid->h);
        if (r.mu < 0.0) out.row.wave = wave_params(r.mu, cp);
        int jh = 0;
        heaviest_phi_mass(r, cp, &jh);
        try {
            out.row.decay_phi = decay_rate(r.profile.u[jh], opts.tail_fraction).rate;
        } catch (const std::runtime_error&) {
        }
        try {
            out.row.decay_psi = decay_rate(r.profile.v, opts.tail_fraction).rate;
        } catch (const std::runtime_error&) {
        }
    }
    return out;
}

double rel_tol(double a, double b, double tol_rel) {
    return tol_rel * std::max({std::fabs(a), std::fabs(b), 1e-30});
}

} // namespace

WaveParams wave_params(double mu, const CouplingParams& cp) {
    if (!(mu < 0.0))
        throw std::invalid_argument("wave_params: requires mu < 0");
    WaveParams w;
    w.sigma = -mu;
    w.c = -cp.d * mu;
    w.k = w.c / 2.0;
    w.omega = w.sigma - w.k * w.k;
    return w;
}

ScanOutput scan(const std::vector<double>& lambdas, const CouplingParams& cp,
                const ScanOptions& opts) {
    for (double l : lambdas)
        if (!(l > 0.0))
            throw std::invalid_argument("scan: lambdas must be positive");
    for (size_t i = 1; i < lambdas.size(); ++i)
        if (lambdas[i] < lambdas[i - 1])
            throw std::invalid_argument("scan: lambdas must be non-decreasing");

    const size_t n = lambdas.size();
    std::vector<RowSolve> rows(n);
    std::vector<std::exception_ptr> errs(n);

    int jobs = opts.jobs > 0
                   ? opts.jobs
                   : static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::clamp<int>(jobs, 1, static_cast<int>(n ? n : 1));

    auto work = [&](size_t i) {
        try {
            rows[i] = solve_row(lambdas[i], cp, opts);
        } catch (...) {
            errs[i] = std::current_exception();
        }
    };
    if (jobs == 1) {
        for (size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    work(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    ScanOutput out;
    for (auto& r : rows) {
        out.rows.push_back(std::move(r.row));
        out.best.push_back(std::move(r.best));
    }
    return out;
}

CheckReport check_monotone_and_scaling(const std::vector<ScanRow>& rows,
                                       double tol_rel) {
    CheckReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    std::vector<const ScanRow*> v;
    for (const auto& r : rows)
        if (r.valid) v.push_back(&r);
    std::ostringstream msg;
    auto record = [&](double margin, const std::string& line) {
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < 0.0) ++rep.violations;
        rep.messages.push_back(line);
    };
    for (const auto* r : v) {
        // I(lambda) <= 0 (numerically: up to 1e-10 absolute)
        std::ostringstream m;
        m << "I(" << r->lambda << ") = " << r->I_value << " <= 0";
        record(1e-10 - r->I_value, m.str());
    }
    for (size_t i = 0; i + 1 < v.size(); ++i) {
        const double margin = v[i]->I_value - v[i + 1]->I_value +
                              rel_tol(v[i]->I_value, v[i + 1]->I_value, tol_rel);
        std::ostringstream m;
        m << "monotone I(" << v[i + 1]->lambda << ") <= I(" << v[i]->lambda << ")";
        record(margin, m.str());
    }
    for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j) {
            if (!(v[j]->lambda > v[i]->lambda)) continue;
            const double theta = v[j]->lambda / v[i]->lambda;
            const double bound = theta * v[i]->I_value;
            const double margin =
                bound - v[j]->I_value + rel_tol(bound, v[j]->I_value, tol_rel);
            std::ostringstream m;
            m << "scaling I(" << v[j]->lambda << ") <= " << theta << " * I("
              << v[i]->lambda << ")";
            record(margin, m.str());
        }
    if (v.size() < rows.size()) {
        std::ostringstream m;
        m << (rows.size() - v.size()) << " invalid row(s) excluded";
        rep.messages.push_back(m.str());
    }
    return rep;
}

CheckReport check_subadditivity(
    const std::vector<ScanRow>& rows,
    const std::vector<std::pair<double, double>>& pairs) {
    CheckReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    auto find = [&](double lam) -> const ScanRow* {
        for (const auto& r : rows)
            if (std::fabs(r.lambda - lam) <= 1e-9 * std::max(1.0, lam))
                return &r;
        return nullptr;
    };
    const double flat_tol = 1e-9;
    for (const auto& [lam, om] : pairs) {
        if (!(om > 0.0) || !(om < lam))
            throw std::invalid_argument(
                "check_subadditivity: need 0 < omega < lambda");
        const ScanRow* a = find(lam);
        const ScanRow* b = find(om);
        const ScanRow* c = find(lam - om);
        if (!a || !b || !c)
            throw std::invalid_argument(
                "check_subadditivity: lambda, omega and lambda-omega must all "
                "be scan grid points");
        std::ostringstream m;
        m << "I(" << lam << ") < I(" << om << ") + I(" << lam - om << ")";
        if (!a->valid || !b->valid || !c->valid) {
            rep.messages.push_back(m.str() + ": skipped (invalid row)");
            continue;
        }
        if (b->I_value >= -flat_tol || c->I_value >= -flat_tol) {
            rep.messages.push_back(m.str() + ": skipped (flat regime)");
            continue;
        }
        const double margin = b->I_value + c->I_value - a->I_value;
        rep.min_margin = std::min(rep.min_margin, margin);
        if (!(margin > 0.0)) ++rep.violations;
        std::ostringstream full;
        full << m.str() << ", margin " << margin;
        rep.messages.push_back(full.str());
    }
    return rep;
}

BoundsFit fit_bounds(const std::vector<ScanRow>& rows) {
    std::vector<const ScanRow*> v;
    for (const auto& r : rows)
        if (r.valid) v.push_back(&r);
    std::sort(v.begin(), v.end(), [](const ScanRow* a, const ScanRow* b) {
        return a->lambda < b->lambda;
    });
    // smallest suffix of the curve on which both -I/lambda^2 and -mu/lambda
    // stay strictly positive
    size_t k = v.size();
    for (size_t i = v.size(); i-- > 0;) {
        const double a = -v[i]->I_value / (v[i]->lambda * v[i]->lambda);
        const double b = -v[i]->mu / v[i]->lambda;
        if (a > 0.0 && b > 0.0)
            k = i;
        else
            break;
    }
    if (k == v.size())
        throw std::runtime_error(
            "fit_bounds: every row is in the trivial regime (I >= 0)");
    BoundsFit out;
    out.lambda_star_est = v[k]->lambda;
    out.A_quad = std::numeric_limits<double>::infinity();
    out.A_lin = std::numeric_limits<double>::infinity();
    for (size_t i = k; i < v.size(); ++i) {
        out.A_quad = std::min(out.A_quad,
                              -v[i]->I_value / (v[i]->lambda * v[i]->lambda));
        out.A_lin = std::min(out.A_lin, -v[i]->mu / v[i]->lambda);
    }
    return out;
}

std::vector<FamilyMember> family(const std::vector<double>& lambdas,
                                 const CouplingParams& cp, const ScanOptions& opts,
                                 std::vector<std::string>* diagnostics) {
    std::vector<FamilyMember> out;
    for (double lam : lambdas) {
        RowSolve rs = solve_row(lam, cp, opts);
        if (!rs.row.valid || !(rs.best.mu < 0.0)) {
            if (diagnostics) {
                std::ostringstream m;
                m << "lambda = " << lam << " skipped: "
                  << (rs.best.profile.v.grid ? rs.best.stop_reason : "no solve")
                  << ", residual_max " << rs.row.residual_max;
                diagnostics->push_back(m.str());
            }
            continue;
        }
        FamilyMember fm;
        fm.lambda = lam;
        fm.mu = rs.best.mu;
        CouplingParams cpl = cp;
        cpl.lambda = lam;
        fm.wave = wave_params(rs.best.mu, cpl);
        fm.profile = std::move(rs.best.profile);
        out.push_back(std::move(fm));
    }
    for (size_t i = 1; i < out.size(); ++i)
        if (!(out[i].wave.c > out[i - 1].wave.c))
            throw std::runtime_error(
                "family: emitted speeds are not strictly increasing");
    return out;
}

void write_scan_csv(const std::string& path, const std::vector<ScanRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "lambda,I,mu,residual_max,c,k,omega,sigma,decay_phi,decay_psi,seed_best\n";
    out << std::setprecision(17);
    for (const auto& r : rows) {
        out << r.lambda << ',' << r.I_value << ',' << r.mu << ','
            << r.residual_max << ',' << r.wave.c << ',' << r.wave.k << ','
            << r.wave.omega << ',' << r.wave.sigma << ',' << r.decay_phi << ','
            << r.decay_psi << ',' << r.seed_best << '\n';
    }
}

std::vector<ScanRow> read_scan_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty scan csv");
    std::vector<ScanRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(std::stod(tok));
        if (f.size() != 11)
            throw std::runtime_error(path + ": malformed csv row");
        ScanRow r;
        r.lambda = f[0];
        r.I_value = f[1];
        r.mu = f[2];
        r.residual_max = f[3];
        r.wave.c = f[4];
        r.wave.k = f[5];
        r.wave.omega = f[6];
        r.wave.sigma = f[7];
        r.decay_phi = f[8];
        r.decay_psi = f[9];
        r.seed_best = static_cast<long>(f[10]);
        rows.push_back(r);
    }
    return rows;
}

} // namespace lwsw
