#include "lwsw/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lwsw/field_io.hpp"

namespace lwsw {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << text;
    if (!out) throw std::runtime_error("short write to \"" + path + "\"");
}

std::string two_digits(int i) {
    std::ostringstream ss;
    ss << std::setw(2) << std::setfill('0') << i;
    return ss.str();
}

double field_mass(const RealField& f) {
    double s = 0.0;
    for (double y : f.v) s += y * y;
    return s * f.grid->h;
}

std::vector<double> profile_masses(const Profile& p, const CouplingParams& cp) {
    std::vector<double> m;
    for (const auto& f : p.u) m.push_back(field_mass(f));
    m.push_back(cp.d * field_mass(p.v));
    return m;
}

int heaviest_envelope(const Profile& p) {
    int best = 0;
    double best_m = -1.0;
    for (size_t j = 0; j < p.u.size(); ++j) {
        const double m = field_mass(p.u[j]);
        if (m > best_m) { best_m = m; best = static_cast<int>(j); }
    }
    return best;
}

// Decay diagnostics share one policy everywhere (runs and re-validation):
// heaviest envelope and v, outer 30% of the usable tail, finite fits only.
constexpr double kTailFraction = 0.3;

bool try_decay(const RealField& f, double* rate) {
    try {
        const DecayFit d = decay_rate(f, kTailFraction);
        if (!std::isfinite(d.rate)) return false;
        *rate = d.rate;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

std::string config_hash(const RunConfig& cfg, const std::string& extra = "") {
    RunConfig c = cfg;
    c.output_dir.clear();  // the hash identifies the computation, not its home
    return content_hash(dump_config(c) + extra);
}

json result_to_json(const MinimizerResult& r, const CouplingParams& cp,
                    long seed, const std::string& input_hash) {
    json j;
    j["seed"] = seed;
    j["input_hash"] = input_hash;
    j["energy"] = r.energy_value;
    j["constraint"] = constraint(r.profile, cp);
    j["mu"] = r.mu;
    j["residuals"] = r.residuals;
    j["residual_max"] =
        r.residuals.empty()
            ? 0.0
            : *std::max_element(r.residuals.begin(), r.residuals.end());
    j["iters"] = r.iters;
    j["converged"] = r.converged;
    j["stop_reason"] = r.stop_reason;
    j["possibly_trivial"] = r.possibly_trivial;
    j["masses"] = profile_masses(r.profile, cp);
    if (r.mu < 0.0) {
        const WaveParams w = wave_params(r.mu, cp);
        j["wave"] = {{"c", w.c}, {"k", w.k}, {"omega", w.omega},
                     {"sigma", w.sigma}};
    }
    double rate = 0.0;
    if (!r.profile.u.empty() &&
        try_decay(r.profile.u[heaviest_envelope(r.profile)], &rate))
        j["decay_phi"] = rate;
    if (try_decay(r.profile.v, &rate)) j["decay_psi"] = rate;
    j["energy_trace"] = r.energy_trace;
    return j;
}

void dump_profile(const std::string& fdir, const Profile& p) {
    fs::create_directories(fdir);
    for (size_t j = 0; j < p.u.size(); ++j)
        dump_field(fdir + "/u" + two_digits(static_cast<int>(j)) + ".fld",
                   p.u[j]);
    dump_field(fdir + "/v.fld", p.v);
}

void write_solve_artifacts(const std::string& dir, const RunConfig& resolved,
                           const MinimizerResult& r) {
    write_text(dir + "/result.json",
               result_to_json(r, resolved.params, resolved.solve.seed,
                              config_hash(resolved))
                       .dump(2) +
                   "\n");
    dump_profile(dir + "/fields", r.profile);
}

void run_solve(const RunConfig& resolved, const std::string& dir) {
    const GridPtr g = make_grid(resolved.grid.L, resolved.grid.M);
    const Profile init = gaussian_init(g, resolved.params, resolved.solve.seed);
    const MinimizerResult r = minimize(init, resolved.params, resolved.solve);
    write_solve_artifacts(dir, resolved, r);
}

// Per-row configs are complete solve configs: rerunning one reproduces the
// row's winning candidate exactly (same grid, same init seed, same options).
long actual_seed(long base, long seed_best) {
    return seed_best == 0 ? 0 : base * 1000003L + seed_best;
}

void run_scan(const RunConfig& resolved, const std::string& dir) {
    ScanOptions so;
    so.L = resolved.grid.L;
    so.M_base = resolved.grid.M;
    so.n_seeds = resolved.scan.n_seeds;
    so.solve = resolved.solve;
    so.jobs = resolved.scan.jobs;
    so.tail_fraction = kTailFraction;
    const ScanOutput out = scan(resolved.scan.lambdas, resolved.params, so);

    write_scan_csv(dir + "/scan.csv", out.rows);

    json report;
    {
        const CheckReport chk = check_monotone_and_scaling(out.rows, 1e-8);
        report["monotone_scaling"] = {{"violations", chk.violations},
                                      {"min_margin", chk.min_margin},
                                      {"messages", chk.messages}};
        std::vector<std::pair<double, double>> pairs;
        for (const ScanRow& row : out.rows)
            for (const ScanRow& half : out.rows)
                if (std::fabs(half.lambda * 2.0 - row.lambda) <=
                    1e-9 * row.lambda)
                    pairs.emplace_back(row.lambda, half.lambda);
        if (!pairs.empty()) {
            const CheckReport sub = check_subadditivity(out.rows, pairs);
            report["subadditivity"] = {{"violations", sub.violations},
                                       {"min_margin", sub.min_margin},
                                       {"messages", sub.messages}};
        }
        try {
            const BoundsFit fit = fit_bounds(out.rows);
            report["bounds"] = {{"A_quad", fit.A_quad},
                                {"A_lin", fit.A_lin},
                                {"lambda_star_est", fit.lambda_star_est}};
        } catch (const std::exception& e) {
            report["bounds"] = {{"error", e.what()}};
        }
    }
    write_text(dir + "/report.json", report.dump(2) + "\n");

    for (size_t i = 0; i < out.rows.size(); ++i) {
        const ScanRow& row = out.rows[i];
        if (!out.best[i].profile.v.grid) continue;  // row produced no solve at all
        const std::string rdir = dir + "/row" + two_digits(static_cast<int>(i));
        fs::create_directories(rdir);
        RunConfig rc = resolved;
        rc.command = Command::solve;
        rc.params.lambda = row.lambda;
        rc.grid.M = row.M_used;
        rc.scan = ScanSpec{};
        rc.solve.seed = actual_seed(resolved.solve.seed, row.seed_best);
        rc.output_dir = rdir;
        write_text(rdir + "/resolved_config.json", dump_config(rc));
        write_solve_artifacts(rdir, rc, out.best[i]);
    }
}

std::string resolve_existing(const std::string& path) {
    if (fs::exists(path)) return path;
    const fs::path alt = fs::path(output_root()) / path;
    if (fs::exists(alt)) return alt.string();
    throw std::runtime_error("referenced path \"" + path + "\" does not exist");
}

void dump_state(const std::string& fdir, const std::string& stem,
                const EvolutionState& s) {
    for (size_t j = 0; j < s.u.size(); ++j)
        dump_field(fdir + "/" + stem + "_u" + two_digits(static_cast<int>(j)) +
                       ".fld",
                   s.u[j]);
    dump_field(fdir + "/" + stem + "_v.fld", s.v);
}

void run_evolve(const RunConfig& resolved, const std::string& dir) {
    const std::string src_dir = resolve_existing(resolved.evolve.from);
    const StoredResult src = load_result(src_dir);
    if (!(src.result.mu < 0.0))
        throw std::runtime_error(
            "evolve: stored result has mu >= 0, no traveling wave to "
            "synthesize");
    const WaveParams w = wave_params(src.result.mu, src.params);
    const EvolutionState init = synthesize_initial(src.result.profile, w);

    EvolveOptions eo;
    eo.T = resolved.evolve.T;
    eo.dt = resolved.evolve.dt;
    eo.substeps_nl = resolved.evolve.substeps_nl;
    eo.record_every = resolved.evolve.record_every;
    const EvolveResult res = evolve(init, src.params, eo);

    const Conserved c0 = conserved(init);
    const Conserved c1 = conserved(res.final_state);
    const TravelingError terr =
        traveling_error(res.final_state, src.result.profile, w,
                        res.final_state.t - init.t);
    double drift = std::fabs(c1.v_mean - c0.v_mean);
    for (size_t j = 0; j < c0.masses.size(); ++j)
        drift = std::max(drift, std::fabs(c1.masses[j] - c0.masses[j]) /
                                    std::max(c0.masses[j], 1e-300));

    json j;
    j["from"] = src_dir;
    j["input_hash"] = config_hash(resolved, read_text(src_dir + "/result.json"));
    j["T"] = res.final_state.t - init.t;
    j["dt"] = resolved.evolve.dt;
    j["substeps_nl"] = resolved.evolve.substeps_nl;
    j["steps"] = res.steps;
    if (std::isfinite(res.min_stability_margin))
        j["min_stability_margin"] = res.min_stability_margin;
    j["wave"] = {{"c", w.c}, {"k", w.k}, {"omega", w.omega}, {"sigma", w.sigma}};
    j["masses_initial"] = c0.masses;
    j["masses_final"] = c1.masses;
    j["v_mean_initial"] = c0.v_mean;
    j["v_mean_final"] = c1.v_mean;
    j["mass_drift_max"] = drift;
    j["shape_err"] = terr.shape_err;
    j["phase_err"] = terr.phase_err;

    const std::string fdir = dir + "/fields";
    fs::create_directories(fdir);
    dump_state(fdir, "final", res.final_state);
    if (!res.snapshots.empty()) {
        std::vector<double> times;
        for (size_t s = 0; s < res.snapshots.size(); ++s) {
            std::ostringstream stem;
            stem << "snap" << std::setw(3) << std::setfill('0') << s;
            dump_state(fdir, stem.str(), res.snapshots[s]);
            times.push_back(res.snapshots[s].t);
        }
        j["snapshot_times"] = times;
    }
    write_text(dir + "/evolution.json", j.dump(2) + "\n");
}

// stored vs recomputed, 1e-10 relative with an absolute floor for values
// that sit at roundoff.
void cmp(std::vector<std::string>& out, const std::string& name, double stored,
         double fresh) {
    const double diff = std::fabs(stored - fresh);
    if (diff <= 1e-14) return;
    if (diff <= 1e-10 * std::max(std::fabs(stored), std::fabs(fresh))) return;
    std::ostringstream m;
    m << std::setprecision(17) << name << ": stored " << stored
      << ", recomputed " << fresh;
    out.push_back(m.str());
}

std::vector<std::string> validate_solve_dir(const std::string& dir) {
    std::vector<std::string> out;
    const StoredResult st = load_result(dir);
    const json stored = json::parse(read_text(dir + "/result.json"));
    const Profile& p = st.result.profile;
    const CouplingParams& cp = st.params;

    cmp(out, "energy", stored["energy"].get<double>(), energy(p, cp));
    cmp(out, "constraint", stored["constraint"].get<double>(),
        constraint(p, cp));
    const double mu = lagrange_multiplier(p, cp);
    cmp(out, "mu", stored["mu"].get<double>(), mu);
    const std::vector<double> res = el_residual(p, mu, cp);
    const auto& sres = stored["residuals"];
    if (sres.size() != res.size()) {
        out.push_back("residuals: stored count " + std::to_string(sres.size()) +
                      ", recomputed " + std::to_string(res.size()));
    } else {
        for (size_t i = 0; i < res.size(); ++i)
            cmp(out, "residuals[" + std::to_string(i) + "]",
                sres[i].get<double>(), res[i]);
    }
    const std::vector<double> masses = profile_masses(p, cp);
    const auto& smass = stored["masses"];
    for (size_t i = 0; i < masses.size() && i < smass.size(); ++i)
        cmp(out, "masses[" + std::to_string(i) + "]", smass[i].get<double>(),
            masses[i]);
    if (stored.contains("wave")) {
        if (mu < 0.0) {
            const WaveParams w = wave_params(mu, cp);
            cmp(out, "wave.c", stored["wave"]["c"].get<double>(), w.c);
            cmp(out, "wave.k", stored["wave"]["k"].get<double>(), w.k);
            cmp(out, "wave.omega", stored["wave"]["omega"].get<double>(),
                w.omega);
            cmp(out, "wave.sigma", stored["wave"]["sigma"].get<double>(),
                w.sigma);
        } else {
            out.push_back("wave: stored but recomputed mu is nonnegative");
        }
    }
    double rate = 0.0;
    if (stored.contains("decay_phi")) {
        if (!p.u.empty() && try_decay(p.u[heaviest_envelope(p)], &rate))
            cmp(out, "decay_phi", stored["decay_phi"].get<double>(), rate);
        else
            out.push_back("decay_phi: stored but no longer fittable");
    }
    if (stored.contains("decay_psi")) {
        if (try_decay(p.v, &rate))
            cmp(out, "decay_psi", stored["decay_psi"].get<double>(), rate);
        else
            out.push_back("decay_psi: stored but no longer fittable");
    }
    return out;
}

std::vector<std::string> validate_scan_dir(const std::string& dir) {
    std::vector<std::string> out;
    const std::vector<ScanRow> rows = read_scan_csv(dir + "/scan.csv");
    for (size_t i = 0; i < rows.size(); ++i) {
        const std::string rdir = dir + "/row" + two_digits(static_cast<int>(i));
        if (!fs::exists(rdir + "/result.json")) {
            if (std::isfinite(rows[i].I_value))  // failed rows carry no artifacts
                out.push_back("row" + two_digits(static_cast<int>(i)) +
                              ": missing result.json");
            continue;
        }
        std::vector<std::string> sub = validate_dir(rdir);
        for (auto& s : sub)
            out.push_back("row" + two_digits(static_cast<int>(i)) + ": " + s);

        // cross-format consistency: the CSV row mirrors the row's JSON
        const json rj = json::parse(read_text(rdir + "/result.json"));
        const std::string tag = "row" + two_digits(static_cast<int>(i)) + ".csv ";
        cmp(out, tag + "I", rows[i].I_value, rj["energy"].get<double>());
        cmp(out, tag + "mu", rows[i].mu, rj["mu"].get<double>());
        cmp(out, tag + "residual_max", rows[i].residual_max,
            rj["residual_max"].get<double>());
        if (rj.contains("wave")) {
            cmp(out, tag + "c", rows[i].wave.c, rj["wave"]["c"].get<double>());
            cmp(out, tag + "omega", rows[i].wave.omega,
                rj["wave"]["omega"].get<double>());
        }
        if (std::isfinite(rows[i].decay_phi) && rj.contains("decay_phi"))
            cmp(out, tag + "decay_phi", rows[i].decay_phi,
                rj["decay_phi"].get<double>());
        if (std::isfinite(rows[i].decay_psi) && rj.contains("decay_psi"))
            cmp(out, tag + "decay_psi", rows[i].decay_psi,
                rj["decay_psi"].get<double>());
    }
    return out;
}

std::vector<std::string> validate_evolve_dir(const std::string& dir) {
    std::vector<std::string> out;
    const json stored = json::parse(read_text(dir + "/evolution.json"));
    const size_t n = stored["masses_final"].size();

    EvolutionState s;
    std::vector<ComplexField> us;
    for (size_t j = 0; j < n; ++j)
        us.push_back(load_complex_field(dir + "/fields/final_u" +
                                        two_digits(static_cast<int>(j)) +
                                        ".fld"));
    RealField v = load_real_field(dir + "/fields/final_v.fld");
    for (auto& u : us) {
        if (u.grid->M != v.grid->M || u.grid->L != v.grid->L) {
            out.push_back("final fields disagree on the grid");
            return out;
        }
        u.grid = v.grid;
    }
    s.u = std::move(us);
    s.v = std::move(v);
    const Conserved c = conserved(s);
    for (size_t j = 0; j < n && j < c.masses.size(); ++j)
        cmp(out, "masses_final[" + std::to_string(j) + "]",
            stored["masses_final"][j].get<double>(), c.masses[j]);
    cmp(out, "v_mean_final", stored["v_mean_final"].get<double>(), c.v_mean);
    return out;
}

} // namespace

std::string output_root() {
    const char* e = std::getenv("LWSW_OUT_ROOT");
    if (e && *e) return std::string(e);
    return fs::current_path().string();
}

std::string run(const RunConfig& cfg) {
    if (cfg.command == Command::validate) {
        if (cfg.output_dir.empty())
            throw std::invalid_argument(
                "validate: a target result directory is required");
        const std::string target = resolve_existing(cfg.output_dir);
        const std::vector<std::string> mism = validate_dir(target);
        json j;
        j["target"] = target;
        j["pass"] = mism.empty();
        j["mismatches"] = mism;
        write_text(target + "/validation.json", j.dump(2) + "\n");
        if (!mism.empty())
            throw std::runtime_error(
                "validation failed with " + std::to_string(mism.size()) +
                " mismatch(es); see " + target + "/validation.json");
        return target;
    }

    fs::path dir;
    {
        std::string base = cfg.output_dir;
        if (base.empty())
            base = std::string(command_name(cfg.command)) + "-" +
                   config_hash(cfg);
        dir = fs::path(base).is_absolute() ? fs::path(base)
                                           : fs::path(output_root()) / base;
    }
    fs::create_directories(dir);

    RunConfig resolved = cfg;
    resolved.output_dir = dir.string();
    write_text((dir / "resolved_config.json").string(), dump_config(resolved));

    try {
        switch (resolved.command) {
            case Command::solve: run_solve(resolved, dir.string()); break;
            case Command::scan: run_scan(resolved, dir.string()); break;
            case Command::evolve: run_evolve(resolved, dir.string()); break;
            case Command::validate: break;  // handled above
        }
    } catch (const std::exception& e) {
        json err;
        err["command"] = command_name(resolved.command);
        err["error"] = e.what();
        write_text((dir / "error.json").string(), err.dump(2) + "\n");
        throw;
    }
    return dir.string();
}

StoredResult load_result(const std::string& dir) {
    StoredResult st;
    st.config = parse_config(read_text(dir + "/resolved_config.json"));
    st.params = st.config.params;
    const json rj = json::parse(read_text(dir + "/result.json"));

    Profile p;
    p.v = load_real_field(dir + "/fields/v.fld");
    const GridPtr g = p.v.grid;
    for (int j = 0; j < st.params.N; ++j) {
        RealField f =
            load_real_field(dir + "/fields/u" + two_digits(j) + ".fld");
        if (f.grid->M != g->M || f.grid->L != g->L)
            throw std::runtime_error("stored fields disagree on the grid");
        f.grid = g;  // share one grid instance across the profile
        p.u.push_back(std::move(f));
    }
    if (g->M != st.config.grid.M || g->L != st.config.grid.L)
        throw std::runtime_error(
            "stored fields do not match the stored grid spec");

    MinimizerResult& r = st.result;
    r.profile = std::move(p);
    r.energy_value = rj["energy"].get<double>();
    r.mu = rj["mu"].get<double>();
    r.residuals = rj["residuals"].get<std::vector<double>>();
    r.iters = rj["iters"].get<int>();
    r.converged = rj["converged"].get<bool>();
    r.stop_reason = rj["stop_reason"].get<std::string>();
    r.possibly_trivial = rj["possibly_trivial"].get<bool>();
    if (rj.contains("energy_trace"))
        r.energy_trace = rj["energy_trace"].get<std::vector<double>>();
    st.grid = g;
    return st;
}

std::vector<std::string> validate_dir(const std::string& dir) {
    try {
        if (!fs::exists(dir))
            return {"directory \"" + dir + "\" does not exist"};
        if (fs::exists(dir + "/scan.csv")) return validate_scan_dir(dir);
        if (fs::exists(dir + "/evolution.json")) return validate_evolve_dir(dir);
        if (fs::exists(dir + "/result.json")) return validate_solve_dir(dir);
        return {"no recognized artifacts under \"" + dir + "\""};
    } catch (const std::exception& e) {
        return {std::string("validation error: ") + e.what()};
    }
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

} // namespace lwsw
