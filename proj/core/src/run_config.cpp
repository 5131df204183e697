#include "lwsw/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lwsw {

namespace {

using nlohmann::json;

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

[[noreturn]] void reject_key(const std::string& scope, const std::string& key,
                             const std::vector<std::string>& allowed) {
    std::string best;
    int best_d = 1 << 20;
    for (const auto& k : allowed) {
        const int d = edit_distance(key, k);
        if (d < best_d) { best_d = d; best = k; }
    }
    std::ostringstream m;
    m << "config: unknown key \"" << key << "\"";
    if (!scope.empty()) m << " in \"" << scope << "\"";
    if (best_d <= std::max<int>(2, static_cast<int>(key.size()) / 3))
        m << " (did you mean \"" << best << "\"?)";
    else {
        m << "; allowed:";
        for (const auto& k : allowed) m << " " << k;
    }
    throw std::invalid_argument(m.str());
}

void check_keys(const json& j, const std::string& scope,
                const std::vector<std::string>& allowed) {
    if (!j.is_object())
        throw std::invalid_argument("config: \"" + scope +
                                    "\" must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            reject_key(scope, it.key(), allowed);
}

[[noreturn]] void type_error(const std::string& scope, const std::string& key,
                             const char* want) {
    throw std::invalid_argument("config: \"" + scope + "." + key +
                                "\" must be " + want);
}

double num_or(const json& j, const std::string& scope, const char* key,
              double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) type_error(scope, key, "a number");
    return j[key].get<double>();
}

long int_or(const json& j, const std::string& scope, const char* key,
            long dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number_integer()) type_error(scope, key, "an integer");
    return j[key].get<long>();
}

bool bool_or(const json& j, const std::string& scope, const char* key,
             bool dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_boolean()) type_error(scope, key, "a boolean");
    return j[key].get<bool>();
}

std::string str_or(const json& j, const std::string& scope, const char* key,
                   const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_string()) type_error(scope, key, "a string");
    return j[key].get<std::string>();
}

std::vector<double> num_array(const json& j, const std::string& scope,
                              const char* key) {
    if (!j.contains(key))
        throw std::invalid_argument("config: \"" + scope + "." + key +
                                    "\" is required");
    if (!j[key].is_array()) type_error(scope, key, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : j[key]) {
        if (!e.is_number()) type_error(scope, key, "an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Command parse_command(const std::string& s) {
    if (s == "solve") return Command::solve;
    if (s == "scan") return Command::scan;
    if (s == "evolve") return Command::evolve;
    if (s == "validate") return Command::validate;
    throw std::invalid_argument(
        "config: command must be one of solve, scan, evolve, validate (got \"" +
        s + "\")");
}

CouplingParams parse_params(const json& j) {
    check_keys(j, "params", {"alpha", "beta", "d", "lambda"});
    CouplingParams p;
    p.alpha = num_array(j, "params", "alpha");
    p.beta = num_array(j, "params", "beta");
    p.N = static_cast<int>(p.alpha.size());
    p.d = num_or(j, "params", "d", 1.0);
    p.lambda = num_or(j, "params", "lambda", 1.0);
    return p;
}

GridSpec parse_grid(const json& j) {
    check_keys(j, "grid", {"L", "M"});
    GridSpec g;
    g.L = num_or(j, "grid", "L", g.L);
    g.M = static_cast<int>(int_or(j, "grid", "M", g.M));
    return g;
}

SolveOptions parse_solve(const json& j) {
    check_keys(j, "solve",
               {"max_iters", "step0", "tol_residual", "tol_energy",
                "enforce_nonneg", "recenter", "seed", "allow_mixed_signs"});
    SolveOptions s;
    s.max_iters = static_cast<int>(int_or(j, "solve", "max_iters", s.max_iters));
    s.step0 = num_or(j, "solve", "step0", s.step0);
    s.tol_residual = num_or(j, "solve", "tol_residual", s.tol_residual);
    s.tol_energy = num_or(j, "solve", "tol_energy", s.tol_energy);
    s.enforce_nonneg = bool_or(j, "solve", "enforce_nonneg", s.enforce_nonneg);
    s.recenter = bool_or(j, "solve", "recenter", s.recenter);
    s.seed = int_or(j, "solve", "seed", s.seed);
    s.allow_mixed_signs =
        bool_or(j, "solve", "allow_mixed_signs", s.allow_mixed_signs);
    return s;
}

ScanSpec parse_scan(const json& j) {
    check_keys(j, "scan", {"lambdas", "n_seeds", "jobs"});
    ScanSpec s;
    if (j.contains("lambdas")) s.lambdas = num_array(j, "scan", "lambdas");
    s.n_seeds = static_cast<int>(int_or(j, "scan", "n_seeds", s.n_seeds));
    s.jobs = static_cast<int>(int_or(j, "scan", "jobs", s.jobs));
    return s;
}

EvolveSpec parse_evolve(const json& j) {
    check_keys(j, "evolve", {"T", "dt", "substeps_nl", "record_every", "from"});
    EvolveSpec e;
    e.T = num_or(j, "evolve", "T", e.T);
    e.dt = num_or(j, "evolve", "dt", e.dt);
    e.substeps_nl =
        static_cast<int>(int_or(j, "evolve", "substeps_nl", e.substeps_nl));
    e.record_every =
        static_cast<int>(int_or(j, "evolve", "record_every", e.record_every));
    e.from = str_or(j, "evolve", "from", e.from);
    return e;
}

[[noreturn]] void invariant_error(const char* path, const std::string& what) {
    throw std::invalid_argument("config: \"" + std::string(path) + "\" " + what);
}

void check_invariants(const RunConfig& c) {
    if (c.command == Command::validate) return;
    const bool needs_params = c.command == Command::solve ||
                              c.command == Command::scan ||
                              !c.params.alpha.empty();
    if (needs_params) {
        if (c.params.N < 1 || c.params.alpha.empty())
            invariant_error("params.alpha", "must list at least one coupling");
        if (c.params.beta.size() != c.params.alpha.size())
            invariant_error("params.beta",
                            "must match the length of params.alpha");
        for (double a : c.params.alpha)
            if (!std::isfinite(a))
                invariant_error("params.alpha", "must be finite");
        for (double b : c.params.beta)
            if (!std::isfinite(b))
                invariant_error("params.beta", "must be finite");
        if (!(c.params.d > 0.0) || !std::isfinite(c.params.d))
            invariant_error("params.d", "must be positive");
        if (!(c.params.lambda > 0.0) || !std::isfinite(c.params.lambda))
            invariant_error("params.lambda", "must be positive");
    }
    if (!(c.grid.L > 0.0)) invariant_error("grid.L", "must be positive");
    if (c.grid.M < 16 || (c.grid.M & (c.grid.M - 1)) != 0)
        invariant_error("grid.M", "must be a power of two >= 16");
    if (c.solve.max_iters < 1)
        invariant_error("solve.max_iters", "must be at least 1");
    if (!(c.solve.step0 > 0.0)) invariant_error("solve.step0", "must be positive");
    if (!(c.solve.tol_residual > 0.0))
        invariant_error("solve.tol_residual", "must be positive");
    if (!(c.solve.tol_energy > 0.0))
        invariant_error("solve.tol_energy", "must be positive");
    if (c.command == Command::scan) {
        for (size_t i = 0; i < c.scan.lambdas.size(); ++i) {
            if (!(c.scan.lambdas[i] > 0.0))
                invariant_error("scan.lambdas", "entries must be positive");
            if (i > 0 && !(c.scan.lambdas[i] > c.scan.lambdas[i - 1]))
                invariant_error("scan.lambdas", "must be strictly increasing");
        }
        if (c.scan.n_seeds < 0)
            invariant_error("scan.n_seeds", "must be nonnegative");
        if (c.scan.jobs < 0) invariant_error("scan.jobs", "must be nonnegative");
    }
    if (c.command == Command::evolve) {
        if (!(c.evolve.T > 0.0)) invariant_error("evolve.T", "must be positive");
        if (!(c.evolve.dt > 0.0)) invariant_error("evolve.dt", "must be positive");
        if (c.evolve.substeps_nl < 1)
            invariant_error("evolve.substeps_nl", "must be at least 1");
        if (c.evolve.record_every < 0)
            invariant_error("evolve.record_every", "must be nonnegative");
    }
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") +
                                    e.what());
    }
    check_keys(j, "",
               {"command", "params", "grid", "solve", "scan", "evolve",
                "output_dir"});
    RunConfig c;
    if (!j.contains("command") || !j["command"].is_string())
        throw std::invalid_argument("config: \"command\" (string) is required");
    c.command = parse_command(j["command"].get<std::string>());
    // solve and scan need couplings up front; evolve inherits them from the
    // stored source result and validate works off the artifacts alone.
    const bool needs_params =
        c.command == Command::solve || c.command == Command::scan;
    if (needs_params && !j.contains("params"))
        throw std::invalid_argument("config: \"params\" is required");
    if (j.contains("params")) c.params = parse_params(j["params"]);
    if (j.contains("grid")) c.grid = parse_grid(j["grid"]);
    if (j.contains("solve")) c.solve = parse_solve(j["solve"]);
    if (j.contains("scan")) c.scan = parse_scan(j["scan"]);
    if (j.contains("evolve")) c.evolve = parse_evolve(j["evolve"]);
    c.output_dir = str_or(j, "", "output_dir", "");

    if (c.command == Command::scan && c.scan.lambdas.empty())
        throw std::invalid_argument(
            "config: scan requires a non-empty \"scan.lambdas\"");
    if (c.command == Command::evolve && c.evolve.from.empty())
        throw std::invalid_argument(
            "config: evolve requires \"evolve.from\" (a stored solve result)");
    check_invariants(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
    json j;
    j["command"] = command_name(c.command);
    j["params"] = {{"alpha", c.params.alpha},
                   {"beta", c.params.beta},
                   {"d", c.params.d},
                   {"lambda", c.params.lambda}};
    j["grid"] = {{"L", c.grid.L}, {"M", c.grid.M}};
    j["solve"] = {{"max_iters", c.solve.max_iters},
                  {"step0", c.solve.step0},
                  {"tol_residual", c.solve.tol_residual},
                  {"tol_energy", c.solve.tol_energy},
                  {"enforce_nonneg", c.solve.enforce_nonneg},
                  {"recenter", c.solve.recenter},
                  {"seed", c.solve.seed},
                  {"allow_mixed_signs", c.solve.allow_mixed_signs}};
    j["scan"] = {{"lambdas", c.scan.lambdas},
                 {"n_seeds", c.scan.n_seeds},
                 {"jobs", c.scan.jobs}};
    j["evolve"] = {{"T", c.evolve.T},
                   {"dt", c.evolve.dt},
                   {"substeps_nl", c.evolve.substeps_nl},
                   {"record_every", c.evolve.record_every},
                   {"from", c.evolve.from}};
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

const char* command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::scan: return "scan";
        case Command::evolve: return "evolve";
        case Command::validate: return "validate";
    }
    return "unknown";
}

} // namespace lwsw
