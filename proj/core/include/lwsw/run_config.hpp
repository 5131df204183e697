// Strict JSON run configuration: unknown keys are rejected with a
// nearest-match suggestion, types are checked, defaults are filled in and
// recorded in the resolved config written next to the results.
#pragma once

#include <string>
#include <vector>

#include "evolve.hpp"
#include "minimize.hpp"
#include "scan.hpp"

namespace lwsw {

enum class Command { solve, scan, evolve, validate };

struct GridSpec {
    double L = 40.0;
    int M = 1024;
};

struct ScanSpec {
    std::vector<double> lambdas;
    int n_seeds = 2;
    int jobs = 0;
};

struct EvolveSpec {
    double T = 1.0;
    double dt = 1e-3;
    int substeps_nl = 1;
    int record_every = 0;
    std::string from;  // directory of a stored solve result
};

struct RunConfig {
    Command command = Command::solve;
    CouplingParams params;
    GridSpec grid;
    SolveOptions solve;
    ScanSpec scan;
    EvolveSpec evolve;
    std::string output_dir;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Round trip: parse_config(dump_config(c)) reproduces c.
std::string dump_config(const RunConfig& c);

const char* command_name(Command c);

} // namespace lwsw
