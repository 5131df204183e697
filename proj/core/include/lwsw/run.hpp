// Job driver: runs a parsed config end to end, persists results
// (resolved config + scalar JSON + binary field dumps) under the output
// directory, reloads stored artifacts, and re-checks them.
#pragma once

#include <optional>
#include <string>

#include "run_config.hpp"

namespace lwsw {

// Root for relative/unset output_dir; falls back to the cwd when the
// environment variable LWSW_OUT_ROOT is unset.
std::string output_root();

// Executes cfg.command, writes all artifacts under the resolved output
// directory, returns that directory. Throws on failure after writing
// error.json with a machine-readable description.
std::string run(const RunConfig& cfg);

// Stored solve artifacts (also used for scan rows).
struct StoredResult {
    RunConfig config;
    MinimizerResult result;
    CouplingParams params;
    GridPtr grid;
};

StoredResult load_result(const std::string& dir);

// Recompute energy, constraint, multiplier, EL residuals and decay rates
// from the stored fields and compare against the stored scalars (1e-10
// relative). Returns the list of mismatches, empty = pass.
std::vector<std::string> validate_dir(const std::string& dir);

// FNV-1a 64 over bytes, used for input content hashes.
std::string content_hash(const std::string& bytes);

} // namespace lwsw
