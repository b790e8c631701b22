#pragma once

#include "ccclab/config.hpp"
#include "ccclab/experiments.hpp"

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace ccclab {

inline constexpr const char* version = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_schema = 2, exit_resource = 3, exit_invariant = 4 };

/// Exit code of an error, looking through NestedError causes for the root.
int exit_code_for(std::exception_ptr error);
/// Messages of the whole cause chain joined with ": ".
std::string describe_error(std::exception_ptr error);

struct RunReport {
    std::vector<Verdict> verdicts;
    bool all_hard_passed = false;
    std::size_t diagonalizations = 0;
    std::size_t cache_hits = 0;
    Json summary;
};

/// Runs every configured experiment over the ensemble and writes the CSVs and
/// summary.json into cfg.output. Progress goes to `log` as JSON lines.
RunReport run_experiments(const RunConfig& cfg, std::ostream& log);

/// Exact identities on the configured realizations (one per seed index);
/// writes verify.json.
RunReport verify_identities(const RunConfig& cfg, std::ostream& log);

/// CLI entry points: load, override, run, print; returns the exit code.
int run_command(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& log);
int verify_command(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& log);

}  // namespace ccclab
