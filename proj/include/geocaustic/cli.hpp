#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace geocaustic {

enum ExitCode : int {
    kExitOk = 0,
    kExitBelowThreshold = 1,
    kExitParse = 2,
    kExitNumerical = 3,
    kExitConvexity = 4,
};

/// Settings of one CLI run. Defaults are the documented baseline; a JSON config file (from
/// --config or GEOCAUSTIC_CONFIG) overrides them and command-line flags override both.
struct RunConfig {
    std::string command;
    std::filesystem::path surface;
    std::filesystem::path curve;
    int p_min = -2;
    int p_max = 2;
    int grid_n = 512;
    double t_max = 50.0;
    double epsilon = 1e-4;
    double tol = 1e-3;
    double threshold = 0.99;  // verify: minimum coverage and membership fractions
    std::filesystem::path out = "out";
    std::vector<std::string> formats{"csv", "json", "svg"};
    int jobs = 1;
    std::uint64_t seed = 1;
    int seeds = 1;  // stability: seeds seed, seed + 1, ...
    std::vector<double> lambdas{0.0, 1e-4, 1e-3};
    std::optional<double> lambda_threshold;  // stability: defaults to the largest lambda
    double xi = 0.0;                         // conjugate: curve parameter of the seed

    /// Throws Error(InvalidArgument) for out-of-range settings.
    void validate() const;
    bool wants(const std::string& format) const;
};

/// Parses "A..B" (either bound may be negative).
std::pair<int, int> parse_p_range(const std::string& text);

/// Applies the keys of a JSON config document on top of `config`.
void apply_config(RunConfig& config, const std::string& text, const std::string& source);

/// Commands write progress to `log` and diagnostics to `err`; the result is an exit code.
int cmd_trace(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_stability(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_surfaces(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_conjugate(const RunConfig& config, std::ostream& log, std::ostream& err);

/// Full entry point: argument parsing, config layering, dispatch and exit-code mapping.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geocaustic
