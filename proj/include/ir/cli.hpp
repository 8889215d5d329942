#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ir::cli {

/// Invalid or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by parse_args on --help; what() holds the usage text.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    double alpha = 0.5;
    double beta = 1.0;
    std::optional<double> alpha_lo;
    std::optional<double> alpha_hi;
    std::optional<double> beta_hi;
    int cells = 1 << 14;
    double grading = 3.0;
    int kmax = 100000;
    double tol = 1e-12;
    std::string obs = "x";
    std::string obs2 = "x";
    double delta = 1e-3;
    std::int64_t samples = 10000000;
    std::optional<int> nmax;
    std::uint64_t seed = 1;
    std::optional<double> x0;
    int ell = 5;
    int trials = 100;
    std::string method = "direct";
    std::string out;
    std::string format = "json";
    bool validate_fd = false;
    std::string sweep;

    /// Checks ranges and parameter admissibility; throws ConfigError.
    void validate() const;
    nlohmann::json echo() const;
};

const std::vector<std::string>& commands();

/// Parses argv (flags override an optional --config key=value file).
RunConfig parse_args(int argc, const char* const* argv);

/// Runs one configured command, writing outputs; returns the exit status
/// (0 success, 1 failed check).
int run(const RunConfig& config, std::ostream& out);

/// Full entry point with exit-status mapping (2 on configuration errors).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ir::cli
