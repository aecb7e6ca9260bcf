#ifndef ILR_CLI_CONFIG_HPP
#define ILR_CLI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilrapprox/ilrapprox.hpp"

namespace ilr_cli {

/**
 * Parameter grid. Scenarios are the cross product of every list that applies
 * to each selected distribution.
 */
struct GridConfig {
    std::vector<ilrapprox::Dgd> dgd;
    std::vector<std::vector<double>> alpha_tilde;
    /// Only used by the Dirichlet models.
    std::vector<double> alpha_s;
    /// Fixed K for (a)/(b); the median exp(mu) for (c)/(d).
    std::vector<double> totals;
    /// Only used by the lognormal-total models.
    std::vector<double> sigma_sq;
    /// Explicit partition; unset means pivotal.
    std::optional<std::vector<std::vector<int>>> sbp;
    double zero_replacement = 0.5;

    bool operator==(const GridConfig&) const = default;
};

struct RunConfig {
    std::uint64_t master_seed = 1;
    std::int64_t n_draws = 10000;
    std::string output_dir = "ilr_out";
    bool emit_svg = false;
    std::size_t parallel = 1;
    ilrapprox::CorrectionMode correction = ilrapprox::CorrectionMode::consistent;
    ilrapprox::ZeroPolicy zero_policy = ilrapprox::ZeroPolicy::renormalize;
    GridConfig grid;

    bool operator==(const RunConfig&) const = default;
};

/// Thrown for malformed or out-of-range configuration values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Reads and validates a JSON config file. Throws `std::ios_base::failure` when unreadable.
RunConfig load_config(const std::string& path);

/// FNV-1a over the canonical JSON echo of the config, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Expands the grid in a fixed order. Each scenario's seed derives from the master seed and its label.
std::vector<ilrapprox::Scenario> expand_scenarios(const RunConfig& cfg);

/// Shortest round-trip decimal form; integers print without exponent.
std::string format_number(double v);

std::string_view correction_name(ilrapprox::CorrectionMode m);
std::string_view zero_policy_name(ilrapprox::ZeroPolicy p);

}

#endif
