#ifndef ILR_CLI_COMMANDS_HPP
#define ILR_CLI_COMMANDS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ilr_cli/config.hpp"

namespace ilr_cli {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_io = 2,
    exit_partial_failure = 3,
    exit_bad_reference = 4,
};

/// Raised when an output file or directory cannot be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes `<output_dir>/table3.csv`.
int cmd_table3(const RunConfig& cfg, std::ostream& log);

/// Writes per-scenario summaries, `comparisons.csv` and `manifest.json`; SVGs too when `emit_svg` is set.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// Writes Q-Q pairs for one scenario and 1-based coordinate. `out_file` defaults to
/// `<output_dir>/qq_<label>_coord<I>.csv`.
int cmd_qq(const RunConfig& cfg, const std::string& label, int coord, ilrapprox::ApproxVariant variant,
           const std::optional<std::string>& out_file, std::ostream& log);

/// Renders SVG figures from `comparisons.csv`, running the simulation first if it is missing.
int cmd_figures(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/**
 * One line of `comparisons.csv`.
 */
struct ComparisonRow {
    std::string label;
    std::string dgd;
    std::size_t alpha_tilde_index = 0;
    std::string alpha_s;
    std::string total;
    std::string sigma_sq;
    std::string variant;
    std::string quantity;
    int index = 0;
    double empirical = 0.0;
    double approx = 0.0;
    double log_ratio = 0.0;
    bool sign_mismatch = false;
    double zero_fraction = 0.0;
};

inline constexpr const char* comparisons_header =
    "label,dgd,alpha_tilde_index,alpha_s,total,sigma_sq,variant,quantity,index,empirical,approx,log_ratio,"
    "sign_mismatch,zero_fraction";

std::vector<ComparisonRow> read_comparisons(const std::string& path);

}

#endif
