#ifndef ILR_CLI_SVG_HPP
#define ILR_CLI_SVG_HPP

#include <string>
#include <vector>

#include "ilrapprox/composition.hpp"

namespace ilr_cli {

/// One stacked-composition panel: each draw becomes a vertical bar of class proportions.
struct CompositionPanel {
    std::string title;
    std::vector<ilrapprox::CountVector> draws;
};

/// Panels are laid out `columns` per row. Draws are sorted by descending last-class count.
std::string render_compositions(const std::string& title, std::vector<CompositionPanel> panels, std::size_t columns);

struct LogRatioSeries {
    std::string name;
    /// Dots joined by lines (Dirichlet families) or free-standing (multinomial).
    bool connected = true;
    /// Per x position, one value per coordinate; NaN entries are skipped.
    std::vector<std::vector<double>> values;
};

/**
 * One panel per coordinate with the x positions labelled by `x_labels` and a
 * zero reference line.
 */
std::string render_log_ratio_figure(const std::string& title, const std::string& y_label,
                                    const std::vector<std::string>& x_labels, std::size_t coords,
                                    const std::vector<LogRatioSeries>& series);

}

#endif
