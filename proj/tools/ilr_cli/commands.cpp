#include "ilr_cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ilr_cli/svg.hpp"

namespace ilr_cli {

namespace fs = std::filesystem;
using namespace ilrapprox;

namespace {

constexpr const char* tool_version = "0.1.0";
constexpr std::size_t composition_panel_draws = 100;

void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

std::string num(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fixed2(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

struct PlannedScenario {
    Scenario scenario;
    std::size_t alpha_tilde_index;
};

std::size_t alpha_tilde_index_of(const RunConfig& cfg, const Scenario& s) {
    const auto& p = s.model.mean_probabilities().parts();
    for (std::size_t i = 0; i < cfg.grid.alpha_tilde.size(); ++i) {
        if (cfg.grid.alpha_tilde[i] == p) {
            return i;
        }
    }
    return 0;
}

std::string alpha_s_field(const Scenario& s) {
    const auto* dir = s.model.dirichlet();
    return dir ? format_number(dir->alpha_s()) : "";
}

std::string sigma_sq_field(const Scenario& s) {
    if (const auto* ln = std::get_if<LognormalTotal>(&s.model.total())) {
        return format_number(ln->sigma_sq);
    }
    return "";
}

std::string total_field(const Scenario& s) {
    const double k = nominal_total(s.model);
    return format_number(std::round(k) == k ? k : std::round(k * 1e6) / 1e6);
}

std::string summary_csv(const EmpiricalSummary& e) {
    std::ostringstream out;
    out << "quantity,i,j,value\n";
    out << "n_draws,,," << e.n_draws << '\n';
    out << "zero_fraction,,," << num(e.zero_fraction) << '\n';
    for (std::size_t i = 0; i < e.mean_ilr.size(); ++i) {
        out << "mean_ilr," << i + 1 << ",," << num(e.mean_ilr[i]) << '\n';
    }
    for (std::size_t i = 0; i < e.cov_ilr.dim(); ++i) {
        for (std::size_t j = 0; j < e.cov_ilr.dim(); ++j) {
            out << "cov_ilr," << i + 1 << ',' << j + 1 << ',' << num(e.cov_ilr(i, j)) << '\n';
        }
    }
    for (std::size_t i = 0; i < e.eigenvalues.size(); ++i) {
        out << "eigenvalue," << i + 1 << ",," << num(e.eigenvalues[i]) << '\n';
    }
    for (std::size_t i = 0; i < e.mean_props.size(); ++i) {
        out << "mean_prop," << i + 1 << ",," << num(e.mean_props[i]) << '\n';
    }
    for (std::size_t i = 0; i < e.cov_props.dim(); ++i) {
        for (std::size_t j = 0; j < e.cov_props.dim(); ++j) {
            out << "cov_prop," << i + 1 << ',' << j + 1 << ',' << num(e.cov_props(i, j)) << '\n';
        }
    }
    return out.str();
}

std::vector<ComparisonRow> comparison_rows(const RunConfig& cfg, const std::vector<ScenarioResult>& results) {
    std::vector<ComparisonRow> rows;
    for (const auto& r : results) {
        if (!r.ok()) {
            continue;
        }
        const auto& s = r.scenario;
        const auto& e = *r.summary;
        ComparisonRow base;
        base.label = s.label;
        base.dgd = std::string(dgd_code(s.model.dgd()));
        base.alpha_tilde_index = alpha_tilde_index_of(cfg, s);
        base.alpha_s = alpha_s_field(s);
        base.total = total_field(s);
        base.sigma_sq = sigma_sq_field(s);
        base.zero_fraction = e.zero_fraction;
        for (const auto& c : r.comparisons) {
            base.variant = std::string(variant_name(c.variant));
            for (std::size_t i = 0; i < e.mean_ilr.size(); ++i) {
                ComparisonRow row = base;
                row.quantity = "mean";
                row.index = static_cast<int>(i + 1);
                row.empirical = e.mean_ilr[i];
                row.approx = c.approx.mean[i];
                row.log_ratio = c.report.log_ratio_means[i];
                row.sign_mismatch = c.report.sign_mismatch[i];
                rows.push_back(row);
            }
            for (std::size_t i = 0; i < e.eigenvalues.size(); ++i) {
                ComparisonRow row = base;
                row.quantity = "eigenvalue";
                row.index = static_cast<int>(i + 1);
                row.empirical = e.eigenvalues[i];
                row.approx = c.report.approx_eigenvalues[i];
                row.log_ratio = c.report.log_ratio_eigs[i];
                row.sign_mismatch = false;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::string comparisons_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << comparisons_header << '\n';
    for (const auto& r : rows) {
        out << r.label << ',' << r.dgd << ',' << r.alpha_tilde_index << ',' << r.alpha_s << ',' << r.total << ','
            << r.sigma_sq << ',' << r.variant << ',' << r.quantity << ',' << r.index << ',' << num(r.empirical) << ','
            << num(r.approx) << ',' << num(r.log_ratio) << ',' << (r.sign_mismatch ? 1 : 0) << ','
            << num(r.zero_fraction) << '\n';
    }
    return out.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

fs::path out_dir(const RunConfig& cfg) { return fs::path(cfg.output_dir); }

double total_sort_key(const std::string& total) { return total.empty() ? 0.0 : parse_double(total); }

/// Renders the log-ratio figures for one approximation variant and quantity.
void write_log_ratio_figures(const RunConfig& cfg, const std::vector<ComparisonRow>& rows, const std::string& stem,
                             const std::string& variant, const std::string& quantity, const std::string& title,
                             std::ostream& log) {
    // Group by alpha_tilde vector and by total-count family (fixed, or lognormal per sigma_sq).
    std::map<std::pair<std::size_t, std::string>, std::vector<const ComparisonRow*>> groups;
    for (const auto& r : rows) {
        if (r.variant == variant && r.quantity == quantity) {
            groups[{r.alpha_tilde_index, r.sigma_sq}].push_back(&r);
        }
    }
    for (const auto& [key, members] : groups) {
        std::set<std::pair<double, std::string>> totals;
        std::size_t coords = 0;
        for (const auto* r : members) {
            totals.insert({total_sort_key(r->total), r->total});
            coords = std::max<std::size_t>(coords, static_cast<std::size_t>(r->index));
        }
        std::vector<std::string> x_labels;
        std::map<std::string, std::size_t> x_of;
        for (const auto& [k, label] : totals) {
            x_of[label] = x_labels.size();
            x_labels.push_back(label);
        }

        // One series per model family; the multinomial ones are drawn unconnected.
        std::map<std::pair<double, std::string>, LogRatioSeries> series;
        for (const auto* r : members) {
            const bool dirichlet = r->dgd == "b" || r->dgd == "d";
            const double order = dirichlet ? parse_double(r->alpha_s) : std::numeric_limits<double>::infinity();
            auto& s = series[{order, r->dgd}];
            if (s.values.empty()) {
                s.name = dirichlet ? "alpha_S = " + r->alpha_s : std::string("Mn");
                if (!r->sigma_sq.empty()) {
                    s.name += " (LN, sigma^2 = " + r->sigma_sq + ")";
                }
                s.connected = dirichlet;
                s.values.assign(x_labels.size(),
                                std::vector<double>(coords, std::numeric_limits<double>::quiet_NaN()));
            }
            s.values[x_of.at(r->total)][static_cast<std::size_t>(r->index - 1)] = r->log_ratio;
        }
        std::vector<LogRatioSeries> ordered;
        for (auto& [k, s] : series) {
            ordered.push_back(std::move(s));
        }

        const std::string family = key.second.empty() ? "fixed" : "lognormal_s2_" + key.second;
        const auto path = out_dir(cfg) / (stem + "_at" + std::to_string(key.first) + "_" + family + ".svg");
        write_file(path, render_log_ratio_figure(title, "log(empirical / approximate)", x_labels, coords, ordered));
        log << "wrote " << path.string() << '\n';
    }
}

void write_composition_figures(const RunConfig& cfg, const std::vector<Scenario>& scenarios, std::ostream& log) {
    for (std::size_t ai = 0; ai < cfg.grid.alpha_tilde.size(); ++ai) {
        std::vector<CompositionPanel> panels;
        std::size_t columns = 0;
        for (double k : cfg.grid.totals) {
            std::size_t in_row = 0;
            // Dirichlet panels by increasing alpha_s, then the multinomial panel.
            for (const auto* dgd_filter : {"b", "a"}) {
                for (const auto& s : scenarios) {
                    const auto* fixed = std::get_if<FixedTotal>(&s.model.total());
                    if (fixed == nullptr || static_cast<double>(fixed->k) != k ||
                        dgd_code(s.model.dgd()) != dgd_filter || alpha_tilde_index_of(cfg, s) != ai) {
                        continue;
                    }
                    CompositionPanel panel;
                    panel.title = s.model.dirichlet() ? "alpha_S = " + format_number(s.model.dirichlet()->alpha_s())
                                                      : std::string("Mn");
                    panel.title += ", K = " + format_number(k);
                    RandomStream rng(derive_seed(s.seed, 1));
                    for (std::size_t i = 0; i < composition_panel_draws; ++i) {
                        panel.draws.push_back(sample_counts(s.model, rng));
                    }
                    panels.push_back(std::move(panel));
                    ++in_row;
                }
            }
            columns = std::max(columns, in_row);
        }
        if (panels.empty()) {
            continue;
        }
        const auto path = out_dir(cfg) / ("fig1_compositions_at" + std::to_string(ai) + ".svg");
        write_file(path, render_compositions("Compositions of counts (sorted by descending last-class count)",
                                             std::move(panels), columns));
        log << "wrote " << path.string() << '\n';
    }
}

void write_figures(const RunConfig& cfg, const std::vector<Scenario>& scenarios,
                   const std::vector<ComparisonRow>& rows, std::ostream& log) {
    write_composition_figures(cfg, scenarios, log);
    write_log_ratio_figures(cfg, rows, "fig2_mean_corrected", "corrected", "mean",
                            "Expectations: empirical vs corrected approximation", log);
    write_log_ratio_figures(cfg, rows, "fig3_eigen_corrected", "corrected", "eigenvalue",
                            "Eigenvalues: empirical vs corrected approximation", log);
    write_log_ratio_figures(cfg, rows, "fig4_mean_multinomial", "multinomial", "mean",
                            "Expectations: empirical vs multinomial approximation", log);
    write_log_ratio_figures(cfg, rows, "fig5_eigen_multinomial", "multinomial", "eigenvalue",
                            "Eigenvalues: empirical vs multinomial approximation", log);
}

/// Table rows in the published order: Mn, Dir-Mn by alpha_s, then per sigma_sq LN-Mn and LN-Dir-Mn by alpha_s.
std::vector<ExcessRow> table3_rows(const RunConfig& cfg) {
    const auto& g = cfg.grid;
    auto selected = [&](Dgd d) { return std::find(g.dgd.begin(), g.dgd.end(), d) != g.dgd.end(); };
    std::vector<ExcessRow> rows;
    if (selected(Dgd::multinomial)) {
        rows.push_back({Dgd::multinomial, infinite_concentration, 0.0, g.totals});
    }
    if (selected(Dgd::dirichlet_multinomial)) {
        for (double a : g.alpha_s) {
            rows.push_back({Dgd::dirichlet_multinomial, a, 0.0, g.totals});
        }
    }
    for (double s2 : g.sigma_sq) {
        if (selected(Dgd::lognormal_multinomial)) {
            rows.push_back({Dgd::lognormal_multinomial, infinite_concentration, s2, g.totals});
        }
        if (selected(Dgd::lognormal_dirichlet_multinomial)) {
            for (double a : g.alpha_s) {
                rows.push_back({Dgd::lognormal_dirichlet_multinomial, a, s2, g.totals});
            }
        }
    }
    return rows;
}

}

std::vector<ComparisonRow> read_comparisons(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read '" + path + "'");
    }
    std::string line;
    std::getline(in, line);
    if (line != comparisons_header) {
        throw IoError("'" + path + "' does not have the comparisons header");
    }
    std::vector<ComparisonRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 14) {
            throw IoError("malformed line in '" + path + "': " + line);
        }
        ComparisonRow r;
        r.label = f[0];
        r.dgd = f[1];
        r.alpha_tilde_index = static_cast<std::size_t>(std::stoul(f[2]));
        r.alpha_s = f[3];
        r.total = f[4];
        r.sigma_sq = f[5];
        r.variant = f[6];
        r.quantity = f[7];
        r.index = std::stoi(f[8]);
        r.empirical = parse_double(f[9]);
        r.approx = parse_double(f[10]);
        r.log_ratio = parse_double(f[11]);
        r.sign_mismatch = f[12] == "1";
        r.zero_fraction = parse_double(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

int cmd_table3(const RunConfig& cfg, std::ostream& log) {
    std::ostringstream csv;
    csv << "dgd,alpha_s,sigma_sq,K,excess\n";
    for (const auto& cell : excess_variability_table(table3_rows(cfg))) {
        csv << dgd_code(cell.dgd) << ',' << (std::isinf(cell.alpha_s) ? "" : format_number(cell.alpha_s)) << ','
            << (has_lognormal_total(cell.dgd) ? format_number(cell.sigma_sq) : "") << ',' << format_number(cell.k)
            << ',' << fixed2(cell.excess) << '\n';
    }
    try {
        const auto path = out_dir(cfg) / "table3.csv";
        write_file(path, csv.str());
        log << "wrote " << path.string() << '\n';
    } catch (const IoError& ex) {
        log << "error: " << ex.what() << '\n';
        return exit_io;
    }
    return exit_ok;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    const auto scenarios = expand_scenarios(cfg);
    const auto results = run_grid(scenarios, GridOptions{cfg.parallel, cfg.correction});
    const auto rows = comparison_rows(cfg, results);

    nlohmann::json manifest;
    manifest["tool"] = "ilr-approx";
    manifest["version"] = tool_version;
    manifest["json_library"] = "nlohmann/json " + std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                               std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    manifest["master_seed"] = cfg.master_seed;
    manifest["config_hash"] = config_hash(cfg);
    manifest["config"] = config_to_json(cfg);
    auto entries = nlohmann::json::array();
    std::size_t failed = 0;
    for (const auto& r : results) {
        nlohmann::json e;
        e["label"] = r.scenario.label;
        e["seed"] = r.scenario.seed;
        e["status"] = r.ok() ? "ok" : "failed";
        if (!r.ok()) {
            e["error"] = r.error;
            ++failed;
            log << "scenario " << r.scenario.label << " failed: " << r.error << '\n';
        }
        entries.push_back(std::move(e));
    }
    manifest["scenarios"] = entries;

    try {
        for (const auto& r : results) {
            if (r.ok()) {
                write_file(out_dir(cfg) / "summaries" / (r.scenario.label + ".csv"), summary_csv(*r.summary));
            }
        }
        write_file(out_dir(cfg) / "comparisons.csv", comparisons_csv(rows));
        write_file(out_dir(cfg) / "manifest.json", manifest.dump(2) + "\n");
        log << "wrote " << results.size() - failed << " scenario summaries, comparisons.csv and manifest.json to "
            << cfg.output_dir << '\n';
        if (cfg.emit_svg) {
            write_figures(cfg, scenarios, rows, log);
        }
    } catch (const IoError& ex) {
        log << "error: " << ex.what() << '\n';
        return exit_io;
    }
    return failed > 0 ? exit_partial_failure : exit_ok;
}

int cmd_qq(const RunConfig& cfg, const std::string& label, int coord, ApproxVariant variant,
           const std::optional<std::string>& out_file, std::ostream& log) {
    const auto scenarios = expand_scenarios(cfg);
    const auto it = std::find_if(scenarios.begin(), scenarios.end(), [&](const auto& s) { return s.label == label; });
    if (it == scenarios.end()) {
        log << "error: no scenario labelled '" << label << "' in this config\n";
        return exit_bad_reference;
    }
    const auto coords = static_cast<int>(it->model.parts()) - 1;
    if (coord < 1 || coord > coords) {
        log << "error: coordinate " << coord << " outside 1.." << coords << '\n';
        return exit_bad_reference;
    }

    const auto summary = run_scenario(*it);
    const auto approx = make_approx(variant, it->model, contrast_matrix(it->sbp), cfg.correction);
    const auto c = static_cast<std::size_t>(coord - 1);
    const auto qq = qq_series(summary.sorted_coords[c], approx, c);

    std::ostringstream csv;
    csv << "theoretical,sample\n";
    for (std::size_t i = 0; i < qq.sample_quantiles.size(); ++i) {
        csv << num(qq.theoretical_quantiles[i]) << ',' << num(qq.sample_quantiles[i]) << '\n';
    }
    const fs::path path =
        out_file ? fs::path(*out_file) : out_dir(cfg) / ("qq_" + label + "_coord" + std::to_string(coord) + ".csv");
    try {
        write_file(path, csv.str());
    } catch (const IoError& ex) {
        log << "error: " << ex.what() << '\n';
        return exit_io;
    }
    log << "wrote " << path.string() << " (Q-Q correlation " << num(qq_correlation(qq)) << ")\n";
    return exit_ok;
}

int cmd_figures(const RunConfig& cfg, std::ostream& log) {
    const auto scenarios = expand_scenarios(cfg);
    if (scenarios.empty()) {
        log << "empty grid; nothing to draw\n";
        return exit_ok;
    }
    const auto csv_path = out_dir(cfg) / "comparisons.csv";
    int status = exit_ok;
    if (!fs::exists(csv_path)) {
        RunConfig no_svg = cfg;
        no_svg.emit_svg = false;
        status = cmd_simulate(no_svg, log);
        if (status == exit_io) {
            return status;
        }
    }
    try {
        write_figures(cfg, scenarios, read_comparisons(csv_path.string()), log);
    } catch (const IoError& ex) {
        log << "error: " << ex.what() << '\n';
        return exit_io;
    }
    return status;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Normal approximations of ilr coordinates under compound multinomial counts"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_override;
    std::optional<std::int64_t> draws;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallel;
    bool svg = false;
    std::string label;
    int coord = 0;
    std::string variant_text = "corrected";
    std::optional<std::string> qq_file;

    auto* table3 = app.add_subcommand("table3", "Excess variability of proportions (closed form)");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo run over the configured grid");
    auto* qq = app.add_subcommand("qq", "Normal Q-Q pairs for one scenario and coordinate");
    auto* figures = app.add_subcommand("figures", "SVG figures from the simulation output");

    for (auto* sub : {table3, simulate, qq, figures}) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_override, "Output directory (overrides output_dir)");
    }
    for (auto* sub : {simulate, qq, figures}) {
        sub->add_option("--draws", draws, "Draws per scenario")->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
        sub->add_option("--seed", seed, "Master seed");
    }
    for (auto* sub : {simulate, figures}) {
        sub->add_option("--parallel", parallel, "Scenarios run concurrently")->check(CLI::PositiveNumber);
    }
    simulate->add_flag("--svg", svg, "Also render SVG figures");
    qq->add_option("--scenario", label, "Scenario label")->required();
    qq->add_option("--coord", coord, "1-based ilr coordinate")->required();
    qq->add_option("--variant", variant_text, "plugin | corrected | multinomial")
        ->check(CLI::IsMember({"plugin", "corrected", "multinomial"}));
    qq->add_option("--file", qq_file, "Output CSV path");

    std::vector<std::string> argv_store{"ilr-approx"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) {
        argv.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::ios_base::failure& ex) {
        err << "error: " << ex.what() << '\n';
        return exit_io;
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return exit_usage;
    }
    if (out_override) cfg.output_dir = *out_override;
    if (draws) cfg.n_draws = *draws;
    if (seed) cfg.master_seed = *seed;
    if (parallel) cfg.parallel = *parallel;
    if (svg) cfg.emit_svg = true;

    try {
        if (table3->parsed()) {
            return cmd_table3(cfg, err);
        }
        if (simulate->parsed()) {
            return cmd_simulate(cfg, err);
        }
        if (qq->parsed()) {
            const auto variant = variant_text == "plugin"        ? ApproxVariant::plugin
                                 : variant_text == "multinomial" ? ApproxVariant::multinomial
                                                                 : ApproxVariant::corrected;
            return cmd_qq(cfg, label, coord, variant, qq_file, err);
        }
        return cmd_figures(cfg, err);
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return exit_usage;
    } catch (const ilrapprox::Error& ex) {
        err << "error: " << ex.what() << '\n';
        return exit_usage;
    }
}

}
