#include "ilr_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ilr_cli {

using ilrapprox::Dgd;
using nlohmann::json;

std::string format_number(double v) {
    if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<std::int64_t>(v));
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string_view correction_name(ilrapprox::CorrectionMode m) {
    return m == ilrapprox::CorrectionMode::consistent ? "consistent" : "literal";
}

std::string_view zero_policy_name(ilrapprox::ZeroPolicy p) {
    return p == ilrapprox::ZeroPolicy::renormalize ? "renormalize" : "divide_by_original_total";
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config field '") + key + "': " + ex.what());
    }
}

void require_positive(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string(what) + " values must be positive and finite");
        }
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.n_draws < 2) {
        throw ConfigError("n_draws must be >= 2");
    }
    if (cfg.parallel < 1) {
        throw ConfigError("parallel must be >= 1");
    }
    const auto& g = cfg.grid;
    if (!(g.zero_replacement >= 0.0) || !std::isfinite(g.zero_replacement)) {
        throw ConfigError("zero_replacement must be a nonnegative number");
    }
    if (g.dgd.empty()) {
        return;
    }
    if (g.alpha_tilde.empty()) {
        throw ConfigError("grid.alpha_tilde must list at least one probability vector");
    }
    if (g.totals.empty()) {
        throw ConfigError("grid.totals must not be empty");
    }
    require_positive(g.totals, "grid.totals");
    for (const auto& at : g.alpha_tilde) {
        try {
            ilrapprox::Composition c(at);
        } catch (const ilrapprox::Error& ex) {
            throw ConfigError(std::string("grid.alpha_tilde: ") + ex.what());
        }
        if (g.sbp && g.sbp->size() != at.size()) {
            throw ConfigError("grid.sbp has a different number of parts than grid.alpha_tilde");
        }
    }
    if (g.sbp) {
        const auto report = ilrapprox::validate_sbp(*g.sbp);
        if (!report.ok) {
            throw ConfigError("grid.sbp: " + report.message);
        }
    }
    bool dirichlet = false;
    bool lognormal = false;
    for (auto d : g.dgd) {
        dirichlet |= ilrapprox::has_dirichlet(d);
        lognormal |= ilrapprox::has_lognormal_total(d);
        if (!ilrapprox::has_lognormal_total(d)) {
            for (double k : g.totals) {
                if (k != std::trunc(k)) {
                    throw ConfigError("fixed totals must be integers");
                }
            }
        }
    }
    if (dirichlet) {
        if (g.alpha_s.empty()) {
            throw ConfigError("grid.alpha_s must not be empty for Dirichlet models");
        }
        require_positive(g.alpha_s, "grid.alpha_s");
    }
    if (lognormal) {
        if (g.sigma_sq.empty()) {
            throw ConfigError("grid.sigma_sq must not be empty for lognormal models");
        }
        require_positive(g.sigma_sq, "grid.sigma_sq");
    }
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig cfg;
    cfg.master_seed = get_or<std::uint64_t>(j, "master_seed", cfg.master_seed);
    cfg.n_draws = get_or<std::int64_t>(j, "n_draws", cfg.n_draws);
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.emit_svg = get_or<bool>(j, "emit_svg", cfg.emit_svg);
    cfg.parallel = get_or<std::size_t>(j, "parallel", cfg.parallel);

    const auto correction = get_or<std::string>(j, "correction_mode", "consistent");
    if (correction == "consistent") {
        cfg.correction = ilrapprox::CorrectionMode::consistent;
    } else if (correction == "literal") {
        cfg.correction = ilrapprox::CorrectionMode::literal;
    } else {
        throw ConfigError("correction_mode must be 'consistent' or 'literal'");
    }
    const auto policy = get_or<std::string>(j, "zero_policy", "renormalize");
    if (policy == "renormalize") {
        cfg.zero_policy = ilrapprox::ZeroPolicy::renormalize;
    } else if (policy == "divide_by_original_total") {
        cfg.zero_policy = ilrapprox::ZeroPolicy::divide_by_original_total;
    } else {
        throw ConfigError("zero_policy must be 'renormalize' or 'divide_by_original_total'");
    }

    if (!j.contains("grid") || !j.at("grid").is_object()) {
        throw ConfigError("config requires a 'grid' object");
    }
    const auto& g = j.at("grid");
    for (const auto& code : get_or<std::vector<std::string>>(g, "dgd", {})) {
        try {
            cfg.grid.dgd.push_back(ilrapprox::parse_dgd(code));
        } catch (const ilrapprox::Error& ex) {
            throw ConfigError(ex.what());
        }
    }
    cfg.grid.alpha_tilde = get_or<std::vector<std::vector<double>>>(g, "alpha_tilde", {});
    cfg.grid.alpha_s = get_or<std::vector<double>>(g, "alpha_s", {});
    cfg.grid.totals = get_or<std::vector<double>>(g, "totals", {});
    cfg.grid.sigma_sq = get_or<std::vector<double>>(g, "sigma_sq", {});
    cfg.grid.zero_replacement = get_or<double>(g, "zero_replacement", cfg.grid.zero_replacement);
    if (g.contains("sbp")) {
        const auto& s = g.at("sbp");
        if (s.is_string()) {
            if (s.get<std::string>() != "pivotal") {
                throw ConfigError("grid.sbp must be \"pivotal\" or a sign matrix");
            }
        } else {
            cfg.grid.sbp = get_or<std::vector<std::vector<int>>>(g, "sbp", {});
        }
    }
    validate(cfg);
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    json g;
    std::vector<std::string> codes;
    for (auto d : cfg.grid.dgd) {
        codes.emplace_back(ilrapprox::dgd_code(d));
    }
    g["dgd"] = codes;
    g["alpha_tilde"] = cfg.grid.alpha_tilde;
    g["alpha_s"] = cfg.grid.alpha_s;
    g["totals"] = cfg.grid.totals;
    g["sigma_sq"] = cfg.grid.sigma_sq;
    g["zero_replacement"] = cfg.grid.zero_replacement;
    if (cfg.grid.sbp) {
        g["sbp"] = *cfg.grid.sbp;
    } else {
        g["sbp"] = "pivotal";
    }

    json j;
    j["master_seed"] = cfg.master_seed;
    j["n_draws"] = cfg.n_draws;
    j["output_dir"] = cfg.output_dir;
    j["emit_svg"] = cfg.emit_svg;
    j["parallel"] = cfg.parallel;
    j["correction_mode"] = correction_name(cfg.correction);
    j["zero_policy"] = zero_policy_name(cfg.zero_policy);
    j["grid"] = g;
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::ios_base::failure("cannot read config file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + ex.what());
    }
    return config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << fnv1a(config_to_json(cfg).dump());
    return out.str();
}

std::vector<ilrapprox::Scenario> expand_scenarios(const RunConfig& cfg) {
    using namespace ilrapprox;
    const auto& g = cfg.grid;
    std::vector<Scenario> out;

    for (std::size_t ai = 0; ai < g.alpha_tilde.size() && !g.dgd.empty(); ++ai) {
        const Composition at(g.alpha_tilde[ai]);
        const SbpMatrix sbp = g.sbp ? make_sbp(*g.sbp) : pivotal_sbp(at.size());
        const std::string prefix = "_at" + std::to_string(ai);

        auto add = [&](ModelSpec model, std::string label) {
            const std::uint64_t seed = derive_seed(cfg.master_seed, fnv1a(label));
            out.push_back(Scenario{std::move(model), sbp, cfg.n_draws, g.zero_replacement, cfg.zero_policy, seed,
                                   std::move(label)});
        };

        for (auto d : g.dgd) {
            const std::string code(dgd_code(d));
            switch (d) {
            case Dgd::multinomial:
                for (double k : g.totals) {
                    add(ModelSpec::multinomial(at, static_cast<std::int64_t>(k)), code + prefix + "_k" + format_number(k));
                }
                break;
            case Dgd::dirichlet_multinomial:
                for (double as : g.alpha_s) {
                    for (double k : g.totals) {
                        add(ModelSpec::dirichlet_multinomial(DirichletSpec(at, as), static_cast<std::int64_t>(k)),
                            code + prefix + "_as" + format_number(as) + "_k" + format_number(k));
                    }
                }
                break;
            case Dgd::lognormal_multinomial:
                for (double s2 : g.sigma_sq) {
                    for (double k : g.totals) {
                        add(ModelSpec::lognormal_multinomial(at, std::log(k), s2),
                            code + prefix + "_s2" + format_number(s2) + "_k" + format_number(k));
                    }
                }
                break;
            case Dgd::lognormal_dirichlet_multinomial:
                for (double s2 : g.sigma_sq) {
                    for (double as : g.alpha_s) {
                        for (double k : g.totals) {
                            add(ModelSpec::lognormal_dirichlet_multinomial(DirichletSpec(at, as), std::log(k), s2),
                                code + prefix + "_as" + format_number(as) + "_s2" + format_number(s2) + "_k" +
                                    format_number(k));
                        }
                    }
                }
                break;
            }
        }
    }

    std::set<std::string> seen;
    for (const auto& s : out) {
        if (!seen.insert(s.label).second) {
            throw ConfigError("grid produces duplicate scenario '" + s.label + "'; remove repeated values");
        }
    }
    return out;
}

}
