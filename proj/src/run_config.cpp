#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pnl {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError(where + "." + key, "missing required field");
    }
    return *it;
}

double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where, "expected a number");
    return j.get<double>();
}

std::size_t as_count(const json& j, const std::string& where) {
    if (!j.is_number_unsigned()) throw ConfigError(where, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

std::uint64_t as_seed(const json& j, const std::string& where) {
    if (!j.is_number_unsigned()) throw ConfigError(where, "expected a nonnegative integer seed");
    return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where, "expected a string");
    return j.get<std::string>();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::size_t> parse_exercise(const json& j, std::size_t n_steps,
                                        const std::string& where) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "all") return schedule_every(n_steps, 1);
        if (s == "maturity") return schedule_maturity_only(n_steps);
        throw ConfigError(where, "expected \"all\", \"maturity\", {\"every\": k} or an index list");
    }
    if (j.is_object()) {
        const std::size_t every = as_count(require(j, "every", where), where + ".every");
        if (every < 1 || every > n_steps) {
            throw ConfigError(where + ".every", "stride must be in [1, steps]");
        }
        return schedule_every(n_steps, every);
    }
    if (j.is_array()) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::size_t idx =
                as_count(j[i], where + "[" + std::to_string(i) + "]");
            if (idx < 1 || idx > n_steps) {
                throw ConfigError(where + "[" + std::to_string(i) + "]",
                                  "exercise index outside (0, steps]");
            }
            out.push_back(idx);
        }
        if (out.empty() || out.back() != n_steps) {
            throw ConfigError(where, "exercise list must end at the maturity index");
        }
        return out;
    }
    throw ConfigError(where, "unsupported exercise specification");
}

TrainConfig parse_train(const json& j, const std::string& where) {
    TrainConfig tc;
    if (j.contains("learning_rate")) {
        tc.learning_rate = as_number(j["learning_rate"], where + ".learning_rate");
    }
    if (j.contains("max_epochs")) tc.max_epochs = as_count(j["max_epochs"], where + ".max_epochs");
    if (j.contains("batch_size")) tc.batch_size = as_count(j["batch_size"], where + ".batch_size");
    if (j.contains("tolerance")) tc.tolerance = as_number(j["tolerance"], where + ".tolerance");
    if (j.contains("patience")) tc.patience = as_count(j["patience"], where + ".patience");
    if (j.contains("init_scale")) tc.init_scale = as_number(j["init_scale"], where + ".init_scale");
    if (j.contains("normalize_inputs")) {
        if (!j["normalize_inputs"].is_boolean()) {
            throw ConfigError(where + ".normalize_inputs", "expected a boolean");
        }
        tc.normalize_inputs = j["normalize_inputs"].get<bool>();
    }
    if (j.contains("normalize_targets")) {
        if (!j["normalize_targets"].is_boolean()) {
            throw ConfigError(where + ".normalize_targets", "expected a boolean");
        }
        tc.normalize_targets = j["normalize_targets"].get<bool>();
    }
    if (j.contains("seed")) tc.seed = as_seed(j["seed"], where + ".seed");
    try {
        tc.validate();
    } catch (const std::exception& err) {
        throw ConfigError(where, err.what());
    }
    return tc;
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError("(root)", std::string("invalid JSON: ") + err.what());
    }
    if (!j.is_object()) throw ConfigError("(root)", "expected a JSON object");
    if (j.contains("version") && j["version"].get<int>() != 1) {
        throw ConfigError("version", "unsupported config version");
    }

    RunConfig cfg;

    const json& jm = require(j, "model", "");
    cfg.portfolio.params.rate = as_number(require(jm, "rate", "model"), "model.rate");
    const json& ja = require(jm, "assets", "model");
    if (!ja.is_array() || ja.empty()) throw ConfigError("model.assets", "expected nonempty array");
    for (std::size_t i = 0; i < ja.size(); ++i) {
        const std::string where = "model.assets[" + std::to_string(i) + "]";
        const json& a = ja[i];
        cfg.asset_names.push_back(a.contains("name") ? as_string(a["name"], where + ".name")
                                                     : "S" + std::to_string(i));
        cfg.portfolio.params.spot.push_back(as_number(require(a, "spot", where), where + ".spot"));
        cfg.portfolio.params.dividend.push_back(
            a.contains("dividend") ? as_number(a["dividend"], where + ".dividend") : 0.0);
        cfg.portfolio.params.sigma.push_back(
            as_number(require(a, "sigma", where), where + ".sigma"));
    }
    try {
        cfg.portfolio.params.validate();
    } catch (const std::exception& err) {
        throw ConfigError("model", err.what());
    }

    const json& jg = require(j, "grid", "");
    const double maturity = as_number(require(jg, "maturity", "grid"), "grid.maturity");
    const std::size_t steps = as_count(require(jg, "steps", "grid"), "grid.steps");
    if (!(maturity > 0.0)) throw ConfigError("grid.maturity", "must be positive");
    if (steps < 1) throw ConfigError("grid.steps", "must be >= 1");
    cfg.portfolio.grid = TimeGrid::uniform(maturity, steps);

    const json& ji = require(j, "instruments", "");
    if (!ji.is_array() || ji.empty()) {
        throw ConfigError("instruments", "expected nonempty array");
    }
    for (std::size_t i = 0; i < ji.size(); ++i) {
        const std::string where = "instruments[" + std::to_string(i) + "]";
        const json& inst_j = ji[i];
        Instrument inst;
        const std::string kind = as_string(require(inst_j, "kind", where), where + ".kind");
        try {
            inst.kind = payoff_kind_from_string(kind);
        } catch (const std::exception& err) {
            throw ConfigError(where + ".kind", err.what());
        }
        inst.strike = as_number(require(inst_j, "strike", where), where + ".strike");
        inst.label = inst_j.contains("label") ? as_string(inst_j["label"], where + ".label")
                                              : "inst" + std::to_string(i);
        const json& ju = require(inst_j, "underlyings", where);
        if (!ju.is_array() || ju.empty()) {
            throw ConfigError(where + ".underlyings", "expected nonempty array");
        }
        for (std::size_t u = 0; u < ju.size(); ++u) {
            const std::string uw = where + ".underlyings[" + std::to_string(u) + "]";
            if (ju[u].is_string()) {
                const std::string name = ju[u].get<std::string>();
                const auto it =
                    std::find(cfg.asset_names.begin(), cfg.asset_names.end(), name);
                if (it == cfg.asset_names.end()) {
                    throw ConfigError(uw, "unknown asset name: " + name);
                }
                inst.underlying_indices.push_back(
                    static_cast<std::size_t>(it - cfg.asset_names.begin()));
            } else {
                const std::size_t idx = as_count(ju[u], uw);
                if (idx >= cfg.asset_names.size()) throw ConfigError(uw, "asset index out of range");
                inst.underlying_indices.push_back(idx);
            }
        }
        if (is_european(inst.kind)) {
            inst.exercise_date_indices = schedule_maturity_only(steps);
            if (inst_j.contains("exercise")) {
                const auto sched = parse_exercise(inst_j["exercise"], steps, where + ".exercise");
                if (sched != inst.exercise_date_indices) {
                    throw ConfigError(where + ".exercise",
                                      "European kinds exercise only at maturity");
                }
            }
        } else {
            inst.exercise_date_indices =
                parse_exercise(require(inst_j, "exercise", where), steps, where + ".exercise");
        }
        try {
            inst.validate(cfg.portfolio.params.n_assets(), steps);
        } catch (const std::exception& err) {
            throw ConfigError(where, err.what());
        }
        cfg.portfolio.instruments.push_back(std::move(inst));
    }

    if (j.contains("lsm")) {
        const json& jl = j["lsm"];
        if (jl.contains("outer_paths")) {
            cfg.lsm.n_outer_paths = as_count(jl["outer_paths"], "lsm.outer_paths");
        }
        if (jl.contains("inner_samples")) {
            cfg.lsm.m_inner = as_count(jl["inner_samples"], "lsm.inner_samples");
        }
        if (jl.contains("seed")) cfg.lsm.seed = as_seed(jl["seed"], "lsm.seed");
        if (jl.contains("warm_start")) {
            if (!jl["warm_start"].is_boolean()) {
                throw ConfigError("lsm.warm_start", "expected a boolean");
            }
            cfg.lsm.warm_start = jl["warm_start"].get<bool>();
        }
        if (jl.contains("fresh_paths_per_date")) {
            if (!jl["fresh_paths_per_date"].is_boolean()) {
                throw ConfigError("lsm.fresh_paths_per_date", "expected a boolean");
            }
            cfg.lsm.fresh_paths_per_date = jl["fresh_paths_per_date"].get<bool>();
        }
        if (jl.contains("hidden_layers")) {
            const json& jh = jl["hidden_layers"];
            if (!jh.is_array() || jh.empty()) {
                throw ConfigError("lsm.hidden_layers", "expected nonempty array");
            }
            cfg.lsm.hidden_layers.clear();
            for (std::size_t i = 0; i < jh.size(); ++i) {
                cfg.lsm.hidden_layers.push_back(
                    as_count(jh[i], "lsm.hidden_layers[" + std::to_string(i) + "]"));
            }
        }
        if (jl.contains("itm_only")) {
            const json& jo = jl["itm_only"];
            if (!jo.is_array() || jo.size() != cfg.portfolio.instruments.size()) {
                throw ConfigError("lsm.itm_only", "expected one boolean per instrument");
            }
            for (std::size_t i = 0; i < jo.size(); ++i) {
                if (!jo[i].is_boolean()) {
                    throw ConfigError("lsm.itm_only[" + std::to_string(i) + "]",
                                      "expected a boolean");
                }
                cfg.lsm.itm_only.push_back(jo[i].get<bool>());
            }
        }
        if (jl.contains("train")) cfg.lsm.train = parse_train(jl["train"], "lsm.train");
    }
    try {
        cfg.lsm.validate(cfg.portfolio.instruments.size());
    } catch (const std::exception& err) {
        throw ConfigError("lsm", err.what());
    }

    if (j.contains("pricing")) {
        const json& jp = j["pricing"];
        if (jp.contains("paths")) cfg.pricing_paths = as_count(jp["paths"], "pricing.paths");
        if (jp.contains("seed")) cfg.pricing_seed = as_seed(jp["seed"], "pricing.seed");
        if (cfg.pricing_paths < 1) throw ConfigError("pricing.paths", "must be >= 1");
    }

    if (j.contains("pnl")) {
        const json& jp = j["pnl"];
        if (jp.contains("paths")) cfg.pnl_paths = as_count(jp["paths"], "pnl.paths");
        if (jp.contains("seed")) cfg.pnl_seed = as_seed(jp["seed"], "pnl.seed");
        if (cfg.pnl_paths < 1) throw ConfigError("pnl.paths", "must be >= 1");
        const bool has_idx = jp.contains("horizons");
        const bool has_years = jp.contains("horizon_years");
        if (has_idx) {
            const json& jh = jp["horizons"];
            if (!jh.is_array()) throw ConfigError("pnl.horizons", "expected array of grid indices");
            for (std::size_t i = 0; i < jh.size(); ++i) {
                const std::string where = "pnl.horizons[" + std::to_string(i) + "]";
                const std::size_t idx = as_count(jh[i], where);
                if (idx >= cfg.portfolio.grid.dates.size()) {
                    throw ConfigError(where, "horizon index outside the grid");
                }
                if (idx == cfg.portfolio.grid.n_steps()) {
                    throw ConfigError(where, "horizon must precede maturity");
                }
                cfg.pnl_horizons.push_back(idx);
            }
        }
        if (has_years) {
            const json& jh = jp["horizon_years"];
            if (!jh.is_array()) throw ConfigError("pnl.horizon_years", "expected array of times");
            for (std::size_t i = 0; i < jh.size(); ++i) {
                const std::string where = "pnl.horizon_years[" + std::to_string(i) + "]";
                const double t = as_number(jh[i], where);
                std::size_t found = cfg.portfolio.grid.dates.size();
                for (std::size_t n = 0; n < cfg.portfolio.grid.dates.size(); ++n) {
                    if (std::fabs(cfg.portfolio.grid.dates[n] - t) < 1e-9) {
                        found = n;
                        break;
                    }
                }
                if (found == cfg.portfolio.grid.dates.size()) {
                    throw ConfigError(where, "horizon " + std::to_string(t) +
                                                 " is not a grid date");
                }
                if (found == cfg.portfolio.grid.n_steps()) {
                    throw ConfigError(where, "horizon must precede maturity");
                }
                cfg.pnl_horizons.push_back(found);
            }
        }
    }

    if (j.contains("output_dir")) cfg.output_dir = as_string(j["output_dir"], "output_dir");

    try {
        cfg.portfolio.validate();
    } catch (const std::exception& err) {
        throw ConfigError("(portfolio)", err.what());
    }

    cfg.config_hash = fnv1a(j.dump());
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("(file)", "cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace pnl
