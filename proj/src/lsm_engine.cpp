#include "lsm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "parallel.hpp"
#include "rng.hpp"

namespace pnl {

using nlohmann::json;

void LsmConfig::validate(std::size_t n_instruments) const {
    if (n_outer_paths < 1) throw std::invalid_argument("LsmConfig: n_outer_paths >= 1");
    if (m_inner < 1) throw std::invalid_argument("LsmConfig: m_inner >= 1");
    if (!itm_only.empty() && itm_only.size() != n_instruments) {
        throw std::invalid_argument("LsmConfig: itm_only must match instrument count");
    }
    if (hidden_layers.empty()) throw std::invalid_argument("LsmConfig: hidden layers required");
    train.validate();
}

const DateModel& TrainedPolicy::model_at(std::size_t date_index) const {
    if (date_index >= models.size() || !models[date_index].has_value()) {
        throw std::invalid_argument("TrainedPolicy: no network for date index " +
                                    std::to_string(date_index));
    }
    return *models[date_index];
}

void TrainedPolicy::continuation(std::size_t date_index, const double* raw_state, double* out,
                                 NetworkEval& eval, std::vector<double>& scratch) const {
    const DateModel& dm = model_at(date_index);
    const std::size_t n_assets = portfolio.params.n_assets();
    const std::size_t k = portfolio.size();
    if (scratch.size() < n_assets) scratch.resize(n_assets);
    for (std::size_t i = 0; i < n_assets; ++i) scratch[i] = raw_state[i] / input_scale[i];
    eval.forward(dm.net, scratch.data(), out);
    // payoffs are nonnegative, so true continuation values are too; floor
    // the interpolation at zero
    for (std::size_t a = 0; a < k; ++a) out[a] = std::max(out[a] * dm.target_scale[a], 0.0);
}

void terminal_values(const Portfolio& portfolio, const double* states, std::size_t n_samples,
                     double* out) {
    const std::size_t n_assets = portfolio.params.n_assets();
    const std::size_t k = portfolio.size();
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double* st = states + s * n_assets;
        for (std::size_t a = 0; a < k; ++a) {
            out[s * k + a] = intrinsic_value(portfolio.instruments[a], st, n_assets);
        }
    }
}

void one_step_value(const TrainedPolicy& policy, std::size_t next_date, const double* raw_state,
                    double* out, NetworkEval& eval, std::vector<double>& scratch) {
    const Portfolio& pf = policy.portfolio;
    const std::size_t n_assets = pf.params.n_assets();
    const std::size_t k = pf.size();
    if (next_date == policy.last_date_index()) {
        terminal_values(pf, raw_state, 1, out);
        return;
    }
    policy.continuation(next_date, raw_state, out, eval, scratch);
    for (std::size_t a = 0; a < k; ++a) {
        const Instrument& inst = pf.instruments[a];
        if (is_exercisable(inst, next_date)) {
            out[a] = std::max(out[a], intrinsic_value(inst, raw_state, n_assets));
        }
    }
}

RegressionData regression_targets(const TrainedPolicy& policy, const PathSet& outer,
                                  std::size_t date_index, const InnerFan& fan,
                                  unsigned workers) {
    if (fan.date_index != date_index || fan.n_outer != outer.n_paths ||
        fan.n_assets != outer.n_assets) {
        throw std::invalid_argument("regression_targets: fan does not match outer set");
    }
    const Portfolio& pf = policy.portfolio;
    const std::size_t n_assets = pf.params.n_assets();
    const std::size_t k = pf.size();
    const std::size_t next_date = date_index + 1;
    const double df = discount(outer.grid.dates[date_index], outer.grid.dates[next_date],
                               pf.params.rate);
    const double inv_m = 1.0 / static_cast<double>(fan.m_count);

    RegressionData data;
    data.n_samples = outer.n_paths;
    data.inputs.resize(outer.n_paths * n_assets);
    data.targets.assign(outer.n_paths * k, 0.0);

    const std::size_t max_width =
        next_date == policy.last_date_index() ? 1 : policy.model_at(next_date).net.max_width();

    parallel_for_chunks(outer.n_paths, 1024, workers, [&](std::size_t b, std::size_t e) {
        NetworkEval eval(max_width);
        std::vector<double> scratch(n_assets);
        std::vector<double> value(k);
        for (std::size_t j = b; j < e; ++j) {
            const double* st = outer.state(j, date_index);
            for (std::size_t i = 0; i < n_assets; ++i) {
                data.inputs[j * n_assets + i] = st[i] / policy.input_scale[i];
            }
            double* tgt = data.targets.data() + j * k;
            for (std::size_t m = 0; m < fan.m_count; ++m) {
                one_step_value(policy, next_date, fan.state(j, m), value.data(), eval, scratch);
                for (std::size_t a = 0; a < k; ++a) tgt[a] += value[a];
            }
            for (std::size_t a = 0; a < k; ++a) tgt[a] *= df * inv_m;
        }
    });
    return data;
}

namespace {

std::vector<std::size_t> layer_sizes_for(std::size_t n_assets, std::size_t k,
                                         const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes;
    sizes.push_back(n_assets);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(k);
    return sizes;
}

} // namespace

TrainedPolicy train_policy(const Portfolio& portfolio, const LsmConfig& cfg) {
    portfolio.validate();
    cfg.validate(portfolio.size());

    const std::size_t n_assets = portfolio.params.n_assets();
    const std::size_t k = portfolio.size();
    const std::size_t last = portfolio.grid.n_steps();

    TrainedPolicy policy;
    policy.portfolio = portfolio;
    policy.train_seed = cfg.seed;
    policy.path_seed = derive_seed(cfg.seed, 0x70617468); // "path"
    policy.models.resize(last + 1);
    policy.input_scale.assign(n_assets, 1.0);
    if (cfg.train.normalize_inputs) {
        policy.input_scale = portfolio.params.spot;
    }

    PathSet outer = simulate_paths(portfolio.params, portfolio.grid, cfg.n_outer_paths,
                                   policy.path_seed, cfg.workers);

    for (std::size_t n = last; n-- > 1;) {
        if (cfg.fresh_paths_per_date) {
            outer = simulate_paths(portfolio.params, portfolio.grid, cfg.n_outer_paths,
                                   derive_seed(policy.path_seed, n), cfg.workers);
        }
        const std::uint64_t fan_seed = derive_seed(cfg.seed, 0x66616e00ULL + n); // "fan"+n
        InnerFan fan = spawn_inner_fan(outer, n, cfg.m_inner, portfolio.params, fan_seed,
                                       cfg.workers);
        RegressionData data = regression_targets(policy, outer, n, fan, cfg.workers);

        DateModel dm;
        dm.n_samples = data.n_samples;
        dm.target_scale.assign(k, 1.0);
        if (cfg.train.normalize_targets) {
            // RMS scale keeps every output head at a comparable gradient
            // magnitude in the shared trunk
            for (std::size_t a = 0; a < k; ++a) {
                double sq = 0.0;
                for (std::size_t s = 0; s < data.n_samples; ++s) {
                    sq += data.targets[s * k + a] * data.targets[s * k + a];
                }
                dm.target_scale[a] =
                    std::max(std::sqrt(sq / static_cast<double>(data.n_samples)), 1e-12);
            }
        }
        for (std::size_t s = 0; s < data.n_samples; ++s) {
            for (std::size_t a = 0; a < k; ++a) data.targets[s * k + a] /= dm.target_scale[a];
        }

        std::vector<double> weights;
        if (!cfg.itm_only.empty()) {
            bool any = false;
            for (bool f : cfg.itm_only) any = any || f;
            if (any) {
                weights.assign(data.n_samples * k, 1.0);
                for (std::size_t s = 0; s < data.n_samples; ++s) {
                    const double* st = outer.state(s, n);
                    for (std::size_t a = 0; a < k; ++a) {
                        if (cfg.itm_only[a] &&
                            intrinsic_value(portfolio.instruments[a], st, n_assets) <= 0.0) {
                            weights[s * k + a] = 0.0;
                        }
                    }
                }
            }
        }

        Network init = Network::make(layer_sizes_for(n_assets, k, cfg.hidden_layers),
                                     Activation::sigmoid);
        const bool have_next = n + 1 < last && policy.models[n + 1].has_value();
        if (cfg.warm_start && have_next) {
            init = policy.models[n + 1]->net;
            // keep the warm start's currency-valued function under the new scale
            const auto& prev_scale = policy.models[n + 1]->target_scale;
            auto& out_w = init.weights.back();
            auto& out_b = init.biases.back();
            const std::size_t in_w = init.layer_sizes[init.layer_sizes.size() - 2];
            for (std::size_t a = 0; a < k; ++a) {
                const double ratio = prev_scale[a] / dm.target_scale[a];
                for (std::size_t i = 0; i < in_w; ++i) out_w[a * in_w + i] *= ratio;
                out_b[a] *= ratio;
            }
        } else {
            init.init_random(derive_seed(cfg.train.seed, n), cfg.train.init_scale);
        }

        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.train.seed, 0x65700000ULL + n);
        try {
            TrainResult tr = train(init, data.inputs, data.targets, data.n_samples, tc, weights);
            dm.net = std::move(tr.net);
            dm.final_loss = tr.final_loss;
            dm.epochs_run = tr.epochs_run;
        } catch (const TrainingError& err) {
            throw TrainingError(err.epoch, err.loss,
                                "training failed at date index " + std::to_string(n) + ": " +
                                    err.what());
        }
        policy.models[n] = std::move(dm);
    }
    return policy;
}

std::uint64_t portfolio_hash(const Portfolio& portfolio) {
    std::ostringstream os;
    os.precision(17);
    os << portfolio.params.rate;
    for (double v : portfolio.params.dividend) os << ',' << v;
    for (double v : portfolio.params.sigma) os << ',' << v;
    for (double v : portfolio.params.spot) os << ',' << v;
    for (double v : portfolio.grid.dates) os << ';' << v;
    for (const auto& inst : portfolio.instruments) {
        os << '|' << to_string(inst.kind) << ',' << inst.strike << ',' << inst.label;
        for (std::size_t u : inst.underlying_indices) os << ',' << u;
        os << ':';
        for (std::size_t e : inst.exercise_date_indices) os << ',' << e;
    }
    const std::string s = os.str();
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

json portfolio_to_json(const Portfolio& pf) {
    json j;
    j["rate"] = pf.params.rate;
    j["dividend"] = pf.params.dividend;
    j["sigma"] = pf.params.sigma;
    j["spot"] = pf.params.spot;
    j["grid_dates"] = pf.grid.dates;
    json insts = json::array();
    for (const auto& inst : pf.instruments) {
        json ji;
        ji["kind"] = to_string(inst.kind);
        ji["strike"] = inst.strike;
        ji["underlyings"] = inst.underlying_indices;
        ji["exercise_dates"] = inst.exercise_date_indices;
        ji["label"] = inst.label;
        insts.push_back(ji);
    }
    j["instruments"] = insts;
    return j;
}

Portfolio portfolio_from_json(const json& j) {
    Portfolio pf;
    pf.params.rate = j.at("rate").get<double>();
    pf.params.dividend = j.at("dividend").get<std::vector<double>>();
    pf.params.sigma = j.at("sigma").get<std::vector<double>>();
    pf.params.spot = j.at("spot").get<std::vector<double>>();
    pf.grid.dates = j.at("grid_dates").get<std::vector<double>>();
    for (const auto& ji : j.at("instruments")) {
        Instrument inst;
        inst.kind = payoff_kind_from_string(ji.at("kind").get<std::string>());
        inst.strike = ji.at("strike").get<double>();
        inst.underlying_indices = ji.at("underlyings").get<std::vector<std::size_t>>();
        inst.exercise_date_indices = ji.at("exercise_dates").get<std::vector<std::size_t>>();
        inst.label = ji.at("label").get<std::string>();
        pf.instruments.push_back(std::move(inst));
    }
    pf.validate();
    return pf;
}

std::string net_file_name(std::size_t date_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "net_%03zu.txt", date_index);
    return buf;
}

} // namespace

void TrainedPolicy::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json manifest;
    manifest["version"] = 1;
    manifest["portfolio"] = portfolio_to_json(portfolio);
    manifest["portfolio_hash"] = portfolio_hash(portfolio);
    manifest["input_scale"] = input_scale;
    manifest["train_seed"] = train_seed;
    manifest["path_seed"] = path_seed;
    json dates = json::array();
    for (std::size_t n = 0; n < models.size(); ++n) {
        if (!models[n].has_value()) continue;
        const DateModel& dm = *models[n];
        json jd;
        jd["date_index"] = n;
        jd["file"] = net_file_name(n);
        jd["target_scale"] = dm.target_scale;
        jd["final_loss"] = dm.final_loss;
        jd["n_samples"] = dm.n_samples;
        jd["epochs_run"] = dm.epochs_run;
        dates.push_back(jd);
        models[n]->net.save_file((fs::path(dir) / net_file_name(n)).string());
    }
    manifest["models"] = dates;
    std::ofstream os(fs::path(dir) / "policy.json");
    if (!os) throw std::runtime_error("cannot write policy manifest in " + dir);
    os << manifest.dump(2) << "\n";
}

TrainedPolicy TrainedPolicy::load(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(dir) / "policy.json");
    if (!is) throw std::runtime_error("cannot read policy manifest in " + dir);
    json manifest = json::parse(is);
    if (manifest.at("version").get<int>() != 1) {
        throw std::runtime_error("unsupported policy manifest version");
    }
    TrainedPolicy policy;
    policy.portfolio = portfolio_from_json(manifest.at("portfolio"));
    policy.input_scale = manifest.at("input_scale").get<std::vector<double>>();
    policy.train_seed = manifest.at("train_seed").get<std::uint64_t>();
    policy.path_seed = manifest.at("path_seed").get<std::uint64_t>();
    policy.models.resize(policy.portfolio.grid.n_steps() + 1);
    for (const auto& jd : manifest.at("models")) {
        const auto n = jd.at("date_index").get<std::size_t>();
        DateModel dm;
        dm.net = Network::load_file((fs::path(dir) / jd.at("file").get<std::string>()).string());
        dm.target_scale = jd.at("target_scale").get<std::vector<double>>();
        dm.final_loss = jd.at("final_loss").get<double>();
        dm.n_samples = jd.at("n_samples").get<std::size_t>();
        dm.epochs_run = jd.at("epochs_run").get<std::size_t>();
        if (n >= policy.models.size()) {
            throw std::runtime_error("policy manifest: date index out of range");
        }
        policy.models[n] = std::move(dm);
    }
    const std::uint64_t expect = manifest.at("portfolio_hash").get<std::uint64_t>();
    if (portfolio_hash(policy.portfolio) != expect) {
        throw std::runtime_error("policy manifest: portfolio hash mismatch");
    }
    return policy;
}

} // namespace pnl
