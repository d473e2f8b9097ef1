#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "instruments.hpp"
#include "market_model.hpp"
#include "neural_net.hpp"

namespace pnl {

struct LsmConfig {
    std::size_t n_outer_paths = 50000;
    std::size_t m_inner = 16;
    TrainConfig train;
    std::uint64_t seed = 20240801;
    bool warm_start = true;          // init each date's net from the next date's
    bool fresh_paths_per_date = false;
    std::vector<bool> itm_only;      // optional per-instrument training mask
    std::vector<std::size_t> hidden_layers = {10, 10};
    unsigned workers = 1;

    void validate(std::size_t n_instruments) const;
};

// The continuation-value interpolator trained at one interior date, with the
// scale that maps network outputs back to currency.
struct DateModel {
    Network net;
    std::vector<double> target_scale; // per output
    double final_loss = 0.0;
    std::size_t n_samples = 0;
    std::size_t epochs_run = 0;
};

// One multi-output network per interior grid date plus everything needed to
// evaluate it on raw price states.
struct TrainedPolicy {
    Portfolio portfolio;
    std::vector<double> input_scale;               // per asset, 1.0 when unscaled
    std::vector<std::optional<DateModel>> models;  // index by date, filled 1..N-1
    std::uint64_t train_seed = 0;
    std::uint64_t path_seed = 0;

    std::size_t n_instruments() const { return portfolio.size(); }
    std::size_t last_date_index() const { return portfolio.grid.n_steps(); }
    const DateModel& model_at(std::size_t date_index) const;

    // Continuation values in currency for all instruments at an interior date.
    void continuation(std::size_t date_index, const double* raw_state, double* out,
                      NetworkEval& eval, std::vector<double>& scratch) const;

    void save(const std::string& dir) const;
    static TrainedPolicy load(const std::string& dir);
};

// Canonical portfolio fingerprint used by artifacts for provenance checks.
std::uint64_t portfolio_hash(const Portfolio& portfolio);

// Exercise payoff of every instrument at maturity states.
// states: n_samples x n_assets, out: n_samples x K.
void terminal_values(const Portfolio& portfolio, const double* states, std::size_t n_samples,
                     double* out);

// Value vector one step ahead: intrinsic/continuation blend at next_date.
// If next_date == N this is the terminal payoff; otherwise instruments
// exercisable at next_date contribute max(intrinsic, continuation) and the
// rest contribute pure continuation.
void one_step_value(const TrainedPolicy& policy, std::size_t next_date, const double* raw_state,
                    double* out, NetworkEval& eval, std::vector<double>& scratch);

struct RegressionData {
    std::vector<double> inputs;  // n_samples x n_assets (scaled)
    std::vector<double> targets; // n_samples x K (currency)
    std::size_t n_samples = 0;
};

// Discounted fan averages of the next date's value, one target row per outer path.
RegressionData regression_targets(const TrainedPolicy& policy, const PathSet& outer,
                                  std::size_t date_index, const InnerFan& fan,
                                  unsigned workers = 1);

// Backward induction: trains the continuation network at every interior date.
TrainedPolicy train_policy(const Portfolio& portfolio, const LsmConfig& cfg);

} // namespace pnl
