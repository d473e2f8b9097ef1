#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "lsm_engine.hpp"

namespace pnl {

// Future P&L samples at one horizon: per-asset marginals and the portfolio
// aggregate built pathwise from the same scenarios.
struct PnlDistribution {
    std::size_t horizon_index = 0;
    double horizon_time = 0.0;
    std::vector<double> baseline;                // V_k(t0), one per instrument
    std::vector<std::vector<double>> asset_pnl;  // K vectors of length L, path order
    std::vector<double> portfolio_pnl;           // length L, pathwise sum
    std::vector<std::vector<double>> asset_sorted;
    std::vector<double> portfolio_sorted;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;

    // asset < 0 selects the portfolio series.
    double quantile(int asset, double p) const;
    // (pnl value, cumulative probability i/L) pairs in sorted order
    std::vector<std::pair<double, double>> export_cdf(int asset) const;
};

// Mark-to-market value of one instrument at the horizon along a simulated
// path: the continuation network while alive, accrued exercise cash after
// the policy has exercised. history is (n_dates x n_assets) from date 0.
double horizon_value(const TrainedPolicy& policy, const double* history,
                     std::size_t horizon_index, std::size_t instrument, NetworkEval& eval,
                     std::vector<double>& scratch);

// L fresh scenarios to the horizon; P&L_k = D(0,t_n) * value_k(t_n) - baseline_k.
PnlDistribution build_pnl(const TrainedPolicy& policy, std::size_t horizon_index,
                          const std::vector<double>& baseline, std::size_t n_paths,
                          std::uint64_t seed, unsigned workers = 1);

// Empirical quantile with linear interpolation between order statistics at
// rank p*(L+1), clamped at the extremes. sorted must be ascending.
double empirical_quantile(const std::vector<double>& sorted, double p);

} // namespace pnl
