#include "pnl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parallel.hpp"
#include "rng.hpp"

namespace pnl {

double empirical_quantile(const std::vector<double>& sorted, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("empirical_quantile: p must be in (0,1)");
    }
    if (sorted.empty()) {
        throw std::invalid_argument("empirical_quantile: empty sample");
    }
    const double n = static_cast<double>(sorted.size());
    const double h = p * (n + 1.0);
    if (h <= 1.0) return sorted.front();
    if (h >= n) return sorted.back();
    const auto lo = static_cast<std::size_t>(h) - 1; // 0-based index of floor order stat
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double PnlDistribution::quantile(int asset, double p) const {
    if (asset < 0) return empirical_quantile(portfolio_sorted, p);
    const auto a = static_cast<std::size_t>(asset);
    if (a >= asset_sorted.size()) {
        throw std::invalid_argument("PnlDistribution::quantile: asset index out of range");
    }
    return empirical_quantile(asset_sorted[a], p);
}

std::vector<std::pair<double, double>> PnlDistribution::export_cdf(int asset) const {
    const std::vector<double>& s =
        asset < 0 ? portfolio_sorted : asset_sorted.at(static_cast<std::size_t>(asset));
    std::vector<std::pair<double, double>> out;
    out.reserve(s.size());
    const double n = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.emplace_back(s[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

namespace {

// Walks the exercise policy along one path up to and including the horizon
// date. Writes the horizon mark of each instrument into out.
void horizon_values_along_path(const TrainedPolicy& policy, const double* history,
                               std::size_t horizon_index, double* out, NetworkEval& eval,
                               std::vector<double>& scratch, std::vector<double>& cont,
                               std::vector<char>& alive) {
    const Portfolio& pf = policy.portfolio;
    const std::size_t k = pf.size();
    const std::size_t n_assets = pf.params.n_assets();
    const double t_h = pf.grid.dates[horizon_index];
    std::fill(alive.begin(), alive.end(), 1);
    for (std::size_t n = 1; n <= horizon_index; ++n) {
        const double* state = history + n * n_assets;
        policy.continuation(n, state, cont.data(), eval, scratch);
        for (std::size_t a = 0; a < k; ++a) {
            if (!alive[a]) continue;
            const Instrument& inst = pf.instruments[a];
            if (is_exercisable(inst, n)) {
                const double intrinsic = intrinsic_value(inst, state, n_assets);
                if (intrinsic > cont[a]) {
                    // cash accrues at the short rate until the horizon
                    out[a] = intrinsic * std::exp(pf.params.rate * (t_h - pf.grid.dates[n]));
                    alive[a] = 0;
                    continue;
                }
            }
            if (n == horizon_index) out[a] = cont[a];
        }
    }
}

} // namespace

double horizon_value(const TrainedPolicy& policy, const double* history,
                     std::size_t horizon_index, std::size_t instrument, NetworkEval& eval,
                     std::vector<double>& scratch) {
    const std::size_t k = policy.portfolio.size();
    if (instrument >= k) {
        throw std::invalid_argument("horizon_value: instrument index out of range");
    }
    if (horizon_index < 1 || horizon_index >= policy.last_date_index()) {
        throw std::invalid_argument("horizon_value: horizon must be an interior grid date");
    }
    policy.model_at(horizon_index);
    std::vector<double> out(k, 0.0);
    std::vector<double> cont(k);
    std::vector<char> alive(k);
    horizon_values_along_path(policy, history, horizon_index, out.data(), eval, scratch, cont,
                              alive);
    return out[instrument];
}

PnlDistribution build_pnl(const TrainedPolicy& policy, std::size_t horizon_index,
                          const std::vector<double>& baseline, std::size_t n_paths,
                          std::uint64_t seed, unsigned workers) {
    const Portfolio& pf = policy.portfolio;
    const std::size_t k = pf.size();
    const std::size_t n_assets = pf.params.n_assets();
    if (baseline.size() != k) {
        throw std::invalid_argument("build_pnl: baseline must have one value per instrument");
    }
    if (n_paths < 1) throw std::invalid_argument("build_pnl: n_paths >= 1");
    if (horizon_index >= policy.last_date_index()) {
        throw std::invalid_argument("build_pnl: horizon must be an interior grid date");
    }

    PnlDistribution dist;
    dist.horizon_index = horizon_index;
    dist.horizon_time = pf.grid.dates[horizon_index];
    dist.baseline = baseline;
    dist.n_paths = n_paths;
    dist.seed = seed;
    dist.asset_pnl.assign(k, std::vector<double>(n_paths, 0.0));
    dist.portfolio_pnl.assign(n_paths, 0.0);

    if (horizon_index > 0) {
        policy.model_at(horizon_index);
        const double df = discount(0.0, dist.horizon_time, pf.params.rate);
        const std::size_t n_dates_sim = horizon_index + 1;
        std::size_t max_width = 1;
        for (std::size_t n = 1; n <= horizon_index; ++n) {
            max_width = std::max(max_width, policy.model_at(n).net.max_width());
        }
        parallel_for_chunks(n_paths, 4096, workers, [&](std::size_t b, std::size_t e) {
            std::vector<double> block((e - b) * n_dates_sim * n_assets);
            simulate_path_block(pf.params, pf.grid, b, e, seed, block.data(), n_dates_sim);
            NetworkEval eval(max_width);
            std::vector<double> scratch(n_assets);
            std::vector<double> cont(k);
            std::vector<double> hv(k);
            std::vector<char> alive(k);
            for (std::size_t j = b; j < e; ++j) {
                const double* history = block.data() + (j - b) * n_dates_sim * n_assets;
                horizon_values_along_path(policy, history, horizon_index, hv.data(), eval,
                                          scratch, cont, alive);
                double pf_pnl = 0.0;
                for (std::size_t a = 0; a < k; ++a) {
                    const double pnl_a = df * hv[a] - baseline[a];
                    dist.asset_pnl[a][j] = pnl_a;
                    pf_pnl += pnl_a;
                }
                dist.portfolio_pnl[j] = pf_pnl;
            }
        });
    }

    dist.asset_sorted = dist.asset_pnl;
    for (auto& v : dist.asset_sorted) std::sort(v.begin(), v.end());
    dist.portfolio_sorted = dist.portfolio_pnl;
    std::sort(dist.portfolio_sorted.begin(), dist.portfolio_sorted.end());
    return dist;
}

} // namespace pnl
