#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pnl {

// Risk-neutral GBM parameters for a basket of uncorrelated assets.
struct ModelParams {
    double rate = 0.0;                 // continuously compounded short rate (1/year)
    std::vector<double> dividend;      // dividend yield per asset (1/year)
    std::vector<double> sigma;         // volatility per asset (1/sqrt-year)
    std::vector<double> spot;          // spot price per asset

    std::size_t n_assets() const { return spot.size(); }
    void validate() const;
};

// Strictly increasing date grid in years, dates[0] = 0, dates.back() = maturity.
struct TimeGrid {
    std::vector<double> dates;

    std::size_t n_steps() const { return dates.empty() ? 0 : dates.size() - 1; }
    double maturity() const { return dates.back(); }
    double dt(std::size_t n) const { return dates[n + 1] - dates[n]; }
    void validate() const;

    static TimeGrid uniform(double maturity, std::size_t steps);
};

// Simulated scenario matrix, indexed (path j, date n, asset i), asset-minor.
struct PathSet {
    std::vector<double> values;
    std::size_t n_paths = 0;
    std::size_t n_dates = 0;
    std::size_t n_assets = 0;
    std::uint64_t seed = 0;
    TimeGrid grid;

    double at(std::size_t j, std::size_t n, std::size_t i) const {
        return values[(j * n_dates + n) * n_assets + i];
    }
    const double* state(std::size_t j, std::size_t n) const {
        return values.data() + (j * n_dates + n) * n_assets;
    }
};

// M one-step trajectories from each outer path point at one date,
// indexed (outer path j, inner m, asset i).
struct InnerFan {
    std::vector<double> values;
    std::size_t n_outer = 0;
    std::size_t m_count = 0;
    std::size_t n_assets = 0;
    std::size_t date_index = 0; // the date the fan was launched from

    const double* state(std::size_t j, std::size_t m) const {
        return values.data() + (j * m_count + m) * n_assets;
    }
};

// One exact GBM step over dt: out_i = s_i * exp((r - d_i - s2_i/2) dt + sig_i sqrt(dt) z_i).
std::vector<double> gbm_step(const std::vector<double>& state, double dt,
                             const ModelParams& params, const std::vector<double>& z);

// In-place variant used in hot loops; state and z have n_assets entries.
void gbm_step_inplace(double* state, double dt, const ModelParams& params, const double* z);

// Simulates paths [j_begin, j_end) into out (layout as PathSet, relative to
// j_begin). Path j draws from its own normal stream, so any chunking of the
// path range reproduces the same values.
void simulate_path_block(const ModelParams& params, const TimeGrid& grid,
                         std::size_t j_begin, std::size_t j_end, std::uint64_t seed,
                         double* out, std::size_t n_dates_out);

PathSet simulate_paths(const ModelParams& params, const TimeGrid& grid, std::size_t n_paths,
                       std::uint64_t seed, unsigned workers = 1);

InnerFan spawn_inner_fan(const PathSet& outer, std::size_t date_index, std::size_t m_count,
                         const ModelParams& params, std::uint64_t seed, unsigned workers = 1);

// Flat-rate exponential discount factor between two dates.
double discount(double t1, double t2, double rate);

} // namespace pnl
