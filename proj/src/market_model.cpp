#include "market_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "rng.hpp"

namespace pnl {

void ModelParams::validate() const {
    const std::size_t n = spot.size();
    if (n < 1) {
        throw std::invalid_argument("ModelParams: at least one asset required");
    }
    if (dividend.size() != n || sigma.size() != n) {
        throw std::invalid_argument("ModelParams: dividend/sigma/spot lengths differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (sigma[i] < 0.0) {
            throw std::invalid_argument("ModelParams: sigma[" + std::to_string(i) +
                                        "] must be nonnegative");
        }
        if (!(spot[i] > 0.0)) {
            throw std::invalid_argument("ModelParams: spot[" + std::to_string(i) +
                                        "] must be positive");
        }
    }
}

void TimeGrid::validate() const {
    if (dates.size() < 2) {
        throw std::invalid_argument("TimeGrid: at least two dates required");
    }
    if (dates.front() != 0.0) {
        throw std::invalid_argument("TimeGrid: first date must be 0");
    }
    for (std::size_t n = 1; n < dates.size(); ++n) {
        if (!(dates[n] > dates[n - 1])) {
            throw std::invalid_argument("TimeGrid: dates must be strictly increasing");
        }
    }
}

TimeGrid TimeGrid::uniform(double maturity, std::size_t steps) {
    if (!(maturity > 0.0) || steps < 1) {
        throw std::invalid_argument("TimeGrid::uniform: maturity > 0 and steps >= 1 required");
    }
    TimeGrid g;
    g.dates.resize(steps + 1);
    for (std::size_t n = 0; n <= steps; ++n) {
        g.dates[n] = maturity * static_cast<double>(n) / static_cast<double>(steps);
    }
    g.dates[0] = 0.0;
    g.dates[steps] = maturity;
    return g;
}

void gbm_step_inplace(double* state, double dt, const ModelParams& params, const double* z) {
    const std::size_t n = params.n_assets();
    const double r = params.rate;
    for (std::size_t i = 0; i < n; ++i) {
        const double drift = (r - params.dividend[i] - 0.5 * params.sigma[i] * params.sigma[i]) * dt;
        state[i] *= std::exp(drift + params.sigma[i] * std::sqrt(dt) * z[i]);
    }
}

std::vector<double> gbm_step(const std::vector<double>& state, double dt,
                             const ModelParams& params, const std::vector<double>& z) {
    params.validate();
    if (!(dt > 0.0)) {
        throw std::invalid_argument("gbm_step: dt must be positive");
    }
    if (state.size() != params.n_assets() || z.size() != params.n_assets()) {
        throw std::invalid_argument("gbm_step: state/z dimension mismatch");
    }
    for (double s : state) {
        if (!(s > 0.0)) throw std::invalid_argument("gbm_step: state entries must be positive");
    }
    std::vector<double> out = state;
    gbm_step_inplace(out.data(), dt, params, z.data());
    return out;
}

void simulate_path_block(const ModelParams& params, const TimeGrid& grid,
                         std::size_t j_begin, std::size_t j_end, std::uint64_t seed,
                         double* out, std::size_t n_dates_out) {
    const std::size_t n_assets = params.n_assets();
    std::vector<double> z(n_assets);
    for (std::size_t j = j_begin; j < j_end; ++j) {
        NormalStream stream(seed, j);
        double* path = out + (j - j_begin) * n_dates_out * n_assets;
        for (std::size_t i = 0; i < n_assets; ++i) path[i] = params.spot[i];
        for (std::size_t n = 1; n < n_dates_out; ++n) {
            double* cur = path + n * n_assets;
            const double* prev = cur - n_assets;
            for (std::size_t i = 0; i < n_assets; ++i) {
                z[i] = stream.next();
                cur[i] = prev[i];
            }
            gbm_step_inplace(cur, grid.dt(n - 1), params, z.data());
        }
    }
}

PathSet simulate_paths(const ModelParams& params, const TimeGrid& grid, std::size_t n_paths,
                       std::uint64_t seed, unsigned workers) {
    params.validate();
    grid.validate();
    if (n_paths < 1) {
        throw std::invalid_argument("simulate_paths: n_paths must be >= 1");
    }
    PathSet ps;
    ps.n_paths = n_paths;
    ps.n_dates = grid.dates.size();
    ps.n_assets = params.n_assets();
    ps.seed = seed;
    ps.grid = grid;
    ps.values.resize(n_paths * ps.n_dates * ps.n_assets);
    const std::size_t stride = ps.n_dates * ps.n_assets;
    parallel_for_chunks(n_paths, 4096, workers, [&](std::size_t b, std::size_t e) {
        simulate_path_block(params, grid, b, e, seed, ps.values.data() + b * stride, ps.n_dates);
    });
    return ps;
}

InnerFan spawn_inner_fan(const PathSet& outer, std::size_t date_index, std::size_t m_count,
                         const ModelParams& params, std::uint64_t seed, unsigned workers) {
    if (date_index + 1 >= outer.n_dates) {
        throw std::invalid_argument("spawn_inner_fan: date_index must precede the last date");
    }
    if (m_count < 1) {
        throw std::invalid_argument("spawn_inner_fan: m_count must be >= 1");
    }
    if (outer.n_assets != params.n_assets()) {
        throw std::invalid_argument("spawn_inner_fan: asset count mismatch");
    }
    InnerFan fan;
    fan.n_outer = outer.n_paths;
    fan.m_count = m_count;
    fan.n_assets = outer.n_assets;
    fan.date_index = date_index;
    fan.values.resize(fan.n_outer * m_count * fan.n_assets);
    const double dt = outer.grid.dt(date_index);
    const std::size_t n_assets = fan.n_assets;
    parallel_for_chunks(fan.n_outer, 2048, workers, [&](std::size_t b, std::size_t e) {
        std::vector<double> z(n_assets);
        for (std::size_t j = b; j < e; ++j) {
            NormalStream stream(seed, j);
            const double* start = outer.state(j, date_index);
            for (std::size_t m = 0; m < m_count; ++m) {
                double* dst = fan.values.data() + (j * m_count + m) * n_assets;
                for (std::size_t i = 0; i < n_assets; ++i) {
                    z[i] = stream.next();
                    dst[i] = start[i];
                }
                gbm_step_inplace(dst, dt, params, z.data());
            }
        }
    });
    return fan;
}

double discount(double t1, double t2, double rate) {
    if (t2 < t1) {
        throw std::invalid_argument("discount: t2 must be >= t1");
    }
    return std::exp(-rate * (t2 - t1));
}

} // namespace pnl
