#include "policy_pricer.hpp"

#include <cmath>
#include <stdexcept>

#include "parallel.hpp"
#include "rng.hpp"

namespace pnl {

namespace {
constexpr std::size_t kChunk = 4096;

struct ChunkStats {
    std::vector<double> sum;        // per instrument
    std::vector<double> sumsq;      // per instrument
    double pf_sum = 0.0;
    double pf_sumsq = 0.0;
    std::vector<std::size_t> hist;  // K x (N+1)
};

} // namespace

PricingResult price_with_policy(const TrainedPolicy& policy, std::size_t n_paths,
                                std::uint64_t seed, unsigned workers) {
    if (n_paths < 1) throw std::invalid_argument("price_with_policy: n_paths >= 1");
    const Portfolio& pf = policy.portfolio;
    const std::size_t k = pf.size();
    const std::size_t n_assets = pf.params.n_assets();
    const std::size_t last = policy.last_date_index();
    const std::size_t n_dates = last + 1;

    // every interior exercisable date needs a network
    std::vector<char> any_exercisable(n_dates, 0);
    for (std::size_t n = 1; n < last; ++n) {
        for (const auto& inst : pf.instruments) {
            if (is_exercisable(inst, n)) {
                any_exercisable[n] = 1;
                policy.model_at(n); // throws when missing
                break;
            }
        }
    }

    std::size_t max_width = 1;
    for (std::size_t n = 1; n < last; ++n) {
        if (policy.models[n].has_value()) {
            max_width = std::max(max_width, policy.models[n]->net.max_width());
        }
    }

    std::vector<double> df(n_dates);
    for (std::size_t n = 0; n < n_dates; ++n) {
        df[n] = discount(0.0, pf.grid.dates[n], pf.params.rate);
    }

    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<ChunkStats> stats(n_chunks);
    for (auto& s : stats) {
        s.sum.assign(k, 0.0);
        s.sumsq.assign(k, 0.0);
        s.hist.assign(k * n_dates, 0);
    }

    parallel_for_chunks(n_paths, kChunk, workers, [&](std::size_t b, std::size_t e) {
        ChunkStats& cs = stats[b / kChunk];
        std::vector<double> block((e - b) * n_dates * n_assets);
        simulate_path_block(pf.params, pf.grid, b, e, seed, block.data(), n_dates);
        NetworkEval eval(max_width);
        std::vector<double> scratch(n_assets);
        std::vector<double> cont(k);
        std::vector<double> cashflow(k);
        std::vector<char> alive(k);
        for (std::size_t j = b; j < e; ++j) {
            const double* path = block.data() + (j - b) * n_dates * n_assets;
            std::fill(alive.begin(), alive.end(), 1);
            std::size_t n_alive = k;
            for (std::size_t n = 1; n < last && n_alive > 0; ++n) {
                if (!any_exercisable[n]) continue;
                const double* state = path + n * n_assets;
                policy.continuation(n, state, cont.data(), eval, scratch);
                for (std::size_t a = 0; a < k; ++a) {
                    if (!alive[a]) continue;
                    const Instrument& inst = pf.instruments[a];
                    if (!is_exercisable(inst, n)) continue;
                    const double intrinsic = intrinsic_value(inst, state, n_assets);
                    if (intrinsic > cont[a]) {
                        cashflow[a] = intrinsic * df[n];
                        alive[a] = 0;
                        --n_alive;
                        ++cs.hist[a * n_dates + n];
                    }
                }
            }
            if (n_alive > 0) {
                const double* state = path + last * n_assets;
                for (std::size_t a = 0; a < k; ++a) {
                    if (!alive[a]) continue;
                    cashflow[a] =
                        intrinsic_value(pf.instruments[a], state, n_assets) * df[last];
                    ++cs.hist[a * n_dates + last];
                }
            }
            double pf_cf = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                cs.sum[a] += cashflow[a];
                cs.sumsq[a] += cashflow[a] * cashflow[a];
                pf_cf += cashflow[a];
            }
            cs.pf_sum += pf_cf;
            cs.pf_sumsq += pf_cf * pf_cf;
        }
    });

    PricingResult res;
    res.n_paths = n_paths;
    res.seed = seed;
    res.price.assign(k, 0.0);
    res.stderr_.assign(k, 0.0);
    res.exercise_histogram.assign(k, std::vector<std::size_t>(n_dates, 0));
    for (const auto& inst : pf.instruments) res.labels.push_back(inst.label);

    std::vector<double> sum(k, 0.0), sumsq(k, 0.0);
    double pf_sum = 0.0, pf_sumsq = 0.0;
    for (const auto& cs : stats) {
        for (std::size_t a = 0; a < k; ++a) {
            sum[a] += cs.sum[a];
            sumsq[a] += cs.sumsq[a];
            for (std::size_t n = 0; n < n_dates; ++n) {
                res.exercise_histogram[a][n] += cs.hist[a * n_dates + n];
            }
        }
        pf_sum += cs.pf_sum;
        pf_sumsq += cs.pf_sumsq;
    }
    const double n = static_cast<double>(n_paths);
    auto finish = [n](double s, double sq, double& mean, double& se) {
        mean = s / n;
        const double var = n > 1.0 ? std::max(0.0, (sq - s * s / n) / (n - 1.0)) : 0.0;
        se = std::sqrt(var / n);
    };
    for (std::size_t a = 0; a < k; ++a) {
        finish(sum[a], sumsq[a], res.price[a], res.stderr_[a]);
    }
    finish(pf_sum, pf_sumsq, res.portfolio_price, res.portfolio_stderr);
    return res;
}

std::vector<double> backward_estimate(const TrainedPolicy& policy, std::size_t n_paths,
                                      std::uint64_t seed, unsigned workers) {
    if (n_paths < 1) throw std::invalid_argument("backward_estimate: n_paths >= 1");
    const Portfolio& pf = policy.portfolio;
    const std::size_t k = pf.size();
    const std::size_t n_assets = pf.params.n_assets();
    const double dt = pf.grid.dt(0);
    const double df = discount(pf.grid.dates[0], pf.grid.dates[1], pf.params.rate);
    const std::size_t next_date = 1;
    if (next_date != policy.last_date_index()) {
        policy.model_at(next_date);
    }

    std::size_t max_width = 1;
    if (next_date != policy.last_date_index()) {
        max_width = policy.model_at(next_date).net.max_width();
    }

    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> sums(n_chunks, std::vector<double>(k, 0.0));
    parallel_for_chunks(n_paths, kChunk, workers, [&](std::size_t b, std::size_t e) {
        auto& acc = sums[b / kChunk];
        NetworkEval eval(max_width);
        std::vector<double> scratch(n_assets);
        std::vector<double> state(n_assets);
        std::vector<double> z(n_assets);
        std::vector<double> value(k);
        for (std::size_t j = b; j < e; ++j) {
            NormalStream stream(seed, j);
            for (std::size_t i = 0; i < n_assets; ++i) {
                state[i] = pf.params.spot[i];
                z[i] = stream.next();
            }
            gbm_step_inplace(state.data(), dt, pf.params, z.data());
            one_step_value(policy, next_date, state.data(), value.data(), eval, scratch);
            for (std::size_t a = 0; a < k; ++a) acc[a] += value[a];
        }
    });
    std::vector<double> out(k, 0.0);
    for (const auto& acc : sums) {
        for (std::size_t a = 0; a < k; ++a) out[a] += acc[a];
    }
    for (std::size_t a = 0; a < k; ++a) {
        out[a] *= df / static_cast<double>(n_paths);
    }
    return out;
}

} // namespace pnl
