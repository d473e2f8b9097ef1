#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normal.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace pnl {

namespace {

// sigma == 0: deterministic forward, best discounted intrinsic over the rights.
double put_zero_vol(double s0, double strike, double rate, double dividend, double maturity,
                    const ExerciseSchedule& schedule, std::size_t tree_steps) {
    std::vector<double> dates;
    if (schedule.continuous) {
        dates.reserve(tree_steps);
        for (std::size_t n = 1; n <= tree_steps; ++n) {
            dates.push_back(maturity * static_cast<double>(n) / static_cast<double>(tree_steps));
        }
    } else {
        dates = schedule.dates;
        if (dates.empty() || dates.back() != maturity) dates.push_back(maturity);
    }
    double best = 0.0;
    for (double t : dates) {
        const double st = s0 * std::exp((rate - dividend) * t);
        best = std::max(best, std::exp(-rate * t) * std::max(strike - st, 0.0));
    }
    return best;
}

} // namespace

OracleResult binomial_put(double s0, double strike, double rate, double dividend, double sigma,
                          double maturity, std::size_t tree_steps,
                          const ExerciseSchedule& schedule) {
    if (tree_steps < 1) throw std::invalid_argument("binomial_put: tree_steps >= 1");
    if (!(s0 > 0.0) || !(strike > 0.0) || !(maturity > 0.0) || sigma < 0.0) {
        throw std::invalid_argument("binomial_put: bad parameters");
    }
    OracleResult res;
    res.method = schedule.continuous ? "crr_continuous" : "crr_schedule";
    res.discretization = tree_steps;
    if (sigma == 0.0) {
        res.price = put_zero_vol(s0, strike, rate, dividend, maturity, schedule, tree_steps);
        return res;
    }

    const double dt = maturity / static_cast<double>(tree_steps);
    const double up = std::exp(sigma * std::sqrt(dt));
    const double down = 1.0 / up;
    const double growth = std::exp((rate - dividend) * dt);
    const double p_up = (growth - down) / (up - down);
    if (!(p_up > 0.0 && p_up < 1.0)) {
        throw std::invalid_argument("binomial_put: tree probability outside (0,1); refine steps");
    }
    const double disc = std::exp(-rate * dt);
    const double pu = disc * p_up;
    const double pd = disc * (1.0 - p_up);

    std::vector<char> can_exercise(tree_steps + 1, schedule.continuous ? 1 : 0);
    if (!schedule.continuous) {
        for (double t : schedule.dates) {
            if (t < 0.0 || t > maturity + 1e-12) {
                throw std::invalid_argument("binomial_put: schedule date outside [0,T]");
            }
            const auto step = static_cast<std::size_t>(std::llround(t / dt));
            can_exercise[std::min(step, tree_steps)] = 1;
        }
        can_exercise[tree_steps] = 1;
    }
    can_exercise[0] = 0; // rights start after t0

    std::vector<double> value(tree_steps + 1);
    for (std::size_t i = 0; i <= tree_steps; ++i) {
        const double st = s0 * std::pow(up, 2.0 * static_cast<double>(i) -
                                                static_cast<double>(tree_steps));
        value[i] = std::max(strike - st, 0.0);
    }
    for (std::size_t n = tree_steps; n-- > 0;) {
        const bool ex = can_exercise[n] != 0;
        for (std::size_t i = 0; i <= n; ++i) {
            double hold = pu * value[i + 1] + pd * value[i];
            if (ex) {
                const double st = s0 * std::pow(up, 2.0 * static_cast<double>(i) -
                                                        static_cast<double>(n));
                hold = std::max(hold, strike - st);
            }
            value[i] = hold;
        }
    }
    res.price = value[0];
    return res;
}

double black_scholes(double s0, double strike, double rate, double dividend, double sigma,
                     double maturity, bool is_call) {
    if (!(s0 > 0.0) || !(strike > 0.0) || sigma < 0.0 || maturity < 0.0) {
        throw std::invalid_argument("black_scholes: bad parameters");
    }
    const double fwd = s0 * std::exp((rate - dividend) * maturity);
    const double df = std::exp(-rate * maturity);
    if (maturity == 0.0 || sigma == 0.0) {
        const double intrinsic = is_call ? std::max(fwd - strike, 0.0) : std::max(strike - fwd, 0.0);
        return df * intrinsic;
    }
    const double vol = sigma * std::sqrt(maturity);
    const double d1 = std::log(fwd / strike) / vol + 0.5 * vol;
    const double d2 = d1 - vol;
    if (is_call) {
        return df * (fwd * norm_cdf(d1) - strike * norm_cdf(d2));
    }
    return df * (strike * norm_cdf(-d2) - fwd * norm_cdf(-d1));
}

double call_on_min_closed_form(double s0x, double s0y, double strike, double rate,
                               double div_x, double div_y, double sigma_x, double sigma_y,
                               double corr, double maturity) {
    if (!(s0x > 0.0) || !(s0y > 0.0) || strike < 0.0 || sigma_x <= 0.0 || sigma_y <= 0.0 ||
        !(maturity > 0.0) || corr < -1.0 || corr > 1.0) {
        throw std::invalid_argument("call_on_min_closed_form: bad parameters");
    }
    const double bx = rate - div_x; // cost of carry
    const double by = rate - div_y;
    const double sqt = std::sqrt(maturity);
    const double spread_var = sigma_x * sigma_x + sigma_y * sigma_y - 2.0 * corr * sigma_x * sigma_y;
    const double spread_vol = std::sqrt(std::max(spread_var, 1e-30));
    const double d = (std::log(s0x / s0y) + (bx - by + 0.5 * spread_var) * maturity) /
                     (spread_vol * sqt);
    const double rho1 = (corr * sigma_y - sigma_x) / spread_vol;
    const double rho2 = (corr * sigma_x - sigma_y) / spread_vol;
    const double dfx = std::exp((bx - rate) * maturity);
    const double dfy = std::exp((by - rate) * maturity);

    if (strike == 0.0) {
        // min(Sx, Sy) forward: Sx when Sx < Sy, else Sy
        return s0x * dfx * norm_cdf(-d) + s0y * dfy * norm_cdf(d - spread_vol * sqt);
    }

    const double y1 = (std::log(s0x / strike) + (bx + 0.5 * sigma_x * sigma_x) * maturity) /
                      (sigma_x * sqt);
    const double y2 = (std::log(s0y / strike) + (by + 0.5 * sigma_y * sigma_y) * maturity) /
                      (sigma_y * sqt);
    return s0x * dfx * bivar_norm_cdf(y1, -d, rho1) +
           s0y * dfy * bivar_norm_cdf(y2, d - spread_vol * sqt, rho2) -
           strike * std::exp(-rate * maturity) *
               bivar_norm_cdf(y1 - sigma_x * sqt, y2 - sigma_y * sqt, corr);
}

OracleResult dense_mc_european(const std::function<double(const double*, std::size_t)>& payoff,
                               const ModelParams& params, double maturity, std::size_t n_paths,
                               std::uint64_t seed) {
    params.validate();
    if (n_paths < 1) throw std::invalid_argument("dense_mc_european: n_paths >= 1");
    if (!(maturity > 0.0)) throw std::invalid_argument("dense_mc_european: maturity > 0");
    const std::size_t n_assets = params.n_assets();
    const std::size_t chunk = 8192;
    const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
    std::vector<double> sums(n_chunks, 0.0);
    std::vector<double> sumsqs(n_chunks, 0.0);
    parallel_for_chunks(n_paths, chunk, default_workers(), [&](std::size_t b, std::size_t e) {
        std::vector<double> state(n_assets);
        std::vector<double> z(n_assets);
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t j = b; j < e; ++j) {
            NormalStream stream(seed, j);
            for (std::size_t i = 0; i < n_assets; ++i) {
                state[i] = params.spot[i];
                z[i] = stream.next();
            }
            gbm_step_inplace(state.data(), maturity, params, z.data());
            const double v = payoff(state.data(), n_assets);
            sum += v;
            sumsq += v * v;
        }
        sums[b / chunk] = sum;
        sumsqs[b / chunk] = sumsq;
    });
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        sum += sums[c];
        sumsq += sumsqs[c];
    }
    const double n = static_cast<double>(n_paths);
    const double mean = sum / n;
    const double var = n > 1.0 ? std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)) : 0.0;
    const double df = std::exp(-params.rate * maturity);
    OracleResult res;
    res.method = "dense_mc";
    res.discretization = n_paths;
    res.price = df * mean;
    res.stderr_est = df * std::sqrt(var / n);
    return res;
}

double extrapolate_dt_zero(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) {
        throw std::invalid_argument("extrapolate_dt_zero: need at least 2 points");
    }
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    const double n = static_cast<double>(points.size());
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("extrapolate_dt_zero: dt values must be distinct");
    }
    const double slope = sxy / sxx;
    return my - slope * mx;
}

} // namespace pnl
