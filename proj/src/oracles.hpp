#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "market_model.hpp"

namespace pnl {

struct OracleResult {
    double price = 0.0;
    std::string method;
    std::size_t discretization = 0; // tree steps or MC paths
    double stderr_est = 0.0;        // 0 when not applicable
};

// Exercise rights for the binomial tree.
struct ExerciseSchedule {
    bool continuous = true;
    std::vector<double> dates; // used when continuous == false; maturity implied

    static ExerciseSchedule continuous_exercise() { return {}; }
    static ExerciseSchedule at_dates(std::vector<double> ds) {
        return {false, std::move(ds)};
    }
};

// Cox-Ross-Rubinstein tree for an American/Bermudan put. Schedule dates are
// snapped to the nearest tree level; pick tree_steps a multiple of the
// schedule density so snapping is exact.
OracleResult binomial_put(double s0, double strike, double rate, double dividend, double sigma,
                          double maturity, std::size_t tree_steps,
                          const ExerciseSchedule& schedule = ExerciseSchedule::continuous_exercise());

double black_scholes(double s0, double strike, double rate, double dividend, double sigma,
                     double maturity, bool is_call);

// Stulz closed form for a European call on the min of two assets.
double call_on_min_closed_form(double s0x, double s0y, double strike, double rate,
                               double div_x, double div_y, double sigma_x, double sigma_y,
                               double corr, double maturity);

// Brute-force reference for any terminal payoff: one exact GBM step to T.
OracleResult dense_mc_european(const std::function<double(const double*, std::size_t)>& payoff,
                               const ModelParams& params, double maturity, std::size_t n_paths,
                               std::uint64_t seed);

// Ordinary least squares intercept of price against dt.
double extrapolate_dt_zero(const std::vector<std::pair<double, double>>& points);

} // namespace pnl
