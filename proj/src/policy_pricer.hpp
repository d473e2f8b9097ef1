#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lsm_engine.hpp"

namespace pnl {

struct PricingResult {
    std::vector<std::string> labels;
    std::vector<double> price;   // per instrument, discounted to t0
    std::vector<double> stderr_; // per instrument
    double portfolio_price = 0.0;
    double portfolio_stderr = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    // exercise date histogram per instrument, index by date (maturity included)
    std::vector<std::vector<std::size_t>> exercise_histogram;
};

// Forward pricing with the trained networks as the exercise policy: stop at
// the first exercisable date where intrinsic exceeds the interpolated
// continuation value (ties continue). Lower-bound estimator with MC error.
PricingResult price_with_policy(const TrainedPolicy& policy, std::size_t n_paths,
                                std::uint64_t seed, unsigned workers = 1);

// Discounted mean of the one-step value through the t1 network. High-biased
// proxy for the price; no statistical error is attached by construction.
std::vector<double> backward_estimate(const TrainedPolicy& policy, std::size_t n_paths,
                                      std::uint64_t seed, unsigned workers = 1);

} // namespace pnl
