#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "run_config.hpp"

namespace pnl {

struct RunOptions {
    std::string out_dir;          // overrides config output_dir
    bool has_seed_override = false;
    std::uint64_t seed_override = 0;
    std::size_t paths_override = 0; // pricing L, 0 = keep config
    unsigned workers = 1;
};

// Applies CLI overrides (seed fan-out, pricing paths, output dir).
RunConfig apply_overrides(RunConfig cfg, const RunOptions& opts);

int run_train(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);
int run_price(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);
int run_pnl(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);
int run_all(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);

// Reference comparisons: the dt ladder for the single-asset put with its
// dt -> 0 extrapolation against the tree oracle, and the call-on-max rows
// against published confidence intervals.
struct BenchmarkOptions {
    std::size_t outer_paths = 100000;
    std::size_t m_inner = 32;
    std::size_t pricing_paths = 2000000;
    std::uint64_t seed = 4242;
    unsigned workers = 1;
    bool include_dividend_case = true;
    bool include_call_on_max = true;
    std::string out_dir;
};

int run_benchmark(const BenchmarkOptions& opts, std::ostream& log);

std::string resolve_out_dir(const RunConfig& cfg, const RunOptions& opts);

} // namespace pnl
