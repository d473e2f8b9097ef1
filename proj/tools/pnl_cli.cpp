// Batch front end: train the exercise policy, price, build P&L
// distributions, or run the reference benchmark.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "parallel.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo portfolio pricer and P&L engine with neural continuation values"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t paths = 0;
    unsigned workers = pnl::default_workers();

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* copt = sub->add_option("--config", config_path, "run configuration file (JSON)");
        if (config_required) copt->required();
        sub->add_option("--out", out_dir, "output directory (default: config, then $PNL_OUT_DIR)");
        sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--paths", paths, "pricing path count override");
        sub->add_option("--workers", workers, "worker thread count");
    };

    auto* c_train = app.add_subcommand("train", "train the per-date continuation networks");
    auto* c_price = app.add_subcommand("price", "price with a previously trained policy");
    auto* c_pnl = app.add_subcommand("pnl", "build P&L distributions from a trained policy");
    auto* c_all = app.add_subcommand("all", "train, price and build P&L in one run");
    auto* c_bench = app.add_subcommand("benchmark", "reference ladder and call-on-max checks");
    for (auto* sub : {c_train, c_price, c_pnl, c_all}) add_common(sub, true);

    pnl::BenchmarkOptions bopts;
    c_bench->add_option("--out", bopts.out_dir, "output directory");
    c_bench->add_option("--seed", bopts.seed, "benchmark seed");
    c_bench->add_option("--paths", bopts.pricing_paths, "pricing path count");
    c_bench->add_option("--outer-paths", bopts.outer_paths, "training outer path count");
    c_bench->add_option("--inner", bopts.m_inner, "inner one-step samples per outer path");
    c_bench->add_option("--workers", bopts.workers, "worker thread count");
    c_bench->add_flag("--skip-dividend", "skip the dividend ladder");
    c_bench->add_flag("--skip-call-on-max", "skip the call-on-max rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_bench->parsed()) {
            bopts.include_dividend_case = c_bench->count("--skip-dividend") == 0;
            bopts.include_call_on_max = c_bench->count("--skip-call-on-max") == 0;
            if (bopts.workers == 0) bopts.workers = pnl::default_workers();
            return pnl::run_benchmark(bopts, std::cout);
        }

        pnl::RunOptions opts;
        opts.out_dir = out_dir;
        opts.has_seed_override = seed_given;
        opts.seed_override = seed;
        opts.paths_override = paths;
        opts.workers = workers == 0 ? pnl::default_workers() : workers;

        pnl::RunConfig cfg = pnl::apply_overrides(pnl::parse_config(config_path), opts);
        if (c_train->parsed()) return pnl::run_train(cfg, opts, std::cout);
        if (c_price->parsed()) return pnl::run_price(cfg, opts, std::cout);
        if (c_pnl->parsed()) return pnl::run_pnl(cfg, opts, std::cout);
        return pnl::run_all(cfg, opts, std::cout);
    } catch (const pnl::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
