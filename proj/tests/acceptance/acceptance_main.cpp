// Acceptance suite: runs every gated criterion at its stated tolerance and
// prints one pass/fail line per check. Exit code = number of failures.
//
// Reference values come from published PDE / Monte Carlo benchmarks for the
// same model; exact oracle columns (binomial tree, closed forms) are printed
// next to soft-band quantile checks so disagreements are self-documenting.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "lsm_engine.hpp"
#include "normal.hpp"
#include "oracles.hpp"
#include "parallel.hpp"
#include "pnl_engine.hpp"
#include "policy_pricer.hpp"
#include "rng.hpp"

using namespace pnl;

namespace {

int g_failures = 0;
int g_crit_checks[9] = {0};
int g_crit_failures[9] = {0};
std::chrono::steady_clock::time_point g_start;

double elapsed_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count();
}

void line(const std::string& crit, bool pass, const std::string& msg) {
    std::printf("[%6.0fs] %-4s %s: %s\n", elapsed_s(), crit.c_str(),
                pass ? "PASS" : "FAIL", msg.c_str());
    std::fflush(stdout);
    const int idx = crit[0] - '0';
    if (idx >= 1 && idx <= 8) {
        ++g_crit_checks[idx];
        if (!pass) ++g_crit_failures[idx];
    }
    if (!pass) ++g_failures;
}

void note(const std::string& msg) {
    std::printf("[%6.0fs]      note: %s\n", elapsed_s(), msg.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

Portfolio put_portfolio(double s0, double strike, double rate, double dividend, double sigma,
                        double maturity, std::size_t steps) {
    Portfolio pf;
    pf.params.rate = rate;
    pf.params.dividend = {dividend};
    pf.params.sigma = {sigma};
    pf.params.spot = {s0};
    pf.grid = TimeGrid::uniform(maturity, steps);
    Instrument put;
    put.kind = PayoffKind::american_put;
    put.strike = strike;
    put.underlying_indices = {0};
    put.exercise_date_indices = schedule_every(steps, 1);
    put.label = "AM";
    pf.instruments = {put};
    return pf;
}

Portfolio max_portfolio(std::size_t d, double s0, double strike, double rate, double dividend,
                        double sigma, double maturity, std::size_t steps) {
    Portfolio pf;
    pf.params.rate = rate;
    pf.params.dividend.assign(d, dividend);
    pf.params.sigma.assign(d, sigma);
    pf.params.spot.assign(d, s0);
    pf.grid = TimeGrid::uniform(maturity, steps);
    Instrument cmax;
    cmax.kind = PayoffKind::bermudan_call_on_max;
    cmax.strike = strike;
    cmax.underlying_indices.resize(d);
    for (std::size_t i = 0; i < d; ++i) cmax.underlying_indices[i] = i;
    cmax.exercise_date_indices = schedule_every(steps, 1);
    cmax.label = "bCM";
    pf.instruments = {cmax};
    return pf;
}

// the one-year three-asset portfolio: monthly put, call on min, call on max
Portfolio year_portfolio() {
    Portfolio pf;
    pf.params.rate = 0.05;
    pf.params.dividend = {0.03, 0.03, 0.03};
    pf.params.sigma = {0.2, 0.2, 0.2};
    pf.params.spot = {1.0, 1.0, 1.0};
    pf.grid = TimeGrid::uniform(1.0, 12);
    Instrument am;
    am.kind = PayoffKind::american_put;
    am.strike = 1.0;
    am.underlying_indices = {0};
    am.exercise_date_indices = schedule_every(12, 1);
    am.label = "AM";
    Instrument cm;
    cm.kind = PayoffKind::european_call_on_min;
    cm.strike = 0.9;
    cm.underlying_indices = {0, 1};
    cm.exercise_date_indices = schedule_maturity_only(12);
    cm.label = "Cm";
    Instrument bcm;
    bcm.kind = PayoffKind::bermudan_call_on_max;
    bcm.strike = 1.0;
    bcm.underlying_indices = {0, 1, 2};
    bcm.exercise_date_indices = schedule_every(12, 1);
    bcm.label = "bCM";
    pf.instruments = {am, cm, bcm};
    return pf;
}

LsmConfig ladder_cfg(std::uint64_t seed) {
    LsmConfig cfg;
    cfg.n_outer_paths = 50000;
    cfg.m_inner = 16;
    cfg.seed = seed;
    cfg.workers = 2;
    cfg.train.learning_rate = 1e-2;
    cfg.train.max_epochs = 500;
    cfg.train.batch_size = 1024;
    cfg.train.patience = 25;
    cfg.train.lr_decay_steps = 3;
    cfg.train.seed = seed + 1;
    return cfg;
}

LsmConfig portfolio_cfg(std::uint64_t seed) {
    LsmConfig cfg = ladder_cfg(seed);
    cfg.n_outer_paths = 100000;
    cfg.m_inner = 32;
    cfg.train.max_epochs = 900;
    cfg.train.patience = 30;
    cfg.train.lr_decay_steps = 5;
    // the three-asset monthly cascade needs more capacity than the 10-10
    // default: late-date fit error rectifies through the exercise max at
    // every date and inflates the horizon marks
    cfg.hidden_layers = {20, 20};
    return cfg;
}

// European call-on-max value by survival-function quadrature; a pointwise
// lower bound for the Bermudan mark at the same state.
double euro_max_call_quadrature(const std::vector<double>& s, double strike, double rate,
                                double dividend, double sigma, double tau) {
    const double df = std::exp(-rate * tau);
    const double m = (rate - dividend - 0.5 * sigma * sigma) * tau;
    const double sd = sigma * std::sqrt(tau);
    double hi = 0.0;
    for (double v : s) hi = std::max(hi, v);
    hi *= std::exp(m + 8.0 * sd);
    if (hi <= strike) return 0.0;
    const int n = 400;
    const double h = (hi - strike) / n;
    auto tail = [&](double u) {
        double prod = 1.0;
        for (double v : s) prod *= norm_cdf((std::log(u / v) - m) / sd);
        return 1.0 - prod;
    };
    double acc = tail(strike) + tail(hi);
    for (int i = 1; i < n; ++i) acc += tail(strike + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return df * acc * h / 3.0;
}

struct LadderRow {
    const char* label;
    std::size_t steps;
    double reference;
    double price = 0.0;
    double se = 0.0;
};

} // namespace

// trained monthly-put artifacts, reused by criterion 7
static TrainedPolicy g_put_1m_policy;
static PricingResult g_put_1m_pricing;

int main() {
    g_start = std::chrono::steady_clock::now();
    std::printf("acceptance suite: desk-scale run, criteria 1-8\n");

    // ------------------------------------------------------------------ 1+2
    {
        std::vector<LadderRow> rows = {
            {"2M", 6, 5.997}, {"1M", 12, 6.041}, {"2W", 26, 6.066}, {"1W", 52, 6.075}};
        std::vector<std::pair<double, double>> points;
        for (auto& row : rows) {
            Portfolio pf = put_portfolio(100.0, 100.0, 0.05, 0.0, 0.20, 1.0, row.steps);
            LsmConfig cfg = ladder_cfg(derive_seed(917, row.steps));
            TrainedPolicy policy = train_policy(pf, cfg);
            PricingResult res =
                price_with_policy(policy, 4000000, derive_seed(5150, row.steps), 2);
            row.price = res.price[0];
            row.se = res.stderr_[0];
            points.emplace_back(1.0 / static_cast<double>(row.steps), row.price);
            const double tol = std::max(3.0 * row.se, 0.01);
            char msg[160];
            std::snprintf(msg, sizeof(msg),
                          "put dt=%s: %.4f +/- %.4f vs %.3f (tol %.4f)", row.label, row.price,
                          row.se, row.reference, tol);
            line("1", std::fabs(row.price - row.reference) <= tol, msg);
            if (row.steps == 12) {
                g_put_1m_policy = policy;
                g_put_1m_pricing = res;
            }
        }
        // schedule-density monotonicity (more rights are worth no less)
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const double combined = 3.0 * std::hypot(rows[r].se, rows[r - 1].se);
            char msg[160];
            std::snprintf(msg, sizeof(msg), "ordering %s >= %s - 3se (%.4f vs %.4f)",
                          rows[r].label, rows[r - 1].label, rows[r].price, rows[r - 1].price);
            line("1", rows[r].price >= rows[r - 1].price - combined, msg);
        }

        const double intercept = extrapolate_dt_zero(points);
        OracleResult tree = binomial_put(100.0, 100.0, 0.05, 0.0, 0.20, 1.0, 40000);
        line("2", std::fabs(intercept - 6.086) <= 0.01,
             fmt("dt->0 extrapolation %.4f vs 6.086 (tol 0.01)", intercept));
        line("2", std::fabs(tree.price - 6.089) <= 0.01,
             fmt("continuous-exercise tree %.4f vs 6.089 (tol 0.01)", tree.price));
    }

    // -------------------------------------------------------------------- 3
    {
        std::vector<LadderRow> rows = {
            {"2M", 6, 12.309}, {"1M", 12, 12.348}, {"2W", 26, 12.370}, {"1W", 52, 12.377}};
        std::vector<std::pair<double, double>> points;
        for (auto& row : rows) {
            Portfolio pf = put_portfolio(90.0, 100.0, 0.05, 0.03, 0.20, 1.0, row.steps);
            LsmConfig cfg = ladder_cfg(derive_seed(917, 1000 + row.steps));
            TrainedPolicy policy = train_policy(pf, cfg);
            PricingResult res =
                price_with_policy(policy, 4000000, derive_seed(5150, 1000 + row.steps), 2);
            row.price = res.price[0];
            row.se = res.stderr_[0];
            points.emplace_back(1.0 / static_cast<double>(row.steps), row.price);
            note(fmt("dividend ladder row: %.4f +/- %.4f", row.price, row.se) +
                 std::string(" [") + row.label + "]");
        }
        const double intercept = extrapolate_dt_zero(points);
        OracleResult tree = binomial_put(90.0, 100.0, 0.05, 0.03, 0.20, 1.0, 40000);
        line("3", std::fabs(intercept - 12.387) <= 0.01,
             fmt("dividend dt->0 extrapolation %.4f vs 12.387 (tol 0.01)", intercept));
        line("3", std::fabs(tree.price - 12.384) <= 0.01,
             fmt("dividend continuous-exercise tree %.4f vs 12.384 (tol 0.01)", tree.price));
    }

    // -------------------------------------------------------------------- 4
    {
        struct MaxRow {
            std::size_t d;
            double lo, hi;
        };
        for (const MaxRow& row : {MaxRow{3, 18.673, 18.699}, MaxRow{2, 13.880, 13.910}}) {
            Portfolio pf = max_portfolio(row.d, 100.0, 100.0, 0.05, 0.10, 0.20, 3.0, 9);
            LsmConfig cfg = ladder_cfg(derive_seed(4321, row.d));
            TrainedPolicy policy = train_policy(pf, cfg);
            PricingResult res = price_with_policy(policy, 4000000, derive_seed(777, row.d), 2);
            const double slack = 3.0 * res.stderr_[0];
            const bool pass =
                res.price[0] >= row.lo - slack && res.price[0] <= row.hi + slack;
            char msg[200];
            std::snprintf(msg, sizeof(msg),
                          "call-on-max d=%zu: %.4f +/- %.4f vs CI [%.3f, %.3f] (+/- 3se)",
                          row.d, res.price[0], res.stderr_[0], row.lo, row.hi);
            line("4", pass, msg);
        }
    }

    // ---------------------------------------------------------------- 5 + 6
    {
        Portfolio pf = year_portfolio();
        LsmConfig cfg = portfolio_cfg(31415);
        cfg.train.seed = 31416;
        TrainedPolicy policy = train_policy(pf, cfg);
        PricingResult res = price_with_policy(policy, 1000000, 31417, 2);

        const double refs[3] = {6.943, 5.876, 19.518};
        // published +/- values read as 95% errors, i.e. 1.96 standard errors
        const double published_se[3] = {0.003 / 1.96, 0.003 / 1.96, 0.005 / 1.96};
        const char* names[3] = {"AM", "Cm", "bCM"};
        for (int a = 0; a < 3; ++a) {
            const double price100 = 100.0 * res.price[a];
            const double se100 = 100.0 * res.stderr_[a];
            const double tol = std::max(3.0 * std::hypot(se100, published_se[a]), 0.03);
            char msg[200];
            std::snprintf(msg, sizeof(msg), "%s price %.4f +/- %.4f vs %.3f (tol %.4f, x100)",
                          names[a], price100, se100, refs[a], tol);
            line("5", std::fabs(price100 - refs[a]) <= tol, msg);
        }

        // joint vs separate training with the same settings; each solo run
        // simulates only the assets its instrument needs
        for (int a = 0; a < 3; ++a) {
            const Instrument& inst = pf.instruments[static_cast<std::size_t>(a)];
            const std::size_t n_solo = inst.underlying_indices.size();
            Portfolio solo;
            solo.params.rate = pf.params.rate;
            solo.params.dividend.assign(pf.params.dividend.begin(),
                                        pf.params.dividend.begin() + n_solo);
            solo.params.sigma.assign(pf.params.sigma.begin(), pf.params.sigma.begin() + n_solo);
            solo.params.spot.assign(pf.params.spot.begin(), pf.params.spot.begin() + n_solo);
            solo.grid = pf.grid;
            Instrument solo_inst = inst;
            solo_inst.underlying_indices.clear();
            for (std::size_t u = 0; u < n_solo; ++u) solo_inst.underlying_indices.push_back(u);
            solo.instruments = {solo_inst};
            TrainedPolicy solo_policy = train_policy(solo, cfg);
            PricingResult solo_res = price_with_policy(solo_policy, 1000000, 31417, 2);
            const double combined =
                3.0 * std::hypot(res.stderr_[a], solo_res.stderr_[0]);
            char msg[200];
            std::snprintf(msg, sizeof(msg),
                          "%s joint %.4f vs separate %.4f (tol 3 combined se %.4f, x100)",
                          names[a], 100.0 * res.price[a], 100.0 * solo_res.price[0],
                          100.0 * combined);
            line("5", std::fabs(res.price[a] - solo_res.price[0]) <= combined, msg);
            if (a == 0) {
                // marginal quantiles from a dedicated single-asset run, for
                // comparison against the joint run's marginals
                PricingResult solo_base = price_with_policy(solo_policy, 500000, 31427, 2);
                PnlDistribution solo_dist =
                    build_pnl(solo_policy, 1, solo_base.price, 500000, 31428, 2);
                for (double p : {0.01, 0.10, 0.50, 0.90, 0.99}) {
                    note(fmt("AM marginal q%.2f: separate run %.3f vs joint run (x100)", p,
                             100.0 * solo_dist.quantile(0, p)));
                }
            }
        }

        // criterion 6: one-month P&L quantiles
        PnlDistribution dist = build_pnl(policy, 1, res.price, 500000, 31418, 2);
        const double levels[5] = {0.01, 0.10, 0.50, 0.90, 0.99};
        const double published_cells[3][5] = {{-4.01, -2.77, 0.27, 3.49, 7.17},
                                          {-3.63, 2.37, 0.15, 2.47, 3.78},
                                          {-7.39, -4.26, 0.11, 4.40, 7.24}};

        // exact oracle rows where a closed valuation exists
        double exact_am[5], exact_cm[5];
        {
            const double t1 = 1.0 / 12.0;
            const double df = std::exp(-0.05 * t1);
            std::vector<double> sched0, sched1;
            for (int i = 1; i <= 12; ++i) sched0.push_back(i / 12.0);
            for (int i = 2; i <= 12; ++i) sched1.push_back(i / 12.0 - t1);
            const double v0am = binomial_put(1.0, 1.0, 0.05, 0.03, 0.2, 1.0, 24000,
                                             ExerciseSchedule::at_dates(sched0))
                                    .price;
            const double sd = 0.2 * std::sqrt(t1);
            for (int c = 0; c < 5; ++c) {
                const double s = std::exp(sd * norm_ppf(1.0 - levels[c]));
                const double mark = binomial_put(s, 1.0, 0.05, 0.03, 0.2, 1.0 - t1, 22000,
                                                 ExerciseSchedule::at_dates(sched1))
                                        .price;
                exact_am[c] = 100.0 * (df * mark - v0am);
            }
            // call on min: simulate exact marks through the closed form
            const double v0cm =
                call_on_min_closed_form(1.0, 1.0, 0.9, 0.05, 0.03, 0.03, 0.2, 0.2, 0.0, 1.0);
            ModelParams mp;
            mp.rate = 0.05;
            mp.dividend = {0.03, 0.03};
            mp.sigma = {0.2, 0.2};
            mp.spot = {1.0, 1.0};
            const std::size_t n = 200000;
            std::vector<double> pnl(n);
            std::vector<double> z(2), st(2);
            for (std::size_t j = 0; j < n; ++j) {
                NormalStream stream(5555, j);
                st = mp.spot;
                z[0] = stream.next();
                z[1] = stream.next();
                gbm_step_inplace(st.data(), t1, mp, z.data());
                pnl[j] = df * call_on_min_closed_form(st[0], st[1], 0.9, 0.05, 0.03, 0.03, 0.2,
                                                      0.2, 0.0, 1.0 - t1) -
                         v0cm;
            }
            std::sort(pnl.begin(), pnl.end());
            for (int c = 0; c < 5; ++c) exact_cm[c] = 100.0 * empirical_quantile(pnl, levels[c]);
        }

        // lower bound for the call-on-max marks: the European value at the
        // same state (quadrature), discounted against the published baseline
        double bcm_lb[5];
        {
            const double t1 = 1.0 / 12.0;
            const double df = std::exp(-0.05 * t1);
            ModelParams mp3;
            mp3.rate = 0.05;
            mp3.dividend = {0.03, 0.03, 0.03};
            mp3.sigma = {0.2, 0.2, 0.2};
            mp3.spot = {1.0, 1.0, 1.0};
            const std::size_t n = 100000;
            std::vector<double> pnl_lb(n);
            parallel_for_chunks(n, 4096, 2, [&](std::size_t b, std::size_t e) {
                std::vector<double> z(3), st(3);
                for (std::size_t j = b; j < e; ++j) {
                    NormalStream stream(5556, j);
                    st = mp3.spot;
                    for (int i = 0; i < 3; ++i) z[i] = stream.next();
                    gbm_step_inplace(st.data(), t1, mp3, z.data());
                    const double mark =
                        euro_max_call_quadrature(st, 1.0, 0.05, 0.03, 0.2, 1.0 - t1);
                    pnl_lb[j] = df * mark - 0.19518;
                }
            });
            std::sort(pnl_lb.begin(), pnl_lb.end());
            for (int c = 0; c < 5; ++c) {
                bcm_lb[c] = 100.0 * empirical_quantile(pnl_lb, levels[c]);
            }
            note(fmt("bCM European-mark bound: any valid mark is >= the European value, so the "
                     "upper-tail P&L quantiles satisfy q90 >= %.2f, q99 >= %.2f (vs published 4.40, 7.24)",
                     bcm_lb[3], bcm_lb[4]));
        }

        // hard gates: hedging sub-additivity at both tails
        const double q01_pf = 100.0 * dist.quantile(-1, 0.01);
        const double q01_sum = 100.0 * (dist.quantile(0, 0.01) + dist.quantile(1, 0.01) +
                                        dist.quantile(2, 0.01));
        line("6", q01_pf > q01_sum,
             fmt("hedging at 1%%: portfolio %.2f > sum of marginals %.2f", q01_pf, q01_sum));
        const double q99_pf = 100.0 * dist.quantile(-1, 0.99);
        const double q99_sum = 100.0 * (dist.quantile(0, 0.99) + dist.quantile(1, 0.99) +
                                        dist.quantile(2, 0.99));
        line("6", q99_pf < q99_sum,
             fmt("sub-additive gains at 99%%: portfolio %.2f < sum of marginals %.2f", q99_pf,
                 q99_sum));

        // soft regression band vs the published cells (x100), +-0.5,
        // excluding the suspected-typo Cm/10% cell
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 5; ++c) {
                if (a == 1 && c == 1) {
                    note(fmt("Cm q0.10 excluded as suspected sign typo: ours %.2f, published +2.37, "
                             "exact %.2f",
                             100.0 * dist.quantile(1, levels[c]), exact_cm[c]));
                    continue;
                }
                const double q = 100.0 * dist.quantile(a, levels[c]);
                const double ref = published_cells[a][c];
                char msg[240];
                if (a == 0) {
                    std::snprintf(msg, sizeof(msg),
                                  "%s q%.2f: %.2f vs published %.2f (band 0.5; exact tree %.2f)",
                                  names[a], levels[c], q, ref, exact_am[c]);
                } else if (a == 1) {
                    std::snprintf(msg, sizeof(msg),
                                  "%s q%.2f: %.2f vs published %.2f (band 0.5; exact closed form "
                                  "%.2f)",
                                  names[a], levels[c], q, ref, exact_cm[c]);
                } else {
                    std::snprintf(msg, sizeof(msg), "%s q%.2f: %.2f vs published %.2f (band 0.5)",
                                  names[a], levels[c], q, ref);
                }
                line("6", std::fabs(q - ref) <= 0.5, msg);
            }
        }

        // ------------------------------------------------------------ 7 (part)
        // pathwise additivity, quantile monotonicity, tower property on the
        // portfolio artifacts
        {
            bool additive = true;
            for (std::size_t j = 0; j < dist.n_paths; ++j) {
                const double sum =
                    dist.asset_pnl[0][j] + dist.asset_pnl[1][j] + dist.asset_pnl[2][j];
                if (dist.portfolio_pnl[j] != sum) {
                    additive = false;
                    break;
                }
            }
            line("7", additive, "pathwise portfolio additivity (exact, bit level)");

            bool monotone = true;
            double prev = dist.quantile(-1, 0.001);
            for (double p = 0.005; p < 0.9995; p += 0.005) {
                const double q = dist.quantile(-1, p);
                if (q < prev) {
                    monotone = false;
                    break;
                }
                prev = q;
            }
            line("7", monotone, "quantile monotonicity in p");

            bool tower_ok = true;
            for (int a = 0; a < 3; ++a) {
                double mean = 0.0;
                for (double v : dist.asset_pnl[a]) mean += v;
                mean /= static_cast<double>(dist.n_paths);
                double sd = 0.0;
                for (double v : dist.asset_pnl[a]) sd += (v - mean) * (v - mean);
                sd = std::sqrt(sd / static_cast<double>(dist.n_paths - 1));
                const double se = sd / std::sqrt(static_cast<double>(dist.n_paths));
                const double budget = 3.0 * se + 0.01 * res.price[a];
                note(fmt("tower asset %.0f: |mean pnl| %.5f vs budget %.5f",
                         static_cast<double>(a), std::fabs(mean), budget));
                if (std::fabs(mean) > budget) tower_ok = false;
            }
            line("7", tower_ok,
                 "tower property: |mean discounted horizon P&L| within 3se + 1% bias budget");
        }
    }

    // ------------------------------------------------------------------- 7
    {
        // gradient vs central finite differences
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double max_rel = 0.0;
        for (int draw = 0; draw < 10; ++draw) {
            Network net = Network::make({3, 6, 5, 2});
            net.init_random(500 + draw);
            for (auto& layer : net.biases) {
                for (double& b : layer) b = 0.3 * u(rng);
            }
            const std::size_t n_samples = 8;
            std::vector<double> xs(n_samples * 3), ts(n_samples * 2);
            for (auto& v : xs) v = u(rng);
            for (auto& v : ts) v = u(rng);
            Gradient g = mse_gradient(net, xs, ts, n_samples);
            const double h = 1e-6;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                for (int part = 0; part < 2; ++part) {
                    auto& params = part == 0 ? net.weights[l] : net.biases[l];
                    auto& grads = part == 0 ? g.weights[l] : g.biases[l];
                    for (std::size_t i = 0; i < params.size(); ++i) {
                        const double save = params[i];
                        params[i] = save + h;
                        const double up = mse_loss(net, xs, ts, n_samples);
                        params[i] = save - h;
                        const double dn = mse_loss(net, xs, ts, n_samples);
                        params[i] = save;
                        const double fd = (up - dn) / (2.0 * h);
                        max_rel = std::max(max_rel, std::fabs(fd - grads[i]) /
                                                        std::max(1.0, std::fabs(fd)));
                    }
                }
            }
        }
        line("7", max_rel < 1e-5,
             fmt("gradient vs central differences: max rel err %.2e < 1e-5", max_rel));

        // GBM martingale and moment checks at 3 SE with 1e5 paths
        {
            ModelParams mp;
            mp.rate = 0.05;
            mp.dividend = {0.03, 0.0};
            mp.sigma = {0.2, 0.3};
            mp.spot = {1.0, 2.0};
            TimeGrid grid = TimeGrid::uniform(1.0, 4);
            const std::size_t n_paths = 100000;
            PathSet ps = simulate_paths(mp, grid, n_paths, 2121, 2);
            bool ok = true;
            for (std::size_t i = 0; i < 2 && ok; ++i) {
                for (std::size_t n = 1; n <= 4 && ok; ++n) {
                    const double growth = std::exp((mp.rate - mp.dividend[i]) * grid.dates[n]);
                    double sum = 0.0, sumsq = 0.0;
                    for (std::size_t j = 0; j < n_paths; ++j) {
                        const double v = ps.at(j, n, i) / growth;
                        sum += v;
                        sumsq += v * v;
                    }
                    const double mean = sum / n_paths;
                    const double se =
                        std::sqrt((sumsq / n_paths - mean * mean) / (n_paths - 1.0));
                    if (std::fabs(mean - mp.spot[i]) >= 3.0 * se) ok = false;
                }
            }
            // log-increment moments on the first step
            for (std::size_t i = 0; i < 2 && ok; ++i) {
                const double dt = grid.dt(0);
                const double want_mean =
                    (mp.rate - mp.dividend[i] - 0.5 * mp.sigma[i] * mp.sigma[i]) * dt;
                const double want_var = mp.sigma[i] * mp.sigma[i] * dt;
                double sum = 0.0, sumsq = 0.0;
                for (std::size_t j = 0; j < n_paths; ++j) {
                    const double inc = std::log(ps.at(j, 1, i) / ps.at(j, 0, i));
                    sum += inc;
                    sumsq += inc * inc;
                }
                const double mean = sum / n_paths;
                const double var = sumsq / n_paths - mean * mean;
                if (std::fabs(mean - want_mean) >= 3.0 * std::sqrt(var / n_paths)) ok = false;
                if (std::fabs(var - want_var) >= 3.0 * want_var * std::sqrt(2.0 / (n_paths - 1.0)))
                    ok = false;
            }
            line("7", ok, "GBM martingale and log-increment moments within 3 SE (1e5 paths)");
        }

        // policy vs oracle bounds on the monthly put artifacts
        {
            std::vector<double> sched;
            for (int i = 1; i <= 12; ++i) sched.push_back(i / 12.0);
            OracleResult tree = binomial_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 24000,
                                             ExerciseSchedule::at_dates(sched));
            line("7",
                 g_put_1m_pricing.price[0] <= tree.price + 3.0 * g_put_1m_pricing.stderr_[0],
                 fmt("policy price %.4f <= schedule tree %.4f + 3se",
                     g_put_1m_pricing.price[0], tree.price));
            std::vector<double> back = backward_estimate(g_put_1m_policy, 1000000, 616161, 2);
            line("7",
                 back[0] >= g_put_1m_pricing.price[0] - 3.0 * g_put_1m_pricing.stderr_[0],
                 fmt("backward estimate %.4f >= policy %.4f - 3se", back[0],
                     g_put_1m_pricing.price[0]));
            const double euro = black_scholes(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, false);
            line("7", g_put_1m_pricing.price[0] >= euro - 3.0 * g_put_1m_pricing.stderr_[0],
                 fmt("policy price %.4f >= European put %.4f - 3se",
                     g_put_1m_pricing.price[0], euro));
        }

        // seed determinism: byte-identical reruns of pricing and P&L
        {
            PricingResult a = price_with_policy(g_put_1m_policy, 100000, 424242, 1);
            PricingResult b = price_with_policy(g_put_1m_policy, 100000, 424242, 2);
            PnlDistribution pa = build_pnl(g_put_1m_policy, 1, a.price, 50000, 515151, 1);
            PnlDistribution pb = build_pnl(g_put_1m_policy, 1, b.price, 50000, 515151, 2);
            const bool same = fmt17(a.price[0]) == fmt17(b.price[0]) &&
                              fmt17(a.stderr_[0]) == fmt17(b.stderr_[0]) &&
                              pa.portfolio_pnl == pb.portfolio_pnl &&
                              a.exercise_histogram == b.exercise_histogram;
            line("7", same, "seed determinism: byte-identical rerun across worker counts");
        }
    }

    // ------------------------------------------------------------------- 8
    {
        ModelParams mp;
        mp.rate = 0.05;
        mp.dividend = {0.0};
        mp.sigma = {0.2};
        mp.spot = {100.0};
        auto call_payoff = [](const double* s, std::size_t) {
            return std::max(s[0] - 100.0, 0.0);
        };
        OracleResult mc = dense_mc_european(call_payoff, mp, 1.0, 1000000, 808);
        const double bs = black_scholes(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, true);
        line("8", std::fabs(mc.price - bs) <= 3.0 * mc.stderr_est,
             fmt("black_scholes %.4f vs dense MC %.4f +/- %.4f (3se)", bs, mc.price,
                 mc.stderr_est));

        ModelParams mp2;
        mp2.rate = 0.05;
        mp2.dividend = {0.03, 0.03};
        mp2.sigma = {0.2, 0.2};
        mp2.spot = {1.0, 1.0};
        auto min_payoff = [](const double* s, std::size_t) {
            return std::max(std::min(s[0], s[1]) - 0.9, 0.0);
        };
        OracleResult mc2 = dense_mc_european(min_payoff, mp2, 1.0, 2000000, 809);
        const double cf =
            call_on_min_closed_form(1.0, 1.0, 0.9, 0.05, 0.03, 0.03, 0.2, 0.2, 0.0, 1.0);
        line("8", std::fabs(mc2.price - cf) <= 3.0 * mc2.stderr_est,
             fmt("call-on-min closed form %.6f vs dense MC %.6f +/- %.6f (3se)", cf, mc2.price,
                 mc2.stderr_est));

        double prev = 0.0;
        std::vector<double> diffs;
        for (std::size_t steps : {1000, 2000, 4000, 8000}) {
            const double p = binomial_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, steps).price;
            if (prev != 0.0) diffs.push_back(std::fabs(p - prev));
            prev = p;
        }
        bool shrinking = true;
        for (std::size_t i = 1; i < diffs.size(); ++i) {
            if (diffs[i] >= diffs[i - 1]) shrinking = false;
        }
        line("8", shrinking,
             fmt("binomial refinement |p(2n)-p(n)| decreasing: %.2e, %.2e, %.2e", diffs[0],
                 diffs[1], diffs[2]));
    }

    std::printf("\nper-criterion rollup:\n");
    for (int c = 1; c <= 8; ++c) {
        std::printf("  criterion %d: %s (%d/%d checks)\n", c,
                    g_crit_failures[c] == 0 ? "PASS" : "FAIL",
                    g_crit_checks[c] - g_crit_failures[c], g_crit_checks[c]);
    }
    std::printf("\nacceptance summary: %s (%d failed check%s), %.0f s total\n",
                g_failures == 0 ? "ALL PASS" : "FAILURES PRESENT", g_failures,
                g_failures == 1 ? "" : "s", elapsed_s());
    return g_failures == 0 ? 0 : 1;
}
