#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "market_model.hpp"

namespace pnl {

enum class PayoffKind {
    american_put,
    european_call_on_min,
    bermudan_call_on_max,
    european_call, // vanilla, validation only
    european_put,  // vanilla, validation only
};

const char* to_string(PayoffKind kind);
PayoffKind payoff_kind_from_string(const std::string& s);
bool is_european(PayoffKind kind);

struct Instrument {
    PayoffKind kind = PayoffKind::american_put;
    double strike = 0.0;
    std::vector<std::size_t> underlying_indices;
    std::vector<std::size_t> exercise_date_indices; // grid indices, last one = N
    std::string label;

    void validate(std::size_t n_assets, std::size_t last_date_index) const;
};

struct Portfolio {
    std::vector<Instrument> instruments;
    TimeGrid grid;
    ModelParams params;

    std::size_t size() const { return instruments.size(); }
    void validate() const;
};

// Exercise payoff for the full state vector (all model assets).
double intrinsic_value(const Instrument& inst, const double* state, std::size_t n_state);
double intrinsic_value(const Instrument& inst, const std::vector<double>& state);

bool is_exercisable(const Instrument& inst, std::size_t date_index);

// Every k-th grid date starting at k, maturity always included.
std::vector<std::size_t> schedule_every(std::size_t n_steps, std::size_t every);
std::vector<std::size_t> schedule_maturity_only(std::size_t n_steps);

} // namespace pnl
