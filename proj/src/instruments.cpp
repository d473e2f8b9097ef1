#include "instruments.hpp"

#include <algorithm>
#include <stdexcept>

namespace pnl {

const char* to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::american_put: return "american_put";
        case PayoffKind::european_call_on_min: return "european_call_on_min";
        case PayoffKind::bermudan_call_on_max: return "bermudan_call_on_max";
        case PayoffKind::european_call: return "european_call";
        case PayoffKind::european_put: return "european_put";
    }
    throw std::invalid_argument("to_string: unknown payoff kind");
}

PayoffKind payoff_kind_from_string(const std::string& s) {
    if (s == "american_put") return PayoffKind::american_put;
    if (s == "european_call_on_min") return PayoffKind::european_call_on_min;
    if (s == "bermudan_call_on_max") return PayoffKind::bermudan_call_on_max;
    if (s == "european_call") return PayoffKind::european_call;
    if (s == "european_put") return PayoffKind::european_put;
    throw std::invalid_argument("unknown payoff kind: " + s);
}

bool is_european(PayoffKind kind) {
    return kind == PayoffKind::european_call_on_min || kind == PayoffKind::european_call ||
           kind == PayoffKind::european_put;
}

void Instrument::validate(std::size_t n_assets, std::size_t last_date_index) const {
    if (!(strike > 0.0)) {
        throw std::invalid_argument("Instrument " + label + ": strike must be positive");
    }
    if (exercise_date_indices.empty() || exercise_date_indices.back() != last_date_index) {
        throw std::invalid_argument("Instrument " + label +
                                    ": exercise dates must end at maturity");
    }
    for (std::size_t n = 1; n < exercise_date_indices.size(); ++n) {
        if (exercise_date_indices[n] <= exercise_date_indices[n - 1]) {
            throw std::invalid_argument("Instrument " + label +
                                        ": exercise dates must be strictly increasing");
        }
    }
    if (exercise_date_indices.front() == 0) {
        throw std::invalid_argument("Instrument " + label + ": exercise at t0 not allowed");
    }
    for (std::size_t i : underlying_indices) {
        if (i >= n_assets) {
            throw std::invalid_argument("Instrument " + label + ": underlying index out of range");
        }
    }
    const std::size_t nu = underlying_indices.size();
    switch (kind) {
        case PayoffKind::american_put:
        case PayoffKind::european_call:
        case PayoffKind::european_put:
            if (nu != 1) {
                throw std::invalid_argument("Instrument " + label + ": needs exactly 1 underlying");
            }
            break;
        case PayoffKind::european_call_on_min:
        case PayoffKind::bermudan_call_on_max:
            if (nu < 2) {
                throw std::invalid_argument("Instrument " + label + ": needs >= 2 underlyings");
            }
            break;
    }
    if (is_european(kind) && exercise_date_indices.size() != 1) {
        throw std::invalid_argument("Instrument " + label +
                                    ": European kinds exercise only at maturity");
    }
}

void Portfolio::validate() const {
    params.validate();
    grid.validate();
    if (instruments.empty()) {
        throw std::invalid_argument("Portfolio: at least one instrument required");
    }
    for (const auto& inst : instruments) {
        inst.validate(params.n_assets(), grid.n_steps());
    }
}

double intrinsic_value(const Instrument& inst, const double* state, std::size_t n_state) {
    for (std::size_t i : inst.underlying_indices) {
        if (i >= n_state) {
            throw std::invalid_argument("intrinsic_value: state does not cover underlyings");
        }
    }
    switch (inst.kind) {
        case PayoffKind::american_put:
        case PayoffKind::european_put:
            return std::max(inst.strike - state[inst.underlying_indices[0]], 0.0);
        case PayoffKind::european_call:
            return std::max(state[inst.underlying_indices[0]] - inst.strike, 0.0);
        case PayoffKind::european_call_on_min: {
            double m = state[inst.underlying_indices[0]];
            for (std::size_t i : inst.underlying_indices) m = std::min(m, state[i]);
            return std::max(m - inst.strike, 0.0);
        }
        case PayoffKind::bermudan_call_on_max: {
            double m = state[inst.underlying_indices[0]];
            for (std::size_t i : inst.underlying_indices) m = std::max(m, state[i]);
            return std::max(m - inst.strike, 0.0);
        }
    }
    throw std::invalid_argument("intrinsic_value: unknown payoff kind");
}

double intrinsic_value(const Instrument& inst, const std::vector<double>& state) {
    return intrinsic_value(inst, state.data(), state.size());
}

bool is_exercisable(const Instrument& inst, std::size_t date_index) {
    return std::binary_search(inst.exercise_date_indices.begin(),
                              inst.exercise_date_indices.end(), date_index);
}

std::vector<std::size_t> schedule_every(std::size_t n_steps, std::size_t every) {
    if (every < 1 || every > n_steps) {
        throw std::invalid_argument("schedule_every: bad stride");
    }
    std::vector<std::size_t> out;
    for (std::size_t n = every; n <= n_steps; n += every) out.push_back(n);
    if (out.back() != n_steps) out.push_back(n_steps);
    return out;
}

std::vector<std::size_t> schedule_maturity_only(std::size_t n_steps) {
    return {n_steps};
}

} // namespace pnl
