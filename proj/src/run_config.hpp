#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "instruments.hpp"
#include "lsm_engine.hpp"

namespace pnl {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& message)
        : std::runtime_error(path + ": " + message), field_path(path) {}
    std::string field_path;
};

struct RunConfig {
    Portfolio portfolio;                // model + grid + instruments
    std::vector<std::string> asset_names;
    LsmConfig lsm;
    std::size_t pricing_paths = 1000000;
    std::uint64_t pricing_seed = 77001;
    std::vector<std::size_t> pnl_horizons; // grid date indices
    std::size_t pnl_paths = 200000;
    std::uint64_t pnl_seed = 88001;
    std::string output_dir;

    std::uint64_t config_hash = 0; // FNV-1a of the canonical JSON dump
};

// Parses and validates the documented JSON schema (docs/formats.md); throws
// ConfigError with the offending field path on any violation.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

} // namespace pnl
