#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "isac/types.hpp"

namespace isac {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// All physical and algorithmic parameters of one scenario. Defaults follow
/// the mmWave setup used throughout the experiments: 4 transmit and 6
/// sensing-receive antennas, target at AOD 10 deg / AOA 20 deg, P = 30 dBm,
/// sigma^2 = -90 dBm, GP step 0.01, penalty 10, 200 ADMM iterations.
struct ScenarioConfig {
    int n_tx = 4;
    int n_rx_sense = 6;
    int n_rx_comm = 4;
    int slots = 16;
    double aod_deg = 10.0;
    double aoa_deg = 20.0;

    // When unset, |alpha|^2 = noise_power * rho_target / n_rx_sense, which
    // pins the effective sensing SNR rho at rho_target.
    std::optional<cdouble> alpha;
    double rho_target = 10.0;

    double noise_power = 1e-12;
    double power_budget = 1.0;
    double rate_floor = 0.0;
    std::uint64_t seed = 1;

    double fp_tol = 1e-12;
    double gp_tol = 1e-10;
    double admm_tol = 1e-8;
    long max_fp_iters = 100000;
    long max_gp_iters = 500;
    long max_admm_iters = 200;
    double gp_step = 0.01;
    double penalty = 10.0;
    long mc_trials = 10000;

    bool output_bits = false;

    cdouble path_gain() const {
        if (alpha) return *alpha;
        return {std::sqrt(noise_power * rho_target / n_rx_sense), 0.0};
    }

    /// nats -> output unit
    double to_output_units(double nats) const {
        return output_bits ? nats / std::log(2.0) : nats;
    }
};

/// Throws ConfigError (line 0) when an invariant is violated.
inline void validate(const ScenarioConfig& c) {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg, 0);
    };
    require(c.n_tx >= 1, "n_tx must be a positive integer");
    require(c.n_rx_sense >= 1, "n_rx_sense must be a positive integer");
    require(c.n_rx_comm >= 1, "n_rx_comm must be a positive integer");
    require(c.slots >= 1, "slots must be a positive integer");
    require(c.slots >= c.n_tx, "slots must be >= n_tx for orthogonal pilots");
    require(std::isfinite(c.aod_deg) && std::isfinite(c.aoa_deg), "angles must be finite");
    require(c.noise_power > 0.0, "noise_power must be > 0");
    require(c.power_budget > 0.0, "power_budget must be > 0");
    require(c.rate_floor >= 0.0, "rate_floor must be >= 0");
    require(c.rho_target >= 0.0, "rho_target must be >= 0");
    require(c.fp_tol > 0.0 && c.gp_tol > 0.0 && c.admm_tol > 0.0, "tolerances must be > 0");
    require(c.max_fp_iters >= 1 && c.max_gp_iters >= 1 && c.max_admm_iters >= 1,
            "iteration limits must be positive");
    require(c.gp_step > 0.0, "gp_step must be > 0");
    require(c.penalty > 0.0, "penalty must be > 0");
    require(c.mc_trials >= 1, "mc_trials must be >= 1");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_real(std::string_view v, int line) {
    double out = 0.0;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("invalid real value '" + std::string(v) + "'", line);
    }
    return out;
}

template <typename Int>
Int parse_int(std::string_view v, int line) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("invalid integer value '" + std::string(v) + "'", line);
    }
    return out;
}

}  // namespace detail

/// Parses `key = value` lines ('#' starts a comment) on top of `base`.
/// Power keys accept either watts (`power_budget`, `noise_power`) or dBm
/// (`power_budget_dbm`, `noise_power_dbm`). The result is validated.
inline ScenarioConfig parse_config(std::istream& in, ScenarioConfig base = {}) {
    ScenarioConfig c = std::move(base);
    std::optional<double> alpha_re;
    std::optional<double> alpha_im;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text(raw);
        if (const auto hash = text.find('#'); hash != std::string_view::npos) {
            text = text.substr(0, hash);
        }
        text = detail::trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("expected 'key = value'", line);
        }
        const std::string key(detail::trim(text.substr(0, eq)));
        const std::string_view value = detail::trim(text.substr(eq + 1));
        if (value.empty()) throw ConfigError("missing value for '" + key + "'", line);

        using detail::parse_int;
        using detail::parse_real;
        if (key == "n_tx") c.n_tx = parse_int<int>(value, line);
        else if (key == "n_rx_sense") c.n_rx_sense = parse_int<int>(value, line);
        else if (key == "n_rx_comm") c.n_rx_comm = parse_int<int>(value, line);
        else if (key == "slots") c.slots = parse_int<int>(value, line);
        else if (key == "aod_deg") c.aod_deg = parse_real(value, line);
        else if (key == "aoa_deg") c.aoa_deg = parse_real(value, line);
        else if (key == "alpha" || key == "alpha_re") alpha_re = parse_real(value, line);
        else if (key == "alpha_im") alpha_im = parse_real(value, line);
        else if (key == "rho_target") c.rho_target = parse_real(value, line);
        else if (key == "noise_power") c.noise_power = parse_real(value, line);
        else if (key == "noise_power_dbm") c.noise_power = dbm_to_watts(parse_real(value, line));
        else if (key == "power_budget") c.power_budget = parse_real(value, line);
        else if (key == "power_budget_dbm") c.power_budget = dbm_to_watts(parse_real(value, line));
        else if (key == "rate_floor") c.rate_floor = parse_real(value, line);
        else if (key == "seed") c.seed = parse_int<std::uint64_t>(value, line);
        else if (key == "fp_tol") c.fp_tol = parse_real(value, line);
        else if (key == "gp_tol") c.gp_tol = parse_real(value, line);
        else if (key == "admm_tol") c.admm_tol = parse_real(value, line);
        else if (key == "max_fp_iters") c.max_fp_iters = parse_int<long>(value, line);
        else if (key == "max_gp_iters") c.max_gp_iters = parse_int<long>(value, line);
        else if (key == "max_admm_iters") c.max_admm_iters = parse_int<long>(value, line);
        else if (key == "gp_step") c.gp_step = parse_real(value, line);
        else if (key == "penalty") c.penalty = parse_real(value, line);
        else if (key == "mc_trials") c.mc_trials = parse_int<long>(value, line);
        else if (key == "units") {
            if (value == "nats") c.output_bits = false;
            else if (value == "bits") c.output_bits = true;
            else throw ConfigError("units must be 'nats' or 'bits'", line);
        } else {
            throw ConfigError("unknown key '" + key + "'", line);
        }
    }
    if (alpha_re || alpha_im) c.alpha = cdouble(alpha_re.value_or(0.0), alpha_im.value_or(0.0));
    validate(c);
    return c;
}

inline ScenarioConfig parse_config_string(const std::string& text, ScenarioConfig base = {}) {
    std::istringstream in(text);
    return parse_config(in, std::move(base));
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
    return parse_config(in, std::move(base));
}

}  // namespace isac
