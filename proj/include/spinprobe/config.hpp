// config.hpp: experiment configuration, engine names, and validation

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spinprobe/errors.hpp"
#include "spinprobe/exact_prop.hpp"
#include "spinprobe/spin_ops.hpp"

namespace spinprobe {

inline constexpr int kConfigSchemaVersion = 1;

enum class Engine { exact, nmme, markovian };

inline std::string to_string(Engine e) {
    switch (e) {
    case Engine::exact: return "exact";
    case Engine::nmme: return "nmme";
    case Engine::markovian: return "markovian";
    }
    return "unknown";
}

inline Engine parse_engine(const std::string& s) {
    if (s == "exact") return Engine::exact;
    if (s == "nmme") return Engine::nmme;
    if (s == "markovian") return Engine::markovian;
    throw ConfigError("unknown engine '" + s + "' (expected exact, nmme or markovian)");
}

inline std::string to_string(ExactBackend b) { return b == ExactBackend::eigenbasis ? "eigenbasis" : "runge_kutta"; }

inline ExactBackend parse_exact_backend(const std::string& s) {
    if (s == "eigenbasis") return ExactBackend::eigenbasis;
    if (s == "runge_kutta") return ExactBackend::runge_kutta;
    throw ConfigError("unknown exact_backend '" + s + "' (expected eigenbasis or runge_kutta)");
}

enum class Horizon { short_time, long_time };

inline std::string to_string(Horizon h) { return h == Horizon::long_time ? "long" : "short"; }

inline Horizon parse_horizon(const std::string& s) {
    if (s == "short") return Horizon::short_time;
    if (s == "long") return Horizon::long_time;
    throw ConfigError("unknown horizon '" + s + "' (expected short or long)");
}

// Energies in units of epsilon, times in hbar/epsilon.
struct ExperimentConfig {
    int schema_version{kConfigSchemaVersion};
    std::size_t n_bath{10};
    double b0z{1.0};
    double delta{0.4};       // width of the bath field distribution
    double lambda_max{0.05}; // detector-bath couplings drawn from [-lambda_max, lambda_max]
    std::vector<double> jx_list{0.0, 0.15, 0.5, 1.0, 2.0};
    double kT{0.25};
    double dt{0.2}; // memory grid spacing and short-horizon sampling step
    double t_final_short{100.0};
    double t_final_long{3000.0};
    double dt_long{1.0}; // long-horizon sampling step
    Horizon horizon{Horizon::short_time};
    std::size_t n_cut{20};
    std::size_t n_grid{40};
    std::size_t l_grid{0}; // 0 selects round(0.338 n_grid)
    std::uint64_t seed{20240611};
    std::size_t realizations{8};
    std::vector<Engine> engines{Engine::exact, Engine::nmme};
    double p{0.0}; // 0 selects the bath-derived heuristic
    double q{0.0};
    std::size_t threads{1};
    ExactBackend exact_backend{ExactBackend::eigenbasis};
    Engine estimation_engine{Engine::exact};

    double t_final() const { return horizon == Horizon::long_time ? t_final_long : t_final_short; }
    double sample_dt() const { return horizon == Horizon::long_time ? dt_long : dt; }

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
        auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
        auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
        if (schema_version != kConfigSchemaVersion)
            fail("unsupported schema_version " + std::to_string(schema_version));
        if (n_bath < 1) fail("n_bath must be at least 1");
        if (n_bath + 1 > kDefaultMaxSites)
            fail("n_bath + 1 exceeds the dense-propagation limit of " + std::to_string(kDefaultMaxSites) + " sites");
        if (!finite_nonneg(b0z)) fail("b0z must be non-negative");
        if (!finite_nonneg(delta)) fail("delta must be non-negative");
        if (!finite_nonneg(lambda_max)) fail("lambda_max must be non-negative");
        if (jx_list.empty()) fail("jx_list is empty");
        for (double j : jx_list)
            if (!finite_nonneg(j)) fail("jx_list values must be non-negative");
        for (std::size_t i = 1; i < jx_list.size(); ++i)
            if (!(jx_list[i] > jx_list[i - 1])) fail("jx_list must be strictly increasing");
        if (!finite_pos(kT)) fail("kT must be positive");
        if (!finite_pos(dt)) fail("dt must be positive");
        if (!finite_pos(dt_long)) fail("dt_long must be positive");
        if (!finite_pos(t_final_short) || !finite_pos(t_final_long)) fail("horizons must be positive");
        if (t_final_short < dt || t_final_long < dt_long) fail("horizons must cover at least one sampling step");
        if (n_cut < 1 || n_cut > (std::size_t{1} << n_bath)) fail("n_cut must lie in [1, 2^n_bath]");
        if (n_grid < 9) fail("n_grid must be at least 9");
        if (l_grid >= n_grid) fail("l_grid must be below n_grid");
        if (realizations < 1) fail("realizations must be at least 1");
        if (engines.empty()) fail("engines is empty");
        for (std::size_t i = 0; i < engines.size(); ++i)
            for (std::size_t j = i + 1; j < engines.size(); ++j)
                if (engines[i] == engines[j]) fail("engines lists " + to_string(engines[i]) + " twice");
        if (!finite_nonneg(p) || !finite_nonneg(q)) fail("p and q must be non-negative (0 selects the heuristic)");
        if ((p == 0.0) != (q == 0.0)) fail("p and q must both be set or both be 0");
        if (threads < 1) fail("threads must be at least 1");
    }
};

} // namespace spinprobe
