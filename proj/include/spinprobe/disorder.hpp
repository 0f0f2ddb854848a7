// disorder.hpp: reproducible disorder realizations, one independent stream per (seed, J_x, index)

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <random>

#include "spinprobe/config.hpp"
#include "spinprobe/errors.hpp"
#include "spinprobe/spin_ops.hpp"

namespace spinprobe {

// Streams in different purposes never collide, even at equal index.
enum class StreamPurpose : std::uint32_t { experiment = 0, estimation_probe = 1 };

struct DisorderRealization {
    SpinBathModel model;
    double jx{0.0};
    std::size_t stream{0};
    StreamPurpose purpose{StreamPurpose::experiment};
};

namespace detail {

inline std::mt19937_64 stream_engine(std::uint64_t seed, double jx, std::size_t stream, StreamPurpose purpose) {
    const auto jbits = std::bit_cast<std::uint64_t>(jx + 0.0); // folds -0 into +0
    const auto s = static_cast<std::uint64_t>(stream);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(jbits), static_cast<std::uint32_t>(jbits >> 32),
                      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

// Uniform on [lo, hi) from the top 53 bits; identical across standard libraries.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

inline DisorderRealization draw_realization(const ExperimentConfig& cfg, double jx, std::size_t stream,
                                            StreamPurpose purpose) {
    if (!(jx >= 0.0)) throw ConfigError("sample_realization: jx must be non-negative");
    auto rng = stream_engine(cfg.seed, jx, stream, purpose);
    DisorderRealization r;
    r.jx = jx;
    r.stream = stream;
    r.purpose = purpose;
    r.model = SpinBathModel(cfg.n_bath, cfg.b0z);
    const double lo = cfg.b0z - 0.5 * cfg.delta;
    const double hi = cfg.b0z + 0.5 * cfg.delta;
    // Fixed draw order: x-fields, z-fields, detector couplings, then pairs (i<j) row by row.
    for (auto& v : r.model.bx) v = uniform(rng, lo, hi);
    for (auto& v : r.model.bz) v = uniform(rng, lo, hi);
    for (auto& v : r.model.lambda) v = uniform(rng, -cfg.lambda_max, cfg.lambda_max);
    for (auto& v : r.model.jx) v = uniform(rng, -jx, jx);
    return r;
}

} // namespace detail

// The detector carries no one-body disorder; its splitting stays b0z.
inline DisorderRealization sample_realization(const ExperimentConfig& cfg, double jx, std::size_t stream) {
    if (stream >= cfg.realizations) throw ConfigError("sample_realization: stream index must be below realizations");
    return detail::draw_realization(cfg, jx, stream, StreamPurpose::experiment);
}

} // namespace spinprobe
