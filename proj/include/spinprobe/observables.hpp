// observables.hpp: purity, fidelity, oscillation periods, and the period -> B_bar -> J_x inversion

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "spinprobe/bath_thermal.hpp"
#include "spinprobe/density.hpp"
#include "spinprobe/errors.hpp"

namespace spinprobe {

inline double purity(const ReducedDensity& r) { return (r.rho * r.rho).trace().real(); }

inline double fidelity(const ReducedDensity& r, const ReducedDensity& ideal) {
    return (r.rho * ideal.rho).trace().real();
}

// Free evolution of (|0>+|1>)/sqrt(2) under -(B0z/2) sigma_z.
inline ReducedDensity ideal_density(double b0z, double t) {
    ReducedDensity r;
    const std::complex<double> phase = std::polar(1.0, b0z * t / SpinBathModel::hbar);
    r.rho << 0.5, 0.5 * phase, 0.5 * std::conj(phase), 0.5;
    return r;
}

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> purity;
    std::vector<double> fidelity;
    std::vector<double> pop0;
    std::vector<double> pop1;
    std::vector<double> coh_re;
    std::vector<double> coh_im;

    std::size_t size() const { return times.size(); }
};

inline ObservableSeries make_series(std::span<const double> times, const std::vector<ReducedDensity>& rho, double b0z) {
    if (times.size() != rho.size()) throw DimensionError("make_series: times and densities differ in length");
    ObservableSeries s;
    s.times.assign(times.begin(), times.end());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        s.purity.push_back(purity(rho[i]));
        s.fidelity.push_back(fidelity(rho[i], ideal_density(b0z, times[i])));
        s.pop0.push_back(rho[i].pop0());
        s.pop1.push_back(rho[i].pop1());
        s.coh_re.push_back(rho[i].coherence().real());
        s.coh_im.push_back(rho[i].coherence().imag());
    }
    return s;
}

// Shifted two-level dynamics: omega = B0z/2, Omega = sqrt(Bbar^2 + B0z^2/4) (hbar = 1).
struct ShiftModel {
    double b_bar{0.0};
    double b0z{1.0};
    double omega{0.5};
    double omega_big{0.5};
};

inline ShiftModel make_shift_model(double b_bar, double b0z) {
    ShiftModel m;
    m.b_bar = b_bar;
    m.b0z = b0z;
    m.omega = b0z / (2.0 * SpinBathModel::hbar);
    m.omega_big = std::sqrt(b_bar * b_bar + 0.25 * b0z * b0z) / SpinBathModel::hbar;
    return m;
}

inline double rabi_period(const ShiftModel& m) { return std::numbers::pi / m.omega_big; }

// Infinite when there is no shift.
inline double fidelity_period(const ShiftModel& m) {
    const double beat = m.omega_big - m.omega;
    return beat > 0.0 ? std::numbers::pi / beat : std::numeric_limits<double>::infinity();
}

// Fidelity of the shifted dynamics against free phase evolution, decoherence neglected.
inline double analytic_fidelity(const ShiftModel& m, double t) {
    const double om = m.omega_big;
    const double w = m.omega;
    if (om == 0.0) return 1.0;
    const double a = (m.b_bar / om) * (m.b_bar / om);
    const double fast = m.b0z * (om - 0.5 * m.b0z) / (4.0 * om * om);
    const double slow = m.b0z * (om + 0.5 * m.b0z) / (4.0 * om * om);
    return 0.5 * (1.0 + a * std::cos(2.0 * w * t) - fast * std::cos(2.0 * (om + w) * t) + slow * std::cos(2.0 * (om - w) * t));
}

enum class PeriodChannel { fidelity, pop0 };

namespace detail {

inline std::vector<double> detrend(std::span<const double> t, std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double st = 0, sx = 0, stt = 0, stx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        st += t[i];
        sx += x[i];
        stt += t[i] * t[i];
        stx += t[i] * x[i];
    }
    const double denom = n * stt - st * st;
    const double slope = denom != 0.0 ? (n * stx - st * sx) / denom : 0.0;
    const double icpt = (sx - slope * st) / n;
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - icpt - slope * t[i];
    return r;
}

// Variance explained by the best fit a + b cos(w t) + c sin(w t).
inline double sinusoid_power(std::span<const double> t, std::span<const double> x, double w) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atx = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Eigen::Vector3d row(1.0, std::cos(w * t[i]), std::sin(w * t[i]));
        ata.noalias() += row * row.transpose();
        atx += row * x[i];
    }
    const Eigen::Vector3d coef = ata.ldlt().solve(atx);
    return coef.dot(atx);
}

} // namespace detail

struct PeriodOptions {
    std::size_t padding{8};      // zero-padding factor of the coarse spectrum
    double min_periods{2.0};     // the series must span this many periods
    double flat_tolerance{1e-10}; // rms below this counts as no signal
    double max_period{0.0};       // slower components are ignored; 0 disables the bound
};

// Dominant oscillation period of a uniformly sampled channel.
//   1. remove the linear trend, Hann-window, zero-pad, and locate the strongest spectral peak;
//   2. parabolic interpolation of the log power around that bin gives the first estimate;
//   3. the estimate is polished by maximizing a least-squares sinusoid fit within one bin.
// The strongest peak is the largest-amplitude component, i.e. the slow fidelity beat.
inline double extract_period(std::span<const double> times, std::span<const double> values,
                             const PeriodOptions& opt = {}) {
    const std::size_t n = values.size();
    if (n != times.size()) throw DimensionError("extract_period: times and values differ in length");
    if (n < 16) throw SeriesTooShortError("extract_period: need at least 16 samples");
    const double dt = times[1] - times[0];
    const double span = times[n - 1] - times[0];
    if (!(dt > 0.0)) throw ConfigError("extract_period: times must increase");
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt)
            throw ConfigError("extract_period: times must be uniformly spaced");

    const std::vector<double> x = detail::detrend(times, values);
    double rms = 0.0;
    for (double v : x) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(n));
    if (rms < opt.flat_tolerance) throw NoOscillationError("extract_period: no oscillation detected (flat series)");

    std::size_t m = 1;
    while (m < opt.padding * n) m <<= 1;
    std::vector<double> padded(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        padded[i] = x[i] * hann;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);
    const std::size_t half = m / 2;
    std::vector<double> power(half + 1);
    for (std::size_t k = 0; k <= half; ++k) power[k] = std::norm(spec[k]);

    const double df = 1.0 / (static_cast<double>(m) * dt);
    std::size_t k_min = 1;
    if (opt.max_period > 0.0)
        k_min = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(1.0 / (opt.max_period * df))));
    if (k_min + 1 >= half) throw SeriesTooShortError("extract_period: max_period excludes every resolvable frequency");
    std::size_t best = k_min;
    for (std::size_t k = k_min + 1; k < half; ++k)
        if (power[k] > power[best]) best = k;
    if (power[best] <= power[best - 1] || power[best] <= power[best + 1])
        throw NoOscillationError("extract_period: no oscillation detected (spectrum peaks at zero frequency)");

    auto lp = [&](std::size_t k) { return std::log(std::max(power[k], std::numeric_limits<double>::min())); };
    const double a = lp(best - 1), b = lp(best), c = lp(best + 1);
    const double denom = a - 2.0 * b + c;
    const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    const double f0 = (static_cast<double>(best) + std::clamp(shift, -0.5, 0.5)) * df;

    // Polish within one unpadded bin (the Hann main lobe half-width is two bins).
    const double bin = 1.0 / span;
    const double lo = std::max(f0 - bin, 0.25 * f0);
    const double hi = f0 + bin;
    auto neg_power = [&](double f) { return -detail::sinusoid_power(times, x, 2.0 * std::numbers::pi * f); };
    const auto [f_best, p_best] = boost::math::tools::brent_find_minima(neg_power, lo, hi, 40);
    (void)p_best;

    const double period = 1.0 / f_best;
    if (period * opt.min_periods > span * (1.0 + 1e-9))
        throw SeriesTooShortError("extract_period: series spans fewer than " + std::to_string(opt.min_periods) +
                                  " periods of the dominant oscillation (period " + std::to_string(period) + ")");
    return period;
}

inline double extract_period(const ObservableSeries& s, PeriodChannel channel, const PeriodOptions& opt = {}) {
    return extract_period(s.times, channel == PeriodChannel::fidelity ? s.fidelity : s.pop0, opt);
}

struct BBarEstimate {
    double exact{0.0};       // solves pi / (Omega - omega) = period for B_bar
    double small_shift{0.0}; // from period ~ h B0z / (2 B_bar^2), h = 2 pi hbar
};

inline BBarEstimate estimate_bbar(double period, double b0z) {
    if (std::isnan(period) || !(period > 0.0))
        throw InversionError("estimate_bbar: period must be positive");
    if (!std::isfinite(b0z) || b0z < 0.0) throw ConfigError("estimate_bbar: b0z must be non-negative");
    const double beat = std::numbers::pi * SpinBathModel::hbar / period; // hbar (Omega - omega)
    const double half = 0.5 * b0z;
    BBarEstimate e;
    e.exact = std::sqrt(std::max(0.0, (beat + half) * (beat + half) - half * half));
    e.small_shift = std::sqrt(beat * b0z);
    return e;
}

namespace detail {

inline void check_inversion_table(const std::vector<StatisticsRow>& table) {
    if (table.size() < 3) throw InversionError("estimate_jx: inversion table needs at least 3 rows");
    for (std::size_t k = 1; k < table.size(); ++k)
        if (!(table[k].jx > table[k - 1].jx)) throw InversionError("estimate_jx: table J_x must be strictly increasing");
    const bool up = table[1].mean_abs_bbar > table[0].mean_abs_bbar;
    for (std::size_t k = 1; k < table.size(); ++k) {
        const double d = table[k].mean_abs_bbar - table[k - 1].mean_abs_bbar;
        if (up ? !(d > 0.0) : !(d < 0.0))
            throw InversionError("estimate_jx: disorder-averaged |B_bar| is not monotone over the table");
    }
}

} // namespace detail

// Piecewise-linear inverse of the (J_x, mean |B_bar|) table. No extrapolation.
inline double estimate_jx(double b_bar_measured, const std::vector<StatisticsRow>& table) {
    detail::check_inversion_table(table);
    const double b = std::abs(b_bar_measured);
    for (std::size_t k = 0; k + 1 < table.size(); ++k) {
        const double y0 = table[k].mean_abs_bbar, y1 = table[k + 1].mean_abs_bbar;
        if ((b - y0) * (b - y1) <= 0.0) {
            if (y1 == y0) return table[k].jx;
            const double s = (b - y0) / (y1 - y0);
            return table[k].jx + s * (table[k + 1].jx - table[k].jx);
        }
    }
    throw InversionError("estimate_jx: |B_bar| = " + std::to_string(b) + " lies outside the table range");
}

struct JxBand {
    double estimate{0.0};
    double low{0.0};
    double high{0.0};
};

// Estimate plus the connected range of J_x whose interpolated mean |B_bar| lies within one
// interpolated standard error of the measurement.
inline JxBand estimate_jx_band(double b_bar_measured, const std::vector<StatisticsRow>& table) {
    JxBand band;
    band.estimate = estimate_jx(b_bar_measured, table);
    const double b = std::abs(b_bar_measured);
    // Feasible set per segment: |mean(s) - b| <= se(s), both linear in s in [0, 1].
    std::vector<std::pair<double, double>> feasible;
    for (std::size_t k = 0; k + 1 < table.size(); ++k) {
        const auto& r0 = table[k];
        const auto& r1 = table[k + 1];
        double s_lo = 0.0, s_hi = 1.0;
        // g(s) = mean(s) - b - se(s) <= 0 and h(s) = b - mean(s) - se(s) <= 0
        auto clip = [&](double v0, double v1) {
            if (v0 <= 0.0 && v1 <= 0.0) return;
            if (v0 > 0.0 && v1 > 0.0) {
                s_lo = 1.0;
                s_hi = 0.0;
                return;
            }
            const double root = v0 / (v0 - v1);
            if (v0 > 0.0) s_lo = std::max(s_lo, root);
            else s_hi = std::min(s_hi, root);
        };
        clip(r0.mean_abs_bbar - b - r0.stderr_bbar, r1.mean_abs_bbar - b - r1.stderr_bbar);
        clip(b - r0.mean_abs_bbar - r0.stderr_bbar, b - r1.mean_abs_bbar - r1.stderr_bbar);
        if (s_lo <= s_hi)
            feasible.emplace_back(r0.jx + s_lo * (r1.jx - r0.jx), r0.jx + s_hi * (r1.jx - r0.jx));
    }
    band.low = band.high = band.estimate;
    // Grow outward from the estimate through touching intervals.
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [a, c] : feasible) {
            const double eps = 1e-12 * std::max(1.0, std::abs(c));
            if (a <= band.high + eps && c >= band.low - eps && (a < band.low || c > band.high)) {
                band.low = std::min(band.low, a);
                band.high = std::max(band.high, c);
                grew = true;
            }
        }
    }
    return band;
}

} // namespace spinprobe
