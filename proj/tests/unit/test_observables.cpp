#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinprobe/config.hpp"
#include "spinprobe/disorder.hpp"
#include "spinprobe/exact_prop.hpp"
#include "spinprobe/nmme.hpp"
#include "spinprobe/observables.hpp"

using namespace spinprobe;

namespace {

ReducedDensity diag(double a, double b) {
    ReducedDensity r;
    r.rho << a, 0.0, 0.0, b;
    return r;
}

ObservableSeries shift_only_series(double b_bar, double t_final) {
    MESolverConfig c;
    c.b_bar = b_bar;
    const auto times = uniform_grid(t_final, 0.2);
    return make_series(times, solve_master_equation(c, initial_detector_state(), times), 1.0);
}

std::vector<StatisticsRow> table_of(std::vector<std::pair<double, double>> rows, double se = 0.0) {
    std::vector<StatisticsRow> t;
    for (auto [jx, b] : rows) {
        StatisticsRow r;
        r.jx = jx;
        r.mean_abs_bbar = b;
        r.stderr_bbar = se;
        t.push_back(r);
    }
    return t;
}

} // namespace

TEST(Purity, Examples) {
    EXPECT_DOUBLE_EQ(purity(diag(1.0, 0.0)), 1.0);
    EXPECT_DOUBLE_EQ(purity(diag(0.5, 0.5)), 0.5);
    EXPECT_DOUBLE_EQ(purity(diag(0.75, 0.25)), 0.75 * 0.75 + 0.25 * 0.25);
    EXPECT_DOUBLE_EQ(purity(initial_detector_state()), 1.0);
}

TEST(Fidelity, Examples) {
    const auto plus = initial_detector_state();
    EXPECT_DOUBLE_EQ(fidelity(plus, plus), 1.0);
    EXPECT_DOUBLE_EQ(fidelity(diag(1.0, 0.0), diag(0.0, 1.0)), 0.0);
    EXPECT_DOUBLE_EQ(fidelity(diag(0.5, 0.5), plus), 0.5);
    EXPECT_DOUBLE_EQ(fidelity(diag(0.5, 0.5), diag(0.0, 1.0)), 0.5);
}

TEST(IdealDensity, FreePhaseEvolution) {
    for (double t : {0.0, 0.3, 2.0, 17.0}) {
        const auto r = ideal_density(1.0, t);
        EXPECT_LT((r.rho - oracle::rabi_density(1.0, 0.0, t)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT(std::abs(r.coherence() - 0.5 * std::polar(1.0, t)), 1e-15);
    }
}

TEST(ShiftModel, Frequencies) {
    const auto s = make_shift_model(0.1, 1.0);
    EXPECT_DOUBLE_EQ(s.omega, 0.5);
    EXPECT_NEAR(s.omega_big, std::sqrt(0.26), 1e-15);
    EXPECT_GT(s.omega_big, s.omega);
    EXPECT_NEAR(rabi_period(s), 6.161170, 1e-6);
    EXPECT_NEAR(fidelity_period(s), 317.270055, 1e-6);
    const auto zero = make_shift_model(0.0, 1.0);
    EXPECT_EQ(zero.omega_big, zero.omega);
    EXPECT_TRUE(std::isinf(fidelity_period(zero)));
}

TEST(AnalyticFidelity, NoShiftIsUnity) {
    const auto s = make_shift_model(0.0, 1.0);
    for (double t = 0; t < 50; t += 1.3) EXPECT_NEAR(analytic_fidelity(s, t), 1.0, 1e-15);
}

TEST(AnalyticFidelity, StartsAtUnity) {
    for (double b : {0.01, 0.1, 0.3, 1.0}) EXPECT_NEAR(analytic_fidelity(make_shift_model(b, 1.0), 0.0), 1.0, 1e-15);
}

TEST(AnalyticFidelity, EqualsPureStateOverlap) {
    for (double b : {0.02, 0.1, -0.23, 0.3})
        for (double t = 0; t < 400; t += 3.7) {
            ReducedDensity shifted;
            shifted.rho = oracle::rabi_density(1.0, b, t);
            EXPECT_NEAR(analytic_fidelity(make_shift_model(b, 1.0), t), fidelity(shifted, ideal_density(1.0, t)), 1e-12);
        }
}

TEST(AnalyticFidelity, OverlaysShiftOnlyMasterEquation) {
    const auto s = shift_only_series(0.1, 700.0);
    const auto m = make_shift_model(0.1, 1.0);
    double err = 0;
    for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(s.fidelity[i] - analytic_fidelity(m, s.times[i])));
    EXPECT_LT(err, 1e-6);
}

TEST(ExtractPeriod, SyntheticCosine) {
    const auto t = uniform_grid(400.0, 0.2);
    std::vector<double> x;
    for (double v : t) x.push_back(std::cos(2 * std::numbers::pi * v / 100.0));
    EXPECT_NEAR(extract_period(t, x), 100.0, 0.5);
}

TEST(ExtractPeriod, PicksLargestAmplitudeComponent) {
    const auto t = uniform_grid(1000.0, 0.2);
    std::vector<double> x;
    for (double v : t) x.push_back(0.4 * std::cos(2 * std::numbers::pi * v / 250.0) + 0.05 * std::cos(2.1 * v) + 0.01 * v);
    EXPECT_NEAR(extract_period(t, x), 250.0, 0.5);
}

TEST(ExtractPeriod, ShiftOnlyFidelityAndRabi) {
    const auto s = shift_only_series(0.1, 1000.0);
    const auto m = make_shift_model(0.1, 1.0);
    EXPECT_NEAR(extract_period(s, PeriodChannel::fidelity), 317.27, 0.02 * 317.27);
    EXPECT_NEAR(extract_period(s, PeriodChannel::fidelity), fidelity_period(m), 0.02 * fidelity_period(m));
    EXPECT_NEAR(extract_period(s, PeriodChannel::pop0), 6.161, 0.02 * 6.161);
}

TEST(ExtractPeriod, Errors) {
    const auto t = uniform_grid(150.0, 0.2);
    std::vector<double> flat(t.size(), 0.7);
    EXPECT_THROW(extract_period(t, flat), NoOscillationError);
    std::vector<double> slow;
    for (double v : t) slow.push_back(std::cos(2 * std::numbers::pi * v / 100.0));
    EXPECT_THROW(extract_period(t, slow), SeriesTooShortError);
    std::vector<double> tiny(4, 0.0);
    EXPECT_THROW(extract_period(std::vector<double>{0, 1, 2, 3}, tiny), SeriesTooShortError);
    auto uneven = t;
    uneven[5] += 0.05;
    EXPECT_THROW(extract_period(uneven, slow), ConfigError);
    std::vector<double> shorter(slow.begin(), slow.end() - 1);
    EXPECT_THROW(extract_period(t, shorter), DimensionError);
}

TEST(EstimateBBar, ExactRoundTrip) {
    for (double b : {0.02, 0.1, 0.3}) {
        const double period = fidelity_period(make_shift_model(b, 1.0));
        EXPECT_NEAR(estimate_bbar(period, 1.0).exact, b, 1e-9);
    }
}

TEST(EstimateBBar, LongPeriodMeansNoShift) {
    EXPECT_NEAR(estimate_bbar(1e12, 1.0).exact, 0.0, 1e-5);
    EXPECT_EQ(estimate_bbar(std::numeric_limits<double>::infinity(), 1.0).exact, 0.0);
}

TEST(EstimateBBar, SmallShiftApproximationWithinTwoPercent) {
    for (double b = 0.005; b < 0.15; b += 0.005) {
        const auto e = estimate_bbar(fidelity_period(make_shift_model(b, 1.0)), 1.0);
        EXPECT_LT(std::abs(e.small_shift - e.exact) / e.exact, 0.02) << "b=" << b;
    }
}

TEST(EstimateBBar, RejectsNonPositivePeriod) {
    EXPECT_THROW(estimate_bbar(0.0, 1.0), InversionError);
    EXPECT_THROW(estimate_bbar(-3.0, 1.0), InversionError);
    EXPECT_THROW(estimate_bbar(std::nan(""), 1.0), InversionError);
}

TEST(EstimateJx, KnotsAndMidpoints) {
    const auto t = table_of({{0.0, 0.01}, {0.5, 0.03}, {1.0, 0.06}, {2.0, 0.08}});
    EXPECT_DOUBLE_EQ(estimate_jx(0.03, t), 0.5);
    EXPECT_DOUBLE_EQ(estimate_jx(-0.06, t), 1.0);
    EXPECT_NEAR(estimate_jx(0.045, t), 0.75, 1e-14);
    EXPECT_NEAR(estimate_jx(0.07, t), 1.5, 1e-14);
}

TEST(EstimateJx, Errors) {
    EXPECT_THROW(estimate_jx(0.02, table_of({{0.0, 0.01}, {1.0, 0.03}})), InversionError);
    EXPECT_THROW(estimate_jx(0.02, table_of({{0.0, 0.01}, {1.0, 0.03}, {2.0, 0.02}})), InversionError);
    EXPECT_THROW(estimate_jx(0.5, table_of({{0.0, 0.01}, {1.0, 0.03}, {2.0, 0.05}})), InversionError);
    EXPECT_THROW(estimate_jx(0.001, table_of({{0.0, 0.01}, {1.0, 0.03}, {2.0, 0.05}})), InversionError);
    EXPECT_THROW(estimate_jx(0.02, table_of({{0.0, 0.01}, {0.0, 0.03}, {2.0, 0.05}})), InversionError);
}

// Band edges against a dense scan of |mean(J) - b| <= se(J) along the interpolated table.
TEST(EstimateJx, BandMatchesDenseScan) {
    auto t = table_of({{0.0, 0.01}, {0.5, 0.03}, {1.0, 0.06}, {2.0, 0.08}});
    t[0].stderr_bbar = 0.004;
    t[1].stderr_bbar = 0.006;
    t[2].stderr_bbar = 0.01;
    t[3].stderr_bbar = 0.008;
    for (double b : {0.025, 0.05, 0.075}) {
        const auto band = estimate_jx_band(b, t);
        EXPECT_LE(band.low, band.estimate);
        EXPECT_GE(band.high, band.estimate);
        double lo = INFINITY, hi = -INFINITY;
        const double est = estimate_jx(b, t);
        // Walk outward from the estimate while the condition holds.
        auto inside = [&](double j) {
            for (std::size_t k = 0; k + 1 < t.size(); ++k)
                if (j >= t[k].jx && j <= t[k + 1].jx) {
                    const double s = (j - t[k].jx) / (t[k + 1].jx - t[k].jx);
                    const double mean = t[k].mean_abs_bbar + s * (t[k + 1].mean_abs_bbar - t[k].mean_abs_bbar);
                    const double se = t[k].stderr_bbar + s * (t[k + 1].stderr_bbar - t[k].stderr_bbar);
                    return std::abs(mean - b) <= se;
                }
            return false;
        };
        const double h = 1e-5;
        for (lo = est; lo - h >= 0.0 && inside(lo - h); lo -= h) {}
        for (hi = est; hi + h <= 2.0 && inside(hi + h); hi += h) {}
        EXPECT_NEAR(band.low, lo, 2e-5) << "b=" << b;
        EXPECT_NEAR(band.high, hi, 2e-5) << "b=" << b;
    }
}

TEST(SeriesInvariants, InitialFidelityAndPurity) {
    const auto m = oracle::random_model(4, 1.0, 3);
    const auto s = diagonalize_bath(m, 16, 0.25);
    const auto times = uniform_grid(20.0, 0.2);
    const auto exact = make_series(times, propagate_exact(m, s, times), 1.0);
    EXPECT_NEAR(exact.fidelity[0], 1.0, 1e-9);
    EXPECT_NEAR(exact.purity[0], 1.0, 1e-9);
    MESolverConfig c;
    c.b_bar = 0.05;
    c.c_var = 0.01;
    const auto me = make_series(times, solve_master_equation(c, initial_detector_state(), times), 1.0);
    EXPECT_NEAR(me.fidelity[0], 1.0, 1e-9);
    EXPECT_NEAR(me.purity[0], 1.0, 1e-9);
    for (std::size_t i = 0; i < times.size(); ++i) {
        EXPECT_NEAR(exact.pop0[i] + exact.pop1[i], 1.0, 1e-9);
        EXPECT_GE(exact.purity[i], 0.5 - 1e-9);
        EXPECT_LE(me.purity[i], 1.0 + 1e-9);
    }
}

TEST(SeriesInvariants, LengthMismatchThrows) {
    EXPECT_THROW(make_series(std::vector<double>{0.0, 1.0}, std::vector<ReducedDensity>(3), 1.0), DimensionError);
}

// Over the bath-derived shifts of the coupling sweep, the Rabi period barely moves while the
// fidelity period changes by a large factor.
TEST(ShiftModel, RabiPeriodInsensitiveToCoupling) {
    ExperimentConfig cfg;
    cfg.n_bath = 6;
    cfg.realizations = 4;
    ModelFamily family = [&](double jx, std::size_t r) { return sample_realization(cfg, jx, r).model; };
    const auto table = statistics_vs_jx(family, cfg.jx_list, cfg.realizations);
    std::vector<double> rabi, fid;
    for (const auto& row : table) {
        const auto m = make_shift_model(row.mean_abs_bbar, 1.0);
        rabi.push_back(rabi_period(m));
        fid.push_back(fidelity_period(m));
    }
    auto spread = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return (*hi - *lo) / *lo;
    };
    EXPECT_LT(10.0 * spread(rabi), spread(fid));
}
