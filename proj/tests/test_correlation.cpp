#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "superrad/correlation.hpp"
#include "superrad/errors.hpp"
#include "superrad/io.hpp"

using namespace superrad;

namespace
{
constexpr double kPerPs = 1e12;

HistogramLayout ps_layout()
{
    return HistogramLayout::centered(2048, 40e-12); // +/- 20 ps
}

// Midpoint-rule quadrature of (rate/2) exp(-rate |tau|) over one channel.
double quadrature_mass(const HistogramLayout &l, int ch, double rate)
{
    const int steps = 2000;
    const double h = l.bin_width / steps;
    double sum = 0.0;
    for (int i = 0; i < steps; ++i)
    {
        const double tau = l.tau_lower(ch) + (i + 0.5) * h;
        sum += 0.5 * rate * std::exp(-rate * std::abs(tau));
    }
    return sum * h;
}
} // namespace

TEST_CASE("F(tau) is an even, normalized, log-linear exponential")
{
    const double rate = 1.0 * kPerPs;
    CHECK(f_tau(rate, 0.0) == 1.0);
    CHECK(f_tau(rate, 1e-12) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(f_tau(rate, -1e-12) == f_tau(rate, 1e-12));
    for (double t1 : {0.1e-12, 0.7e-12, 3e-12})
        for (double t2 : {0.2e-12, 1.1e-12})
        {
            CHECK(f_tau(rate, t1) * f_tau(rate, t2) == doctest::Approx(f_tau(rate, t1 + t2)).epsilon(1e-14));
            CHECK(f_tau(rate, -t1) * f_tau(rate, -t2) == doctest::Approx(f_tau(rate, -t1 - t2)).epsilon(1e-14));
        }
    for (double tau = -20e-12; tau <= 20e-12; tau += 0.37e-12)
    {
        const double v = f_tau(rate, tau);
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        CHECK(std::log(v) == doctest::Approx(-rate * std::abs(tau)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(f_tau(0.0, 1.0), DomainError);
}

TEST_CASE("layout maps channels to tau")
{
    const auto l = ps_layout();
    CHECK(l.channel_count == 2048);
    CHECK(l.zero_channel == 1024);
    CHECK(l.tau_lower(1024) == 0.0);
    CHECK(l.channel_of(0.0) == 1024);
    CHECK(l.channel_of(-1e-18) == 1023);
    CHECK(l.channel_of(-20e-12) == 0);
    CHECK(l.channel_of(20e-12) == -1);
    CHECK(l.channel_of(-21e-12) == -1);

    HistogramLayout bad = l;
    bad.zero_channel = 2048;
    CHECK_THROWS_AS(bad.validate(), LayoutError);
    bad.zero_channel = -1;
    CHECK_THROWS_AS(synthesize_histogram(kPerPs, bad, 10.0, 1), LayoutError);
    bad = l;
    bad.bin_width = 0.0;
    CHECK_THROWS_AS(bad.validate(), LayoutError);
}

TEST_CASE("binned exponential equals quadrature of the two-sided density")
{
    const auto l = ps_layout();
    const double rate = 2.0 * kPerPs;
    double total = 0.0;
    for (int ch = 0; ch < l.channel_count; ++ch)
    {
        const double mass = binned_exponential(l, ch, rate);
        total += mass;
        if (ch % 97 == 0 || std::abs(ch - l.zero_channel) < 3)
            CHECK(mass == doctest::Approx(quadrature_mass(l, ch, rate)).epsilon(1e-7));
    }
    // Mass outside +/- 20 ps is exp(-40).
    CHECK(total == doctest::Approx(1.0 - std::exp(-rate * 20e-12)).epsilon(1e-12));
}

TEST_CASE("synthesis is deterministic and converges to the binned model")
{
    const auto l = ps_layout();
    const double rate = 1.0 * kPerPs;
    const auto a = synthesize_histogram(rate, l, 1e5, 42);
    const auto b = synthesize_histogram(rate, l, 1e5, 42);
    const auto c = synthesize_histogram(rate, l, 1e5, 43);
    CHECK(a.counts == b.counts);
    CHECK(a.counts != c.counts);
    CHECK(a.total_starts == a.total_counts());
    CHECK_NOTHROW(a.validate());

    // Law of large numbers: normalized histogram approaches the binned exponential.
    const double n = 1e9;
    const auto big = synthesize_histogram(rate, l, n, 5);
    double max_dev = 0.0;
    for (int ch = 0; ch < l.channel_count; ++ch)
    {
        const double expected = n * binned_exponential(l, ch, rate);
        if (expected < 1e3)
            continue;
        // 5 sigma per channel
        const double dev = std::abs(static_cast<double>(big.counts[ch]) - expected) / std::sqrt(expected);
        max_dev = std::max(max_dev, dev);
    }
    CHECK(max_dev < 5.5);

    CHECK_THROWS_AS(synthesize_histogram(rate, l, 0.0, 1), DomainError);
    CHECK_THROWS_AS(synthesize_histogram(0.0, l, 10.0, 1), DomainError);
    CHECK_THROWS_AS(synthesize_histogram(rate, l, 10.0, 1, -1.0), DomainError);
}

TEST_CASE("fit recovers noiseless binned exponentials exactly")
{
    const auto l = ps_layout();
    for (double g : {0.5, 2.0, 5.0})
    {
        const double rate = g * kPerPs;
        std::vector<double> counts(l.channel_count);
        for (int ch = 0; ch < l.channel_count; ++ch)
            counts[ch] = 1e6 * binned_exponential(l, ch, rate);
        const auto fit = fit_gamma(l, counts);
        CHECK(fit.rate == doctest::Approx(rate).epsilon(1e-6));
        CHECK(fit.channels_used == l.channel_count);
    }

    // Wide bins: midpoint sampling would be biased; the fit is not.
    const auto coarse = HistogramLayout::centered(16, 40e-12);
    std::vector<double> counts(16);
    for (int ch = 0; ch < 16; ++ch)
        counts[ch] = 1e6 * binned_exponential(coarse, ch, 2.0 * kPerPs);
    CHECK(fit_gamma(coarse, counts).rate == doctest::Approx(2.0 * kPerPs).epsilon(1e-6));
}

TEST_CASE("fit on Poisson histograms: 2% at N = 1e6 for >= 95% of seeds, no aggregate bias")
{
    const auto l = ps_layout();
    const double rate = 1.0 * kPerPs;
    int within = 0;
    double sum = 0.0, se_sum = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s)
    {
        const auto fit = fit_gamma(synthesize_histogram(rate, l, 1e6, 1000 + s));
        within += std::abs(fit.rate / rate - 1.0) < 0.02;
        sum += fit.rate;
        se_sum += fit.standard_error;
    }
    CHECK(within >= 95);
    const double mean = sum / seeds;
    const double se_mean = se_sum / seeds / std::sqrt(seeds);
    CHECK(std::abs(mean - rate) < 3.0 * se_mean);
}

TEST_CASE("synthesize -> fit round trip is unbiased across 0.1 .. 10 per ps")
{
    const auto l = ps_layout();
    for (double g : {0.1, 0.3, 1.0, 3.0, 10.0})
    {
        const double rate = g * kPerPs;
        double pull_sum = 0.0;
        const int seeds = 40;
        for (int s = 0; s < seeds; ++s)
        {
            const auto fit = fit_gamma(synthesize_histogram(rate, l, 2e5, 77 * s + 1));
            pull_sum += (fit.rate - rate) / fit.standard_error;
        }
        // Mean pull of unit-variance pulls over 40 seeds: 4 sigma band.
        CHECK(std::abs(pull_sum / seeds) < 4.0 / std::sqrt(seeds));
    }
}

TEST_CASE("fit is scale-equivariant")
{
    const auto l = ps_layout();
    const auto h = synthesize_histogram(1.5 * kPerPs, l, 1e5, 9);
    std::vector<double> counts(h.counts.begin(), h.counts.end());
    const double base = fit_gamma(l, counts).rate;
    for (double k : {0.01, 3.0, 1e4})
    {
        std::vector<double> scaled(counts);
        for (double &c : scaled)
            c *= k;
        CHECK(fit_gamma(l, scaled).rate == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("fit window and accidental floor")
{
    const auto l = ps_layout();
    const double rate = 1.0 * kPerPs;
    const double floor_fraction = 2e-5; // 20 counts per channel at N = 1e6
    int within = 0;
    for (int s = 0; s < 20; ++s)
    {
        const auto h = synthesize_histogram(rate, l, 1e6, 300 + s, floor_fraction);
        FitOptions opts;
        opts.accidental_floor = floor_fraction * 1e6;
        within += std::abs(fit_gamma(h, opts).rate / rate - 1.0) < 0.02;
    }
    CHECK(within >= 19);

    const auto h = synthesize_histogram(rate, l, 1e6, 11);
    FitOptions opts;
    opts.window = FitWindow{-5e-12, 5e-12};
    const auto fit = fit_gamma(h, opts);
    CHECK(fit.window.tau_min >= -5e-12);
    CHECK(fit.window.tau_max <= 5e-12);
    CHECK(fit.channels_used == 512);
    CHECK(fit.rate == doctest::Approx(rate).epsilon(0.03));
}

TEST_CASE("fit error paths")
{
    const auto l = ps_layout();
    // Flat histogram: pure accidentals.
    const auto flat = synthesize_histogram(1e15, l, 1e6, 3, 1e-3);
    std::vector<double> flat_counts(flat.counts.begin(), flat.counts.end());
    flat_counts[l.zero_channel] = flat_counts[l.zero_channel - 1] = flat_counts[l.zero_channel + 1] = 1000;
    try
    {
        fit_gamma(l, flat_counts);
        FAIL("expected non-decay");
    }
    catch (const FitError &e)
    {
        CHECK(e.kind() == FitError::Kind::non_decay);
    }

    std::vector<double> exactly_flat(l.channel_count, 50.0);
    CHECK_THROWS_AS(fit_gamma(l, exactly_flat), FitError);

    // Single populated channel (or two mirror channels at equal |tau|).
    std::vector<double> sparse(l.channel_count, 0.0);
    sparse[l.zero_channel] = 10;
    try
    {
        fit_gamma(l, sparse);
        FAIL("expected insufficient data");
    }
    catch (const FitError &e)
    {
        CHECK(e.kind() == FitError::Kind::insufficient_data);
    }
    sparse[l.zero_channel - 1] = 12;
    CHECK_THROWS_AS(fit_gamma(l, sparse), FitError);

    // Growing counts are not a decay.
    std::vector<double> growing(l.channel_count);
    for (int ch = 0; ch < l.channel_count; ++ch)
        growing[ch] = 10.0 + std::abs(ch - l.zero_channel);
    CHECK_THROWS_AS(fit_gamma(l, growing), FitError);

    std::vector<double> wrong_size(10, 1.0);
    CHECK_THROWS_AS(fit_gamma(l, wrong_size), LayoutError);
}

TEST_CASE("histogram bookkeeping, normalization and CSV")
{
    const auto l = HistogramLayout::centered(8, 8e-12);
    CoincidenceHistogram h(l);
    h.counts = {0, 1, 2, 8, 4, 2, 1, 0};
    h.total_starts = 30;
    CHECK_NOTHROW(h.validate());
    h.total_starts = 10;
    CHECK_THROWS_AS(h.validate(), LayoutError);
    h.total_starts = 30;

    const auto peak = normalized(h, Normalization::peak);
    CHECK(*std::max_element(peak.begin(), peak.end()) == 1.0);
    const auto area = normalized(h, Normalization::area);
    CHECK(std::accumulate(area.begin(), area.end(), 0.0) == doctest::Approx(1.0));

    CoincidenceHistogram sum = h;
    sum += h;
    CHECK(sum.counts[3] == 16);
    CHECK(sum.total_starts == 60);
    CoincidenceHistogram other(HistogramLayout::centered(16, 8e-12));
    CHECK_THROWS_AS(sum += other, LayoutError);

    std::ostringstream csv;
    write_csv(csv, h, "# m\n");
    CHECK(csv.str().rfind("# m\nchannel,tau_s,counts\n0,-3.5e-12,0\n", 0) == 0);

    FitResult fit{2e12, 1e10, {-1e-12, 1e-12}, 12};
    const auto j = to_json(fit);
    CHECK(j.at("gamma_s_inv") == 2e12);
    CHECK(j.at("stderr_s_inv") == 1e10);
    CHECK(j.at("window_s").size() == 2);
    CHECK(j.at("channels_used") == 12);
}
