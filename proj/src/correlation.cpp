#include "superrad/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "superrad/errors.hpp"

namespace superrad
{
HistogramLayout HistogramLayout::centered(int channel_count, double full_range)
{
    if (channel_count < 1)
        throw LayoutError("channel_count must be positive");
    if (!(full_range > 0.0))
        throw LayoutError("histogram range must be positive");
    HistogramLayout l;
    l.channel_count = channel_count;
    l.bin_width = full_range / channel_count;
    l.zero_channel = channel_count / 2;
    return l;
}

void HistogramLayout::validate() const
{
    if (channel_count < 1)
        throw LayoutError("channel_count must be positive");
    if (!(bin_width > 0.0) || !std::isfinite(bin_width))
        throw LayoutError("bin_width must be positive");
    if (zero_channel < 0 || zero_channel >= channel_count)
        throw LayoutError("zero_channel " + std::to_string(zero_channel) + " outside [0, " +
                          std::to_string(channel_count) + ")");
}

int HistogramLayout::channel_of(double tau) const
{
    const double pos = std::floor(tau / bin_width) + zero_channel;
    if (!(pos >= 0.0 && pos < channel_count))
        return -1;
    return static_cast<int>(pos);
}

CoincidenceHistogram::CoincidenceHistogram(HistogramLayout l) : layout(l)
{
    layout.validate();
    counts.assign(static_cast<std::size_t>(layout.channel_count), 0);
}

std::uint64_t CoincidenceHistogram::total_counts() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CoincidenceHistogram &CoincidenceHistogram::operator+=(const CoincidenceHistogram &other)
{
    if (other.layout.channel_count != layout.channel_count ||
        other.layout.zero_channel != layout.zero_channel || other.layout.bin_width != layout.bin_width)
        throw LayoutError("cannot merge histograms with different layouts");
    for (std::size_t i = 0; i < counts.size(); ++i)
        counts[i] += other.counts[i];
    total_starts += other.total_starts;
    return *this;
}

void CoincidenceHistogram::validate() const
{
    layout.validate();
    if (counts.size() != static_cast<std::size_t>(layout.channel_count))
        throw LayoutError("counts length differs from channel_count");
    if (total_counts() > total_starts)
        throw LayoutError("histogram holds more counts than starts");
}

double f_tau(double rate, double tau)
{
    if (!(rate > 0.0))
        throw DomainError("rate must be positive");
    return std::exp(-rate * std::abs(tau));
}

double binned_exponential(const HistogramLayout &layout, int channel, double rate)
{
    // Channels lie entirely on one side of tau = 0; measure from the edge nearest zero.
    const double lower = layout.tau_lower(channel);
    const double near = lower >= 0.0 ? lower : -(lower + layout.bin_width);
    return -0.5 * std::exp(-rate * near) * std::expm1(-rate * layout.bin_width);
}

CoincidenceHistogram synthesize_histogram(double rate, const HistogramLayout &layout,
                                          double expected_coincidences, std::uint64_t seed,
                                          double accidental_floor)
{
    layout.validate();
    if (!(rate > 0.0))
        throw DomainError("rate must be positive");
    if (!(expected_coincidences > 0.0) || !std::isfinite(expected_coincidences))
        throw DomainError("expected_coincidences must be positive");
    if (!(accidental_floor >= 0.0))
        throw DomainError("accidental_floor must be non-negative");

    CoincidenceHistogram hist(layout);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < layout.channel_count; ++i)
    {
        const double mean =
            expected_coincidences * (binned_exponential(layout, i, rate) + accidental_floor);
        if (mean > 0.0)
        {
            std::poisson_distribution<std::uint64_t> draw(mean);
            hist.counts[static_cast<std::size_t>(i)] = draw(rng);
        }
    }
    hist.total_starts = hist.total_counts();
    return hist;
}

namespace
{
struct Sums
{
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;

    void add(double w, double x, double y)
    {
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    double det() const { return sw * swxx - swx * swx; }
    double slope() const { return (sw * swxy - swx * swy) / det(); }
    double intercept() const { return (swy - slope() * swx) / sw; }
    double slope_error() const { return std::sqrt(sw / det()); }
};

struct Point
{
    double x; // |tau|
    double c; // counts
};

FitResult fit_impl(const HistogramLayout &layout, std::span<const double> counts,
                   const FitOptions &options)
{
    layout.validate();
    if (counts.size() != static_cast<std::size_t>(layout.channel_count))
        throw LayoutError("counts length differs from channel_count");
    const double floor = options.accidental_floor.value_or(0.0);
    if (!(floor >= 0.0))
        throw DomainError("accidental floor must be non-negative");

    std::vector<Point> points;
    FitWindow span{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i < layout.channel_count; ++i)
    {
        const double tau = layout.tau_center(i);
        if (options.window && (tau < options.window->tau_min || tau > options.window->tau_max))
            continue;
        const double c = counts[static_cast<std::size_t>(i)];
        if (!(c >= 0.0))
            throw DomainError("counts must be non-negative");
        points.push_back({std::abs(tau), c});
        span.tau_min = std::min(span.tau_min, tau);
        span.tau_max = std::max(span.tau_max, tau);
    }

    // Log-linear weighted least squares over channels above the floor.
    // var(ln(c - floor)) ~ c / (c - floor)^2 for Poisson c.
    Sums initial;
    int usable = 0;
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    for (const auto &p : points)
    {
        const double signal = p.c - floor;
        if (!(p.c > 0.0) || !(signal > 0.0))
            continue;
        initial.add(signal * signal / p.c, p.x, std::log(signal));
        ++usable;
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
    }
    if (usable < 2 || !(x_max > x_min) || !(initial.det() > 0.0))
        throw FitError(FitError::Kind::insufficient_data,
                       "fewer than 2 usable channels at distinct |tau| in the fit window");

    double rate = -initial.slope();
    double error = initial.slope_error();
    // A slope within noise of zero is not a decay either.
    if (!(rate > 0.0) || rate < 3.0 * error)
        throw FitError(FitError::Kind::non_decay,
                       "fitted slope does not describe a decay (rate " + std::to_string(rate) +
                           " +/- " + std::to_string(error) + " s^-1)");

    // Refine with Poisson-weighted iterations on the linearized log counts
    // (model mean = floor + exp(a - rate x)); zero channels in the window count
    // through the working response. This removes the low-count bias of ln(c).
    double intercept = initial.intercept();
    for (int iter = 0; iter < 100; ++iter)
    {
        Sums step;
        for (const auto &p : points)
        {
            const double eta = intercept - rate * p.x;
            const double signal = std::exp(eta);
            const double mean = floor + signal;
            if (!(signal > 0.0) || !(mean > 0.0))
                continue;
            step.add(signal * signal / mean, p.x, eta + (p.c - mean) / signal);
        }
        if (!(step.det() > 0.0))
            break;
        const double next_rate = -step.slope();
        const double next_intercept = step.intercept();
        if (!std::isfinite(next_rate) || !std::isfinite(next_intercept))
            break;
        const bool converged = std::abs(next_rate - rate) <= 1e-14 * std::abs(rate);
        rate = next_rate;
        intercept = next_intercept;
        error = step.slope_error();
        if (converged)
            break;
    }

    FitResult out;
    out.rate = rate;
    out.standard_error = error;
    out.window = span;
    out.channels_used = static_cast<int>(points.size());
    if (!(out.rate > 0.0) || out.rate < 3.0 * out.standard_error)
        throw FitError(FitError::Kind::non_decay,
                       "fitted slope does not describe a decay (rate " + std::to_string(out.rate) +
                           " +/- " + std::to_string(out.standard_error) + " s^-1)");
    return out;
}
} // namespace

FitResult fit_gamma(const CoincidenceHistogram &hist, const FitOptions &options)
{
    hist.validate();
    std::vector<double> counts(hist.counts.begin(), hist.counts.end());
    return fit_impl(hist.layout, counts, options);
}

FitResult fit_gamma(const HistogramLayout &layout, std::span<const double> counts,
                    const FitOptions &options)
{
    return fit_impl(layout, counts, options);
}

std::vector<double> normalized(const CoincidenceHistogram &hist, Normalization mode)
{
    std::vector<double> out(hist.counts.begin(), hist.counts.end());
    double scale = 0.0;
    if (mode == Normalization::peak)
        scale = out.empty() ? 0.0 : *std::max_element(out.begin(), out.end());
    else
        scale = std::accumulate(out.begin(), out.end(), 0.0);
    if (scale > 0.0)
        for (double &v : out)
            v /= scale;
    return out;
}

} // namespace superrad
