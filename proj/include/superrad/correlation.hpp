#ifndef SUPERRAD_CORRELATION_HPP
#define SUPERRAD_CORRELATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace superrad
{
// MCA channel layout. Channel i covers tau in [(i - zero_channel) w, (i - zero_channel + 1) w),
// so no channel straddles tau = 0.
struct HistogramLayout
{
    int channel_count = 2048;
    double bin_width = 50e-9 / 2048; // s
    int zero_channel = 1024;

    // Full-scale range split evenly around tau = 0.
    static HistogramLayout centered(int channel_count, double full_range);

    void validate() const; // throws LayoutError
    double tau_lower(int channel) const { return (channel - zero_channel) * bin_width; }
    double tau_center(int channel) const { return (channel - zero_channel + 0.5) * bin_width; }
    // Channel containing tau, or -1 when tau is outside the range.
    int channel_of(double tau) const;
};

struct CoincidenceHistogram
{
    HistogramLayout layout;
    std::vector<std::uint64_t> counts;
    std::uint64_t total_starts = 0;

    explicit CoincidenceHistogram(HistogramLayout l = {});

    int channel_count() const { return layout.channel_count; }
    double bin_width() const { return layout.bin_width; }
    int zero_channel() const { return layout.zero_channel; }
    std::uint64_t total_counts() const;

    // Channel-wise addition; layouts must match.
    CoincidenceHistogram &operator+=(const CoincidenceHistogram &other);

    void validate() const;
};

/// exp(-rate |tau|), normalized to 1 at tau = 0.
double f_tau(double rate, double tau);

/// Probability mass of the two-sided exponential (rate/2) exp(-rate |tau|) in one channel.
double binned_exponential(const HistogramLayout &layout, int channel, double rate);

/// Poisson histogram with mean N * binned_exponential + accidental_floor * N per channel.
/// Deterministic given seed.
CoincidenceHistogram synthesize_histogram(double rate, const HistogramLayout &layout,
                                          double expected_coincidences, std::uint64_t seed,
                                          double accidental_floor = 0.0);

struct FitWindow
{
    double tau_min = 0.0; // signed tau of channel centers, s
    double tau_max = 0.0;
};

struct FitOptions
{
    std::optional<FitWindow> window;
    std::optional<double> accidental_floor; // mean accidental counts per channel
};

struct FitResult
{
    double rate = 0.0;           // s^-1
    double standard_error = 0.0; // s^-1
    FitWindow window;            // span of channel centers actually used
    int channels_used = 0;
};

/// Weighted least squares of ln(counts) against |tau| with Poisson weights,
/// pooling both signs of tau. Zero (or floor-dominated) channels are skipped.
FitResult fit_gamma(const CoincidenceHistogram &hist, const FitOptions &options = {});

/// Same fit on non-integer expected counts (noiseless model curves).
FitResult fit_gamma(const HistogramLayout &layout, std::span<const double> counts,
                    const FitOptions &options = {});

enum class Normalization
{
    peak,
    area
};

std::vector<double> normalized(const CoincidenceHistogram &hist,
                               Normalization mode = Normalization::peak);

} // namespace superrad

#endif // SUPERRAD_CORRELATION_HPP
