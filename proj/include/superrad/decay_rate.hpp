#ifndef SUPERRAD_DECAY_RATE_HPP
#define SUPERRAD_DECAY_RATE_HPP

#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "superrad/params.hpp"

namespace superrad
{
// Time argument meaning t -> infinity (all causal step functions switched on).
inline constexpr double kSteadyState = std::numeric_limits<double>::infinity();

inline constexpr double kDefaultTolerance = 1e-9;

// Prefactor of the dipole-dipole kernel: 3/k^3 as printed (verbatim), or
// 3/(2k^3) (standard_half), which gives the two-dipole doubling at R = 0.
enum class KernelNormalization
{
    verbatim,
    standard_half
};

double normalization_factor(KernelNormalization norm); // 1 or 1/2
KernelNormalization parse_normalization(std::string_view name);
std::string_view to_string(KernelNormalization norm);

/// Below this value of k*x the kernel is evaluated from its Taylor series.
inline constexpr double kKernelTaylorThreshold = 1e-3;

/// c_n (3/k^3) [sin(kx)(-1/x^3 + k^2/x) + cos(kx) k/x^2], with limit 2 c_n at x = 0.
double dipole_kernel(double wavenumber, double distance, KernelNormalization norm);

namespace detail
{
// Bracket term of the kernel as a function of u = kx, times 3 (no c_n).
double kernel_direct(double u);
double kernel_taylor(double u);
// Taylor branch below kKernelTaylorThreshold, direct otherwise.
double kernel_direct_or_taylor(double u);
// Gamma / gamma summed over image orders 1..order exactly (no truncation
// logic). separation == nullptr drops the inter-dipole terms.
double image_series(const CavityParams &cavity, const double *separation, double time,
                    KernelNormalization norm, long order);
} // namespace detail

struct DecayRateEvaluation
{
    double rate = 0.0;             // s^-1
    long truncation_order = 0;     // highest image index n included
    double residual_bound = 0.0;   // bound on the omitted tail, relative to gamma
};

/// Cooperative decay rate of two parallel dipoles at transverse separation R,
/// including the mirror-image series and causal gating. time = kSteadyState
/// selects the t -> infinity limit, where the series is truncated once the
/// geometric tail is below tolerance * gamma.
DecayRateEvaluation evaluate_gamma_eq2(const CavityParams &cavity, const EmitterParams &emitter,
                                       double separation, double time, KernelNormalization norm,
                                       double tolerance = kDefaultTolerance);

/// Single-dipole cavity rate (inter-dipole terms removed).
DecayRateEvaluation evaluate_gamma_infinity(const CavityParams &cavity, const EmitterParams &emitter,
                                            double time, KernelNormalization norm,
                                            double tolerance = kDefaultTolerance);

double gamma_eq2(const CavityParams &cavity, const EmitterParams &emitter, double separation,
                 double time = kSteadyState,
                 KernelNormalization norm = KernelNormalization::standard_half,
                 double tolerance = kDefaultTolerance);

double gamma_infinity(const CavityParams &cavity, const EmitterParams &emitter,
                      double time = kSteadyState,
                      KernelNormalization norm = KernelNormalization::standard_half,
                      double tolerance = kDefaultTolerance);

/// Steady-state image order that pushes the series tail below tolerance * gamma.
long steady_state_truncation_order(const CavityParams &cavity, KernelNormalization norm,
                                   double tolerance);

/// Phenomenological mode-overlap model: Gamma_inf (1 + exp(-(R/l_c)^2)).
double gamma_overlap(const CavityParams &cavity, const EmitterParams &emitter, double separation,
                     KernelNormalization norm = KernelNormalization::standard_half);

struct DecayRateProfile
{
    std::vector<double> separations;          // m
    std::vector<double> times;                // s, kSteadyState for t -> infinity
    std::vector<std::vector<double>> rates;   // rates[time][separation], s^-1
    std::vector<double> single_dipole_rates;  // Gamma_inf per time row, s^-1
    std::vector<std::vector<long>> truncation_orders; // per rate entry
    long truncation_order = 0;                // max over the grid
    double truncation_residual_bound = 0.0;   // max over the grid, relative to gamma
    double coherence_length = 0.0;            // l_c used for the R/l_c column
};

DecayRateProfile decay_rate_profile(const CavityParams &cavity, const EmitterParams &emitter,
                                    std::span<const double> separations,
                                    std::span<const double> times, KernelNormalization norm,
                                    double tolerance = kDefaultTolerance);

} // namespace superrad

#endif // SUPERRAD_DECAY_RATE_HPP
