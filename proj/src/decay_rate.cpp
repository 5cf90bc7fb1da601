#include "superrad/decay_rate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "superrad/errors.hpp"
#include "superrad/partition.hpp"

namespace superrad
{
namespace
{
constexpr long kMaxCausalTerms = 50'000'000;

// Neumaier compensated sum.
class CompensatedSum
{
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// theta(ct - x) with theta(0) = 0: nothing is switched on at t = 0.
bool causal(double time, double distance)
{
    if (std::isinf(time) && time > 0.0)
        return true;
    return kSpeedOfLight * time > distance;
}

// Sup of |kernel| over x >= d for both image terms of one order n.
double tail_constant(const CavityParams &cavity, KernelNormalization norm)
{
    const double u0 = cavity.wavenumber() * cavity.cavity_length();
    return 2.0 * 3.0 * normalization_factor(norm) * (1.0 / u0 + 1.0 / (u0 * u0) + 1.0 / (u0 * u0 * u0));
}

void check_common(const CavityParams &cavity, const EmitterParams &emitter, double time,
                  double tolerance)
{
    emitter.validate();
    if (!(cavity.emission_wavelength > 0.0) || cavity.mode_order < 1 || !(cavity.finesse > 0.0))
        throw ConfigError("invalid cavity parameters");
    const double r = cavity.mirror_amplitude_reflectance;
    if (!(r >= 0.0 && r <= 1.0))
        throw ConfigError("mirror_amplitude_reflectance must lie in [0, 1]");
    if (std::isnan(time))
        throw DomainError("time must not be NaN");
    if (!(tolerance > 0.0))
        throw DomainError("tolerance must be positive");
    if (std::isinf(time) && time > 0.0 && r >= 1.0)
        throw ConvergenceError("image series does not converge for |r| = 1 at steady state");
}

struct SeriesPlan
{
    long order = 0;
    double residual_bound = 0.0;
};

SeriesPlan plan_series(const CavityParams &cavity, KernelNormalization norm, double time,
                       double tolerance)
{
    const double r = cavity.mirror_amplitude_reflectance;
    SeriesPlan plan;
    const bool steady = std::isinf(time) && time > 0.0;
    long steady_order = 0;
    double steady_bound = 0.0;
    if (r < 1.0)
    {
        steady_order = steady_state_truncation_order(cavity, norm, tolerance);
        steady_bound = r == 0.0 ? 0.0
                                : tail_constant(cavity, norm) * std::pow(r, steady_order + 1) / (1.0 - r);
    }
    if (steady)
    {
        plan.order = steady_order;
        plan.residual_bound = steady_bound;
        return plan;
    }

    // Largest n with n d < c t.
    const double q = kSpeedOfLight * time / cavity.cavity_length();
    long causal_order = 0;
    if (q > 0.0)
    {
        const double fq = std::floor(q);
        if (fq >= static_cast<double>(kMaxCausalTerms) * 4)
            causal_order = kMaxCausalTerms * 4;
        else
            causal_order = static_cast<long>(fq == q ? fq - 1.0 : fq);
    }
    if (r < 1.0 && causal_order > steady_order)
    {
        plan.order = steady_order;
        plan.residual_bound = steady_bound;
    }
    else
    {
        if (causal_order > kMaxCausalTerms)
            throw ConvergenceError("causal image sum with |r| = 1 exceeds the term limit");
        plan.order = causal_order;
    }
    return plan;
}

DecayRateEvaluation evaluate(const CavityParams &cavity, const EmitterParams &emitter,
                             const double *separation, double time, KernelNormalization norm,
                             double tolerance)
{
    check_common(cavity, emitter, time, tolerance);
    const SeriesPlan plan = plan_series(cavity, norm, time, tolerance);

    DecayRateEvaluation out;
    out.rate = emitter.free_space_rate() *
               detail::image_series(cavity, separation, time, norm, plan.order);
    out.truncation_order = plan.order;
    out.residual_bound = plan.residual_bound;
    return out;
}

} // namespace

double normalization_factor(KernelNormalization norm)
{
    return norm == KernelNormalization::verbatim ? 1.0 : 0.5;
}

KernelNormalization parse_normalization(std::string_view name)
{
    if (name == "verbatim")
        return KernelNormalization::verbatim;
    if (name == "standard_half")
        return KernelNormalization::standard_half;
    throw ConfigError("unknown kernel normalization '" + std::string(name) +
                      "' (expected verbatim or standard_half)");
}

std::string_view to_string(KernelNormalization norm)
{
    return norm == KernelNormalization::verbatim ? "verbatim" : "standard_half";
}

namespace detail
{
double kernel_direct(double u)
{
    // Long double keeps the -1/u^3 + 1/u^2 cancellation accurate near the
    // Taylor threshold.
    const long double x = u;
    const long double s = std::sin(x);
    const long double c = std::cos(x);
    return static_cast<double>(3.0L * (s / x + (x * c - s) / (x * x * x)));
}

double kernel_taylor(double u)
{
    const double u2 = u * u;
    return 2.0 + u2 * (-2.0 / 5.0 + u2 * (3.0 / 140.0 - u2 / 1890.0));
}

double kernel_direct_or_taylor(double u)
{
    return u < kKernelTaylorThreshold ? kernel_taylor(u) : kernel_direct(u);
}

double image_series(const CavityParams &cavity, const double *separation, double time,
                    KernelNormalization norm, long order)
{
    const double k = cavity.wavenumber();
    const double d = cavity.cavity_length();
    const double r = cavity.mirror_amplitude_reflectance;
    const double c_n = normalization_factor(norm);

    CompensatedSum sum;
    sum.add(1.0);
    if (separation && causal(time, *separation))
        sum.add(c_n * kernel_direct_or_taylor(k * *separation));

    const double kd = k * d;
    double weight = 1.0;
    for (long n = 1; n <= order; ++n)
    {
        weight *= -r;
        if (weight == 0.0)
            break;
        const double nd = n * d;
        double term = 0.0;
        if (causal(time, nd))
            term += kernel_direct_or_taylor(n * kd);
        if (separation)
        {
            const double rn = std::hypot(*separation, nd);
            if (causal(time, rn))
                term += kernel_direct_or_taylor(k * rn);
        }
        sum.add(weight * c_n * term);
    }
    return sum.value();
}
} // namespace detail

double dipole_kernel(double wavenumber, double distance, KernelNormalization norm)
{
    if (!(wavenumber > 0.0))
        throw DomainError("wavenumber must be positive");
    if (!(distance >= 0.0))
        throw DomainError("distance must be non-negative");
    return normalization_factor(norm) * detail::kernel_direct_or_taylor(wavenumber * distance);
}

long steady_state_truncation_order(const CavityParams &cavity, KernelNormalization norm,
                                   double tolerance)
{
    const double r = cavity.mirror_amplitude_reflectance;
    if (!(tolerance > 0.0))
        throw DomainError("tolerance must be positive");
    if (r >= 1.0)
        throw ConvergenceError("image series does not converge for |r| = 1 at steady state");
    if (r <= 0.0)
        return 0;
    const double ratio = tolerance * (1.0 - r) / tail_constant(cavity, norm);
    if (ratio >= 1.0)
        return 0;
    return std::max(0L, static_cast<long>(std::ceil(std::log(ratio) / std::log(r))));
}

DecayRateEvaluation evaluate_gamma_eq2(const CavityParams &cavity, const EmitterParams &emitter,
                                       double separation, double time, KernelNormalization norm,
                                       double tolerance)
{
    if (!(separation >= 0.0))
        throw DomainError("separation must be non-negative");
    return evaluate(cavity, emitter, &separation, time, norm, tolerance);
}

DecayRateEvaluation evaluate_gamma_infinity(const CavityParams &cavity, const EmitterParams &emitter,
                                            double time, KernelNormalization norm, double tolerance)
{
    return evaluate(cavity, emitter, nullptr, time, norm, tolerance);
}

double gamma_eq2(const CavityParams &cavity, const EmitterParams &emitter, double separation,
                 double time, KernelNormalization norm, double tolerance)
{
    return evaluate_gamma_eq2(cavity, emitter, separation, time, norm, tolerance).rate;
}

double gamma_infinity(const CavityParams &cavity, const EmitterParams &emitter, double time,
                      KernelNormalization norm, double tolerance)
{
    return evaluate_gamma_infinity(cavity, emitter, time, norm, tolerance).rate;
}

double gamma_overlap(const CavityParams &cavity, const EmitterParams &emitter, double separation,
                     KernelNormalization norm)
{
    if (!(separation >= 0.0))
        throw DomainError("separation must be non-negative");
    const double single = gamma_infinity(cavity, emitter, kSteadyState, norm);
    return single * (1.0 + indistinguishability(separation, transverse_coherence_length(cavity)));
}

DecayRateProfile decay_rate_profile(const CavityParams &cavity, const EmitterParams &emitter,
                                    std::span<const double> separations,
                                    std::span<const double> times, KernelNormalization norm,
                                    double tolerance)
{
    if (separations.empty() || times.empty())
        throw DomainError("separation and time grids must be non-empty");

    DecayRateProfile profile;
    profile.separations.assign(separations.begin(), separations.end());
    profile.times.assign(times.begin(), times.end());
    profile.coherence_length = transverse_coherence_length(cavity);

    for (double t : times)
    {
        const auto single = evaluate_gamma_infinity(cavity, emitter, t, norm, tolerance);
        profile.single_dipole_rates.push_back(single.rate);
        std::vector<double> row;
        std::vector<long> orders;
        row.reserve(separations.size());
        for (double sep : separations)
        {
            const auto ev = evaluate_gamma_eq2(cavity, emitter, sep, t, norm, tolerance);
            if (!(ev.rate > 0.0))
                throw ModelError("non-positive decay rate at R = " + std::to_string(sep) + " m");
            profile.truncation_order = std::max(profile.truncation_order, ev.truncation_order);
            profile.truncation_residual_bound =
                std::max(profile.truncation_residual_bound, ev.residual_bound);
            row.push_back(ev.rate);
            orders.push_back(ev.truncation_order);
        }
        profile.rates.push_back(std::move(row));
        profile.truncation_orders.push_back(std::move(orders));
    }
    return profile;
}

} // namespace superrad
