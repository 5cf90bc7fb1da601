#ifndef SUPERRAD_PARAMS_HPP
#define SUPERRAD_PARAMS_HPP

#include <string_view>

#include <json.hpp>

namespace superrad
{
inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Planar symmetric Fabry-Perot microcavity. Mirrors are characterized by the
// amplitude reflectance |r| only; the intensity reflectance is derived.
struct CavityParams
{
    double emission_wavelength = 700e-9; // lambda [m]
    int mode_order = 1;                  // m
    double mirror_amplitude_reflectance = 0.999499874937461; // |r|, |r|^2 = 0.9990
    double finesse = 3000.0;             // f

    double cavity_length() const { return mode_order * emission_wavelength / 2.0; }
    double intensity_reflectance() const
    {
        return mirror_amplitude_reflectance * mirror_amplitude_reflectance;
    }
    double wavenumber() const { return 2.0 * kPi / emission_wavelength; }

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct EmitterParams
{
    double free_space_lifetime = 2e-9; // T_SE [s]

    // gamma = T_SE^-1 / 2
    double free_space_rate() const { return 0.5 / free_space_lifetime; }

    void validate() const;
};

/// 2 lambda sqrt(f m): radius of the Gaussian-like transverse cavity mode.
double transverse_coherence_length(const CavityParams &params);

/// Fabry-Perot finesse pi sqrt(R)/(1 - R) for intensity reflectance R in [0, 1).
double finesse_from_reflectance(double intensity_reflectance);

/// Photon storage time f d / (pi c).
double storage_time(const CavityParams &params);

/// Magnitude of the multiple-reflection output prefactor with Theta = 1:
/// (1 + |r|) sqrt(1 - |r|^2) sum_n |r|^{2n} = (1 + |r|) / sqrt(1 - |r|^2).
/// The value is relative; the overall amplitude constant is not modeled.
double cavity_output_factor(double amplitude_reflectance);

// JSON keys: emission_wavelength_m, mode_order, mirror_amplitude_reflectance,
// finesse, free_space_lifetime_s. Missing keys keep the defaults above.
CavityParams cavity_from_json(const nlohmann::json &doc);
EmitterParams emitter_from_json(const nlohmann::json &doc);
nlohmann::json to_json(const CavityParams &params);
nlohmann::json to_json(const EmitterParams &params);

} // namespace superrad

#endif // SUPERRAD_PARAMS_HPP
