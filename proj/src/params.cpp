#include "superrad/params.hpp"

#include <cmath>
#include <string>

#include "superrad/errors.hpp"

namespace superrad
{
void CavityParams::validate() const
{
    if (!(emission_wavelength > 0.0) || !std::isfinite(emission_wavelength))
        throw ConfigError("emission_wavelength must be positive and finite");
    if (mode_order < 1)
        throw ConfigError("mode_order must be an integer >= 1");
    if (!(mirror_amplitude_reflectance >= 0.0 && mirror_amplitude_reflectance < 1.0))
        throw ConfigError("mirror_amplitude_reflectance must lie in [0, 1)");
    if (!(finesse > 0.0) || !std::isfinite(finesse))
        throw ConfigError("finesse must be positive and finite");
}

void EmitterParams::validate() const
{
    if (!(free_space_lifetime > 0.0) || !std::isfinite(free_space_lifetime))
        throw ConfigError("free_space_lifetime must be positive and finite");
}

double transverse_coherence_length(const CavityParams &params)
{
    params.validate();
    return 2.0 * params.emission_wavelength * std::sqrt(params.finesse * params.mode_order);
}

double finesse_from_reflectance(double intensity_reflectance)
{
    if (!(intensity_reflectance >= 0.0 && intensity_reflectance < 1.0))
        throw DomainError("intensity reflectance must lie in [0, 1)");
    return kPi * std::sqrt(intensity_reflectance) / (1.0 - intensity_reflectance);
}

double storage_time(const CavityParams &params)
{
    // f = 0 is allowed here (no storage), unlike validate().
    if (!(params.finesse >= 0.0) || !(params.emission_wavelength > 0.0) || params.mode_order < 1)
        throw ConfigError("invalid cavity parameters for storage_time");
    return params.finesse * params.cavity_length() / (kPi * kSpeedOfLight);
}

double cavity_output_factor(double amplitude_reflectance)
{
    const double r = amplitude_reflectance;
    if (!(r >= 0.0 && r < 1.0))
        throw DomainError("amplitude reflectance must lie in [0, 1)");
    return (1.0 + r) / std::sqrt((1.0 - r) * (1.0 + r));
}

namespace
{
template <class T>
void read_if_present(const nlohmann::json &doc, const char *key, T &out)
{
    auto it = doc.find(key);
    if (it == doc.end())
        return;
    try
    {
        out = it->get<T>();
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
}
} // namespace

CavityParams cavity_from_json(const nlohmann::json &doc)
{
    if (!doc.is_object())
        throw ConfigError("parameter document must be a JSON object");
    CavityParams p;
    read_if_present(doc, "emission_wavelength_m", p.emission_wavelength);
    if (auto it = doc.find("mode_order"); it != doc.end() && !it->is_number_integer())
        throw ConfigError("key 'mode_order': expected a positive integer");
    read_if_present(doc, "mode_order", p.mode_order);
    read_if_present(doc, "mirror_amplitude_reflectance", p.mirror_amplitude_reflectance);
    read_if_present(doc, "finesse", p.finesse);
    p.validate();
    return p;
}

EmitterParams emitter_from_json(const nlohmann::json &doc)
{
    if (!doc.is_object())
        throw ConfigError("parameter document must be a JSON object");
    EmitterParams e;
    read_if_present(doc, "free_space_lifetime_s", e.free_space_lifetime);
    e.validate();
    return e;
}

nlohmann::json to_json(const CavityParams &params)
{
    return {{"emission_wavelength_m", params.emission_wavelength},
            {"mode_order", params.mode_order},
            {"mirror_amplitude_reflectance", params.mirror_amplitude_reflectance},
            {"finesse", params.finesse}};
}

nlohmann::json to_json(const EmitterParams &params)
{
    return {{"free_space_lifetime_s", params.free_space_lifetime}};
}

} // namespace superrad
