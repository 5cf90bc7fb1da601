#ifndef SUPERRAD_HBT_HPP
#define SUPERRAD_HBT_HPP

#include <cstdint>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "superrad/correlation.hpp"
#include "superrad/decay_rate.hpp"
#include "superrad/params.hpp"
#include "superrad/partition.hpp"

namespace superrad
{
// A: D1 (start) and D2 (stop) share output mode k through a balanced splitter.
// B: D1 (start) watches mode k, D3 (stop) watches mode k'.
enum class HbtConfiguration
{
    A_same_mode,
    B_opposite_modes
};

enum class RateModel
{
    eq2,
    overlap
};

enum class PartitionModel
{
    be,
    mb,
    mixed
};

struct ExperimentConfig
{
    HbtConfiguration configuration = HbtConfiguration::A_same_mode;
    std::uint64_t pulse_pairs = 1'000'000;
    double separation = 25e-6;                 // R [m]
    double detector_efficiency = 0.70;
    double accidental_coincidence_ratio = 1e-3; // accidental stops per start without a real stop
    double tac_range = 50e-9;                  // full scale [s], tau = 0 at the central channel
    int mca_channels = 2048;
    std::uint64_t seed = 1;
    RateModel rate_model = RateModel::overlap;
    PartitionModel partition_model = PartitionModel::mixed;
    KernelNormalization normalization = KernelNormalization::standard_half;
    int photons_per_pulse = 2;                 // 1: single-photon (accidental-only) validation run
    unsigned threads = 1;

    void validate() const; // throws ConfigError
    HistogramLayout layout() const { return HistogramLayout::centered(mca_channels, tac_range); }
};

struct RunResult
{
    ExperimentConfig config;
    CoincidenceHistogram histogram;
    double decay_rate = 0.0;            // Gamma(R) used for emission times [s^-1]
    PartitionProbabilities partition;   // model the photons were drawn from
    std::uint64_t pulse_pairs = 0;
    std::uint64_t starts = 0;
    std::uint64_t coincidences = 0;     // recorded in the MCA (real + accidental)
    std::uint64_t real_coincidences = 0;
    std::uint64_t accidental_coincidences = 0;
    std::uint64_t out_of_range = 0;     // real stops falling outside the TAC range
    std::uint64_t unmatched_starts = 0; // starts with no recorded stop
    // Configuration A measures p20, configuration B measures p11.
    std::optional<double> estimated_p20;
    std::optional<double> estimated_p11;
    double binomial_stderr = 0.0;
};

/// Decay rate implied by the config's rate model at its separation.
double configured_decay_rate(const ExperimentConfig &config, const CavityParams &cavity,
                             const EmitterParams &emitter);

/// Partition law implied by the config's partition model at its separation.
PartitionProbabilities configured_partition(const ExperimentConfig &config,
                                            const CavityParams &cavity);

/// Event-level Monte Carlo of one HBT run. Pulse pairs are processed in
/// fixed blocks of kPulseBlockSize, each with its own generator seeded by
/// block_seed(seed, block), so the result does not depend on config.threads.
RunResult simulate_run(const ExperimentConfig &config, const CavityParams &cavity,
                       const EmitterParams &emitter);

inline constexpr std::uint64_t kPulseBlockSize = 65536;
std::uint64_t block_seed(std::uint64_t master_seed, std::uint64_t block_index);

struct MeasuredProbability
{
    double value = 0.0;
    double standard_error = 0.0;
};

/// Accidental-corrected, efficiency- and splitter-corrected raw probability
/// measured by a run: p20 for configuration A, p11 for configuration B.
MeasuredProbability measured_probability(const RunResult &result);

/// Expected accidental counts per channel inferred from the run's counts.
double estimated_accidental_floor(const RunResult &result);

struct PartitionEstimate
{
    double p20_cond = 0.0;
    double p11_cond = 0.0;
    double standard_error = 0.0; // shared by both conditioned values
};

/// Combines a configuration-A and a configuration-B run into the conditioned pair.
PartitionEstimate estimate_partition(const RunResult &result_a, const RunResult &result_b);

const CoincidenceHistogram &histogram_from_run(const RunResult &result);

HbtConfiguration parse_configuration(std::string_view name);
RateModel parse_rate_model(std::string_view name);
PartitionModel parse_partition_model(std::string_view name);
std::string_view to_string(HbtConfiguration c);
std::string_view to_string(RateModel m);
std::string_view to_string(PartitionModel m);

// Keys: configuration, pulse_pairs, separation_m, detector_efficiency,
// accidental_coincidence_ratio, tac_range_s, mca_channels, seed, rate_model,
// partition_model, normalization, photons_per_pulse, threads.
ExperimentConfig experiment_config_from_json(const nlohmann::json &doc);
nlohmann::json to_json(const ExperimentConfig &config);
nlohmann::json to_json(const RunResult &result);

} // namespace superrad

#endif // SUPERRAD_HBT_HPP
