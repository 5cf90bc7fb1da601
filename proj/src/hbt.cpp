#include "superrad/hbt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "superrad/errors.hpp"

namespace superrad
{
namespace
{
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Draw helpers defined on raw 64-bit output so the stream does not depend on
// the standard library's distribution implementations.
class PulseStream
{
public:
    explicit PulseStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; } // [0, 1)
    bool coin(double p) { return uniform() < p; }
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::mt19937_64 engine_;
};

enum class Detector
{
    none,
    start, // D1
    stop   // D2 in configuration A, D3 in configuration B
};

struct Tally
{
    explicit Tally(const HistogramLayout &layout) : histogram(layout) {}

    CoincidenceHistogram histogram;
    std::uint64_t starts = 0;
    std::uint64_t real = 0;
    std::uint64_t accidental = 0;
    std::uint64_t out_of_range = 0;
    std::uint64_t unmatched = 0;

    void merge(const Tally &o)
    {
        histogram += o.histogram;
        starts += o.starts;
        real += o.real;
        accidental += o.accidental;
        out_of_range += o.out_of_range;
        unmatched += o.unmatched;
    }
};

struct PulseModel
{
    HbtConfiguration configuration;
    int photons;
    double p20;
    double p20_or_p11;
    double efficiency;
    double accidental_ratio;
    double rate;
    HistogramLayout layout;
};

// Detector reached by a photon in mode k (in_k) or k'.
Detector route(const PulseModel &m, bool in_k, PulseStream &rng)
{
    if (m.configuration == HbtConfiguration::A_same_mode)
    {
        if (!in_k)
            return Detector::none;
        return rng.coin(0.5) ? Detector::start : Detector::stop;
    }
    return in_k ? Detector::start : Detector::stop;
}

void simulate_pulse(const PulseModel &m, PulseStream &rng, Tally &tally)
{
    bool in_k[2];
    if (m.photons == 2)
    {
        const double u = rng.uniform();
        const int in_k_count = u < m.p20 ? 2 : (u < m.p20_or_p11 ? 1 : 0);
        in_k[0] = in_k_count >= 1;
        in_k[1] = in_k_count == 2;
    }
    else
    {
        in_k[0] = rng.coin(0.5);
    }

    constexpr double kNever = std::numeric_limits<double>::infinity();
    double t_start = kNever;
    double t_stop = kNever;
    for (int i = 0; i < m.photons; ++i)
    {
        const Detector det = route(m, in_k[i], rng);
        if (det == Detector::none || !rng.coin(m.efficiency))
            continue;
        const double t = rng.exponential(m.rate);
        double &slot = det == Detector::start ? t_start : t_stop;
        slot = std::min(slot, t);
    }

    if (t_start == kNever)
        return;
    ++tally.starts;
    if (t_stop != kNever)
    {
        const int ch = m.layout.channel_of(t_stop - t_start);
        if (ch < 0)
        {
            ++tally.out_of_range;
            ++tally.unmatched;
            return;
        }
        ++tally.histogram.counts[static_cast<std::size_t>(ch)];
        ++tally.real;
        return;
    }
    if (m.accidental_ratio > 0.0 && rng.coin(m.accidental_ratio))
    {
        const int ch = static_cast<int>(rng.uniform() * m.layout.channel_count);
        ++tally.histogram.counts[static_cast<std::size_t>(std::min(ch, m.layout.channel_count - 1))];
        ++tally.accidental;
        return;
    }
    ++tally.unmatched;
}

void check_probability(double p, const char *name)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

} // namespace

void ExperimentConfig::validate() const
{
    if (pulse_pairs < 1)
        throw ConfigError("pulse_pairs must be >= 1");
    if (!(separation >= 0.0) || !std::isfinite(separation))
        throw ConfigError("separation must be non-negative and finite");
    check_probability(detector_efficiency, "detector_efficiency");
    check_probability(accidental_coincidence_ratio, "accidental_coincidence_ratio");
    if (accidental_coincidence_ratio >= 1.0)
        throw ConfigError("accidental_coincidence_ratio must be below 1");
    if (!(tac_range > 0.0) || !std::isfinite(tac_range))
        throw ConfigError("tac_range must be positive");
    if (mca_channels < 2)
        throw ConfigError("mca_channels must be >= 2");
    if (photons_per_pulse != 1 && photons_per_pulse != 2)
        throw ConfigError("photons_per_pulse must be 1 or 2");
    if (photons_per_pulse == 1 && partition_model != PartitionModel::mixed)
        throw ConfigError("a partition model cannot be selected for single-photon runs");
    if (threads < 1)
        throw ConfigError("threads must be >= 1");
}

std::uint64_t block_seed(std::uint64_t master_seed, std::uint64_t block_index)
{
    return splitmix64(master_seed + (block_index + 1) * kGolden);
}

double configured_decay_rate(const ExperimentConfig &config, const CavityParams &cavity,
                             const EmitterParams &emitter)
{
    const double rate =
        config.rate_model == RateModel::eq2
            ? gamma_eq2(cavity, emitter, config.separation, kSteadyState, config.normalization)
            : gamma_overlap(cavity, emitter, config.separation, config.normalization);
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw ModelError("rate model produced a non-positive decay rate");
    return rate;
}

PartitionProbabilities configured_partition(const ExperimentConfig &config,
                                            const CavityParams &cavity)
{
    switch (config.partition_model)
    {
    case PartitionModel::be:
        return bose_einstein();
    case PartitionModel::mb:
        return maxwell_boltzmann();
    case PartitionModel::mixed:
        break;
    }
    return mixed_partition(
        indistinguishability(config.separation, transverse_coherence_length(cavity)));
}

RunResult simulate_run(const ExperimentConfig &config, const CavityParams &cavity,
                       const EmitterParams &emitter)
{
    config.validate();
    cavity.validate();
    emitter.validate();

    RunResult result;
    result.config = config;
    result.histogram = CoincidenceHistogram(config.layout());
    result.decay_rate = configured_decay_rate(config, cavity, emitter);
    result.partition = configured_partition(config, cavity);
    result.pulse_pairs = config.pulse_pairs;

    const PulseModel model{config.configuration,
                           config.photons_per_pulse,
                           result.partition.p20,
                           result.partition.p20 + result.partition.p11,
                           config.detector_efficiency,
                           config.accidental_coincidence_ratio,
                           result.decay_rate,
                           config.layout()};

    const std::uint64_t blocks = (config.pulse_pairs + kPulseBlockSize - 1) / kPulseBlockSize;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(config.threads, blocks));
    std::vector<Tally> tallies(workers, Tally(model.layout));
    std::atomic<std::uint64_t> next{0};

    auto work = [&](Tally &tally) {
        for (std::uint64_t b = next++; b < blocks; b = next++)
        {
            PulseStream rng(block_seed(config.seed, b));
            const std::uint64_t first = b * kPulseBlockSize;
            const std::uint64_t last = std::min(config.pulse_pairs, first + kPulseBlockSize);
            for (std::uint64_t p = first; p < last; ++p)
                simulate_pulse(model, rng, tally);
        }
    };

    if (workers <= 1)
    {
        work(tallies.front());
    }
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work, std::ref(tallies[w]));
    }

    // Integer channel sums: the merge order does not affect the result.
    Tally total(model.layout);
    for (const auto &t : tallies)
        total.merge(t);

    result.histogram = std::move(total.histogram);
    result.histogram.total_starts = total.starts;
    result.starts = total.starts;
    result.real_coincidences = total.real;
    result.accidental_coincidences = total.accidental;
    result.coincidences = total.real + total.accidental;
    result.out_of_range = total.out_of_range;
    result.unmatched_starts = total.unmatched;

    if (config.photons_per_pulse == 2 && config.detector_efficiency > 0.0)
    {
        const auto m = measured_probability(result);
        if (config.configuration == HbtConfiguration::A_same_mode)
            result.estimated_p20 = m.value;
        else
            result.estimated_p11 = m.value;
        result.binomial_stderr = m.standard_error;
    }
    return result;
}

MeasuredProbability measured_probability(const RunResult &result)
{
    const auto &cfg = result.config;
    if (result.pulse_pairs == 0)
        throw ModelError("run has no pulse pairs");
    if (!(cfg.detector_efficiency > 0.0))
        throw ModelError("zero detector efficiency: probabilities are not measurable");
    const double p = cfg.accidental_coincidence_ratio;
    const double n = static_cast<double>(result.pulse_pairs);
    const double real = (static_cast<double>(result.coincidences) -
                         p * static_cast<double>(result.starts)) / (1.0 - p);
    const double q = real / n;
    const double q_clamped = std::clamp(q, 0.0, 1.0);
    const double splitter = cfg.configuration == HbtConfiguration::A_same_mode ? 2.0 : 1.0;
    const double scale = splitter / (cfg.detector_efficiency * cfg.detector_efficiency);
    return {scale * q, scale * std::sqrt(q_clamped * (1.0 - q_clamped) / n)};
}

double estimated_accidental_floor(const RunResult &result)
{
    const double p = result.config.accidental_coincidence_ratio;
    const double unmatched =
        static_cast<double>(result.starts) - static_cast<double>(result.coincidences);
    return std::max(0.0, p * unmatched / (1.0 - p)) / result.histogram.channel_count();
}

PartitionEstimate estimate_partition(const RunResult &result_a, const RunResult &result_b)
{
    const auto &a = result_a.config;
    const auto &b = result_b.config;
    if (a.configuration != HbtConfiguration::A_same_mode ||
        b.configuration != HbtConfiguration::B_opposite_modes)
        throw ConfigError("estimate_partition needs a configuration-A and a configuration-B run");
    if (a.detector_efficiency != b.detector_efficiency ||
        a.accidental_coincidence_ratio != b.accidental_coincidence_ratio ||
        a.separation != b.separation || a.photons_per_pulse != 2 || b.photons_per_pulse != 2)
        throw ConfigError("runs A and B must share physical parameters and efficiencies");
    if (result_a.coincidences == 0 || result_b.coincidences == 0)
        throw ModelError("zero coincidences in one of the runs");

    const auto ma = measured_probability(result_a);
    const auto mb = measured_probability(result_b);
    const double sum = ma.value + mb.value;
    if (!(sum > 0.0))
        throw ModelError("no real coincidences after accidental correction");
    PartitionEstimate est;
    est.p20_cond = ma.value / sum;
    est.p11_cond = mb.value / sum;
    est.standard_error = std::hypot(mb.value * ma.standard_error, ma.value * mb.standard_error) /
                         (sum * sum);
    return est;
}

const CoincidenceHistogram &histogram_from_run(const RunResult &result)
{
    return result.histogram;
}

HbtConfiguration parse_configuration(std::string_view name)
{
    if (name == "A" || name == "A_same_mode")
        return HbtConfiguration::A_same_mode;
    if (name == "B" || name == "B_opposite_modes")
        return HbtConfiguration::B_opposite_modes;
    throw ConfigError("unknown configuration '" + std::string(name) + "' (expected A or B)");
}

RateModel parse_rate_model(std::string_view name)
{
    if (name == "eq2")
        return RateModel::eq2;
    if (name == "overlap")
        return RateModel::overlap;
    throw ConfigError("unknown rate_model '" + std::string(name) + "' (expected eq2 or overlap)");
}

PartitionModel parse_partition_model(std::string_view name)
{
    if (name == "be")
        return PartitionModel::be;
    if (name == "mb")
        return PartitionModel::mb;
    if (name == "mixed")
        return PartitionModel::mixed;
    throw ConfigError("unknown partition_model '" + std::string(name) +
                      "' (expected be, mb or mixed)");
}

std::string_view to_string(HbtConfiguration c)
{
    return c == HbtConfiguration::A_same_mode ? "A" : "B";
}

std::string_view to_string(RateModel m)
{
    return m == RateModel::eq2 ? "eq2" : "overlap";
}

std::string_view to_string(PartitionModel m)
{
    switch (m)
    {
    case PartitionModel::be:
        return "be";
    case PartitionModel::mb:
        return "mb";
    case PartitionModel::mixed:
        break;
    }
    return "mixed";
}

namespace
{
template <class T>
void read_key(const nlohmann::json &doc, const char *key, T &out)
{
    auto it = doc.find(key);
    if (it == doc.end())
        return;
    if constexpr (std::is_integral_v<T>)
    {
        // Accept 1e6-style floats as long as they are whole and non-negative.
        if (!it->is_number())
            throw ConfigError(std::string("key '") + key + "': expected a number");
        const double v = it->get<double>();
        if (v < 0.0 || v != std::floor(v))
            throw ConfigError(std::string("key '") + key + "': expected a non-negative integer");
        out = static_cast<T>(v);
        return;
    }
    try
    {
        out = it->get<T>();
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
}

std::string read_string(const nlohmann::json &doc, const char *key, std::string_view fallback)
{
    std::string out(fallback);
    read_key(doc, key, out);
    return out;
}
} // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json &doc)
{
    if (!doc.is_object())
        throw ConfigError("experiment configuration must be a JSON object");
    ExperimentConfig c;
    c.configuration = parse_configuration(read_string(doc, "configuration", to_string(c.configuration)));
    read_key(doc, "pulse_pairs", c.pulse_pairs);
    read_key(doc, "separation_m", c.separation);
    read_key(doc, "detector_efficiency", c.detector_efficiency);
    read_key(doc, "accidental_coincidence_ratio", c.accidental_coincidence_ratio);
    read_key(doc, "tac_range_s", c.tac_range);
    read_key(doc, "mca_channels", c.mca_channels);
    read_key(doc, "seed", c.seed);
    c.rate_model = parse_rate_model(read_string(doc, "rate_model", to_string(c.rate_model)));
    c.partition_model =
        parse_partition_model(read_string(doc, "partition_model", to_string(c.partition_model)));
    c.normalization = parse_normalization(read_string(doc, "normalization", to_string(c.normalization)));
    read_key(doc, "photons_per_pulse", c.photons_per_pulse);
    read_key(doc, "threads", c.threads);
    c.validate();
    return c;
}

nlohmann::json to_json(const ExperimentConfig &c)
{
    return {{"configuration", to_string(c.configuration)},
            {"pulse_pairs", c.pulse_pairs},
            {"separation_m", c.separation},
            {"detector_efficiency", c.detector_efficiency},
            {"accidental_coincidence_ratio", c.accidental_coincidence_ratio},
            {"tac_range_s", c.tac_range},
            {"mca_channels", c.mca_channels},
            {"seed", c.seed},
            {"rate_model", to_string(c.rate_model)},
            {"partition_model", to_string(c.partition_model)},
            {"normalization", to_string(c.normalization)},
            {"photons_per_pulse", c.photons_per_pulse},
            {"threads", c.threads}};
}

nlohmann::json to_json(const RunResult &r)
{
    auto optional_value = [](const std::optional<double> &v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"config", to_json(r.config)},
            {"seed", r.config.seed},
            {"decay_rate_s_inv", r.decay_rate},
            {"partition_model_probabilities",
             {{"p20", r.partition.p20},
              {"p11", r.partition.p11},
              {"p02", r.partition.p02},
              {"p20_cond", r.partition.conditioned_p20},
              {"p11_cond", r.partition.conditioned_p11}}},
            {"counts",
             {{"pulse_pairs", r.pulse_pairs},
              {"starts", r.starts},
              {"coincidences", r.coincidences},
              {"real_coincidences", r.real_coincidences},
              {"accidental_coincidences", r.accidental_coincidences},
              {"out_of_range", r.out_of_range},
              {"unmatched_starts", r.unmatched_starts}}},
            {"estimates",
             {{"p20", optional_value(r.estimated_p20)},
              {"p11", optional_value(r.estimated_p11)},
              {"binomial_stderr", r.binomial_stderr}}}};
}

} // namespace superrad
