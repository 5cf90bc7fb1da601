#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "superrad/correlation.hpp"
#include "superrad/decay_rate.hpp"
#include "superrad/errors.hpp"
#include "superrad/hbt.hpp"
#include "superrad/io.hpp"
#include "superrad/params.hpp"
#include "superrad/partition.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace superrad::cli
{
namespace
{
std::string iso_timestamp()
{
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH"))
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_output(const fs::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write output file " + path.string());
    out.precision(17);
    return out;
}

std::vector<double> number_list(const json &config, const char *key)
{
    const json &v = config.at(key);
    std::vector<double> out;
    if (v.is_number())
    {
        out.push_back(v.get<double>());
        return out;
    }
    if (!v.is_array() || v.empty())
        throw ConfigError(std::string("key '") + key + "' must be a number or a non-empty array");
    for (const auto &e : v)
    {
        if (!e.is_number())
            throw ConfigError(std::string("key '") + key + "' must contain numbers only");
        out.push_back(e.get<double>());
    }
    return out;
}

// Numbers are seconds; "steady" or "inf" select t -> infinity.
std::vector<double> time_list(const json &config)
{
    const json &v = config.at("t_grid_s");
    const json arr = v.is_array() ? v : json::array({v});
    if (arr.empty())
        throw ConfigError("key 't_grid_s' must not be empty");
    std::vector<double> out;
    for (const auto &e : arr)
    {
        if (e.is_number())
            out.push_back(e.get<double>());
        else if (e.is_string() && (e == "steady" || e == "inf"))
            out.push_back(kSteadyState);
        else
            throw ConfigError("key 't_grid_s' entries must be numbers or \"steady\"");
    }
    return out;
}

double number(const json &config, const char *key)
{
    const json &v = config.at(key);
    if (!v.is_number())
        throw ConfigError(std::string("key '") + key + "' must be a number");
    return v.get<double>();
}

std::string string_value(const json &config, const char *key)
{
    const json &v = config.at(key);
    if (!v.is_string())
        throw ConfigError(std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
}

struct Physics
{
    CavityParams cavity;
    EmitterParams emitter;
    KernelNormalization norm;
    double coherence_length;
};

Physics physics(const json &config)
{
    Physics p{cavity_from_json(config), emitter_from_json(config),
              parse_normalization(string_value(config, "normalization")), 0.0};
    p.coherence_length = transverse_coherence_length(p.cavity);
    return p;
}

std::string quoted(const fs::path &p)
{
    return "'" + p.filename().string() + "'";
}

void write_manifest_json(const fs::path &path, const RunManifest &manifest, json body)
{
    body["manifest"] = manifest.to_json();
    auto out = open_output(path);
    out << body.dump(2) << '\n';
}

ExperimentConfig experiment_config(const json &config, double coherence_length,
                                   std::string_view configuration)
{
    json doc = config;
    doc["configuration"] = configuration;
    const double r_over_lc = number(config, "separation_over_lc");
    if (!(r_over_lc >= 0.0))
        throw ConfigError("separation_over_lc must be non-negative");
    doc["separation_m"] = r_over_lc * coherence_length;
    return experiment_config_from_json(doc);
}

} // namespace

json RunManifest::to_json() const
{
    json ov = json::array();
    for (const auto &[k, v] : overrides)
        ov.push_back(k + "=" + v);
    return {{"command", command},   {"config_path", config_path}, {"overrides", ov},
            {"output_dir", output_dir}, {"seed", seed},           {"timestamp", timestamp}};
}

std::string RunManifest::comment_block() const
{
    std::ostringstream s;
    s << "# manifest\n";
    s << "# command: " << command << '\n';
    s << "# config_path: " << (config_path.empty() ? "(defaults)" : config_path) << '\n';
    s << "# overrides:";
    for (const auto &[k, v] : overrides)
        s << ' ' << k << '=' << v;
    s << '\n';
    s << "# output_dir: " << output_dir << '\n';
    s << "# seed: " << seed << '\n';
    s << "# timestamp: " << timestamp << '\n';
    return s.str();
}

json default_config()
{
    const CavityParams cavity;
    const EmitterParams emitter;
    const ExperimentConfig experiment;
    json c = to_json(cavity);
    c.update(to_json(emitter));
    c.update(json{
        {"normalization", "standard_half"},
        {"tolerance", kDefaultTolerance},
        {"r_over_lc_grid", {0.0, 0.1, 0.2, 0.33, 0.5, 0.75, 1.0, 1.5, 2.0, 2.9, 5.0, 7.2, 10.0}},
        {"t_grid_s", {"steady"}},
        {"separation_over_lc", 0.33},
        {"coincidences", 1e6},
        {"accidental_floor", 0.0},
        {"fit_window_s", nullptr},
        {"histogram_normalization", "peak"},
        {"configuration", "A"},
        {"pulse_pairs", experiment.pulse_pairs},
        {"detector_efficiency", experiment.detector_efficiency},
        {"accidental_coincidence_ratio", experiment.accidental_coincidence_ratio},
        {"tac_range_s", experiment.tac_range},
        {"mca_channels", experiment.mca_channels},
        {"rate_model", "overlap"},
        {"partition_model", "mixed"},
        {"photons_per_pulse", experiment.photons_per_pulse},
        {"threads", experiment.threads},
        {"seed", experiment.seed},
    });
    return c;
}

json load_config_file(const fs::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n');
        const auto last_nl = text.rfind('\n', offset == 0 ? 0 : offset - 1);
        const std::size_t column =
            last_nl == std::string::npos || offset == 0 ? offset + 1 : offset - last_nl;
        throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": JSON parse error: " + e.what());
    }
}

json merge_config(const json &user)
{
    json config = default_config();
    if (user.is_null())
        return config;
    if (!user.is_object())
        throw ConfigError("configuration must be a JSON object");
    for (const auto &[key, value] : user.items())
    {
        // separation_m is accepted as an explicit alternative to separation_over_lc.
        if (!config.contains(key) && key != "separation_m")
            throw ConfigError("unknown configuration key '" + key + "'");
        config[key] = value;
    }
    return config;
}

std::pair<std::string, json> parse_override(const std::string &assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not KEY=VALUE");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;
    return {key, value};
}

json cmd_params(const Invocation &inv, std::ostream &out)
{
    const Physics p = physics(inv.config);
    const double derived_finesse = finesse_from_reflectance(p.cavity.intensity_reflectance());
    json derived = {
        {"cavity_length_m", p.cavity.cavity_length()},
        {"intensity_reflectance", p.cavity.intensity_reflectance()},
        {"transverse_coherence_length_m", p.coherence_length},
        {"storage_time_s", storage_time(p.cavity)},
        {"finesse_configured", p.cavity.finesse},
        {"finesse_from_reflectance", derived_finesse},
        {"finesse_relative_difference", (derived_finesse - p.cavity.finesse) / p.cavity.finesse},
        {"cavity_output_factor", cavity_output_factor(p.cavity.mirror_amplitude_reflectance)},
        {"free_space_rate_s_inv", p.emitter.free_space_rate()},
        {"gamma_infinity_s_inv", gamma_infinity(p.cavity, p.emitter, kSteadyState, p.norm,
                                                number(inv.config, "tolerance"))},
    };
    json report = {{"manifest", inv.manifest.to_json()}, {"config", inv.config}, {"derived", derived}};
    out << report.dump(2) << '\n';
    if (!inv.output_dir.empty())
    {
        auto file = open_output(inv.output_dir / "params.json");
        file << report.dump(2) << '\n';
    }
    return report;
}

void cmd_gamma(const Invocation &inv, std::ostream &out)
{
    const Physics p = physics(inv.config);
    std::vector<double> separations = number_list(inv.config, "r_over_lc_grid");
    for (double &r : separations)
        r *= p.coherence_length;
    const std::vector<double> times = time_list(inv.config);
    const auto profile = decay_rate_profile(p.cavity, p.emitter, separations, times, p.norm,
                                            number(inv.config, "tolerance"));

    const fs::path csv = inv.output_dir / "gamma_profile.csv";
    {
        auto file = open_output(csv);
        write_csv(file, profile, inv.manifest.comment_block());
    }
    const fs::path script = inv.output_dir / "gamma_profile.gp";
    {
        auto file = open_output(script);
        file << inv.manifest.comment_block();
        file << "set datafile separator ','\n"
             << "set terminal pngcairo size 800,600\n"
             << "set output 'gamma_profile.png'\n"
             << "set xlabel 'R / l_c'\n"
             << "set ylabel 'Gamma(R) / Gamma_inf'\n"
             << "set key autotitle columnhead\n"
             << "plot " << quoted(csv) << " using 2:5 with linespoints title 'Gamma(R)/Gamma_inf ("
             << to_string(p.norm) << ")'\n";
    }
    out << "wrote " << csv.string() << " (" << profile.times.size() * profile.separations.size()
        << " rows, max truncation order " << profile.truncation_order << ")\n";
    out << "wrote " << script.string() << '\n';
}

void cmd_decay(const Invocation &inv, std::ostream &out)
{
    const Physics p = physics(inv.config);
    const std::vector<double> r_over_lc = number_list(inv.config, "separation_over_lc");
    json first = inv.config;
    first["separation_over_lc"] = r_over_lc.front();
    const ExperimentConfig base = experiment_config(first, p.coherence_length, "A");
    const HistogramLayout layout = base.layout();
    const double coincidences = number(inv.config, "coincidences");
    const double floor = number(inv.config, "accidental_floor");
    FitOptions fit_options;
    if (floor > 0.0)
        fit_options.accidental_floor = floor * coincidences;
    if (const json &w = inv.config.at("fit_window_s"); !w.is_null())
    {
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
            throw ConfigError("fit_window_s must be null or [tau_min, tau_max]");
        fit_options.window = FitWindow{w[0].get<double>(), w[1].get<double>()};
    }
    const Normalization norm_mode = [&] {
        const std::string m = string_value(inv.config, "histogram_normalization");
        if (m == "peak")
            return Normalization::peak;
        if (m == "area")
            return Normalization::area;
        throw ConfigError("histogram_normalization must be peak or area");
    }();

    json fits = json::array();
    std::ostringstream plot;
    plot << "plot ";
    for (std::size_t i = 0; i < r_over_lc.size(); ++i)
    {
        ExperimentConfig cfg = base;
        cfg.separation = r_over_lc[i] * p.coherence_length;
        const double rate = configured_decay_rate(cfg, p.cavity, p.emitter);
        // Each separation gets its own stream: seed + index.
        const auto hist = synthesize_histogram(rate, layout, coincidences, base.seed + i, floor);
        const FitResult fit = fit_gamma(hist, fit_options);

        const fs::path csv = inv.output_dir / ("decay_" + std::to_string(i) + ".csv");
        {
            auto file = open_output(csv);
            write_csv(file, hist, inv.manifest.comment_block());
        }
        json entry = to_json(fit);
        entry["separation_over_lc"] = r_over_lc[i];
        entry["model_gamma_s_inv"] = rate;
        entry["histogram_csv"] = csv.filename().string();
        entry["seed"] = base.seed + i;
        fits.push_back(entry);

        const double scale = [&] {
            const double total = static_cast<double>(
                norm_mode == Normalization::peak ? *std::max_element(hist.counts.begin(), hist.counts.end())
                                                 : hist.total_counts());
            return total > 0.0 ? total : 1.0;
        }();
        plot << (i ? ", \\\n     " : "") << quoted(csv) << " using 2:($3/" << format_number(scale)
             << ") with points title 'R/l_c = " << format_number(r_over_lc[i]) << "'"
             << ", exp(-" << format_number(fit.rate) << "*abs(x))"
             << (norm_mode == Normalization::peak ? "" : "*" + format_number(fit.rate * layout.bin_width / 2))
             << " with lines dt 2 notitle";
        out << "R/l_c = " << r_over_lc[i] << ": model Gamma = " << rate
            << " s^-1, fitted Gamma = " << fit.rate << " +/- " << fit.standard_error << " s^-1\n";
    }

    write_manifest_json(inv.output_dir / "decay_fit.json", inv.manifest,
                        {{"fits", fits}, {"normalization", string_value(inv.config, "histogram_normalization")}});
    auto file = open_output(inv.output_dir / "decay.gp");
    file << inv.manifest.comment_block();
    file << "set datafile separator ','\n"
         << "set terminal pngcairo size 800,600\n"
         << "set output 'decay.png'\n"
         << "set logscale y\n"
         << "set xlabel 'tau [s]'\n"
         << "set ylabel 'F(tau) (normalized)'\n"
         << plot.str() << '\n';
    out << "wrote " << (inv.output_dir / "decay_fit.json").string() << '\n';
}

void cmd_partition(const Invocation &inv, std::ostream &out)
{
    const Physics p = physics(inv.config);
    std::vector<double> separations = number_list(inv.config, "r_over_lc_grid");
    for (double &r : separations)
        r *= p.coherence_length;
    const auto curve = partition_curve(p.cavity, separations);

    const fs::path csv = inv.output_dir / "partition_curve.csv";
    {
        auto file = open_output(csv);
        write_csv(file, curve, inv.manifest.comment_block());
    }
    auto file = open_output(inv.output_dir / "partition_curve.gp");
    file << inv.manifest.comment_block();
    file << "set datafile separator ','\n"
         << "set terminal pngcairo size 800,600\n"
         << "set output 'partition_curve.png'\n"
         << "set logscale x\n"
         << "set yrange [0:1]\n"
         << "set xlabel 'R / l_c'\n"
         << "set ylabel 'conditioned probability'\n"
         << "set key autotitle columnhead\n"
         << "plot " << quoted(csv) << " using 1:2 with linespoints title 'P(2,0)', \\\n     "
         << quoted(csv) << " using 1:3 with linespoints title 'P(1,1)'\n";
    out << "wrote " << csv.string() << " (" << curve.size() << " rows)\n";
}

void cmd_simulate(const Invocation &inv, std::ostream &out)
{
    const Physics p = physics(inv.config);
    const std::string which = string_value(inv.config, "configuration");
    std::vector<std::string> configurations;
    if (which == "AB")
        configurations = {"A", "B"};
    else
        configurations = {which};

    json runs = json::array();
    std::vector<RunResult> results;
    for (std::size_t i = 0; i < configurations.size(); ++i)
    {
        ExperimentConfig cfg = experiment_config(inv.config, p.coherence_length, configurations[i]);
        if (inv.config.contains("separation_m"))
            cfg.separation = number(inv.config, "separation_m");
        cfg.seed += i; // B runs on seed + 1 in AB mode
        RunResult result = simulate_run(cfg, p.cavity, p.emitter);

        const std::string stem = configurations.size() == 1 ? "simulate" : "simulate_" + configurations[i];
        const fs::path csv = inv.output_dir / (stem + "_histogram.csv");
        {
            auto file = open_output(csv);
            write_csv(file, histogram_from_run(result), inv.manifest.comment_block());
        }
        json entry = to_json(result);
        entry["histogram_csv"] = csv.filename().string();
        try
        {
            FitOptions opts;
            opts.accidental_floor = estimated_accidental_floor(result);
            entry["fit"] = to_json(fit_gamma(histogram_from_run(result), opts));
        }
        catch (const FitError &e)
        {
            entry["fit"] = {{"error", e.what()}};
        }
        runs.push_back(entry);
        out << "configuration " << configurations[i] << ": " << result.starts << " starts, "
            << result.coincidences << " coincidences (" << result.accidental_coincidences
            << " accidental)\n";
        results.push_back(std::move(result));
    }

    json body = {{"runs", runs}};
    if (results.size() == 2)
    {
        const auto est = estimate_partition(results[0], results[1]);
        body["partition_estimate"] = {
            {"p20_cond", est.p20_cond}, {"p11_cond", est.p11_cond}, {"stderr", est.standard_error}};
        out << "estimated P(2,0) = " << est.p20_cond << ", P(1,1) = " << est.p11_cond << " +/- "
            << est.standard_error << '\n';
    }
    write_manifest_json(inv.output_dir / "run_result.json", inv.manifest, body);
    out << "wrote " << (inv.output_dir / "run_result.json").string() << '\n';
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Two-dipole superradiance in a planar microcavity: decay rates, "
                 "photon correlations, partition statistics and HBT Monte Carlo."};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--out", output_dir, "output directory");
        sub->add_option("--seed", seed, "random seed (overrides the 'seed' key)");
        sub->add_option("--set", overrides, "KEY=VALUE configuration override (repeatable)");
    };
    struct Command
    {
        const char *name;
        const char *help;
    };
    const Command commands[] = {
        {"params", "derived cavity quantities as JSON"},
        {"gamma", "cooperative decay-rate profile over (R, t) grids"},
        {"decay", "synthesize and fit coincidence histograms"},
        {"partition", "two-photon partition probabilities versus R / l_c"},
        {"simulate", "Monte Carlo HBT run in configuration A, B or AB"},
    };
    for (const auto &c : commands)
        add_common(app.add_subcommand(c.name, c.help));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try
    {
        json user = config_path.empty() ? json::object() : load_config_file(config_path);
        Invocation inv;
        inv.manifest.command = command;
        inv.manifest.config_path = config_path;
        for (const auto &o : overrides)
        {
            auto [key, value] = parse_override(o);
            user[key] = value;
            inv.manifest.overrides.emplace_back(key, value.is_string() ? value.get<std::string>() : value.dump());
        }
        if (seed)
            user["seed"] = *seed;
        inv.config = merge_config(user);
        if (!inv.config.at("seed").is_number_unsigned())
            throw ConfigError("seed must be a non-negative integer");
        inv.manifest.seed = inv.config.at("seed").get<std::uint64_t>();
        inv.manifest.timestamp = iso_timestamp();

        if (command != "params" || !output_dir.empty())
        {
            inv.output_dir = output_dir.empty() ? fs::path("out") : fs::path(output_dir);
            fs::create_directories(inv.output_dir);
        }
        inv.manifest.output_dir = inv.output_dir.string();

        if (command == "params")
            cmd_params(inv, out);
        else if (command == "gamma")
            cmd_gamma(inv, out);
        else if (command == "decay")
            cmd_decay(inv, out);
        else if (command == "partition")
            cmd_partition(inv, out);
        else
            cmd_simulate(inv, out);
        return kExitOk;
    }
    catch (const ConfigError &e)
    {
        err << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const LayoutError &e)
    {
        err << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const json::exception &e)
    {
        err << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const fs::filesystem_error &e)
    {
        err << "output error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const FitError &e)
    {
        err << "fit error: " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const std::exception &e)
    {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace superrad::cli
