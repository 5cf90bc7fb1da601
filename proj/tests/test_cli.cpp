#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace superrad::cli;

namespace
{
struct Outcome
{
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "superrad-cli");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / ("superrad_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Data rows of a CSV: comment lines and the header row are skipped.
std::vector<std::vector<std::string>> rows(const fs::path &p)
{
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<std::string>> out;
    bool header = true;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#')
            continue;
        if (header)
        {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        out.push_back(cells);
    }
    return out;
}

void write(const fs::path &p, const std::string &text)
{
    std::ofstream(p) << text;
}
} // namespace

TEST_CASE("params reports the default coherence length")
{
    const auto r = invoke({"params"});
    REQUIRE(r.code == kExitOk);
    const auto report = json::parse(r.out);
    CHECK(report["derived"]["transverse_coherence_length_m"].get<double>() ==
          doctest::Approx(76.68e-6).epsilon(1e-4));
    CHECK(report["derived"]["storage_time_s"].get<double>() == doctest::Approx(1.1149e-12).epsilon(1e-3));
    CHECK(report["manifest"]["command"] == "params");
}

TEST_CASE("config loading: missing file, parse errors, defaults, unknown keys")
{
    const fs::path dir = scratch("config");

    auto r = invoke({"params", "--config", (dir / "nope.json").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("nope.json") != std::string::npos);

    write(dir / "broken.json", "{\n  \"finesse\": 3000,\n  oops\n}\n");
    r = invoke({"params", "--config", (dir / "broken.json").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("broken.json:3:") != std::string::npos);

    write(dir / "partial.json", R"({"finesse": 1000})");
    r = invoke({"params", "--config", (dir / "partial.json").string()});
    REQUIRE(r.code == kExitOk);
    const auto report = json::parse(r.out);
    CHECK(report["config"]["finesse"] == 1000);
    CHECK(report["config"]["emission_wavelength_m"] == 700e-9);
    CHECK(report["config"]["mode_order"] == 1);
    const json defaults = default_config();
    for (const auto &[key, value] : defaults.items())
        CHECK(report["config"].contains(key));
    CHECK(report["derived"]["transverse_coherence_length_m"].get<double>() ==
          doctest::Approx(2 * 700e-9 * std::sqrt(1000.0)));

    write(dir / "unknown.json", R"({"finess": 3000})");
    r = invoke({"params", "--config", (dir / "unknown.json").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("finess") != std::string::npos);

    CHECK(invoke({"params", "--set", "mode_order=1.5"}).code == kExitUsage);
    CHECK(invoke({"params", "--set", "finesse"}).code == kExitUsage);
    CHECK(invoke({"bogus"}).code == kExitUsage);
    CHECK(invoke({}).code == kExitUsage);
}

TEST_CASE("override parsing")
{
    auto [k, v] = parse_override("finesse=2500");
    CHECK(k == "finesse");
    CHECK(v == 2500);
    auto [k2, v2] = parse_override("configuration=AB");
    CHECK(v2 == "AB");
    auto [k3, v3] = parse_override("r_over_lc_grid=[0,1]");
    CHECK(v3.size() == 2);
}

TEST_CASE("gamma: resonant doubling, no-mirror column and normalization relation")
{
    const fs::path dir = scratch("gamma");
    auto r = invoke({"gamma", "--out", dir.string(), "--set", "r_over_lc_grid=[0]"});
    REQUIRE(r.code == kExitOk);
    auto data = rows(dir / "gamma_profile.csv");
    REQUIRE(data.size() == 1);
    CHECK(std::stod(data[0][4]) == doctest::Approx(2.0).epsilon(1e-9));
    const std::string csv = slurp(dir / "gamma_profile.csv");
    CHECK(csv.rfind("# manifest\n", 0) == 0);
    CHECK(csv.find("R_m,R_over_lc,t_s,gamma_s_inv,gamma_over_gamma_inf,truncation_order") != std::string::npos);
    CHECK(slurp(dir / "gamma_profile.gp").find("gamma_profile.csv") != std::string::npos);

    r = invoke({"gamma", "--out", dir.string(), "--set", "mirror_amplitude_reflectance=0"});
    REQUIRE(r.code == kExitOk);
    const double gamma = 0.5 / 2e-9;
    for (const auto &row : rows(dir / "gamma_profile.csv"))
    {
        const double kr = 2 * M_PI / 700e-9 * std::stod(row[0]);
        const double envelope = kr > 0 ? 1.5 / kr * (1 + 1 / kr + 1 / (kr * kr)) : 1.0;
        CHECK(std::abs(std::stod(row[3]) / gamma - 1.0) <= envelope);
    }

    // Gamma/gamma - 1 is linear in the kernel prefactor c_n.
    const fs::path half = dir / "half";
    const fs::path verb = dir / "verbatim";
    REQUIRE(invoke({"gamma", "--out", half.string()}).code == kExitOk);
    REQUIRE(invoke({"gamma", "--out", verb.string(), "--set", "normalization=verbatim"}).code == kExitOk);
    const auto h = rows(half / "gamma_profile.csv");
    const auto v = rows(verb / "gamma_profile.csv");
    REQUIRE(h.size() == v.size());
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(std::stod(v[i][3]) / gamma - 1.0 ==
              doctest::Approx(2.0 * (std::stod(h[i][3]) / gamma - 1.0)).epsilon(1e-8));

    CHECK(invoke({"gamma", "--out", dir.string(), "--set", "r_over_lc_grid=[]"}).code != kExitOk);
    CHECK(invoke({"gamma", "--out", dir.string(), "--set", "normalization=third"}).code == kExitUsage);
}

TEST_CASE("decay: ordered slopes, reproducibility, tiny N")
{
    const fs::path dir = scratch("decay");
    auto r = invoke({"decay", "--out", dir.string(), "--set", "separation_over_lc=[0.33,2.9,7.2]"});
    REQUIRE(r.code == kExitOk);
    const auto fits = json::parse(slurp(dir / "decay_fit.json"));
    REQUIRE(fits["fits"].size() == 3);
    const double g0 = fits["fits"][0]["gamma_s_inv"];
    const double g1 = fits["fits"][1]["gamma_s_inv"];
    const double g2 = fits["fits"][2]["gamma_s_inv"];
    CHECK(g0 > g1);
    CHECK(g1 > g2);
    CHECK(fits["manifest"]["command"] == "decay");
    for (int i = 0; i < 3; ++i)
        CHECK(fs::exists(dir / ("decay_" + std::to_string(i) + ".csv")));
    const std::string plot = slurp(dir / "decay.gp");
    CHECK(plot.find("set logscale y") != std::string::npos);
    CHECK(plot.find("decay_2.csv") != std::string::npos);

    const fs::path again = dir / "again";
    REQUIRE(invoke({"decay", "--out", again.string(), "--set", "separation_over_lc=[0.33,2.9,7.2]"}).code == kExitOk);
    for (int i = 0; i < 3; ++i)
    {
        const auto name = "decay_" + std::to_string(i) + ".csv";
        CHECK(rows(dir / name) == rows(again / name));
    }
    const auto fits2 = json::parse(slurp(again / "decay_fit.json"));
    CHECK(fits2["fits"] == fits["fits"]);

    const fs::path other = dir / "other";
    REQUIRE(invoke({"decay", "--out", other.string(), "--seed", "5"}).code == kExitOk);
    CHECK(rows(other / "decay_0.csv") != rows(dir / "decay_0.csv"));

    r = invoke({"decay", "--out", dir.string(), "--set", "coincidences=1e-3"});
    CHECK(r.code == kExitNumerical);
    CHECK(r.err.find("fit error") != std::string::npos);
}

TEST_CASE("partition: endpoints, monotone columns, single point")
{
    const fs::path dir = scratch("partition");
    REQUIRE(invoke({"partition", "--out", dir.string(), "--set", "r_over_lc_grid=[0,0.5,1,2,10]"}).code == kExitOk);
    const auto data = rows(dir / "partition_curve.csv");
    REQUIRE(data.size() == 5);
    CHECK(std::stod(data[0][1]) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::stod(data[0][2]) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::stod(data[4][1]) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(std::stod(data[4][2]) == doctest::Approx(2.0 / 3).epsilon(1e-12));
    for (std::size_t i = 1; i < data.size(); ++i)
    {
        CHECK(std::stod(data[i][1]) <= std::stod(data[i - 1][1]));
        CHECK(std::stod(data[i][2]) >= std::stod(data[i - 1][2]));
    }
    CHECK(slurp(dir / "partition_curve.csv").rfind("# manifest", 0) == 0);

    REQUIRE(invoke({"partition", "--out", dir.string(), "--set", "r_over_lc_grid=[1]"}).code == kExitOk);
    CHECK(rows(dir / "partition_curve.csv").size() == 1);
}

TEST_CASE("simulate AB writes both histograms and a partition estimate")
{
    const fs::path dir = scratch("simulate");
    const auto r = invoke({"simulate", "--out", dir.string(), "--set", "configuration=AB", "--set",
                           "pulse_pairs=400000", "--set", "separation_over_lc=0", "--set", "threads=2"});
    REQUIRE(r.code == kExitOk);
    const auto result = json::parse(slurp(dir / "run_result.json"));
    REQUIRE(result["runs"].size() == 2);
    CHECK(result["runs"][1]["config"]["seed"] == 2);
    const double p20 = result["partition_estimate"]["p20_cond"];
    const double se = result["partition_estimate"]["stderr"];
    CHECK(std::abs(p20 - 0.5) < 4 * se);
    CHECK(fs::exists(dir / "simulate_A_histogram.csv"));
    CHECK(fs::exists(dir / "simulate_B_histogram.csv"));
    CHECK(slurp(dir / "simulate_A_histogram.csv").find("# seed: 1") != std::string::npos);
    CHECK(result["manifest"]["overrides"].size() == 4);

    CHECK(invoke({"simulate", "--out", dir.string(), "--set", "configuration=C"}).code == kExitUsage);
    CHECK(invoke({"simulate", "--out", dir.string(), "--set", "detector_efficiency=2"}).code == kExitUsage);
}

TEST_CASE("the installed binary honours the exit-code contract")
{
    const std::string bin = SUPERRAD_CLI_PATH;
    CHECK(std::system((bin + " params > /dev/null").c_str()) == 0);
    const int missing = std::system((bin + " params --config /nonexistent.json 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(missing) == kExitUsage);
}
