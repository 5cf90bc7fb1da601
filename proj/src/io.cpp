#include "superrad/io.hpp"

#include <charconv>
#include <cmath>

namespace superrad
{
std::string format_number(double value)
{
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    if (std::isnan(value))
        return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream &out, const DecayRateProfile &profile, const std::string &preamble)
{
    out << preamble;
    out << "R_m,R_over_lc,t_s,gamma_s_inv,gamma_over_gamma_inf,truncation_order\n";
    for (std::size_t ti = 0; ti < profile.times.size(); ++ti)
    {
        const double single = profile.single_dipole_rates[ti];
        for (std::size_t ri = 0; ri < profile.separations.size(); ++ri)
        {
            const double rate = profile.rates[ti][ri];
            out << format_number(profile.separations[ri]) << ','
                << format_number(profile.separations[ri] / profile.coherence_length) << ','
                << format_number(profile.times[ti]) << ',' << format_number(rate) << ','
                << format_number(rate / single) << ',' << profile.truncation_orders[ti][ri] << '\n';
        }
    }
}

void write_csv(std::ostream &out, const CoincidenceHistogram &hist, const std::string &preamble)
{
    out << preamble;
    out << "channel,tau_s,counts\n";
    for (int i = 0; i < hist.channel_count(); ++i)
        out << i << ',' << format_number(hist.layout.tau_center(i)) << ','
            << hist.counts[static_cast<std::size_t>(i)] << '\n';
}

void write_csv(std::ostream &out, std::span<const PartitionCurvePoint> curve,
               const std::string &preamble)
{
    out << preamble;
    out << "R_over_lc,p20_cond,p11_cond,eta\n";
    for (const auto &p : curve)
        out << format_number(p.r_over_lc) << ',' << format_number(p.conditioned_p20) << ','
            << format_number(p.conditioned_p11) << ',' << format_number(p.eta) << '\n';
}

nlohmann::json to_json(const FitResult &fit)
{
    return {{"gamma_s_inv", fit.rate},
            {"stderr_s_inv", fit.standard_error},
            {"window_s", {fit.window.tau_min, fit.window.tau_max}},
            {"channels_used", fit.channels_used}};
}

} // namespace superrad
