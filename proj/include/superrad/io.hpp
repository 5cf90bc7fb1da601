#ifndef SUPERRAD_IO_HPP
#define SUPERRAD_IO_HPP

#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "superrad/correlation.hpp"
#include "superrad/decay_rate.hpp"
#include "superrad/partition.hpp"

namespace superrad
{
// CSV writers. `preamble` is emitted verbatim before the header row; every
// line of it must start with '#'.

// Columns: R_m, R_over_lc, t_s, gamma_s_inv, gamma_over_gamma_inf, truncation_order.
// Steady-state rows carry t_s = inf.
void write_csv(std::ostream &out, const DecayRateProfile &profile, const std::string &preamble = {});

// Columns: channel, tau_s (channel center), counts.
void write_csv(std::ostream &out, const CoincidenceHistogram &hist, const std::string &preamble = {});

// Columns: R_over_lc, p20_cond, p11_cond, eta.
void write_csv(std::ostream &out, std::span<const PartitionCurvePoint> curve,
               const std::string &preamble = {});

// {gamma_s_inv, stderr_s_inv, window_s: [min, max], channels_used}
nlohmann::json to_json(const FitResult &fit);

// Shortest round-trip decimal form, "inf" for +infinity.
std::string format_number(double value);

} // namespace superrad

#endif // SUPERRAD_IO_HPP
