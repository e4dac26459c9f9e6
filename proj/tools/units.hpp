#pragma once

#include <cmath>

// Conversions between per-period quantities used by the library and the
// annualized quantities shown on the command line.
namespace qbcli {

inline constexpr double kDefaultPeriodsPerYear = 253.0;

inline double snr_to_period(double annual, double ppy) { return annual / std::sqrt(ppy); }
inline double snr_to_annual(double period, double ppy) { return period * std::sqrt(ppy); }
inline double snr_sq_to_annual(double period, double ppy) { return period * ppy; }
inline double years_to_periods(double years, double ppy) { return years * ppy; }
inline double periods_to_years(double periods, double ppy) { return periods / ppy; }

}  // namespace qbcli
