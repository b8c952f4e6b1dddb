#pragma once

#include <cmath>

namespace vrqoe {

// All channel math runs in linear units; dB/dBm appear only at the
// configuration boundary. Conversions live here so they cannot drift.

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace vrqoe
