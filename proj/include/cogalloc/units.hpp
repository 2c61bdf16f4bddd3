#pragma once

#include <cmath>

namespace cogalloc {

// Every dB quantity in the project goes through these two helpers.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

inline double dbm_to_watts(double dbm) { return db_to_linear(dbm) * 1e-3; }
inline double watts_to_dbm(double watts) { return linear_to_db(watts * 1e3); }

// Thermal noise power over a bandwidth for a given spectral density.
inline double noise_power_watts(double psd_dbm_per_hz, double bandwidth_hz) {
  return dbm_to_watts(psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz));
}

}  // namespace cogalloc
