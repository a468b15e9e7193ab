#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bms/scan_data.hpp"

namespace bms {

inline constexpr double kSpeedOfLight = 299792458.0;

struct Scatterer {
  Point2 center_m;
  double reflectivity = 1.0;
  double radius_m = 0.0;  // 0 = ideal point
  bool is_tumor = false;
};

struct Phantom {
  std::vector<Scatterer> scatterers;
  double background_speed_mps = kSpeedOfLight / 2.6457513110645907;  // c / sqrt(7)
  std::string id;

  // Checks speed range and that every scatterer sits strictly inside a scan
  // circle of the given radius. Throws ConfigError.
  void validate(double scan_radius_m) const;
};

struct SimulationConfig {
  double spreading_exponent = 2.0;
  double noise_sigma = 0.0;  // std of the complex noise sample per bin
  std::uint64_t rng_seed = 0;
  bool include_s21 = false;
};

inline constexpr double kDistanceFloorM = 1e-3;
inline constexpr std::size_t kRingSubPoints = 8;

// Deterministic sub-seed for a (seed, tag) pair (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);
// Stable 64-bit hash of a string tag (FNV-1a).
std::uint64_t hash_tag(const std::string& tag);

// Point sources that stand in for a scatterer: the center alone for radius 0,
// otherwise the center plus 8 equally spaced ring points, each carrying 1/9 of
// the reflectivity.
std::vector<Scatterer> expand_scatterer(const Scatterer& s);

// Single-bounce straight-path point-scatterer model:
//   S11(a, f) = sum_i rho_i / max(d, d_floor)^p * exp(-j 2 pi f 2 d / v) + noise.
// S21 (optional) pairs transmitter a with receiver (a + n/2) mod n.
FrequencySweepScan simulate_scan(const Phantom& phantom, const ScanGeometry& geometry,
                                 const FrequencyAxis& freq, const SimulationConfig& cfg);

struct ScanPair {
  FrequencySweepScan target;
  FrequencySweepScan reference;
};

// Target from the full phantom, reference from the phantom without its tumor.
// Noise streams are sub-seeded by role, so calibration does not cancel noise.
ScanPair make_reference_pair(const Phantom& phantom_with_tumor, const ScanGeometry& geometry,
                             const FrequencyAxis& freq, const SimulationConfig& cfg);

}  // namespace bms
