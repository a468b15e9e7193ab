#include "bms/forward_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "bms/error.hpp"

namespace bms {

namespace {

constexpr std::uint64_t kTargetRole = 1;
constexpr std::uint64_t kReferenceRole = 2;

ScanLabel label_for(const Phantom& phantom) {
  ScanLabel label;
  label.phantom_id = phantom.id;
  for (const auto& s : phantom.scatterers) {
    if (!s.is_tumor) continue;
    label.tumor_present = true;
    label.tumor_center_m = s.center_m;
    if (s.radius_m > 0.0) label.tumor_diameter_mm = 2000.0 * s.radius_m;
    break;
  }
  return label;
}

void add_noise(Matrix<cplx>& m, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> normal(0.0, sigma / std::numbers::sqrt2);
  for (auto& z : m.data()) {
    const double re = normal(rng);
    const double im = normal(rng);
    z += cplx(re, im);
  }
}

// Accumulates amp * exp(-j 2 pi f tau) over the frequency axis into row.
void accumulate_echo(std::span<cplx> row, const FrequencyAxis& freq, double amp, double tau) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double cycles = freq.frequency_hz(k) * tau;
    const double frac = cycles - std::floor(cycles);
    row[k] += std::polar(amp, -2.0 * std::numbers::pi * frac);
  }
}

}  // namespace

void Phantom::validate(double scan_radius_m) const {
  if (!(background_speed_mps > 1e7 && background_speed_mps <= 3e8)) {
    throw ConfigError("background speed must lie in (1e7, 3e8] m/s");
  }
  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    const auto& s = scatterers[i];
    const std::string tag = "scatterer " + std::to_string(i);
    if (!std::isfinite(s.reflectivity)) throw ConfigError(tag + ": reflectivity must be finite");
    if (!std::isfinite(s.center_m.x) || !std::isfinite(s.center_m.y)) {
      throw ConfigError(tag + ": position must be finite");
    }
    if (!(s.radius_m >= 0.0) || !(s.radius_m < scan_radius_m)) {
      throw ConfigError(tag + ": radius must lie in [0, scan radius)");
    }
    if (!(std::hypot(s.center_m.x, s.center_m.y) < scan_radius_m)) {
      throw ConfigError(tag + ": position must be strictly inside the scan circle");
    }
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t hash_tag(const std::string& tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<Scatterer> expand_scatterer(const Scatterer& s) {
  if (s.radius_m == 0.0) return {s};
  std::vector<Scatterer> pts;
  pts.reserve(kRingSubPoints + 1);
  const double share = s.reflectivity / static_cast<double>(kRingSubPoints + 1);
  Scatterer c = s;
  c.radius_m = 0.0;
  c.reflectivity = share;
  pts.push_back(c);
  for (std::size_t k = 0; k < kRingSubPoints; ++k) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / kRingSubPoints;
    Scatterer p = c;
    p.center_m = {s.center_m.x + s.radius_m * std::cos(ang), s.center_m.y + s.radius_m * std::sin(ang)};
    pts.push_back(p);
  }
  return pts;
}

FrequencySweepScan simulate_scan(const Phantom& phantom, const ScanGeometry& geometry,
                                 const FrequencyAxis& freq, const SimulationConfig& cfg) {
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
    throw ConfigError("noise_sigma must be finite and >= 0");
  }
  if (!(cfg.spreading_exponent >= 0.0) || !std::isfinite(cfg.spreading_exponent)) {
    throw ConfigError("spreading_exponent must be finite and >= 0");
  }
  if (cfg.include_s21 && geometry.n_antennas() < 2) {
    throw ConfigError("S21 simulation needs at least 2 antennas");
  }
  phantom.validate(geometry.radius_m());

  std::vector<Scatterer> points;
  for (const auto& s : phantom.scatterers) {
    auto sub = expand_scatterer(s);
    points.insert(points.end(), sub.begin(), sub.end());
  }

  const std::size_t n_ant = geometry.n_antennas();
  const double v = phantom.background_speed_mps;
  const double p = cfg.spreading_exponent;
  std::vector<Point2> antennas(n_ant);
  for (std::size_t a = 0; a < n_ant; ++a) antennas[a] = geometry.antenna_position(a);

  Matrix<cplx> s11(n_ant, freq.n_points());
  for (std::size_t a = 0; a < n_ant; ++a) {
    auto row = s11.row(a);
    for (const auto& pt : points) {
      const double d = distance(antennas[a], pt.center_m);
      const double amp = pt.reflectivity / std::pow(std::max(d, kDistanceFloorM), p);
      accumulate_echo(row, freq, amp, 2.0 * d / v);
    }
  }

  std::mt19937_64 rng(cfg.rng_seed);
  add_noise(s11, cfg.noise_sigma, rng);

  ChannelMap channels;
  channels.emplace("S11", std::move(s11));

  if (cfg.include_s21) {
    Matrix<cplx> s21(n_ant, freq.n_points());
    for (std::size_t a = 0; a < n_ant; ++a) {
      const Point2 tx = antennas[a];
      const Point2 rx = antennas[(a + n_ant / 2) % n_ant];
      auto row = s21.row(a);
      for (const auto& pt : points) {
        const double dt = distance(tx, pt.center_m);
        const double dr = distance(rx, pt.center_m);
        const double spread = std::pow(std::max(dt, kDistanceFloorM), 0.5 * p) *
                              std::pow(std::max(dr, kDistanceFloorM), 0.5 * p);
        accumulate_echo(row, freq, pt.reflectivity / spread, (dt + dr) / v);
      }
    }
    add_noise(s21, cfg.noise_sigma, rng);
    channels.emplace("S21", std::move(s21));
  }

  return FrequencySweepScan(geometry, freq, std::move(channels), label_for(phantom));
}

ScanPair make_reference_pair(const Phantom& phantom_with_tumor, const ScanGeometry& geometry,
                             const FrequencyAxis& freq, const SimulationConfig& cfg) {
  std::size_t tumors = 0;
  Phantom healthy = phantom_with_tumor;
  healthy.scatterers.clear();
  for (const auto& s : phantom_with_tumor.scatterers) {
    if (s.is_tumor) {
      ++tumors;
    } else {
      healthy.scatterers.push_back(s);
    }
  }
  if (tumors != 1) {
    throw ConfigError("reference pair needs exactly one tumor scatterer, found " +
                      std::to_string(tumors));
  }
  SimulationConfig target_cfg = cfg;
  target_cfg.rng_seed = derive_seed(cfg.rng_seed, kTargetRole);
  SimulationConfig reference_cfg = cfg;
  reference_cfg.rng_seed = derive_seed(cfg.rng_seed, kReferenceRole);
  return ScanPair{simulate_scan(phantom_with_tumor, geometry, freq, target_cfg),
                  simulate_scan(healthy, geometry, freq, reference_cfg)};
}

}  // namespace bms
