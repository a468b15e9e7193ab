#pragma once

#include <atomic>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "bms/forward_sim.hpp"
#include "bms/scan_data.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bms_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline bms::Matrix<bms::cplx> random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> g;
  bms::Matrix<bms::cplx> m(rows, cols);
  for (auto& v : m.data()) v = {g(rng), g(rng)};
  return m;
}

// Random scan with random dimensions, channels and label.
inline bms::FrequencySweepScan random_scan(std::mt19937_64& rng, std::size_t max_antennas = 12,
                                           std::size_t max_points = 40) {
  std::uniform_int_distribution<std::size_t> na(2, max_antennas), nf(2, max_points);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = na(rng), f = nf(rng);
  auto geometry = bms::ScanGeometry::evenly_spaced(n, 0.05 + 0.2 * u(rng), 10.0 + 350.0 * u(rng));
  bms::FrequencyAxis freq(1e8 + 1e9 * u(rng), 2e9 + 8e9 * u(rng), f);
  bms::ChannelMap ch;
  ch["S11"] = random_matrix(rng, n, f);
  if (u(rng) < 0.5) ch["S21"] = random_matrix(rng, n, f);
  bms::ScanLabel label;
  label.phantom_id = "p" + std::to_string(rng() % 1000);
  if (u(rng) < 0.5) {
    label.tumor_present = true;
    label.tumor_diameter_mm = 10.0 + 5.0 * static_cast<double>(rng() % 5);
    label.tumor_center_m = bms::Point2{0.1 * (u(rng) - 0.5), 0.1 * (u(rng) - 0.5)};
  }
  return {geometry, freq, std::move(ch), label};
}

inline double max_abs_diff(const bms::Matrix<bms::cplx>& a, const bms::Matrix<bms::cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace testing
