#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bms/matrix.hpp"

namespace bms {

using cplx = std::complex<double>;

inline constexpr std::size_t kDefaultAntennaCount = 72;
inline constexpr double kDefaultRotationSpanDeg = 355.0;
inline constexpr std::size_t kDefaultFrequencyCount = 1001;

// Antenna azimuths on a circular scan trajectory centred at the origin.
class ScanGeometry {
 public:
  // Angles must be strictly increasing and lie in [0, rotation_span_deg].
  ScanGeometry(std::vector<double> angles_deg, double radius_m,
               double rotation_span_deg = kDefaultRotationSpanDeg);

  // angles_deg[k] = span * k / (n - 1).
  static ScanGeometry evenly_spaced(std::size_t n_antennas, double radius_m,
                                    double rotation_span_deg = kDefaultRotationSpanDeg);

  std::size_t n_antennas() const { return angles_deg_.size(); }
  std::span<const double> angles_deg() const { return angles_deg_; }
  double radius_m() const { return radius_m_; }
  double rotation_span_deg() const { return rotation_span_deg_; }

  Point2 antenna_position(std::size_t k) const;

  friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;

 private:
  std::vector<double> angles_deg_;
  double radius_m_;
  double rotation_span_deg_;
};

// Uniform stepped-frequency axis.
class FrequencyAxis {
 public:
  FrequencyAxis(double f_start_hz, double f_stop_hz,
                std::size_t n_points = kDefaultFrequencyCount);

  double f_start_hz() const { return f_start_hz_; }
  double f_stop_hz() const { return f_stop_hz_; }
  std::size_t n_points() const { return n_points_; }
  double step_hz() const { return (f_stop_hz_ - f_start_hz_) / static_cast<double>(n_points_ - 1); }
  double bandwidth_hz() const { return f_stop_hz_ - f_start_hz_; }
  double frequency_hz(std::size_t k) const {
    return f_start_hz_ + static_cast<double>(k) * step_hz();
  }

  friend bool operator==(const FrequencyAxis&, const FrequencyAxis&) = default;

 private:
  double f_start_hz_;
  double f_stop_hz_;
  std::size_t n_points_;
};

struct ScanLabel {
  bool tumor_present = false;
  std::optional<double> tumor_diameter_mm;
  std::optional<Point2> tumor_center_m;
  std::string phantom_id;

  // Throws ConfigError when a tumor-free label carries tumor fields.
  void validate() const;

  friend bool operator==(const ScanLabel&, const ScanLabel&) = default;
};

using ChannelMap = std::map<std::string, Matrix<cplx>>;

bool is_known_channel(const std::string& name);

// One multistatic stepped-frequency scan. Immutable after construction.
class FrequencySweepScan {
 public:
  // Requires an "S11" channel; every channel must be n_antennas x n_points.
  FrequencySweepScan(ScanGeometry geometry, FrequencyAxis freq, ChannelMap channels,
                     ScanLabel label);

  const ScanGeometry& geometry() const { return geometry_; }
  const FrequencyAxis& freq() const { return freq_; }
  const ChannelMap& channels() const { return channels_; }
  const ScanLabel& label() const { return label_; }

  bool has_channel(const std::string& name) const { return channels_.contains(name); }
  // Throws FormatError for an absent channel.
  const Matrix<cplx>& channel(const std::string& name) const;

  friend bool operator==(const FrequencySweepScan&, const FrequencySweepScan&) = default;

 private:
  ScanGeometry geometry_;
  FrequencyAxis freq_;
  ChannelMap channels_;
  ScanLabel label_;
};

// Real time traces, one row per antenna. Sample n sits at t0_s + n * dt_s.
struct TimeDomainSignalSet {
  double dt_s = 0.0;
  double t0_s = 0.0;
  std::size_t pad_factor = 1;
  Matrix<double> traces;

  std::size_t n_antennas() const { return traces.rows(); }
  std::size_t n_samples() const { return traces.cols(); }
};

enum class SpectralWindow { rectangular, raised_cosine };

inline constexpr std::size_t kDefaultPadFactor = 4;

// Per-bin weights for the given window over n bins.
std::vector<double> spectral_window_weights(SpectralWindow window, std::size_t n);

// Accepts a stem or a path ending in .manifest / .blob.
std::filesystem::path scan_stem(const std::filesystem::path& path);

FrequencySweepScan load_scan(const std::filesystem::path& path);
void write_scan(const FrequencySweepScan& scan, const std::filesystem::path& path);

// Elementwise target - reference on every channel; label copied from target.
FrequencySweepScan calibrate(const FrequencySweepScan& target,
                             const FrequencySweepScan& reference);

// Windowed, zero-padded inverse DFT of one channel, real part kept. Bin k is
// placed at its physical frequency f_start + k*df, so an echo with delay tau
// peaks at t = tau with zero carrier phase.
TimeDomainSignalSet to_time_domain(const FrequencySweepScan& scan, const std::string& channel,
                                   SpectralWindow window = SpectralWindow::rectangular,
                                   std::size_t pad_factor = kDefaultPadFactor);

// Same transform before the real part is taken; rows are antennas.
Matrix<cplx> to_time_domain_complex(const Matrix<cplx>& spectra, const FrequencyAxis& freq,
                                    SpectralWindow window, std::size_t pad_factor);

}  // namespace bms
