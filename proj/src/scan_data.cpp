#include "bms/scan_data.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <system_error>

#include "bms/error.hpp"
#include "manifest.hpp"

namespace bms {

namespace {

constexpr int kFormatVersion = 1;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

// FFTW's planner is not reentrant; this switches it to its internal lock once.
void init_fftw_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { fftw_make_planner_thread_safe(); });
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

struct FftwBuffer {
  fftw_complex* data;
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

void check_same_shape(const FrequencySweepScan& a, const FrequencySweepScan& b) {
  if (!(a.geometry() == b.geometry())) {
    throw IncompatibleScanError("target and reference scan geometries differ");
  }
  if (!(a.freq() == b.freq())) {
    throw IncompatibleScanError("target and reference frequency axes differ");
  }
  if (a.channels().size() != b.channels().size()) {
    throw IncompatibleScanError("target and reference channel sets differ");
  }
  for (const auto& [name, m] : a.channels()) {
    if (!b.has_channel(name)) {
      throw IncompatibleScanError("reference scan lacks channel " + name);
    }
  }
}

}  // namespace

ScanGeometry::ScanGeometry(std::vector<double> angles_deg, double radius_m,
                           double rotation_span_deg)
    : angles_deg_(std::move(angles_deg)),
      radius_m_(radius_m),
      rotation_span_deg_(rotation_span_deg) {
  require_finite(radius_m_, "scan radius");
  require_finite(rotation_span_deg_, "rotation span");
  if (angles_deg_.empty()) throw ConfigError("scan geometry needs at least one antenna");
  if (!(radius_m_ > 0.0)) throw ConfigError("scan radius must be positive");
  if (!(rotation_span_deg_ >= 0.0) || rotation_span_deg_ > 360.0) {
    throw ConfigError("rotation span must lie in [0, 360] degrees");
  }
  for (std::size_t k = 0; k < angles_deg_.size(); ++k) {
    const double a = angles_deg_[k];
    if (!std::isfinite(a) || a < 0.0 || a > rotation_span_deg_) {
      throw ConfigError("antenna angle " + std::to_string(k) + " outside [0, rotation span]");
    }
    if (k > 0 && !(a > angles_deg_[k - 1])) {
      throw ConfigError("antenna angles must be strictly increasing");
    }
  }
}

ScanGeometry ScanGeometry::evenly_spaced(std::size_t n_antennas, double radius_m,
                                         double rotation_span_deg) {
  if (n_antennas == 0) throw ConfigError("scan geometry needs at least one antenna");
  std::vector<double> angles(n_antennas, 0.0);
  if (n_antennas > 1) {
    for (std::size_t k = 0; k < n_antennas; ++k) {
      angles[k] = rotation_span_deg * static_cast<double>(k) / static_cast<double>(n_antennas - 1);
    }
    angles.back() = rotation_span_deg;  // k/(n-1) can round past the span
  }
  return ScanGeometry(std::move(angles), radius_m, rotation_span_deg);
}

Point2 ScanGeometry::antenna_position(std::size_t k) const {
  const double rad = angles_deg_.at(k) * std::numbers::pi / 180.0;
  return {radius_m_ * std::cos(rad), radius_m_ * std::sin(rad)};
}

FrequencyAxis::FrequencyAxis(double f_start_hz, double f_stop_hz, std::size_t n_points)
    : f_start_hz_(f_start_hz), f_stop_hz_(f_stop_hz), n_points_(n_points) {
  require_finite(f_start_hz, "start frequency");
  require_finite(f_stop_hz, "stop frequency");
  if (!(f_start_hz_ > 0.0)) throw ConfigError("start frequency must be positive");
  if (!(f_stop_hz_ > f_start_hz_)) throw ConfigError("stop frequency must exceed start frequency");
  if (n_points_ < 2) throw ConfigError("frequency axis needs at least 2 points");
}

void ScanLabel::validate() const {
  if (!tumor_present && (tumor_diameter_mm || tumor_center_m)) {
    throw ConfigError("tumor-free label must not carry tumor diameter or center");
  }
  if (tumor_diameter_mm && !(*tumor_diameter_mm > 0.0 && std::isfinite(*tumor_diameter_mm))) {
    throw ConfigError("tumor diameter must be positive");
  }
}

bool is_known_channel(const std::string& name) { return name == "S11" || name == "S21"; }

FrequencySweepScan::FrequencySweepScan(ScanGeometry geometry, FrequencyAxis freq,
                                       ChannelMap channels, ScanLabel label)
    : geometry_(std::move(geometry)),
      freq_(freq),
      channels_(std::move(channels)),
      label_(std::move(label)) {
  label_.validate();
  if (!channels_.contains("S11")) throw FormatError("scan must contain an S11 channel");
  for (const auto& [name, m] : channels_) {
    if (!is_known_channel(name)) throw FormatError("unknown channel name '" + name + "'");
    if (m.rows() != geometry_.n_antennas() || m.cols() != freq_.n_points()) {
      throw DimensionError("channel " + name + " is " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + ", expected " +
                           std::to_string(geometry_.n_antennas()) + "x" +
                           std::to_string(freq_.n_points()));
    }
  }
}

const Matrix<cplx>& FrequencySweepScan::channel(const std::string& name) const {
  auto it = channels_.find(name);
  if (it == channels_.end()) throw FormatError("scan has no channel '" + name + "'");
  return it->second;
}

std::vector<double> spectral_window_weights(SpectralWindow window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == SpectralWindow::raised_cosine && n > 1) {
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(n - 1));
    }
  }
  return w;
}

std::filesystem::path scan_stem(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".manifest" || ext == ".blob") {
    auto p = path;
    p.replace_extension();
    return p;
  }
  return path;
}

FrequencySweepScan load_scan(const std::filesystem::path& path) {
  const auto stem = scan_stem(path);
  auto manifest_path = stem;
  manifest_path += ".manifest";
  auto blob_path = stem;
  blob_path += ".blob";

  std::error_code ec;
  if (!std::filesystem::exists(manifest_path, ec)) {
    throw IoError("scan manifest not found: " + manifest_path.string());
  }
  const auto m = detail::Manifest::read(manifest_path);
  static const char* kKnown[] = {"format_version", "n_antennas", "n_frequencies", "f_start_hz",
                                 "f_stop_hz", "radius_m", "rotation_span_deg", "channels",
                                 "tumor_present", "tumor_diameter_mm", "tumor_x_m", "tumor_y_m",
                                 "phantom_id"};
  for (const auto& key : m.keys()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw FormatError(manifest_path.string() + ": unknown key '" + key + "'");
    }
  }
  if (m.get_count("format_version") != kFormatVersion) {
    throw FormatError(manifest_path.string() + ": unsupported format_version " +
                      m.get("format_version"));
  }
  const std::size_t n_ant = m.get_count("n_antennas");
  const std::size_t n_freq = m.get_count("n_frequencies");
  const auto channel_names = detail::split(m.get("channels"), ',');
  for (const auto& name : channel_names) {
    if (!is_known_channel(name)) {
      throw FormatError(manifest_path.string() + ": unknown channel name '" + name + "'");
    }
  }

  ScanLabel label;
  const auto tp = m.get("tumor_present");
  if (tp != "0" && tp != "1") {
    throw FormatError(manifest_path.string() + ": tumor_present must be 0 or 1");
  }
  label.tumor_present = tp == "1";
  if (m.has("tumor_diameter_mm")) label.tumor_diameter_mm = m.get_double("tumor_diameter_mm");
  if (m.has("tumor_x_m") != m.has("tumor_y_m")) {
    throw FormatError(manifest_path.string() + ": tumor_x_m and tumor_y_m must appear together");
  }
  if (m.has("tumor_x_m")) label.tumor_center_m = Point2{m.get_double("tumor_x_m"), m.get_double("tumor_y_m")};
  if (m.has("phantom_id")) label.phantom_id = m.get("phantom_id");

  auto geometry = ScanGeometry::evenly_spaced(n_ant, m.get_double("radius_m"),
                                              m.get_double("rotation_span_deg"));
  FrequencyAxis freq(m.get_double("f_start_hz"), m.get_double("f_stop_hz"), n_freq);

  const std::size_t per_antenna_bytes = 16u * channel_names.size() * n_freq;
  const std::size_t expected_values = 2u * channel_names.size() * n_ant * n_freq;
  if (std::filesystem::exists(blob_path, ec)) {
    const auto actual = std::filesystem::file_size(blob_path, ec);
    if (!ec && actual != expected_values * 8u && per_antenna_bytes > 0 &&
        actual % per_antenna_bytes == 0) {
      throw DimensionError(blob_path.string() + " holds " +
                           std::to_string(actual / per_antenna_bytes) +
                           " antenna rows but the manifest declares " + std::to_string(n_ant) +
                           " (expected " + std::to_string(expected_values * 8u) + " bytes, got " +
                           std::to_string(actual) + ")");
    }
  }
  const auto values = detail::read_blob(blob_path, expected_values);

  ChannelMap channels;
  std::size_t pos = 0;
  for (const auto& name : channel_names) {
    if (channels.contains(name)) {
      throw FormatError(manifest_path.string() + ": duplicate channel '" + name + "'");
    }
    Matrix<cplx> mat(n_ant, n_freq);
    for (auto& z : mat.data()) {
      z = cplx(values[pos], values[pos + 1]);
      pos += 2;
    }
    channels.emplace(name, std::move(mat));
  }
  return FrequencySweepScan(std::move(geometry), freq, std::move(channels), std::move(label));
}

void write_scan(const FrequencySweepScan& scan, const std::filesystem::path& path) {
  const auto& g = scan.geometry();
  const auto evenly = ScanGeometry::evenly_spaced(g.n_antennas(), g.radius_m(), g.rotation_span_deg());
  if (!(evenly == g)) {
    throw FormatError("only evenly spaced scan geometries can be serialized");
  }
  const auto stem = scan_stem(path);
  detail::Manifest m;
  m.set("format_version", std::size_t{kFormatVersion});
  m.set("n_antennas", g.n_antennas());
  m.set("n_frequencies", scan.freq().n_points());
  m.set("f_start_hz", scan.freq().f_start_hz());
  m.set("f_stop_hz", scan.freq().f_stop_hz());
  m.set("radius_m", g.radius_m());
  m.set("rotation_span_deg", g.rotation_span_deg());
  std::string names;
  for (const auto& [name, mat] : scan.channels()) {
    if (!names.empty()) names += ",";
    names += name;
  }
  m.set("channels", names);
  const auto& label = scan.label();
  m.set("tumor_present", std::string(label.tumor_present ? "1" : "0"));
  if (label.tumor_diameter_mm) m.set("tumor_diameter_mm", *label.tumor_diameter_mm);
  if (label.tumor_center_m) {
    m.set("tumor_x_m", label.tumor_center_m->x);
    m.set("tumor_y_m", label.tumor_center_m->y);
  }
  if (!label.phantom_id.empty()) m.set("phantom_id", label.phantom_id);

  std::vector<double> values;
  values.reserve(2 * scan.channels().size() * g.n_antennas() * scan.freq().n_points());
  for (const auto& [name, mat] : scan.channels()) {
    for (const auto& z : mat.data()) {
      values.push_back(z.real());
      values.push_back(z.imag());
    }
  }
  auto manifest_path = stem;
  manifest_path += ".manifest";
  auto blob_path = stem;
  blob_path += ".blob";
  detail::write_blob(blob_path, values);
  m.write(manifest_path);
}

FrequencySweepScan calibrate(const FrequencySweepScan& target, const FrequencySweepScan& reference) {
  check_same_shape(target, reference);
  ChannelMap out;
  for (const auto& [name, t] : target.channels()) {
    const auto& r = reference.channel(name);
    Matrix<cplx> d(t.rows(), t.cols());
    auto dd = d.data();
    auto td = t.data();
    auto rd = r.data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = td[i] - rd[i];
    out.emplace(name, std::move(d));
  }
  return FrequencySweepScan(target.geometry(), target.freq(), std::move(out), target.label());
}

Matrix<cplx> to_time_domain_complex(const Matrix<cplx>& spectra, const FrequencyAxis& freq,
                                    SpectralWindow window, std::size_t pad_factor) {
  if (pad_factor < 1) throw ConfigError("pad_factor must be at least 1");
  const std::size_t n = freq.n_points();
  if (spectra.cols() != n) {
    throw DimensionError("spectrum has " + std::to_string(spectra.cols()) +
                         " bins, frequency axis has " + std::to_string(n));
  }
  const std::size_t m = n * pad_factor;
  const auto w = spectral_window_weights(window, n);
  const double dt = 1.0 / (static_cast<double>(m) * freq.step_hz());

  init_fftw_once();
  FftwBuffer buf(m);
  FftwPlan plan;
  plan.plan = fftw_plan_dft_1d(static_cast<int>(m), buf.data, buf.data, FFTW_BACKWARD,
                               FFTW_ESTIMATE);
  if (!plan.plan) throw ConfigError("FFT planning failed");

  // Carrier ramp exp(j 2 pi f_start t_n) moves bin k from k*df to f_start + k*df.
  std::vector<cplx> ramp(m);
  for (std::size_t s = 0; s < m; ++s) {
    const double phase = 2.0 * std::numbers::pi * freq.f_start_hz() * static_cast<double>(s) * dt;
    ramp[s] = std::polar(1.0, std::fmod(phase, 2.0 * std::numbers::pi));
  }

  Matrix<cplx> out(spectra.rows(), m);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t a = 0; a < spectra.rows(); ++a) {
    const auto row = spectra.row(a);
    for (std::size_t k = 0; k < m; ++k) {
      if (k < n) {
        buf.data[k][0] = row[k].real() * w[k];
        buf.data[k][1] = row[k].imag() * w[k];
      } else {
        buf.data[k][0] = 0.0;
        buf.data[k][1] = 0.0;
      }
    }
    fftw_execute(plan.plan);
    auto dst = out.row(a);
    for (std::size_t s = 0; s < m; ++s) {
      dst[s] = cplx(buf.data[s][0], buf.data[s][1]) * ramp[s] * scale;
    }
  }
  return out;
}

TimeDomainSignalSet to_time_domain(const FrequencySweepScan& scan, const std::string& channel,
                                   SpectralWindow window, std::size_t pad_factor) {
  if (pad_factor < 1) throw ConfigError("pad_factor must be at least 1");
  const auto complex_traces = to_time_domain_complex(scan.channel(channel), scan.freq(), window,
                                                     pad_factor);
  TimeDomainSignalSet out;
  out.pad_factor = pad_factor;
  out.dt_s = 1.0 / (static_cast<double>(complex_traces.cols()) * scan.freq().step_hz());
  out.t0_s = 0.0;
  out.traces = Matrix<double>(complex_traces.rows(), complex_traces.cols());
  auto src = complex_traces.data();
  auto dst = out.traces.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i].real();
  return out;
}

}  // namespace bms
