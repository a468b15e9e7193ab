#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bms/forward_sim.hpp"
#include "bms/scan_data.hpp"

namespace bms {

// c / sqrt(7): adipose-dominant average permittivity.
inline constexpr double kDefaultSpeedMps = kSpeedOfLight / 2.6457513110645907;

// Regular 2-D pixel lattice. Pixel (row j, col k) is centred at
// (x_min + (k + 0.5) * dx, y_min + (j + 0.5) * dy).
class ImagingGrid {
 public:
  ImagingGrid(double x_min_m, double x_max_m, double y_min_m, double y_max_m, std::size_t nx,
              std::size_t ny);

  // Square grid over [-half, half]^2 with the given pixel pitch (rounded up to whole pixels).
  static ImagingGrid centered_square(double half_extent_m, double pixel_m);

  double x_min_m() const { return x_min_; }
  double x_max_m() const { return x_max_; }
  double y_min_m() const { return y_min_; }
  double y_max_m() const { return y_max_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double dx_m() const { return (x_max_ - x_min_) / static_cast<double>(nx_); }
  double dy_m() const { return (y_max_ - y_min_) / static_cast<double>(ny_); }
  double x_center(std::size_t col) const { return x_min_ + (static_cast<double>(col) + 0.5) * dx_m(); }
  double y_center(std::size_t row) const { return y_min_ + (static_cast<double>(row) + 0.5) * dy_m(); }
  Point2 pixel_center(std::size_t row, std::size_t col) const { return {x_center(col), y_center(row)}; }

  friend bool operator==(const ImagingGrid&, const ImagingGrid&) = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
  std::size_t nx_, ny_;
};

enum class Algorithm { das, dmas, farfield };

std::string to_string(Algorithm algo);
// Accepts "das", "dmas", "ff"/"farfield" (any case). Throws ConfigError.
Algorithm parse_algorithm(const std::string& name);

enum class DmasVariant {
  signed_sqrt,  // sign(s_a s_b) * sqrt(|s_a s_b|)
  raw_product,  // s_a s_b
};

struct BeamformerConfig {
  double speed_mps = kDefaultSpeedMps;
  std::size_t window_samples = 0;  // 0 = max(1, round((1/B)/dt))
  std::vector<double> apodization;  // empty = all ones
  std::string channel = "S11";
  DmasVariant dmas_variant = DmasVariant::signed_sqrt;
  std::size_t threads = 1;
};

struct ReconstructedImage {
  ImagingGrid grid;
  Matrix<double> intensity;  // ny x nx, nonnegative
  Algorithm algorithm = Algorithm::das;
  BeamformerConfig provenance;
  std::size_t window_samples = 0;  // resolved W (DAS/DMAS)
};

// Transmit/receive antenna positions per signal row. Monostatic rows have tx == rx.
struct AntennaLayout {
  std::vector<Point2> tx;
  std::vector<Point2> rx;

  std::size_t size() const { return tx.size(); }

  // S11: monostatic. S21: receiver is the antenna n/2 positions further round.
  static AntennaLayout for_channel(const ScanGeometry& geometry, const std::string& channel);
};

// 2 * |antenna - pixel| / speed.
double round_trip_delay(Point2 antenna, Point2 pixel, double speed_mps);
// (|tx - pixel| + |rx - pixel|) / speed.
double bistatic_delay(Point2 tx, Point2 rx, Point2 pixel, double speed_mps);

// Linear interpolation; zero outside [t0, t0 + (n-1) dt].
double sample_delayed(std::span<const double> trace, double dt_s, double t0_s, double t_s);

// Resolved integration window W for a signal set and sweep bandwidth.
std::size_t resolve_window(std::size_t requested, double bandwidth_hz, double dt_s);

// Weighted delayed samples s_a = w_a * trace_a(tau_a(p) + offset * dt) at one pixel.
std::vector<double> delayed_samples(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                    Point2 pixel, std::size_t offset, const BeamformerConfig& cfg);

// intensity(p) = sum_m (sum_a w_a trace_a(tau_a(p) + m dt))^2
ReconstructedImage das_reconstruct(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                   const ImagingGrid& grid, const BeamformerConfig& cfg,
                                   double bandwidth_hz);
ReconstructedImage das_reconstruct(const TimeDomainSignalSet& signals, const ScanGeometry& geometry,
                                   const ImagingGrid& grid, const BeamformerConfig& cfg,
                                   double bandwidth_hz);

// intensity(p) = sum_m (sum_{a<b} pair(s_a, s_b))^2, pair per cfg.dmas_variant.
ReconstructedImage dmas_reconstruct(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                    const ImagingGrid& grid, const BeamformerConfig& cfg,
                                    double bandwidth_hz);
ReconstructedImage dmas_reconstruct(const TimeDomainSignalSet& signals, const ScanGeometry& geometry,
                                    const ImagingGrid& grid, const BeamformerConfig& cfg,
                                    double bandwidth_hz);

enum class PairEvaluation { factored, pairwise };

// Pre-square DMAS sums c_m(p), laid out [(row * nx + col) * W + m]. The
// factored route uses ((sum u)^2 - sum u^2) / 2; pairwise loops over a < b.
std::vector<double> dmas_pair_sums(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                   const ImagingGrid& grid, const BeamformerConfig& cfg,
                                   std::size_t window_samples, PairEvaluation evaluation);

// intensity(p) = |1/(Na Nf) sum_a w_a sum_f S(a,f) exp(+j 2 pi f tau_a(p))|^2
ReconstructedImage farfield_reconstruct(const Matrix<cplx>& spectra, const FrequencyAxis& freq,
                                        const AntennaLayout& antennas, const ImagingGrid& grid,
                                        const BeamformerConfig& cfg);
ReconstructedImage farfield_reconstruct(const FrequencySweepScan& scan, const ImagingGrid& grid,
                                        const BeamformerConfig& cfg);

// Full pipeline from a (calibrated) scan: time-domain conversion for DAS/DMAS,
// direct frequency-domain evaluation for the far-field method.
ReconstructedImage reconstruct(const FrequencySweepScan& scan, Algorithm algorithm,
                               const ImagingGrid& grid, const BeamformerConfig& cfg,
                               SpectralWindow window = SpectralWindow::rectangular,
                               std::size_t pad_factor = kDefaultPadFactor);

// Image quantization: round(255 * I / norm) clamped to [0, 255]. norm absent =
// global max; an all-zero image maps to all zeros.
Matrix<std::uint8_t> quantize_image(const Matrix<double>& intensity,
                                    std::optional<double> fixed_norm = std::nullopt);

void export_png(const ReconstructedImage& image, const std::filesystem::path& path,
                std::optional<double> fixed_norm = std::nullopt);

// 8-bit grayscale PNG I/O (rows top to bottom = image rows 0..ny-1).
void write_png_gray8(const Matrix<std::uint8_t>& pixels, const std::filesystem::path& path);
Matrix<std::uint8_t> read_png_gray8(const std::filesystem::path& path);

// Lossless image array as a manifest + float64 blob pair.
void write_image_array(const ReconstructedImage& image, const std::filesystem::path& path);
ReconstructedImage load_image_array(const std::filesystem::path& path);

}  // namespace bms
