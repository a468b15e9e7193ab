#include "bms/beamform.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <numbers>
#include <thread>

#include "bms/error.hpp"

namespace bms {

namespace {

// Splits [0, rows) into contiguous chunks, one per worker. Each pixel is
// computed entirely by one worker, so the result does not depend on threads.
template <class Fn>
void for_row_chunks(std::size_t rows, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(rows, 1));
  if (workers == 1) {
    fn(std::size_t{0}, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t base = rows / workers;
  const std::size_t extra = rows % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t end = begin + base + (w < extra ? 1 : 0);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    begin = end;
  }
}

std::vector<double> resolve_weights(const BeamformerConfig& cfg, std::size_t n) {
  if (cfg.apodization.empty()) return std::vector<double>(n, 1.0);
  if (cfg.apodization.size() != n) {
    throw ConfigError("apodization has " + std::to_string(cfg.apodization.size()) +
                      " weights for " + std::to_string(n) + " antennas");
  }
  for (double w : cfg.apodization) {
    if (!std::isfinite(w)) throw ConfigError("apodization weights must be finite");
  }
  return cfg.apodization;
}

void check_config(const BeamformerConfig& cfg) {
  if (!(cfg.speed_mps > 0.0) || !std::isfinite(cfg.speed_mps)) {
    throw ConfigError("propagation speed must be positive");
  }
}

void check_signals(const TimeDomainSignalSet& signals, const AntennaLayout& antennas) {
  if (antennas.tx.size() != antennas.rx.size()) {
    throw DimensionError("antenna layout has mismatched tx/rx lists");
  }
  if (signals.n_antennas() != antennas.size()) {
    throw DimensionError("signal set has " + std::to_string(signals.n_antennas()) +
                         " antenna rows, geometry has " + std::to_string(antennas.size()));
  }
  if (!(signals.dt_s > 0.0)) throw ConfigError("signal time step must be positive");
}

double delay_for(const AntennaLayout& antennas, std::size_t a, Point2 pixel, double speed) {
  const Point2 tx = antennas.tx[a];
  const Point2 rx = antennas.rx[a];
  if (tx == rx) return round_trip_delay(tx, pixel, speed);
  return bistatic_delay(tx, rx, pixel, speed);
}

// Fills samples[a * W + m] with w_a * trace_a(tau_a(p) + m dt) for one pixel.
void gather_samples(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                    std::span<const double> weights, Point2 pixel, double speed, std::size_t window,
                    std::span<double> samples) {
  for (std::size_t a = 0; a < antennas.size(); ++a) {
    const double tau = delay_for(antennas, a, pixel, speed);
    const auto trace = signals.traces.row(a);
    for (std::size_t m = 0; m < window; ++m) {
      const double t = tau + static_cast<double>(m) * signals.dt_s;
      samples[a * window + m] = weights[a] * sample_delayed(trace, signals.dt_s, signals.t0_s, t);
    }
  }
}

double pair_value(double u, DmasVariant variant) {
  if (variant == DmasVariant::raw_product) return u;
  return std::copysign(std::sqrt(std::abs(u)), u);
}

ReconstructedImage make_image(const ImagingGrid& grid, Algorithm algo, const BeamformerConfig& cfg,
                              std::size_t window) {
  return ReconstructedImage{grid, Matrix<double>(grid.ny(), grid.nx()), algo, cfg, window};
}

constexpr std::size_t kLanes = 4;
constexpr std::size_t kVectors = 4;
constexpr std::size_t kHornerBlock = kLanes * kVectors;
typedef double Lane4 __attribute__((vector_size(kLanes * sizeof(double))));

// acc = sum_f S(f) z^f by Horner recurrence for one block of pixels; the
// block's accumulators stay in registers across the frequency loop. Lane-wise
// multiply/add only, so every ISA clone yields the same bits.
__attribute__((target_clones("avx2", "default"))) void horner_block(
    const double* spec_re, const double* spec_im, std::size_t n_freq, const double* z_re,
    const double* z_im, double* acc_re, double* acc_im) {
  Lane4 ar[kVectors], ai[kVectors], zr[kVectors], zi[kVectors];
  for (std::size_t v = 0; v < kVectors; ++v) {
    std::memcpy(&zr[v], z_re + v * kLanes, sizeof(Lane4));
    std::memcpy(&zi[v], z_im + v * kLanes, sizeof(Lane4));
    ar[v] = Lane4{0.0, 0.0, 0.0, 0.0};
    ai[v] = Lane4{0.0, 0.0, 0.0, 0.0};
  }
  for (std::size_t k = n_freq; k-- > 0;) {
    const double sr = spec_re[k];
    const double si = spec_im[k];
    for (std::size_t v = 0; v < kVectors; ++v) {
      const Lane4 r = (ar[v] * zr[v] - ai[v] * zi[v]) + sr;
      const Lane4 i = (ar[v] * zi[v] + ai[v] * zr[v]) + si;
      ar[v] = r;
      ai[v] = i;
    }
  }
  for (std::size_t v = 0; v < kVectors; ++v) {
    std::memcpy(acc_re + v * kLanes, &ar[v], sizeof(Lane4));
    std::memcpy(acc_im + v * kLanes, &ai[v], sizeof(Lane4));
  }
}

}  // namespace

ImagingGrid::ImagingGrid(double x_min_m, double x_max_m, double y_min_m, double y_max_m,
                         std::size_t nx, std::size_t ny)
    : x_min_(x_min_m), x_max_(x_max_m), y_min_(y_min_m), y_max_(y_max_m), nx_(nx), ny_(ny) {
  if (!std::isfinite(x_min_) || !std::isfinite(x_max_) || !std::isfinite(y_min_) ||
      !std::isfinite(y_max_)) {
    throw ConfigError("grid extents must be finite");
  }
  if (!(x_max_ > x_min_) || !(y_max_ > y_min_)) throw ConfigError("grid extents must be non-empty");
  if (nx_ < 2 || ny_ < 2) throw ConfigError("grid needs at least 2 pixels per axis");
}

ImagingGrid ImagingGrid::centered_square(double half_extent_m, double pixel_m) {
  if (!(half_extent_m > 0.0) || !(pixel_m > 0.0)) throw ConfigError("grid extent and pitch must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * half_extent_m / pixel_m - 1e-9));
  const double half = 0.5 * static_cast<double>(n) * pixel_m;
  return ImagingGrid(-half, half, -half, half, n, n);
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::das: return "das";
    case Algorithm::dmas: return "dmas";
    case Algorithm::farfield: return "ff";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "das") return Algorithm::das;
  if (lower == "dmas") return Algorithm::dmas;
  if (lower == "ff" || lower == "farfield") return Algorithm::farfield;
  throw ConfigError("unknown algorithm '" + name + "' (expected das, dmas or ff)");
}

AntennaLayout AntennaLayout::for_channel(const ScanGeometry& geometry, const std::string& channel) {
  AntennaLayout layout;
  const std::size_t n = geometry.n_antennas();
  for (std::size_t a = 0; a < n; ++a) layout.tx.push_back(geometry.antenna_position(a));
  if (channel == "S11") {
    layout.rx = layout.tx;
  } else if (channel == "S21") {
    for (std::size_t a = 0; a < n; ++a) layout.rx.push_back(layout.tx[(a + n / 2) % n]);
  } else {
    throw FormatError("unknown channel name '" + channel + "'");
  }
  return layout;
}

double round_trip_delay(Point2 antenna, Point2 pixel, double speed_mps) {
  return 2.0 * distance(antenna, pixel) / speed_mps;
}

double bistatic_delay(Point2 tx, Point2 rx, Point2 pixel, double speed_mps) {
  return (distance(tx, pixel) + distance(rx, pixel)) / speed_mps;
}

double sample_delayed(std::span<const double> trace, double dt_s, double t0_s, double t_s) {
  if (trace.empty()) return 0.0;
  const double pos = (t_s - t0_s) / dt_s;
  const double last = static_cast<double>(trace.size() - 1);
  if (!(pos >= 0.0) || pos > last) return 0.0;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= trace.size()) return trace[trace.size() - 1];
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0) return trace[i];
  return trace[i] + frac * (trace[i + 1] - trace[i]);
}

std::size_t resolve_window(std::size_t requested, double bandwidth_hz, double dt_s) {
  if (requested > 0) return requested;
  if (!(bandwidth_hz > 0.0) || !(dt_s > 0.0)) throw ConfigError("bandwidth and dt must be positive");
  const double w = std::round((1.0 / bandwidth_hz) / dt_s);
  return std::max<std::size_t>(1, static_cast<std::size_t>(w));
}

std::vector<double> delayed_samples(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                    Point2 pixel, std::size_t offset, const BeamformerConfig& cfg) {
  check_config(cfg);
  check_signals(signals, antennas);
  const auto weights = resolve_weights(cfg, antennas.size());
  std::vector<double> out(antennas.size());
  for (std::size_t a = 0; a < antennas.size(); ++a) {
    const double tau = delay_for(antennas, a, pixel, cfg.speed_mps);
    const double t = tau + static_cast<double>(offset) * signals.dt_s;
    out[a] = weights[a] * sample_delayed(signals.traces.row(a), signals.dt_s, signals.t0_s, t);
  }
  return out;
}

ReconstructedImage das_reconstruct(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                   const ImagingGrid& grid, const BeamformerConfig& cfg,
                                   double bandwidth_hz) {
  check_config(cfg);
  check_signals(signals, antennas);
  const auto weights = resolve_weights(cfg, antennas.size());
  const std::size_t window = resolve_window(cfg.window_samples, bandwidth_hz, signals.dt_s);
  auto image = make_image(grid, Algorithm::das, cfg, window);
  const std::size_t n = antennas.size();

  for_row_chunks(grid.ny(), cfg.threads, [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> samples(n * window);
    for (std::size_t r = row_begin; r < row_end; ++r) {
      for (std::size_t c = 0; c < grid.nx(); ++c) {
        gather_samples(signals, antennas, weights, grid.pixel_center(r, c), cfg.speed_mps, window,
                       samples);
        double intensity = 0.0;
        for (std::size_t m = 0; m < window; ++m) {
          double b = 0.0;
          for (std::size_t a = 0; a < n; ++a) b += samples[a * window + m];
          intensity += b * b;
        }
        image.intensity(r, c) = intensity;
      }
    }
  });
  return image;
}

ReconstructedImage das_reconstruct(const TimeDomainSignalSet& signals, const ScanGeometry& geometry,
                                   const ImagingGrid& grid, const BeamformerConfig& cfg,
                                   double bandwidth_hz) {
  return das_reconstruct(signals, AntennaLayout::for_channel(geometry, cfg.channel), grid, cfg,
                         bandwidth_hz);
}

std::vector<double> dmas_pair_sums(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                   const ImagingGrid& grid, const BeamformerConfig& cfg,
                                   std::size_t window, PairEvaluation evaluation) {
  check_config(cfg);
  check_signals(signals, antennas);
  if (antennas.size() < 2) throw ConfigError("DMAS needs at least 2 antennas");
  if (window == 0) throw ConfigError("window must be at least one sample");
  const auto weights = resolve_weights(cfg, antennas.size());
  const std::size_t n = antennas.size();
  std::vector<double> sums(grid.ny() * grid.nx() * window, 0.0);

  for_row_chunks(grid.ny(), cfg.threads, [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> samples(n * window);
    std::vector<double> u(n);
    for (std::size_t r = row_begin; r < row_end; ++r) {
      for (std::size_t c = 0; c < grid.nx(); ++c) {
        gather_samples(signals, antennas, weights, grid.pixel_center(r, c), cfg.speed_mps, window,
                       samples);
        double* out = &sums[(r * grid.nx() + c) * window];
        for (std::size_t m = 0; m < window; ++m) {
          for (std::size_t a = 0; a < n; ++a) u[a] = pair_value(samples[a * window + m], cfg.dmas_variant);
          double cm = 0.0;
          if (evaluation == PairEvaluation::pairwise) {
            for (std::size_t a = 0; a + 1 < n; ++a) {
              for (std::size_t b = a + 1; b < n; ++b) cm += u[a] * u[b];
            }
          } else {
            double total = 0.0;
            double squares = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
              total += u[a];
              squares += u[a] * u[a];
            }
            cm = 0.5 * (total * total - squares);
          }
          out[m] = cm;
        }
      }
    }
  });
  return sums;
}

ReconstructedImage dmas_reconstruct(const TimeDomainSignalSet& signals, const AntennaLayout& antennas,
                                    const ImagingGrid& grid, const BeamformerConfig& cfg,
                                    double bandwidth_hz) {
  check_config(cfg);
  check_signals(signals, antennas);
  const std::size_t window = resolve_window(cfg.window_samples, bandwidth_hz, signals.dt_s);
  const auto sums = dmas_pair_sums(signals, antennas, grid, cfg, window, PairEvaluation::factored);
  auto image = make_image(grid, Algorithm::dmas, cfg, window);
  auto dst = image.intensity.data();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    double intensity = 0.0;
    for (std::size_t m = 0; m < window; ++m) {
      const double cm = sums[p * window + m];
      intensity += cm * cm;
    }
    dst[p] = intensity;
  }
  return image;
}

ReconstructedImage dmas_reconstruct(const TimeDomainSignalSet& signals, const ScanGeometry& geometry,
                                    const ImagingGrid& grid, const BeamformerConfig& cfg,
                                    double bandwidth_hz) {
  return dmas_reconstruct(signals, AntennaLayout::for_channel(geometry, cfg.channel), grid, cfg,
                          bandwidth_hz);
}

ReconstructedImage farfield_reconstruct(const Matrix<cplx>& spectra, const FrequencyAxis& freq,
                                        const AntennaLayout& antennas, const ImagingGrid& grid,
                                        const BeamformerConfig& cfg) {
  check_config(cfg);
  if (antennas.tx.size() != antennas.rx.size()) {
    throw DimensionError("antenna layout has mismatched tx/rx lists");
  }
  if (spectra.rows() != antennas.size() || spectra.cols() != freq.n_points()) {
    throw DimensionError("spectra are " + std::to_string(spectra.rows()) + "x" +
                         std::to_string(spectra.cols()) + ", expected " +
                         std::to_string(antennas.size()) + "x" + std::to_string(freq.n_points()));
  }
  const auto weights = resolve_weights(cfg, antennas.size());
  const std::size_t n_ant = antennas.size();
  const std::size_t n_freq = freq.n_points();
  auto image = make_image(grid, Algorithm::farfield, cfg, 0);

  std::vector<double> spec_re(spectra.size());
  std::vector<double> spec_im(spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    spec_re[i] = spectra.data()[i].real();
    spec_im[i] = spectra.data()[i].imag();
  }
  const double norm = 1.0 / (static_cast<double>(n_ant) * static_cast<double>(n_freq));
  const double two_pi = 2.0 * std::numbers::pi;

  for_row_chunks(grid.ny(), cfg.threads, [&](std::size_t row_begin, std::size_t row_end) {
    const std::size_t nx = grid.nx();
    const std::size_t n_pix = (row_end - row_begin) * nx;
    if (n_pix == 0) return;
    // Padded to whole blocks; padding lanes are computed but never read.
    const std::size_t n_pad = (n_pix + kHornerBlock - 1) / kHornerBlock * kHornerBlock;
    std::vector<Point2> pixels(n_pix);
    for (std::size_t r = row_begin; r < row_end; ++r) {
      for (std::size_t c = 0; c < nx; ++c) pixels[(r - row_begin) * nx + c] = grid.pixel_center(r, c);
    }
    std::vector<double> z_re(n_pad, 1.0), z_im(n_pad, 0.0), acc_re(n_pad), acc_im(n_pad);
    std::vector<cplx> total(n_pix, cplx(0.0, 0.0));
    for (std::size_t a = 0; a < n_ant; ++a) {
      std::vector<cplx> carrier(n_pix);
      for (std::size_t p = 0; p < n_pix; ++p) {
        const double tau = delay_for(antennas, a, pixels[p], cfg.speed_mps);
        const double step_cycles = freq.step_hz() * tau;
        const double start_cycles = freq.f_start_hz() * tau;
        const cplx z = std::polar(1.0, two_pi * (step_cycles - std::floor(step_cycles)));
        z_re[p] = z.real();
        z_im[p] = z.imag();
        carrier[p] = std::polar(weights[a], two_pi * (start_cycles - std::floor(start_cycles)));
      }
      for (std::size_t b = 0; b < n_pad; b += kHornerBlock) {
        horner_block(&spec_re[a * n_freq], &spec_im[a * n_freq], n_freq, &z_re[b], &z_im[b],
                     &acc_re[b], &acc_im[b]);
      }
      for (std::size_t p = 0; p < n_pix; ++p) total[p] += carrier[p] * cplx(acc_re[p], acc_im[p]);
    }
    for (std::size_t p = 0; p < n_pix; ++p) {
      image.intensity(row_begin + p / nx, p % nx) = std::norm(total[p] * norm);
    }
  });
  return image;
}

ReconstructedImage farfield_reconstruct(const FrequencySweepScan& scan, const ImagingGrid& grid,
                                        const BeamformerConfig& cfg) {
  return farfield_reconstruct(scan.channel(cfg.channel), scan.freq(),
                              AntennaLayout::for_channel(scan.geometry(), cfg.channel), grid, cfg);
}

ReconstructedImage reconstruct(const FrequencySweepScan& scan, Algorithm algorithm,
                               const ImagingGrid& grid, const BeamformerConfig& cfg,
                               SpectralWindow window, std::size_t pad_factor) {
  if (algorithm == Algorithm::farfield) return farfield_reconstruct(scan, grid, cfg);
  const auto signals = to_time_domain(scan, cfg.channel, window, pad_factor);
  const auto layout = AntennaLayout::for_channel(scan.geometry(), cfg.channel);
  const double bandwidth = scan.freq().bandwidth_hz();
  if (algorithm == Algorithm::das) return das_reconstruct(signals, layout, grid, cfg, bandwidth);
  return dmas_reconstruct(signals, layout, grid, cfg, bandwidth);
}

}  // namespace bms
