#include "bms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <limits>

#include "bms/error.hpp"
#include "manifest.hpp"

namespace bms {

namespace {

struct PeakIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

PeakIndex find_peak(const Matrix<double>& m) {
  if (m.empty()) throw ConfigError("image is empty");
  PeakIndex best{0, 0, m(0, 0)};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m(r, c) > best.value) best = {r, c, m(r, c)};
    }
  }
  return best;
}

// Position (in pixel-index units) where the profile crosses half, walking out
// from the peak index in direction step. Returns nullopt if it never crosses.
std::optional<double> crossing(const std::vector<double>& profile, std::size_t peak, int step, double half) {
  std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak);
  while (true) {
    const std::ptrdiff_t j = i + step;
    if (j < 0 || j >= static_cast<std::ptrdiff_t>(profile.size())) return std::nullopt;
    const double a = profile[static_cast<std::size_t>(i)];
    const double b = profile[static_cast<std::size_t>(j)];
    if (b <= half) {
      const double frac = (a - half) / (a - b);
      return static_cast<double>(i) + step * frac;
    }
    i = j;
  }
}

std::string opt_number(const std::optional<double>& v) {
  return v ? detail::format_double(*v) : std::string();
}

}  // namespace

Point2 peak_location(const ReconstructedImage& image) {
  const auto p = find_peak(image.intensity);
  return image.grid.pixel_center(p.row, p.col);
}

double signal_to_clutter(const ReconstructedImage& image, const Disc& signal, double exclusion_radius_m) {
  const auto& g = image.grid;
  if (signal.center_m.x < g.x_min_m() || signal.center_m.x > g.x_max_m() ||
      signal.center_m.y < g.y_min_m() || signal.center_m.y > g.y_max_m()) {
    throw ConfigError("signal disc center lies outside the imaging grid");
  }
  double signal_max = -1.0;
  double clutter_max = -1.0;
  for (std::size_t r = 0; r < g.ny(); ++r) {
    for (std::size_t c = 0; c < g.nx(); ++c) {
      const double d = distance(g.pixel_center(r, c), signal.center_m);
      const double v = image.intensity(r, c);
      if (d <= signal.radius_m) signal_max = std::max(signal_max, v);
      if (d > exclusion_radius_m) clutter_max = std::max(clutter_max, v);
    }
  }
  if (clutter_max < 0.0) throw UndefinedMetricError("clutter region is empty");
  if (signal_max < 0.0) throw UndefinedMetricError("signal disc contains no pixel center");
  if (clutter_max == 0.0) return kScrCapDb;
  if (signal_max == 0.0) return -kScrCapDb;
  return std::clamp(10.0 * std::log10(signal_max / clutter_max), -kScrCapDb, kScrCapDb);
}

FwhmResult fwhm(const ReconstructedImage& image, Axis axis) {
  const auto p = find_peak(image.intensity);
  const auto& m = image.intensity;
  std::vector<double> profile;
  std::size_t peak = 0;
  double pitch = 0.0;
  if (axis == Axis::x) {
    auto row = m.row(p.row);
    profile.assign(row.begin(), row.end());
    peak = p.col;
    pitch = image.grid.dx_m();
  } else {
    for (std::size_t r = 0; r < m.rows(); ++r) profile.push_back(m(r, p.col));
    peak = p.row;
    pitch = image.grid.dy_m();
  }
  if (!(p.value > 0.0)) return {0.0, true};
  const double half = 0.5 * p.value;
  FwhmResult out;
  auto left = crossing(profile, peak, -1, half);
  auto right = crossing(profile, peak, +1, half);
  if (!left) {
    out.clipped = true;
    left = 0.0;
  }
  if (!right) {
    out.clipped = true;
    right = static_cast<double>(profile.size() - 1);
  }
  out.width_m = (*right - *left) * pitch;
  if (out.width_m <= pitch * (1.0 + 1e-12)) out.clipped = true;
  return out;
}

QualityReport evaluate_image(const ReconstructedImage& image, const std::optional<GroundTruth>& truth) {
  QualityReport report;
  report.peak_xy_m = peak_location(image);
  const double r = truth ? truth->radius_m : 0.0;
  const Point2 center = truth ? truth->center_m : report.peak_xy_m;
  if (truth) report.localization_error_m = distance(report.peak_xy_m, truth->center_m);
  report.scr_db = signal_to_clutter(image, Disc{center, r + kSignalMarginM}, r + kExclusionMarginM);
  report.fwhm_x = fwhm(image, Axis::x);
  report.fwhm_y = fwhm(image, Axis::y);
  return report;
}

std::string quality_csv_header() {
  return "file,peak_x_m,peak_y_m,loc_err_m,scr_db,fwhm_x_m,fwhm_y_m,clipped";
}

std::string quality_csv_row(const std::string& file, const QualityReport& report) {
  using detail::format_double;
  return file + "," + format_double(report.peak_xy_m.x) + "," + format_double(report.peak_xy_m.y) +
         "," + opt_number(report.localization_error_m) + "," + format_double(report.scr_db) + "," +
         format_double(report.fwhm_x.width_m) + "," + format_double(report.fwhm_y.width_m) + "," +
         (report.fwhm_x.clipped || report.fwhm_y.clipped ? "1" : "0");
}

}  // namespace bms
