#pragma once

#include <optional>
#include <string>

#include "bms/beamform.hpp"

namespace bms {

// Pixel-center coordinates of the global maximum. Ties go to the lowest row,
// then the lowest column.
Point2 peak_location(const ReconstructedImage& image);

struct Disc {
  Point2 center_m;
  double radius_m = 0.0;
};

// Intensity SCR reported as 10*log10(max inside signal disc / max outside the
// exclusion radius). Returns kScrCapDb when clutter is zero.
inline constexpr double kScrCapDb = 300.0;
double signal_to_clutter(const ReconstructedImage& image, const Disc& signal, double exclusion_radius_m);

enum class Axis { x, y };

struct FwhmResult {
  double width_m = 0.0;
  // A half-max crossing was not found inside the grid, or the peak is not
  // resolved (width <= one pixel).
  bool clipped = false;
};

FwhmResult fwhm(const ReconstructedImage& image, Axis axis);

struct QualityReport {
  Point2 peak_xy_m;
  std::optional<double> localization_error_m;
  double scr_db = 0.0;
  FwhmResult fwhm_x;
  FwhmResult fwhm_y;
};

struct GroundTruth {
  Point2 center_m;
  double radius_m = 0.0;
};

inline constexpr double kSignalMarginM = 5e-3;
inline constexpr double kExclusionMarginM = 10e-3;

// Signal disc: truth center (or the peak when unlabeled), radius r + 5 mm.
// Clutter: everything beyond r + 10 mm from that center.
QualityReport evaluate_image(const ReconstructedImage& image,
                             const std::optional<GroundTruth>& truth = std::nullopt);

// file,peak_x_m,peak_y_m,loc_err_m,scr_db,fwhm_x_m,fwhm_y_m,clipped
std::string quality_csv_header();
std::string quality_csv_row(const std::string& file, const QualityReport& report);

}  // namespace bms
