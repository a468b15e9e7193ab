#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <system_error>

#include "bms/beamform.hpp"
#include "bms/error.hpp"
#include "manifest.hpp"

namespace bms {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  auto p = stem;
  p += suffix;
  return p;
}

}  // namespace

Matrix<std::uint8_t> quantize_image(const Matrix<double>& intensity, std::optional<double> fixed_norm) {
  double norm = 0.0;
  if (fixed_norm) {
    if (!(*fixed_norm > 0.0) || !std::isfinite(*fixed_norm)) {
      throw ConfigError("fixed normalization must be a positive finite value");
    }
    norm = *fixed_norm;
  } else {
    for (double v : intensity.data()) norm = std::max(norm, v);
  }
  Matrix<std::uint8_t> out(intensity.rows(), intensity.cols(), 0);
  if (norm <= 0.0) return out;
  auto src = intensity.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double q = std::floor(255.0 * src[i] / norm + 0.5);
    dst[i] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
  }
  return out;
}

void write_png_gray8(const Matrix<std::uint8_t>& pixels, const std::filesystem::path& path) {
  detail::ensure_parent_dir(path);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(pixels.cols());
  img.height = static_cast<png_uint_32>(pixels.rows());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

Matrix<std::uint8_t> read_png_gray8(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  Matrix<std::uint8_t> out(img.height, img.width, 0);
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void export_png(const ReconstructedImage& image, const std::filesystem::path& path,
                std::optional<double> fixed_norm) {
  write_png_gray8(quantize_image(image.intensity, fixed_norm), path);
}

void write_image_array(const ReconstructedImage& image, const std::filesystem::path& path) {
  const auto stem = scan_stem(path);
  detail::Manifest m;
  m.set("format_version", std::size_t{1});
  m.set("kind", std::string("image"));
  m.set("channels", std::string("I"));
  m.set("nx", image.grid.nx());
  m.set("ny", image.grid.ny());
  m.set("x_min_m", image.grid.x_min_m());
  m.set("x_max_m", image.grid.x_max_m());
  m.set("y_min_m", image.grid.y_min_m());
  m.set("y_max_m", image.grid.y_max_m());
  m.set("algorithm", to_string(image.algorithm));
  m.set("speed_mps", image.provenance.speed_mps);
  m.set("window_samples", image.window_samples);
  m.set("channel", image.provenance.channel);
  detail::write_blob(with_suffix(stem, ".blob"), image.intensity.data());
  m.write(with_suffix(stem, ".manifest"));
}

ReconstructedImage load_image_array(const std::filesystem::path& path) {
  const auto stem = scan_stem(path);
  const auto manifest_path = with_suffix(stem, ".manifest");
  std::error_code ec;
  if (!std::filesystem::exists(manifest_path, ec)) {
    throw IoError("image manifest not found: " + manifest_path.string());
  }
  const auto m = detail::Manifest::read(manifest_path);
  if (m.get_count("format_version") != 1) throw FormatError("unsupported image format_version");
  if (m.get("kind") != "image" || m.get("channels") != "I") {
    throw FormatError(manifest_path.string() + " is not a single-channel image array");
  }
  ImagingGrid grid(m.get_double("x_min_m"), m.get_double("x_max_m"), m.get_double("y_min_m"),
                   m.get_double("y_max_m"), m.get_count("nx"), m.get_count("ny"));
  BeamformerConfig cfg;
  cfg.speed_mps = m.get_double("speed_mps");
  cfg.channel = m.get("channel");
  ReconstructedImage image{grid, Matrix<double>(grid.ny(), grid.nx()),
                           parse_algorithm(m.get("algorithm")), cfg, m.get_count("window_samples")};
  const auto values = detail::read_blob(with_suffix(stem, ".blob"), grid.nx() * grid.ny());
  std::copy(values.begin(), values.end(), image.intensity.data().begin());
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw FormatError("image intensities must be finite and >= 0");
  }
  return image;
}

}  // namespace bms
