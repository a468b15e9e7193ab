#include "bms/bms.h"

#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "bms/beamform.hpp"
#include "bms/corpus.hpp"
#include "bms/error.hpp"
#include "bms/metrics.hpp"

struct bms_scan {
  bms::FrequencySweepScan scan;
};

struct bms_image {
  bms::ReconstructedImage image;
};

struct bms_scenarios {
  std::vector<bms::Scenario> items;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
bms_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return BMS_OK;
  } catch (const bms::FormatError& e) {
    g_last_error = e.what();
    return BMS_ERR_FORMAT;
  } catch (const bms::DimensionError& e) {
    g_last_error = e.what();
    return BMS_ERR_DIMENSION;
  } catch (const bms::IncompatibleScanError& e) {
    g_last_error = e.what();
    return BMS_ERR_INCOMPATIBLE;
  } catch (const bms::ConfigError& e) {
    g_last_error = e.what();
    return BMS_ERR_CONFIG;
  } catch (const bms::IoError& e) {
    g_last_error = e.what();
    return BMS_ERR_IO;
  } catch (const bms::UndefinedMetricError& e) {
    g_last_error = e.what();
    return BMS_ERR_UNDEFINED_METRIC;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return BMS_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BMS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BMS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return BMS_ERR_INTERNAL;
  }
}

bms_status invalid(const char* what) {
  g_last_error = std::string("invalid argument: ") + what;
  return BMS_ERR_INVALID_ARGUMENT;
}

bms::BatchConfig to_batch(const bms_sim_params& p) {
  bms::BatchConfig cfg;
  cfg.geometry = bms::ScanGeometry::evenly_spaced(p.n_antennas, p.radius_m, p.rotation_span_deg);
  cfg.freq = bms::FrequencyAxis(p.f_start_hz, p.f_stop_hz, p.n_frequencies);
  cfg.sim.spreading_exponent = p.spreading_exponent;
  cfg.sim.noise_sigma = p.noise_sigma;
  cfg.sim.include_s21 = p.include_s21 != 0;
  cfg.seed = p.seed;
  cfg.background_speed_mps = p.background_speed_mps;
  return cfg;
}

bms::BeamformerConfig to_beamformer(const bms_recon_params& p) {
  bms::BeamformerConfig cfg;
  cfg.speed_mps = p.speed_mps;
  cfg.window_samples = p.window_samples;
  if (p.apodization) cfg.apodization.assign(p.apodization, p.apodization + p.n_apodization);
  cfg.channel = p.channel ? p.channel : "S11";
  cfg.dmas_variant = p.dmas_variant == BMS_DMAS_RAW_PRODUCT ? bms::DmasVariant::raw_product
                                                            : bms::DmasVariant::signed_sqrt;
  cfg.threads = p.threads == 0 ? 1 : p.threads;
  return cfg;
}

bms::ImagingGrid to_grid(const bms_recon_params& p) {
  return bms::ImagingGrid(p.x_min_m, p.x_max_m, p.y_min_m, p.y_max_m, p.nx, p.ny);
}

bms::SpectralWindow to_window(bms_window w) {
  return w == BMS_WINDOW_RAISED_COSINE ? bms::SpectralWindow::raised_cosine
                                       : bms::SpectralWindow::rectangular;
}

bms::Algorithm to_algorithm(bms_algorithm a) {
  switch (a) {
    case BMS_ALGO_DAS: return bms::Algorithm::das;
    case BMS_ALGO_DMAS: return bms::Algorithm::dmas;
    case BMS_ALGO_FARFIELD: return bms::Algorithm::farfield;
  }
  throw bms::ConfigError("unknown algorithm code");
}

}  // namespace

extern "C" {

const char* bms_last_error(void) { return g_last_error.c_str(); }

const char* bms_status_name(bms_status status) {
  switch (status) {
    case BMS_OK: return "ok";
    case BMS_ERR_FORMAT: return "format error";
    case BMS_ERR_DIMENSION: return "dimension error";
    case BMS_ERR_INCOMPATIBLE: return "incompatible scans";
    case BMS_ERR_CONFIG: return "configuration error";
    case BMS_ERR_IO: return "I/O error";
    case BMS_ERR_UNDEFINED_METRIC: return "undefined metric";
    case BMS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BMS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

bms_status bms_scan_load(const char* path, bms_scan** out) {
  if (!path || !out) return invalid("path/out");
  return guarded([&] { *out = new bms_scan{bms::load_scan(path)}; });
}

bms_status bms_scan_save(const bms_scan* scan, const char* path) {
  if (!scan || !path) return invalid("scan/path");
  return guarded([&] { bms::write_scan(scan->scan, path); });
}

void bms_scan_free(bms_scan* scan) { delete scan; }

bms_status bms_scan_get_info(const bms_scan* scan, bms_scan_info* out) {
  if (!scan || !out) return invalid("scan/out");
  return guarded([&] {
    const auto& s = scan->scan;
    bms_scan_info info{};
    info.n_antennas = s.geometry().n_antennas();
    info.n_frequencies = s.freq().n_points();
    info.f_start_hz = s.freq().f_start_hz();
    info.f_stop_hz = s.freq().f_stop_hz();
    info.radius_m = s.geometry().radius_m();
    info.rotation_span_deg = s.geometry().rotation_span_deg();
    info.has_s21 = s.has_channel("S21") ? 1 : 0;
    info.tumor_present = s.label().tumor_present ? 1 : 0;
    if (s.label().tumor_diameter_mm) {
      info.has_diameter = 1;
      info.tumor_diameter_mm = *s.label().tumor_diameter_mm;
    }
    if (s.label().tumor_center_m) {
      info.has_center = 1;
      info.tumor_x_m = s.label().tumor_center_m->x;
      info.tumor_y_m = s.label().tumor_center_m->y;
    }
    *out = info;
  });
}

bms_status bms_scan_calibrate(const bms_scan* target, const bms_scan* reference, bms_scan** out) {
  if (!target || !reference || !out) return invalid("target/reference/out");
  return guarded([&] { *out = new bms_scan{bms::calibrate(target->scan, reference->scan)}; });
}

void bms_sim_params_default(bms_sim_params* out) {
  if (!out) return;
  *out = bms_sim_params{};
  out->n_antennas = bms::kDefaultAntennaCount;
  out->radius_m = 0.15;
  out->rotation_span_deg = bms::kDefaultRotationSpanDeg;
  out->f_start_hz = 1e9;
  out->f_stop_hz = 9e9;
  out->n_frequencies = bms::kDefaultFrequencyCount;
  out->spreading_exponent = 2.0;
  out->noise_sigma = 0.0;
  out->background_speed_mps = bms::kDefaultSpeedMps;
  out->include_s21 = 0;
  out->seed = 0;
}

bms_status bms_scenarios_load(const char* path, bms_scenarios** out) {
  if (!path || !out) return invalid("path/out");
  return guarded([&] { *out = new bms_scenarios{bms::load_scenarios(path)}; });
}

bms_status bms_scenarios_preset(const char* name, uint64_t seed, double scan_radius_m, bms_scenarios** out) {
  if (!name || !out) return invalid("name/out");
  return guarded([&] { *out = new bms_scenarios{bms::preset_scenarios(name, seed, scan_radius_m)}; });
}

size_t bms_scenarios_count(const bms_scenarios* scenarios) { return scenarios ? scenarios->items.size() : 0; }

void bms_scenarios_free(bms_scenarios* scenarios) { delete scenarios; }

bms_status bms_simulate_batch(const bms_scenarios* scenarios, const bms_sim_params* params,
                              const char* out_dir, size_t* n_targets, size_t* n_references) {
  if (!scenarios || !params || !out_dir) return invalid("scenarios/params/out_dir");
  return guarded([&] {
    const auto result = bms::simulate_batch(scenarios->items, to_batch(*params), out_dir);
    if (n_targets) *n_targets = result.targets.size();
    if (n_references) *n_references = result.references.size();
  });
}

void bms_recon_params_default(bms_recon_params* out) {
  if (!out) return;
  *out = bms_recon_params{};
  const auto grid = bms::ImagingGrid::centered_square(0.15, 2e-3);
  out->algorithm = BMS_ALGO_DAS;
  out->x_min_m = grid.x_min_m();
  out->x_max_m = grid.x_max_m();
  out->y_min_m = grid.y_min_m();
  out->y_max_m = grid.y_max_m();
  out->nx = grid.nx();
  out->ny = grid.ny();
  out->speed_mps = bms::kDefaultSpeedMps;
  out->window_samples = 0;
  out->pad_factor = bms::kDefaultPadFactor;
  out->spectral_window = BMS_WINDOW_RECTANGULAR;
  out->dmas_variant = BMS_DMAS_SIGNED_SQRT;
  out->channel = nullptr;
  out->apodization = nullptr;
  out->n_apodization = 0;
  out->threads = 1;
}

bms_status bms_algorithm_parse(const char* name, bms_algorithm* out) {
  if (!name || !out) return invalid("name/out");
  return guarded([&] {
    switch (bms::parse_algorithm(name)) {
      case bms::Algorithm::das: *out = BMS_ALGO_DAS; break;
      case bms::Algorithm::dmas: *out = BMS_ALGO_DMAS; break;
      case bms::Algorithm::farfield: *out = BMS_ALGO_FARFIELD; break;
    }
  });
}

bms_status bms_reconstruct(const bms_scan* scan, const bms_recon_params* params, bms_image** out) {
  if (!scan || !params || !out) return invalid("scan/params/out");
  return guarded([&] {
    auto image = bms::reconstruct(scan->scan, to_algorithm(params->algorithm), to_grid(*params),
                                  to_beamformer(*params), to_window(params->spectral_window),
                                  params->pad_factor);
    *out = new bms_image{std::move(image)};
  });
}

void bms_image_free(bms_image* image) { delete image; }

bms_status bms_image_dims(const bms_image* image, size_t* nx, size_t* ny) {
  if (!image || !nx || !ny) return invalid("image/nx/ny");
  *nx = image->image.grid.nx();
  *ny = image->image.grid.ny();
  return BMS_OK;
}

bms_status bms_image_copy_intensity(const bms_image* image, double* buffer, size_t capacity) {
  if (!image || !buffer) return invalid("image/buffer");
  const auto src = image->image.intensity.data();
  if (capacity < src.size()) return invalid("buffer too small");
  std::copy(src.begin(), src.end(), buffer);
  return BMS_OK;
}

bms_status bms_image_save_png(const bms_image* image, const char* path, double fixed_norm) {
  if (!image || !path) return invalid("image/path");
  return guarded([&] {
    bms::export_png(image->image, path, fixed_norm > 0.0 ? std::optional<double>(fixed_norm) : std::nullopt);
  });
}

bms_status bms_image_save_array(const bms_image* image, const char* path) {
  if (!image || !path) return invalid("image/path");
  return guarded([&] { bms::write_image_array(image->image, path); });
}

bms_status bms_image_load_array(const char* path, bms_image** out) {
  if (!path || !out) return invalid("path/out");
  return guarded([&] { *out = new bms_image{bms::load_image_array(path)}; });
}

bms_status bms_image_evaluate(const bms_image* image, const double* truth_center_xy, double truth_radius_m,
                              bms_quality* out) {
  if (!image || !out) return invalid("image/out");
  return guarded([&] {
    std::optional<bms::GroundTruth> truth;
    if (truth_center_xy) truth = bms::GroundTruth{{truth_center_xy[0], truth_center_xy[1]}, truth_radius_m};
    const auto r = bms::evaluate_image(image->image, truth);
    bms_quality q{};
    q.peak_x_m = r.peak_xy_m.x;
    q.peak_y_m = r.peak_xy_m.y;
    q.has_localization_error = r.localization_error_m ? 1 : 0;
    q.localization_error_m = r.localization_error_m.value_or(0.0);
    q.scr_db = r.scr_db;
    q.fwhm_x_m = r.fwhm_x.width_m;
    q.fwhm_y_m = r.fwhm_y.width_m;
    q.clipped = (r.fwhm_x.clipped || r.fwhm_y.clipped) ? 1 : 0;
    *out = q;
  });
}

bms_status bms_quality_append_csv(const char* csv_path, const char* file_label, const bms_quality* quality) {
  if (!csv_path || !file_label || !quality) return invalid("csv_path/file_label/quality");
  return guarded([&] {
    bms::QualityReport r;
    r.peak_xy_m = {quality->peak_x_m, quality->peak_y_m};
    if (quality->has_localization_error) r.localization_error_m = quality->localization_error_m;
    r.scr_db = quality->scr_db;
    r.fwhm_x = {quality->fwhm_x_m, quality->clipped != 0};
    r.fwhm_y = {quality->fwhm_y_m, quality->clipped != 0};
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(csv_path, ec) || std::filesystem::file_size(csv_path, ec) == 0;
    std::ofstream out(csv_path, std::ios::app);
    if (!out) throw bms::IoError(std::string("cannot write metrics CSV ") + csv_path);
    if (fresh) out << bms::quality_csv_header() << "\n";
    out << bms::quality_csv_row(file_label, r) << "\n";
    if (!out) throw bms::IoError(std::string("failed writing metrics CSV ") + csv_path);
  });
}

void bms_corpus_params_default(bms_corpus_params* out) {
  if (!out) return;
  *out = bms_corpus_params{};
  bms_sim_params_default(&out->sim);
  bms_recon_params_default(&out->recon);
  out->use_das = 1;
  out->use_dmas = 1;
  out->use_farfield = 1;
  out->png_fixed_norm = 0.0;
}

bms_status bms_corpus_generate(const bms_scenarios* scenarios, const bms_corpus_params* params,
                               const char* out_dir, size_t* n_images) {
  if (!scenarios || !params || !out_dir) return invalid("scenarios/params/out_dir");
  return guarded([&] {
    bms::CorpusConfig cfg;
    cfg.batch = to_batch(params->sim);
    cfg.algorithms.clear();
    if (params->use_das) cfg.algorithms.push_back(bms::Algorithm::das);
    if (params->use_dmas) cfg.algorithms.push_back(bms::Algorithm::dmas);
    if (params->use_farfield) cfg.algorithms.push_back(bms::Algorithm::farfield);
    cfg.grid = to_grid(params->recon);
    cfg.beamformer = to_beamformer(params->recon);
    cfg.window = to_window(params->recon.spectral_window);
    cfg.pad_factor = params->recon.pad_factor;
    if (params->png_fixed_norm > 0.0) cfg.png_norm = params->png_fixed_norm;
    const auto rows = bms::corpus_generate(scenarios->items, cfg, out_dir);
    if (n_images) *n_images = rows.size();
  });
}

bms_status bms_corpus_split(const char* labels_csv, double train_ratio, uint64_t seed, const char* out_dir,
                            size_t* n_train, size_t* n_val) {
  if (!labels_csv || !out_dir) return invalid("labels_csv/out_dir");
  return guarded([&] {
    const auto rows = bms::read_corpus_manifest(labels_csv);
    const auto split = bms::split_corpus(rows, train_ratio, seed);
    bms::write_split(split, out_dir);
    if (n_train) *n_train = split.train.size();
    if (n_val) *n_val = split.val.size();
  });
}

}  // extern "C"
