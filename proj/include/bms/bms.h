/* C interface to the bmsrecon library: opaque handles, status codes. */
#ifndef BMS_BMS_H
#define BMS_BMS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BMS_API __declspec(dllexport)
#else
#define BMS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bms_status {
  BMS_OK = 0,
  BMS_ERR_FORMAT = 1,
  BMS_ERR_DIMENSION = 2,
  BMS_ERR_INCOMPATIBLE = 3,
  BMS_ERR_CONFIG = 4,
  BMS_ERR_IO = 5,
  BMS_ERR_UNDEFINED_METRIC = 6,
  BMS_ERR_INVALID_ARGUMENT = 7,
  BMS_ERR_INTERNAL = 8
} bms_status;

typedef enum bms_algorithm { BMS_ALGO_DAS = 0, BMS_ALGO_DMAS = 1, BMS_ALGO_FARFIELD = 2 } bms_algorithm;

typedef enum bms_window { BMS_WINDOW_RECTANGULAR = 0, BMS_WINDOW_RAISED_COSINE = 1 } bms_window;

typedef enum bms_dmas_variant { BMS_DMAS_SIGNED_SQRT = 0, BMS_DMAS_RAW_PRODUCT = 1 } bms_dmas_variant;

typedef struct bms_scan bms_scan;
typedef struct bms_image bms_image;
typedef struct bms_scenarios bms_scenarios;

/* Message for the most recent failing call on this thread ("" if none). */
BMS_API const char* bms_last_error(void);
BMS_API const char* bms_status_name(bms_status status);

/* ---- scans ---- */

typedef struct bms_scan_info {
  size_t n_antennas;
  size_t n_frequencies;
  double f_start_hz;
  double f_stop_hz;
  double radius_m;
  double rotation_span_deg;
  int has_s21;
  int tumor_present;
  int has_diameter;
  double tumor_diameter_mm;
  int has_center;
  double tumor_x_m;
  double tumor_y_m;
} bms_scan_info;

BMS_API bms_status bms_scan_load(const char* path, bms_scan** out);
BMS_API bms_status bms_scan_save(const bms_scan* scan, const char* path);
BMS_API void bms_scan_free(bms_scan* scan);
BMS_API bms_status bms_scan_get_info(const bms_scan* scan, bms_scan_info* out);
BMS_API bms_status bms_scan_calibrate(const bms_scan* target, const bms_scan* reference, bms_scan** out);

/* ---- simulation ---- */

typedef struct bms_sim_params {
  size_t n_antennas;
  double radius_m;
  double rotation_span_deg;
  double f_start_hz;
  double f_stop_hz;
  size_t n_frequencies;
  double spreading_exponent;
  double noise_sigma;
  double background_speed_mps;
  int include_s21;
  uint64_t seed;
} bms_sim_params;

/* Defaults: 72 antennas over 355 deg at r = 0.15 m, 1001 points over 1-9 GHz,
   spreading 2, no noise, c/sqrt(7), S11 only, seed 0. */
BMS_API void bms_sim_params_default(bms_sim_params* out);

BMS_API bms_status bms_scenarios_load(const char* path, bms_scenarios** out);
BMS_API bms_status bms_scenarios_preset(const char* name, uint64_t seed, double scan_radius_m,
                                        bms_scenarios** out);
BMS_API size_t bms_scenarios_count(const bms_scenarios* scenarios);
BMS_API void bms_scenarios_free(bms_scenarios* scenarios);

/* Writes one target pair per scenario and one reference pair per geometry. */
BMS_API bms_status bms_simulate_batch(const bms_scenarios* scenarios, const bms_sim_params* params,
                                      const char* out_dir, size_t* n_targets, size_t* n_references);

/* ---- reconstruction ---- */

typedef struct bms_recon_params {
  bms_algorithm algorithm;
  double x_min_m, x_max_m, y_min_m, y_max_m;
  size_t nx, ny;
  double speed_mps;
  size_t window_samples; /* 0 = from bandwidth */
  size_t pad_factor;
  bms_window spectral_window;
  bms_dmas_variant dmas_variant;
  const char* channel; /* NULL = "S11" */
  const double* apodization; /* NULL = all ones */
  size_t n_apodization;
  size_t threads;
} bms_recon_params;

/* Defaults: DAS over [-0.15, 0.15]^2 at 2 mm, c/sqrt(7), auto window, pad 4. */
BMS_API void bms_recon_params_default(bms_recon_params* out);

BMS_API bms_status bms_algorithm_parse(const char* name, bms_algorithm* out);
BMS_API bms_status bms_reconstruct(const bms_scan* scan, const bms_recon_params* params, bms_image** out);

BMS_API void bms_image_free(bms_image* image);
BMS_API bms_status bms_image_dims(const bms_image* image, size_t* nx, size_t* ny);
/* Row-major copy of the ny x nx intensity matrix into buffer (capacity in doubles). */
BMS_API bms_status bms_image_copy_intensity(const bms_image* image, double* buffer, size_t capacity);
/* fixed_norm <= 0 selects global-max normalization. */
BMS_API bms_status bms_image_save_png(const bms_image* image, const char* path, double fixed_norm);
BMS_API bms_status bms_image_save_array(const bms_image* image, const char* path);
BMS_API bms_status bms_image_load_array(const char* path, bms_image** out);

/* ---- metrics ---- */

typedef struct bms_quality {
  double peak_x_m;
  double peak_y_m;
  int has_localization_error;
  double localization_error_m;
  double scr_db;
  double fwhm_x_m;
  double fwhm_y_m;
  int clipped;
} bms_quality;

/* truth_center may be NULL for unlabeled images. */
BMS_API bms_status bms_image_evaluate(const bms_image* image, const double* truth_center_xy,
                                      double truth_radius_m, bms_quality* out);
/* Appends one row (writing the header first when the file is new or empty). */
BMS_API bms_status bms_quality_append_csv(const char* csv_path, const char* file_label,
                                          const bms_quality* quality);

/* ---- corpus ---- */

typedef struct bms_corpus_params {
  bms_sim_params sim;
  bms_recon_params recon; /* algorithm field ignored */
  int use_das;
  int use_dmas;
  int use_farfield;
  double png_fixed_norm; /* <= 0: global max */
} bms_corpus_params;

BMS_API void bms_corpus_params_default(bms_corpus_params* out);
BMS_API bms_status bms_corpus_generate(const bms_scenarios* scenarios, const bms_corpus_params* params,
                                       const char* out_dir, size_t* n_images);
/* Reads a labels CSV and writes train.txt / val.txt into out_dir. */
BMS_API bms_status bms_corpus_split(const char* labels_csv, double train_ratio, uint64_t seed,
                                    const char* out_dir, size_t* n_train, size_t* n_val);

#ifdef __cplusplus
}
#endif

#endif /* BMS_BMS_H */
