/* Exercises the C interface from C. */
#define _POSIX_C_SOURCE 200809L
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "bms/bms.h"

static int failures = 0;

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "%s:%d: CHECK failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                       \
    }                                                                   \
  } while (0)

#define CHECK_OK(expr)                                                            \
  do {                                                                            \
    bms_status st_ = (expr);                                                      \
    if (st_ != BMS_OK) {                                                          \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #expr,         \
              bms_status_name(st_), bms_last_error());                            \
      ++failures;                                                                 \
    }                                                                             \
  } while (0)

static char root[256];

static const char* path_in(const char* name) {
  static char buf[4][512];
  static int slot = 0;
  slot = (slot + 1) % 4;
  snprintf(buf[slot], sizeof buf[slot], "%s/%s", root, name);
  return buf[slot];
}

int main(void) {
  snprintf(root, sizeof root, "/tmp/bms_capi_XXXXXX");
  if (!mkdtemp(root)) return 2;

  /* errors */
  bms_scan* scan = NULL;
  CHECK(bms_scan_load(path_in("missing"), &scan) == BMS_ERR_IO);
  CHECK(strstr(bms_last_error(), "missing") != NULL);
  CHECK(scan == NULL);
  CHECK(bms_scan_load(NULL, &scan) == BMS_ERR_INVALID_ARGUMENT);
  bms_algorithm algo;
  CHECK(bms_algorithm_parse("nope", &algo) == BMS_ERR_CONFIG);
  CHECK_OK(bms_algorithm_parse("ff", &algo));
  CHECK(algo == BMS_ALGO_FARFIELD);
  CHECK(strcmp(bms_status_name(BMS_ERR_DIMENSION), "") != 0);
  bms_scan_free(NULL);
  bms_image_free(NULL);
  bms_scenarios_free(NULL);

  /* scenarios */
  FILE* f = fopen(path_in("scen.txt"), "w");
  fputs("[scenario t1]\ngeometry = 2\ndiameter_mm = 10\nx_m = 0.03\ny_m = -0.02\n", f);
  fclose(f);
  bms_scenarios* scen = NULL;
  CHECK_OK(bms_scenarios_load(path_in("scen.txt"), &scen));
  CHECK(bms_scenarios_count(scen) == 1);

  f = fopen(path_in("bad.txt"), "w");
  fputs("[scenario t1]\ngeometry = 2\ndiameter_mm = 11\n", f);
  fclose(f);
  bms_scenarios* bad = NULL;
  CHECK(bms_scenarios_load(path_in("bad.txt"), &bad) == BMS_ERR_FORMAT);
  CHECK(strstr(bms_last_error(), ":3:") != NULL);

  bms_scenarios* preset = NULL;
  CHECK_OK(bms_scenarios_preset("gen3-like", 1, 0.15, &preset));
  CHECK(bms_scenarios_count(preset) == 100);
  bms_scenarios_free(preset);

  /* simulate */
  bms_sim_params sim;
  bms_sim_params_default(&sim);
  CHECK(sim.n_antennas == 72 && sim.n_frequencies == 1001);
  sim.n_antennas = 24;
  sim.n_frequencies = 201;
  size_t nt = 0, nr = 0;
  CHECK_OK(bms_simulate_batch(scen, &sim, path_in("scans"), &nt, &nr));
  CHECK(nt == 1 && nr == 1);

  bms_scan* target = NULL;
  bms_scan* reference = NULL;
  CHECK_OK(bms_scan_load(path_in("scans/t1"), &target));
  CHECK_OK(bms_scan_load(path_in("scans/ref_g02.manifest"), &reference));
  bms_scan_info info;
  CHECK_OK(bms_scan_get_info(target, &info));
  CHECK(info.n_antennas == 24 && info.n_frequencies == 201);
  CHECK(info.tumor_present && info.has_diameter && info.tumor_diameter_mm == 10.0);
  CHECK(info.has_center && info.tumor_x_m == 0.03);

  bms_scan* cal = NULL;
  CHECK_OK(bms_scan_calibrate(target, reference, &cal));
  CHECK(bms_scan_calibrate(target, NULL, &cal) == BMS_ERR_INVALID_ARGUMENT);
  CHECK_OK(bms_scan_save(cal, path_in("cal")));

  /* incompatible reference */
  sim.n_frequencies = 101;
  CHECK_OK(bms_simulate_batch(scen, &sim, path_in("other"), NULL, NULL));
  bms_scan* other = NULL;
  CHECK_OK(bms_scan_load(path_in("other/ref_g02"), &other));
  bms_scan* junk = NULL;
  CHECK(bms_scan_calibrate(target, other, &junk) == BMS_ERR_INCOMPATIBLE);
  CHECK(junk == NULL);

  /* reconstruct + evaluate */
  bms_recon_params rp;
  bms_recon_params_default(&rp);
  rp.x_min_m = -0.06;
  rp.x_max_m = 0.06;
  rp.y_min_m = -0.06;
  rp.y_max_m = 0.06;
  rp.nx = 60;
  rp.ny = 60;
  for (int a = 0; a < 3; ++a) {
    rp.algorithm = (bms_algorithm)a;
    bms_image* img = NULL;
    CHECK_OK(bms_reconstruct(cal, &rp, &img));
    size_t nx = 0, ny = 0;
    CHECK_OK(bms_image_dims(img, &nx, &ny));
    CHECK(nx == 60 && ny == 60);
    double truth[2] = {0.03, -0.02};
    bms_quality q;
    CHECK_OK(bms_image_evaluate(img, truth, 0.005, &q));
    CHECK(q.has_localization_error);
    CHECK(q.localization_error_m <= 2 * sqrt(2.0) * 0.002);
    CHECK_OK(bms_quality_append_csv(path_in("m.csv"), "img", &q));

    double* buf = malloc(sizeof(double) * 3600);
    CHECK(bms_image_copy_intensity(img, buf, 10) == BMS_ERR_INVALID_ARGUMENT);
    CHECK_OK(bms_image_copy_intensity(img, buf, 3600));
    CHECK_OK(bms_image_save_array(img, path_in("arr")));
    CHECK_OK(bms_image_save_png(img, path_in("img.png"), 0.0));
    bms_image* back = NULL;
    CHECK_OK(bms_image_load_array(path_in("arr"), &back));
    double* buf2 = malloc(sizeof(double) * 3600);
    CHECK_OK(bms_image_copy_intensity(back, buf2, 3600));
    CHECK(memcmp(buf, buf2, sizeof(double) * 3600) == 0);
    free(buf);
    free(buf2);
    bms_image_free(back);
    bms_image_free(img);
  }
  rp.channel = "S21";
  bms_image* none = NULL;
  CHECK(bms_reconstruct(cal, &rp, &none) == BMS_ERR_FORMAT);
  rp.channel = NULL;

  /* metrics CSV: header once, then three rows */
  f = fopen(path_in("m.csv"), "r");
  char line[512];
  int lines = 0;
  while (f && fgets(line, sizeof line, f)) ++lines;
  if (f) fclose(f);
  CHECK(lines == 4);

  /* corpus + split */
  bms_corpus_params cp;
  bms_corpus_params_default(&cp);
  cp.sim = sim;
  cp.recon = rp;
  cp.use_dmas = 0;
  size_t n_images = 0;
  CHECK_OK(bms_corpus_generate(scen, &cp, path_in("corpus"), &n_images));
  CHECK(n_images == 2);
  size_t ntr = 0, nv = 0;
  CHECK_OK(bms_corpus_split(path_in("corpus/labels.csv"), 0.5, 1, path_in("corpus"), &ntr, &nv));
  CHECK(ntr == 1 && nv == 1);
  CHECK(bms_corpus_split(path_in("corpus/labels.csv"), 1.0, 1, path_in("corpus"), &ntr, &nv) == BMS_ERR_CONFIG);

  bms_scan_free(other);
  bms_scan_free(cal);
  bms_scan_free(target);
  bms_scan_free(reference);
  bms_scenarios_free(scen);

  char cmd[300];
  snprintf(cmd, sizeof cmd, "rm -rf '%s'", root);
  if (system(cmd) != 0) fprintf(stderr, "cleanup failed\n");

  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  else printf("all C API checks passed\n");
  return failures ? 1 : 0;
}
