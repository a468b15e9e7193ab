// bms: command-line front end over the bmsrecon C API.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bms/bms.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError {
  std::string message;
};

struct RuntimeError {
  std::string message;
};

void check(bms_status status, const std::string& context) {
  if (status != BMS_OK) {
    throw RuntimeError{context + ": " + bms_status_name(status) + ": " + bms_last_error()};
  }
}

void require_input(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) throw RuntimeError{std::string(what) + " not found: " + path};
}

void require_scan(const std::string& stem, const char* what) {
  std::filesystem::path p(stem);
  if (p.extension() == ".manifest" || p.extension() == ".blob") p.replace_extension();
  require_input(p.string() + ".manifest", what);
}

// RAII owners for the C handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(Handle&& other) noexcept : ptr(std::exchange(other.ptr, nullptr)) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};
using ScanHandle = Handle<bms_scan, bms_scan_free>;
using ImageHandle = Handle<bms_image, bms_image_free>;
using ScenarioHandle = Handle<bms_scenarios, bms_scenarios_free>;

struct SimFlags {
  std::string scenarios;
  std::string preset;
  bms_sim_params params{};
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  bms_sim_params_default(&f.params);
  auto* scen = cmd->add_option("--scenarios", f.scenarios, "Scenario file");
  auto* pre = cmd->add_option("--preset", f.preset, "Scenario preset (gen3-like)");
  scen->excludes(pre);
  cmd->add_option("--seed", f.params.seed, "Master random seed");
  cmd->add_option("--n-antennas", f.params.n_antennas, "Antenna positions")->capture_default_str();
  cmd->add_option("--radius", f.params.radius_m, "Scan-circle radius [m]")->capture_default_str();
  cmd->add_option("--span", f.params.rotation_span_deg, "Rotation span [deg]")->capture_default_str();
  cmd->add_option("--f-start", f.params.f_start_hz, "Start frequency [Hz]")->capture_default_str();
  cmd->add_option("--f-stop", f.params.f_stop_hz, "Stop frequency [Hz]")->capture_default_str();
  cmd->add_option("--n-frequencies", f.params.n_frequencies, "Frequency points")->capture_default_str();
  cmd->add_option("--noise", f.params.noise_sigma, "Complex noise std per bin")->capture_default_str();
  cmd->add_option("--spreading", f.params.spreading_exponent, "Amplitude decay exponent")->capture_default_str();
  cmd->add_option("--background-speed", f.params.background_speed_mps, "Phantom wave speed [m/s]");
  cmd->add_flag("--s21", f.params.include_s21, "Also simulate the S21 channel");
}

ScenarioHandle load_scenarios(const SimFlags& f) {
  ScenarioHandle h;
  if (!f.preset.empty()) {
    check(bms_scenarios_preset(f.preset.c_str(), f.params.seed, f.params.radius_m, &h.ptr), "preset");
  } else if (!f.scenarios.empty()) {
    check(bms_scenarios_load(f.scenarios.c_str(), &h.ptr), "scenarios");
  } else {
    throw UsageError{"one of --scenarios or --preset is required"};
  }
  return h;
}

struct ReconFlags {
  std::string algo = "das";
  std::string grid;
  std::string spectral_window = "rect";
  std::string dmas_variant = "sqrt";
  std::string channel = "S11";
  bms_recon_params params{};
};

void add_recon_flags(CLI::App* cmd, ReconFlags& f, bool with_algo) {
  bms_recon_params_default(&f.params);
  if (with_algo) cmd->add_option("--algo", f.algo, "das | dmas | ff")->capture_default_str();
  cmd->add_option("--grid", f.grid, "x_min,x_max,y_min,y_max,nx,ny (default: +-0.15 m at 2 mm)");
  cmd->add_option("--speed", f.params.speed_mps, "Assumed propagation speed [m/s]")->capture_default_str();
  cmd->add_option("--window", f.params.window_samples, "Integration window in samples (0 = from bandwidth)");
  cmd->add_option("--pad", f.params.pad_factor, "Zero-padding factor")->capture_default_str();
  cmd->add_option("--spectral-window", f.spectral_window, "rect | hann")->capture_default_str();
  cmd->add_option("--dmas-variant", f.dmas_variant, "sqrt | raw")->capture_default_str();
  cmd->add_option("--channel", f.channel, "S11 | S21")->capture_default_str();
  cmd->add_option("--threads", f.params.threads, "Worker threads")->capture_default_str();
}

void finalize_recon(ReconFlags& f, bool with_algo) {
  if (with_algo && bms_algorithm_parse(f.algo.c_str(), &f.params.algorithm) != BMS_OK) {
    throw UsageError{"unknown algorithm '" + f.algo + "' (expected das, dmas or ff)"};
  }
  if (!f.grid.empty()) {
    std::vector<std::string> parts;
    std::stringstream ss(f.grid);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 6) throw UsageError{"--grid needs x_min,x_max,y_min,y_max,nx,ny"};
    try {
      f.params.x_min_m = std::stod(parts[0]);
      f.params.x_max_m = std::stod(parts[1]);
      f.params.y_min_m = std::stod(parts[2]);
      f.params.y_max_m = std::stod(parts[3]);
      f.params.nx = std::stoul(parts[4]);
      f.params.ny = std::stoul(parts[5]);
    } catch (const std::exception&) {
      throw UsageError{"--grid has a non-numeric field: " + f.grid};
    }
  }
  if (f.spectral_window == "rect") {
    f.params.spectral_window = BMS_WINDOW_RECTANGULAR;
  } else if (f.spectral_window == "hann") {
    f.params.spectral_window = BMS_WINDOW_RAISED_COSINE;
  } else {
    throw UsageError{"--spectral-window must be rect or hann"};
  }
  if (f.dmas_variant == "sqrt") {
    f.params.dmas_variant = BMS_DMAS_SIGNED_SQRT;
  } else if (f.dmas_variant == "raw") {
    f.params.dmas_variant = BMS_DMAS_RAW_PRODUCT;
  } else {
    throw UsageError{"--dmas-variant must be sqrt or raw"};
  }
  f.params.channel = f.channel.c_str();
}

double parse_norm(const std::string& norm) {
  if (norm == "global") return 0.0;
  try {
    std::size_t used = 0;
    const double v = std::stod(norm, &used);
    if (used == norm.size() && v > 0.0) return v;
  } catch (const std::exception&) {
  }
  throw UsageError{"--norm must be 'global' or a positive number"};
}

void evaluate_and_record(const bms_image* image, const bms_scan_info* info, const std::string& label,
                         const std::string& csv) {
  bms_quality q{};
  double center[2] = {0.0, 0.0};
  const double* truth = nullptr;
  double radius = 0.0;
  if (info && info->has_center) {
    center[0] = info->tumor_x_m;
    center[1] = info->tumor_y_m;
    truth = center;
    radius = info->has_diameter ? info->tumor_diameter_mm / 2000.0 : 0.0;
  }
  check(bms_image_evaluate(image, truth, radius, &q), "metrics");
  check(bms_quality_append_csv(csv.c_str(), label.c_str(), &q), "metrics CSV");
  std::printf("peak (%.4f, %.4f) m", q.peak_x_m, q.peak_y_m);
  if (q.has_localization_error) std::printf("  loc_err %.4f m", q.localization_error_m);
  std::printf("  scr %.2f dB  fwhm %.4f/%.4f m%s\n", q.scr_db, q.fwhm_x_m, q.fwhm_y_m,
              q.clipped ? " (clipped)" : "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microwave breast-imaging reconstruction toolkit"};
  app.require_subcommand(1);

  SimFlags sim_flags;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Synthesize target + reference scans");
  add_sim_flags(simulate, sim_flags);
  simulate->add_option("--out", sim_out, "Output directory")->required();

  std::string cal_target, cal_reference, cal_out;
  auto* calib = app.add_subcommand("calibrate", "Subtract a reference scan from a target scan");
  calib->add_option("--target", cal_target, "Target scan")->required();
  calib->add_option("--reference", cal_reference, "Reference scan")->required();
  calib->add_option("--out", cal_out, "Output scan stem")->required();

  ReconFlags rec_flags;
  std::string rec_input, rec_reference, rec_out, rec_norm = "global", rec_metrics;
  auto* recon = app.add_subcommand("reconstruct", "Reconstruct an image from a scan");
  recon->add_option("--input", rec_input, "Scan (manifest stem)")->required();
  recon->add_option("--reference", rec_reference, "Optional reference scan for calibration");
  recon->add_option("--out", rec_out, "Output stem for .png / .manifest / .blob")->required();
  recon->add_option("--norm", rec_norm, "PNG normalization: global or a fixed value")->capture_default_str();
  recon->add_option("--metrics", rec_metrics, "Metrics CSV (default <out>.metrics.csv)");
  add_recon_flags(recon, rec_flags, true);

  std::string ev_image, ev_metrics, ev_label;
  std::vector<double> ev_truth;
  double ev_radius = 0.0;
  auto* eval = app.add_subcommand("evaluate", "Compute quality metrics for an image array");
  eval->add_option("--image", ev_image, "Image array stem")->required();
  eval->add_option("--truth", ev_truth, "Ground-truth center x y [m]")->expected(2);
  eval->add_option("--truth-radius", ev_radius, "Ground-truth radius [m]");
  eval->add_option("--metrics", ev_metrics, "Metrics CSV")->required();
  eval->add_option("--label", ev_label, "File label in the CSV (default: image stem)");

  SimFlags corpus_sim;
  ReconFlags corpus_rec;
  std::string corpus_out, corpus_algos = "das,dmas,ff", corpus_norm = "global";
  std::optional<double> corpus_split;
  auto* corpus = app.add_subcommand("corpus", "Generate a labeled image corpus");
  add_sim_flags(corpus, corpus_sim);
  add_recon_flags(corpus, corpus_rec, false);
  corpus->add_option("--out", corpus_out, "Output directory")->required();
  corpus->add_option("--algos", corpus_algos, "Comma-separated algorithms")->capture_default_str();
  corpus->add_option("--norm", corpus_norm, "PNG normalization: global or a fixed value");
  corpus->add_option("--split", corpus_split, "Train fraction in (0,1); writes train.txt/val.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) {
      auto scenarios = load_scenarios(sim_flags);
      size_t n_targets = 0, n_refs = 0;
      check(bms_simulate_batch(scenarios.ptr, &sim_flags.params, sim_out.c_str(), &n_targets, &n_refs),
            "simulate");
      std::printf("wrote %zu target scans and %zu reference scans to %s\n", n_targets, n_refs, sim_out.c_str());
    } else if (*calib) {
      require_scan(cal_target, "target scan");
      require_scan(cal_reference, "reference scan");
      ScanHandle target, reference, out;
      check(bms_scan_load(cal_target.c_str(), &target.ptr), "load target");
      check(bms_scan_load(cal_reference.c_str(), &reference.ptr), "load reference");
      check(bms_scan_calibrate(target.ptr, reference.ptr, &out.ptr), "calibrate");
      check(bms_scan_save(out.ptr, cal_out.c_str()), "save");
    } else if (*recon) {
      finalize_recon(rec_flags, true);
      const double norm = parse_norm(rec_norm);
      require_scan(rec_input, "input scan");
      if (!rec_reference.empty()) require_scan(rec_reference, "reference scan");
      ScanHandle scan;
      check(bms_scan_load(rec_input.c_str(), &scan.ptr), "load input");
      if (!rec_reference.empty()) {
        ScanHandle reference, calibrated;
        check(bms_scan_load(rec_reference.c_str(), &reference.ptr), "load reference");
        check(bms_scan_calibrate(scan.ptr, reference.ptr, &calibrated.ptr), "calibrate");
        std::swap(scan.ptr, calibrated.ptr);
      }
      bms_scan_info info{};
      check(bms_scan_get_info(scan.ptr, &info), "scan info");
      ImageHandle image;
      check(bms_reconstruct(scan.ptr, &rec_flags.params, &image.ptr), "reconstruct");
      check(bms_image_save_png(image.ptr, (rec_out + ".png").c_str(), norm), "png");
      check(bms_image_save_array(image.ptr, rec_out.c_str()), "image array");
      const std::string csv = rec_metrics.empty() ? rec_out + ".metrics.csv" : rec_metrics;
      evaluate_and_record(image.ptr, &info, std::filesystem::path(rec_out).filename().string() + ".png", csv);
    } else if (*eval) {
      require_scan(ev_image, "image array");
      ImageHandle image;
      check(bms_image_load_array(ev_image.c_str(), &image.ptr), "load image");
      bms_scan_info truth{};
      if (ev_truth.size() == 2) {
        truth.has_center = 1;
        truth.tumor_x_m = ev_truth[0];
        truth.tumor_y_m = ev_truth[1];
        truth.has_diameter = ev_radius > 0.0;
        truth.tumor_diameter_mm = 2000.0 * ev_radius;
      }
      evaluate_and_record(image.ptr, &truth, ev_label.empty() ? ev_image : ev_label, ev_metrics);
    } else if (*corpus) {
      if (corpus_split && !(*corpus_split > 0.0 && *corpus_split < 1.0)) {
        throw UsageError{"--split must lie strictly between 0 and 1"};
      }
      finalize_recon(corpus_rec, false);
      bms_corpus_params params;
      bms_corpus_params_default(&params);
      params.sim = corpus_sim.params;
      params.recon = corpus_rec.params;
      params.png_fixed_norm = parse_norm(corpus_norm);
      params.use_das = params.use_dmas = params.use_farfield = 0;
      std::stringstream ss(corpus_algos);
      std::string name;
      while (std::getline(ss, name, ',')) {
        bms_algorithm a;
        if (bms_algorithm_parse(name.c_str(), &a) != BMS_OK) {
          throw UsageError{"unknown algorithm '" + name + "' (expected das, dmas or ff)"};
        }
        (a == BMS_ALGO_DAS ? params.use_das : a == BMS_ALGO_DMAS ? params.use_dmas : params.use_farfield) = 1;
      }
      auto scenarios = load_scenarios(corpus_sim);
      size_t n_images = 0;
      check(bms_corpus_generate(scenarios.ptr, &params, corpus_out.c_str(), &n_images), "corpus");
      std::printf("wrote %zu images to %s\n", n_images, corpus_out.c_str());
      if (corpus_split && n_images > 0) {
        size_t n_train = 0, n_val = 0;
        const auto labels = (std::filesystem::path(corpus_out) / "labels.csv").string();
        check(bms_corpus_split(labels.c_str(), *corpus_split, corpus_sim.params.seed, corpus_out.c_str(),
                               &n_train, &n_val),
              "split");
        std::printf("split: %zu train / %zu val\n", n_train, n_val);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.message << "\n";
    return kExitUsage;
  } catch (const RuntimeError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
