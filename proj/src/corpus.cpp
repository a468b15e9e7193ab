#include "bms/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "bms/error.hpp"
#include "manifest.hpp"

namespace bms {

namespace {

constexpr std::uint64_t kGeometryTag = 0x47454f4dull;  // "GEOM"
constexpr std::uint64_t kPresetTag = 0x50524553ull;    // "PRES"

std::string geometry_name(std::uint32_t geometry_id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "g%02u", geometry_id);
  return buf;
}

Point2 uniform_in_disc(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double a = 2.0 * std::numbers::pi * unit(rng);
  return {r * std::cos(a), r * std::sin(a)};
}

bool valid_id(const std::string& id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::filesystem::path under(const std::filesystem::path& dir, const std::string& name) {
  return dir / name;
}

void write_text_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  detail::ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void check_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
  const auto probe = dir / ".bms_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace

bool is_supported_diameter(double diameter_mm) {
  return std::find(std::begin(kTumorDiametersMm), std::end(kTumorDiametersMm), diameter_mm) !=
         std::end(kTumorDiametersMm);
}

std::vector<Scenario> parse_scenarios(const std::string& text, const std::string& origin) {
  std::vector<Scenario> out;
  std::set<std::string> ids;
  std::set<std::string> seen_keys;
  bool have_x = false;
  bool have_y = false;
  bool have_geometry = false;
  std::size_t header_line = 0;

  auto where = [&origin](std::size_t line) { return origin + ":" + std::to_string(line) + ": "; };
  auto finish = [&]() {
    if (out.empty()) return;
    const auto& s = out.back();
    if (!have_geometry) throw FormatError(where(header_line) + "scenario '" + s.id + "' has no geometry");
    if (s.tumor_diameter_mm && !(have_x && have_y)) {
      throw FormatError(where(header_line) + "scenario '" + s.id + "' has a tumor but no x_m/y_m");
    }
  };

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where(line_no) + "unterminated section header");
      const std::string body = detail::trim(line.substr(1, line.size() - 2));
      const std::string kw = "scenario";
      if (body.rfind(kw, 0) != 0) throw FormatError(where(line_no) + "expected [scenario <id>]");
      const std::string id = detail::trim(body.substr(kw.size()));
      if (!valid_id(id)) throw FormatError(where(line_no) + "invalid scenario id '" + id + "'");
      if (!ids.insert(id).second) throw FormatError(where(line_no) + "duplicate scenario id '" + id + "'");
      finish();
      Scenario fresh;
      fresh.id = id;
      out.push_back(std::move(fresh));
      seen_keys.clear();
      have_x = have_y = have_geometry = false;
      header_line = line_no;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where(line_no) + "expected 'key = value'");
    if (out.empty()) throw FormatError(where(line_no) + "key outside a [scenario] section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!seen_keys.insert(key).second) throw FormatError(where(line_no) + "duplicate key '" + key + "'");
    auto& s = out.back();
    double num = 0.0;
    const bool is_num = detail::parse_double(value, num) && std::isfinite(num);

    if (key == "geometry") {
      std::size_t g = 0;
      if (!detail::parse_count(value, g) || g > 9999) {
        throw FormatError(where(line_no) + "geometry must be an integer in [0, 9999]");
      }
      s.geometry_id = static_cast<std::uint32_t>(g);
      have_geometry = true;
    } else if (key == "diameter_mm") {
      if (value == "none") {
        s.tumor_diameter_mm.reset();
      } else if (is_num && is_supported_diameter(num)) {
        s.tumor_diameter_mm = num;
      } else {
        throw FormatError(where(line_no) + "diameter_mm must be one of 10, 15, 20, 25, 30 or none");
      }
    } else if (key == "x_m" || key == "y_m") {
      if (!is_num) throw FormatError(where(line_no) + key + " must be a number");
      if (key == "x_m") {
        s.tumor_center_m.x = num;
        have_x = true;
      } else {
        s.tumor_center_m.y = num;
        have_y = true;
      }
    } else if (key == "reflectivity") {
      if (!is_num) throw FormatError(where(line_no) + "reflectivity must be a number");
      s.tumor_reflectivity = num;
    } else {
      throw FormatError(where(line_no) + "unknown key '" + key + "'");
    }
  }
  finish();
  return out;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenarios(ss.str(), path.string());
}

std::vector<Scenario> preset_scenarios(const std::string& name, std::uint64_t seed, double scan_radius_m) {
  if (name != "gen3-like") throw ConfigError("unknown preset '" + name + "' (expected gen3-like)");
  std::vector<Scenario> out;
  for (std::uint32_t g = 1; g <= 20; ++g) {
    std::mt19937_64 rng(derive_seed(seed, kPresetTag + g));
    const Point2 center = uniform_in_disc(rng, 0.5 * scan_radius_m);
    for (double d : kTumorDiametersMm) {
      Scenario s;
      s.id = geometry_name(g) + "_d" + std::to_string(static_cast<int>(d));
      s.geometry_id = g;
      s.tumor_diameter_mm = d;
      s.tumor_center_m = center;
      out.push_back(s);
    }
  }
  return out;
}

Phantom healthy_phantom(std::uint32_t geometry_id, std::uint64_t seed, double scan_radius_m,
                        double background_speed_mps) {
  std::mt19937_64 rng(derive_seed(seed, kGeometryTag + geometry_id));
  std::uniform_int_distribution<int> count(4, 8);
  std::uniform_real_distribution<double> refl(0.05, 0.3);
  Phantom p;
  p.id = geometry_name(geometry_id);
  p.background_speed_mps = background_speed_mps;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Scatterer s;
    s.center_m = uniform_in_disc(rng, 0.7 * scan_radius_m);
    s.reflectivity = refl(rng);
    p.scatterers.push_back(s);
  }
  return p;
}

std::string reference_id(std::uint32_t geometry_id) { return "ref_" + geometry_name(geometry_id); }

SimulatedScenario simulate_scenario(const Scenario& scenario, const BatchConfig& cfg) {
  const Phantom healthy = healthy_phantom(scenario.geometry_id, cfg.seed, cfg.geometry.radius_m(),
                                          cfg.background_speed_mps);
  Phantom target = healthy;
  if (scenario.tumor_diameter_mm) {
    Scatterer tumor;
    tumor.center_m = scenario.tumor_center_m;
    tumor.radius_m = *scenario.tumor_diameter_mm / 2000.0;
    tumor.reflectivity = scenario.tumor_reflectivity;
    tumor.is_tumor = true;
    target.scatterers.push_back(tumor);
  }
  SimulationConfig target_cfg = cfg.sim;
  target_cfg.rng_seed = derive_seed(cfg.seed, hash_tag("target:" + scenario.id));
  SimulationConfig reference_cfg = cfg.sim;
  reference_cfg.rng_seed = derive_seed(cfg.seed, hash_tag("reference:" + reference_id(scenario.geometry_id)));
  return SimulatedScenario{simulate_scan(target, cfg.geometry, cfg.freq, target_cfg),
                           simulate_scan(healthy, cfg.geometry, cfg.freq, reference_cfg)};
}

BatchResult simulate_batch(const std::vector<Scenario>& scenarios, const BatchConfig& cfg,
                           const std::filesystem::path& out_dir) {
  BatchResult result;
  if (scenarios.empty()) return result;
  check_output_dir(out_dir);
  std::set<std::uint32_t> written_refs;
  for (const auto& s : scenarios) {
    auto sim = simulate_scenario(s, cfg);
    const auto target_path = under(out_dir, s.id);
    write_scan(sim.target, target_path);
    result.targets.push_back(target_path);
    if (written_refs.insert(s.geometry_id).second) {
      const auto ref_path = under(out_dir, reference_id(s.geometry_id));
      write_scan(sim.reference, ref_path);
      result.references.push_back(ref_path);
    }
  }
  return result;
}

std::vector<CorpusRow> corpus_generate(const std::vector<Scenario>& scenarios, const CorpusConfig& cfg,
                                       const std::filesystem::path& out_dir) {
  std::vector<CorpusRow> rows;
  if (scenarios.empty()) return rows;
  if (cfg.algorithms.empty()) throw ConfigError("corpus needs at least one algorithm");
  check_output_dir(out_dir);
  const auto scan_dir = out_dir / "scans";
  std::set<std::uint32_t> written_refs;

  for (const auto& s : scenarios) {
    auto sim = simulate_scenario(s, cfg.batch);
    write_scan(sim.target, scan_dir / s.id);
    if (written_refs.insert(s.geometry_id).second) {
      write_scan(sim.reference, scan_dir / reference_id(s.geometry_id));
    }
    const auto calibrated = calibrate(sim.target, sim.reference);
    const auto layout = AntennaLayout::for_channel(calibrated.geometry(), cfg.beamformer.channel);
    std::optional<TimeDomainSignalSet> signals;
    for (Algorithm algo : cfg.algorithms) {
      ReconstructedImage image = [&] {
        if (algo == Algorithm::farfield) return farfield_reconstruct(calibrated, cfg.grid, cfg.beamformer);
        if (!signals) signals = to_time_domain(calibrated, cfg.beamformer.channel, cfg.window, cfg.pad_factor);
        const double bw = calibrated.freq().bandwidth_hz();
        return algo == Algorithm::das ? das_reconstruct(*signals, layout, cfg.grid, cfg.beamformer, bw)
                                      : dmas_reconstruct(*signals, layout, cfg.grid, cfg.beamformer, bw);
      }();
      const std::string filename = "images/" + s.id + "_" + to_string(algo) + ".png";
      export_png(image, out_dir / filename, cfg.png_norm);
      const auto& label = calibrated.label();
      rows.push_back(CorpusRow{filename, to_string(algo), label.tumor_present, label.tumor_diameter_mm,
                               label.tumor_center_m, label.phantom_id});
    }
  }
  write_corpus_manifest(rows, out_dir / kCorpusManifestName);
  return rows;
}

std::string corpus_csv_header() { return "filename,algorithm,tumor_present,diameter_mm,x_m,y_m,phantom_id"; }

void write_corpus_manifest(const std::vector<CorpusRow>& rows, const std::filesystem::path& path) {
  using detail::format_double;
  std::vector<std::string> lines{corpus_csv_header()};
  for (const auto& r : rows) {
    lines.push_back(r.filename + "," + r.algorithm + "," + (r.tumor_present ? "1" : "0") + "," +
                    (r.diameter_mm ? format_double(*r.diameter_mm) : "") + "," +
                    (r.center_m ? format_double(r.center_m->x) : "") + "," +
                    (r.center_m ? format_double(r.center_m->y) : "") + "," + r.phantom_id);
  }
  write_text_lines(path, lines);
}

std::vector<CorpusRow> read_corpus_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus manifest " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != corpus_csv_header()) {
    throw FormatError(path.string() + ":1: unexpected corpus manifest header");
  }
  std::vector<CorpusRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 7) throw FormatError(where + "expected 7 columns");
    CorpusRow r;
    r.filename = f[0];
    r.algorithm = f[1];
    if (f[2] != "0" && f[2] != "1") throw FormatError(where + "tumor_present must be 0 or 1");
    r.tumor_present = f[2] == "1";
    double v = 0.0;
    if (!f[3].empty()) {
      if (!detail::parse_double(f[3], v)) throw FormatError(where + "bad diameter_mm");
      r.diameter_mm = v;
    }
    if (!f[4].empty() || !f[5].empty()) {
      Point2 c;
      if (!detail::parse_double(f[4], c.x) || !detail::parse_double(f[5], c.y)) {
        throw FormatError(where + "bad tumor position");
      }
      r.center_m = c;
    }
    r.phantom_id = f[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

SplitLists split_corpus(const std::vector<CorpusRow>& rows, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ConfigError("split ratio must lie strictly between 0 and 1");
  }
  std::vector<std::string> names;
  names.reserve(rows.size());
  for (const auto& r : rows) names.push_back(r.filename);
  std::mt19937_64 rng(seed);
  std::shuffle(names.begin(), names.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(names.size())));
  SplitLists out;
  out.train.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(names.begin() + static_cast<std::ptrdiff_t>(n_train), names.end());
  return out;
}

void write_split(const SplitLists& split, const std::filesystem::path& out_dir) {
  write_text_lines(out_dir / "train.txt", split.train);
  write_text_lines(out_dir / "val.txt", split.val);
}

}  // namespace bms
