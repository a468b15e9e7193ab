#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bms/beamform.hpp"
#include "bms/forward_sim.hpp"

namespace bms {

inline constexpr double kTumorDiametersMm[] = {10.0, 15.0, 20.0, 25.0, 30.0};

bool is_supported_diameter(double diameter_mm);

// One scan to synthesize: a healthy phantom geometry plus an optional tumor.
struct Scenario {
  std::string id;
  std::uint32_t geometry_id = 0;
  std::optional<double> tumor_diameter_mm;  // absent = healthy scan
  Point2 tumor_center_m;
  double tumor_reflectivity = 1.0;
};

// Scenario text: "[scenario <id>]" headers followed by key = value lines
// (geometry, diameter_mm, x_m, y_m, reflectivity). '#' starts a comment.
// Errors are FormatError with "<origin>:<line>:" prefixes.
std::vector<Scenario> parse_scenarios(const std::string& text, const std::string& origin = "<scenarios>");
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

// "gen3-like": 20 geometries x 5 diameters, tumor at the same location in all
// five scans of a geometry. Positions are drawn from the seed.
std::vector<Scenario> preset_scenarios(const std::string& name, std::uint64_t seed, double scan_radius_m);

// Deterministic healthy background for a geometry id: weak point scatterers
// inside 70 % of the scan radius.
Phantom healthy_phantom(std::uint32_t geometry_id, std::uint64_t seed, double scan_radius_m,
                        double background_speed_mps = kDefaultSpeedMps);

struct BatchConfig {
  ScanGeometry geometry = ScanGeometry::evenly_spaced(kDefaultAntennaCount, 0.15);
  FrequencyAxis freq{1e9, 9e9, kDefaultFrequencyCount};
  SimulationConfig sim;  // rng_seed ignored; seeds derive from `seed`
  std::uint64_t seed = 0;
  double background_speed_mps = kDefaultSpeedMps;
};

std::string reference_id(std::uint32_t geometry_id);

struct SimulatedScenario {
  FrequencySweepScan target;
  FrequencySweepScan reference;
};

// Target and reference for one scenario. Target noise is seeded from the
// scenario id, reference noise from the geometry id.
SimulatedScenario simulate_scenario(const Scenario& scenario, const BatchConfig& cfg);

struct BatchResult {
  std::vector<std::filesystem::path> targets;
  std::vector<std::filesystem::path> references;
};

// Writes <out>/<id>.{manifest,blob} per scenario and one <out>/ref_gNN pair per geometry.
BatchResult simulate_batch(const std::vector<Scenario>& scenarios, const BatchConfig& cfg,
                           const std::filesystem::path& out_dir);

struct CorpusRow {
  std::string filename;
  std::string algorithm;
  bool tumor_present = false;
  std::optional<double> diameter_mm;
  std::optional<Point2> center_m;
  std::string phantom_id;

  friend bool operator==(const CorpusRow&, const CorpusRow&) = default;
};

struct CorpusConfig {
  BatchConfig batch;
  std::vector<Algorithm> algorithms{Algorithm::das, Algorithm::dmas, Algorithm::farfield};
  ImagingGrid grid = ImagingGrid::centered_square(0.15, 2e-3);
  BeamformerConfig beamformer;
  SpectralWindow window = SpectralWindow::rectangular;
  std::size_t pad_factor = kDefaultPadFactor;
  std::optional<double> png_norm;  // absent = global max
};

inline constexpr const char* kCorpusManifestName = "labels.csv";

// Simulates, calibrates and reconstructs every scenario with every algorithm.
// Writes scans/, images/ and labels.csv under out_dir. An empty scenario list
// writes nothing.
std::vector<CorpusRow> corpus_generate(const std::vector<Scenario>& scenarios, const CorpusConfig& cfg,
                                       const std::filesystem::path& out_dir);

// filename,algorithm,tumor_present,diameter_mm,x_m,y_m,phantom_id
std::string corpus_csv_header();
void write_corpus_manifest(const std::vector<CorpusRow>& rows, const std::filesystem::path& path);
std::vector<CorpusRow> read_corpus_manifest(const std::filesystem::path& path);

struct SplitLists {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

// Seeded shuffle, then the first round(ratio * n) files go to train.
// ratio must lie strictly inside (0, 1).
SplitLists split_corpus(const std::vector<CorpusRow>& rows, double train_ratio, std::uint64_t seed);
void write_split(const SplitLists& split, const std::filesystem::path& out_dir);

}  // namespace bms
