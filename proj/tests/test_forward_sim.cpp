#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bms/error.hpp"
#include "bms/forward_sim.hpp"
#include "support.hpp"

using namespace bms;

namespace {

const FrequencyAxis kFreq(1e9, 9e9, 101);

Phantom single(Point2 p, double rho = 1.0, double radius = 0.0, bool tumor = false) {
  Phantom ph;
  ph.scatterers.push_back({p, rho, radius, tumor});
  return ph;
}

Point2 random_inside(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  for (;;) {
    Point2 p{u(rng), u(rng)};
    if (std::hypot(p.x, p.y) < r) return p;
  }
}

}  // namespace

TEST_CASE("empty phantom gives an all-zero scan") {
  auto s = simulate_scan(Phantom{}, ScanGeometry::evenly_spaced(8, 0.15), kFreq, {});
  for (auto v : s.channel("S11").data()) CHECK(v == cplx(0.0, 0.0));
  CHECK_FALSE(s.label().tumor_present);
}

TEST_CASE("scatterer at the center gives identical rows") {
  auto s = simulate_scan(single({0.0, 0.0}), ScanGeometry::evenly_spaced(16, 0.15), kFreq, {});
  const auto& m = s.channel("S11");
  for (std::size_t a = 1; a < m.rows(); ++a)
    for (std::size_t k = 0; k < m.cols(); ++k) CHECK(std::abs(m(a, k) - m(0, k)) <= 1e-12 * std::abs(m(0, k)));
}

TEST_CASE("phase matches a scalar oracle") {
  std::mt19937_64 rng(21);
  auto g = ScanGeometry::evenly_spaced(72, 0.15);
  const Point2 p{0.031, -0.047};
  Phantom ph = single(p, 0.7);
  SimulationConfig cfg;
  cfg.spreading_exponent = 0.0;
  auto s = simulate_scan(ph, g, kFreq, cfg).channel("S11");
  std::uniform_int_distribution<std::size_t> ua(0, 71), uf(0, 100);
  for (int i = 0; i < 5; ++i) {
    const std::size_t a = ua(rng), k = uf(rng);
    const double th = g.angles_deg()[a] * std::numbers::pi / 180.0;
    const double dx = 0.15 * std::cos(th) - p.x, dy = 0.15 * std::sin(th) - p.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double f = 1e9 + 8e9 * static_cast<double>(k) / 100.0;
    const cplx want = 0.7 * std::exp(cplx(0.0, -2.0 * std::numbers::pi * f * 2.0 * d / ph.background_speed_mps));
    CHECK(std::abs(s(a, k) - want) <= 1e-9);
  }
}

TEST_CASE("amplitude follows the spreading law with a distance floor") {
  auto g = ScanGeometry::evenly_spaced(4, 0.15, 270.0);
  SimulationConfig cfg;
  cfg.spreading_exponent = 2.0;
  auto s = simulate_scan(single({0.05, 0.0}, 2.0), g, kFreq, cfg).channel("S11");
  CHECK(std::abs(s(0, 3)) == doctest::Approx(2.0 / (0.1 * 0.1)).epsilon(1e-12));

  // A scatterer 0.1 mm from an antenna is clamped to the 1 mm floor.
  auto t = simulate_scan(single({0.1499, 0.0}), g, kFreq, cfg).channel("S11");
  CHECK(std::abs(t(0, 0)) == doctest::Approx(1e6).epsilon(1e-12));
}

TEST_CASE("superposition over scatterer sets") {
  std::mt19937_64 rng(22);
  auto g = ScanGeometry::evenly_spaced(24, 0.15);
  std::uniform_real_distribution<double> u(0.1, 1.0), ur(0.0, 0.01);
  for (int trial = 0; trial < 5; ++trial) {
    Phantom a, b, ab;
    for (int i = 0; i < 3; ++i) a.scatterers.push_back({random_inside(rng, 0.12), u(rng), ur(rng)});
    for (int i = 0; i < 2; ++i) b.scatterers.push_back({random_inside(rng, 0.12), u(rng), ur(rng)});
    ab.scatterers = a.scatterers;
    ab.scatterers.insert(ab.scatterers.end(), b.scatterers.begin(), b.scatterers.end());
    SimulationConfig cfg;
    cfg.include_s21 = true;
    auto sa = simulate_scan(a, g, kFreq, cfg), sb = simulate_scan(b, g, kFreq, cfg),
         sab = simulate_scan(ab, g, kFreq, cfg);
    for (const char* ch : {"S11", "S21"}) {
      const auto &ma = sa.channel(ch), &mb = sb.channel(ch), &mab = sab.channel(ch);
      for (std::size_t j = 0; j < mab.size(); ++j)
        CHECK(std::abs(mab.data()[j] - (ma.data()[j] + mb.data()[j])) <= 1e-12);
    }
  }
}

TEST_CASE("rotating the phantom by one step shifts antenna rows") {
  const std::size_t n = 36;
  auto g = ScanGeometry::evenly_spaced(n, 0.15, 360.0 * static_cast<double>(n - 1) / static_cast<double>(n));
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  std::mt19937_64 rng(23);
  Phantom ph, rot;
  for (int i = 0; i < 3; ++i) {
    const Point2 p = random_inside(rng, 0.1);
    ph.scatterers.push_back({p, 1.0 + i});
    rot.scatterers.push_back({{p.x * std::cos(step) - p.y * std::sin(step), p.x * std::sin(step) + p.y * std::cos(step)},
                              1.0 + i});
  }
  auto s = simulate_scan(ph, g, kFreq, {}).channel("S11");
  auto r = simulate_scan(rot, g, kFreq, {}).channel("S11");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t k = 0; k < kFreq.n_points(); ++k)
      CHECK(std::abs(r((a + 1) % n, k) - s(a, k)) <= 1e-9 * std::max(1.0, std::abs(s(a, k))));
}

TEST_CASE("finite-radius scatterers expand to nine sub-points") {
  auto pts = expand_scatterer({{0.01, 0.02}, 0.9, 0.005});
  REQUIRE(pts.size() == 9);
  double total = 0.0;
  for (const auto& p : pts) total += p.reflectivity;
  CHECK(total == doctest::Approx(0.9));
  CHECK(pts[0].center_m == Point2{0.01, 0.02});
  for (std::size_t i = 1; i < 9; ++i) CHECK(distance(pts[i].center_m, {0.01, 0.02}) == doctest::Approx(0.005));
  CHECK(expand_scatterer({{0.0, 0.0}, 1.0, 0.0}).size() == 1);
}

TEST_CASE("S21 pairs each transmitter with the opposite receiver") {
  const std::size_t n = 8;
  auto g = ScanGeometry::evenly_spaced(n, 0.15);
  const Point2 p{0.02, 0.03};
  SimulationConfig cfg;
  cfg.include_s21 = true;
  cfg.spreading_exponent = 1.0;
  auto s = simulate_scan(single(p), g, kFreq, cfg);
  const double v = Phantom{}.background_speed_mps;
  for (std::size_t a = 0; a < n; ++a) {
    const double dt = distance(g.antenna_position(a), p), dr = distance(g.antenna_position((a + 4) % n), p);
    const double f = kFreq.frequency_hz(50);
    const cplx want = std::polar(1.0 / std::sqrt(dt * dr), -2.0 * std::numbers::pi * f * (dt + dr) / v);
    CHECK(std::abs(s.channel("S21")(a, 50) - want) <= 1e-9);
  }
}

TEST_CASE("simulation is deterministic under the seed") {
  auto g = ScanGeometry::evenly_spaced(12, 0.15);
  SimulationConfig cfg;
  cfg.noise_sigma = 0.1;
  cfg.rng_seed = 99;
  cfg.include_s21 = true;
  auto ph = single({0.01, 0.02}, 1.0, 0.005, true);
  CHECK(simulate_scan(ph, g, kFreq, cfg) == simulate_scan(ph, g, kFreq, cfg));
  auto other = cfg;
  other.rng_seed = 100;
  CHECK_FALSE(simulate_scan(ph, g, kFreq, cfg) == simulate_scan(ph, g, kFreq, other));
}

TEST_CASE("label comes from the tumor scatterer") {
  Phantom ph = single({0.01, 0.02}, 1.0, 0.0075, true);
  ph.id = "g07";
  auto s = simulate_scan(ph, ScanGeometry::evenly_spaced(4, 0.15), kFreq, {});
  CHECK(s.label().tumor_present);
  CHECK(*s.label().tumor_diameter_mm == doctest::Approx(15.0));
  CHECK(*s.label().tumor_center_m == Point2{0.01, 0.02});
  CHECK(s.label().phantom_id == "g07");
}

TEST_CASE("invalid phantoms and configs are rejected") {
  auto g = ScanGeometry::evenly_spaced(4, 0.15);
  CHECK_THROWS_AS(simulate_scan(single({0.2, 0.0}), g, kFreq, {}), ConfigError);
  Phantom slow = single({0.0, 0.0});
  slow.background_speed_mps = 1e6;
  CHECK_THROWS_AS(simulate_scan(slow, g, kFreq, {}), ConfigError);
  SimulationConfig bad;
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(simulate_scan(single({0.0, 0.0}), g, kFreq, bad), ConfigError);
}

TEST_CASE("reference pair") {
  auto g = ScanGeometry::evenly_spaced(24, 0.15);
  Scatterer tumor{{0.03, -0.02}, 1.0, 0.005, true};
  SimulationConfig cfg;

  SUBCASE("tumor only: calibration returns the tumor scan") {
    Phantom ph;
    ph.scatterers = {tumor};
    auto pair = make_reference_pair(ph, g, kFreq, cfg);
    auto cal = calibrate(pair.target, pair.reference);
    CHECK(cal == simulate_scan(ph, g, kFreq, cfg));
  }

  SUBCASE("background cancels within 1e-12") {
    std::mt19937_64 rng(24);
    Phantom ph;
    for (int i = 0; i < 5; ++i) ph.scatterers.push_back({random_inside(rng, 0.1), 0.5});
    ph.scatterers.push_back(tumor);
    Phantom alone;
    alone.scatterers = {tumor};
    auto cal = calibrate(make_reference_pair(ph, g, kFreq, cfg).target, make_reference_pair(ph, g, kFreq, cfg).reference);
    auto want = simulate_scan(alone, g, kFreq, cfg);
    CHECK(testing::max_abs_diff(cal.channel("S11"), want.channel("S11")) <= 1e-12);
  }

  SUBCASE("needs exactly one tumor") {
    Phantom none;
    none.scatterers = {{{0.0, 0.0}, 1.0}};
    CHECK_THROWS_AS(make_reference_pair(none, g, kFreq, cfg), ConfigError);
    Phantom two;
    two.scatterers = {tumor, tumor};
    CHECK_THROWS_AS(make_reference_pair(two, g, kFreq, cfg), ConfigError);
  }

  SUBCASE("independent noise: calibrated residual RMS is sqrt(2) sigma") {
    Phantom ph;
    ph.scatterers = {tumor, {{-0.04, 0.01}, 0.3}};
    Phantom alone;
    alone.scatterers = {tumor};
    const double sigma = 0.05;
    auto small = ScanGeometry::evenly_spaced(8, 0.15);
    FrequencyAxis f(1e9, 9e9, 51);
    auto clean = simulate_scan(alone, small, f, {}).channel("S11");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
      SimulationConfig noisy;
      noisy.noise_sigma = sigma;
      noisy.rng_seed = seed;
      auto pair = make_reference_pair(ph, small, f, noisy);
      auto cal = calibrate(pair.target, pair.reference).channel("S11");
      for (std::size_t j = 0; j < cal.size(); ++j) {
        sum += std::norm(cal.data()[j] - clean.data()[j]);
        ++count;
      }
    }
    const double rms = std::sqrt(sum / static_cast<double>(count));
    CHECK(rms == doctest::Approx(std::sqrt(2.0) * sigma).epsilon(0.2));
  }
}

TEST_CASE("seed helpers are stable") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  CHECK(hash_tag("") == 0xcbf29ce484222325ull);
  CHECK(hash_tag("a") == 0xaf63dc4c8601ec8cull);  // FNV-1a reference value
}
