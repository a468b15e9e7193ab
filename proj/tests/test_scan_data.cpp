#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "bms/error.hpp"
#include "bms/scan_data.hpp"
#include "support.hpp"

using namespace bms;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

std::string replace_line(const std::string& text, const std::string& key, const std::string& value) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0 || line.rfind(key + "=", 0) == 0) line = key + " = " + value;
    out += line + "\n";
  }
  return out;
}

FrequencySweepScan scan_with(const Matrix<cplx>& s11, const FrequencyAxis& freq) {
  return {ScanGeometry::evenly_spaced(s11.rows(), 0.15), freq, {{"S11", s11}}, {}};
}

}  // namespace

TEST_CASE("geometry and axis basics") {
  auto g = ScanGeometry::evenly_spaced(72, 0.15);
  CHECK(g.n_antennas() == 72);
  CHECK(g.angles_deg().back() == doctest::Approx(355.0));
  CHECK(g.antenna_position(0).x == doctest::Approx(0.15));
  CHECK_THROWS_AS(ScanGeometry({10.0, 5.0}, 0.15), ConfigError);
  CHECK_THROWS_AS(ScanGeometry::evenly_spaced(0, 0.15), ConfigError);
  CHECK_THROWS_AS(FrequencyAxis(2e9, 1e9, 10), ConfigError);

  FrequencyAxis f(1e9, 9e9, 1001);
  CHECK(f.step_hz() == doctest::Approx(8e6));
  CHECK(f.frequency_hz(1000) == doctest::Approx(9e9));
}

TEST_CASE("scan construction rejects bad channels") {
  FrequencyAxis f(1e9, 2e9, 4);
  auto g = ScanGeometry::evenly_spaced(3, 0.1);
  CHECK_THROWS_AS(FrequencySweepScan(g, f, {{"S21", Matrix<cplx>(3, 4)}}, {}), FormatError);
  CHECK_THROWS_AS(FrequencySweepScan(g, f, {{"S11", Matrix<cplx>(3, 4)}, {"S12", Matrix<cplx>(3, 4)}}, {}),
                  FormatError);
  CHECK_THROWS_AS(FrequencySweepScan(g, f, {{"S11", Matrix<cplx>(2, 4)}}, {}), DimensionError);
  FrequencySweepScan ok(g, f, {{"S11", Matrix<cplx>(3, 4)}}, {});
  CHECK_THROWS_AS((void)ok.channel("S21"), FormatError);
}

TEST_CASE("write then load is bit-exact") {
  TempDir dir("scan");
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    auto s = testing::random_scan(rng);
    auto p = dir / ("s" + std::to_string(i));
    write_scan(s, p);
    auto back = load_scan(p);
    CHECK(back == s);
    // .manifest / .blob suffixes name the same pair
    CHECK(load_scan(p.string() + ".blob") == s);
  }
}

TEST_CASE("special doubles survive the blob") {
  TempDir dir("special");
  FrequencyAxis f(1e9, 2e9, 3);
  Matrix<cplx> m(2, 3);
  m(0, 0) = {-0.0, 5e-324};
  m(0, 1) = {1.7976931348623157e308, -2.2250738585072014e-308};
  m(1, 2) = {0.1, 1.0 / 3.0};
  auto s = scan_with(m, f);
  write_scan(s, dir / "x");
  auto back = load_scan(dir / "x");
  CHECK(std::signbit(back.channel("S11")(0, 0).real()));
  CHECK(back == s);
}

TEST_CASE("corrupted fixtures are rejected with the right error class") {
  TempDir dir("corrupt");
  std::mt19937_64 rng(3);
  FrequencyAxis f(1e9, 9e9, 11);

  SUBCASE("blob truncated by 8 bytes") {
    write_scan(scan_with(testing::random_matrix(rng, 4, 11), f), dir / "a");
    auto blob = slurp(dir / "a.blob");
    spit(dir / "a.blob", blob.substr(0, blob.size() - 8));
    try {
      (void)load_scan(dir / "a");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(std::to_string(blob.size())) != std::string::npos);
      CHECK(msg.find(std::to_string(blob.size() - 8)) != std::string::npos);
    }
  }

  SUBCASE("missing blob") {
    write_scan(scan_with(testing::random_matrix(rng, 4, 11), f), dir / "b");
    std::filesystem::remove(dir / "b.blob");
    CHECK_THROWS_AS((void)load_scan(dir / "b"), FormatError);
  }

  SUBCASE("manifest says 72 antennas, blob sized for 71") {
    write_scan(scan_with(testing::random_matrix(rng, 71, 11), f), dir / "c");
    spit(dir / "c.manifest", replace_line(slurp(dir / "c.manifest"), "n_antennas", "72"));
    CHECK_THROWS_AS((void)load_scan(dir / "c"), DimensionError);
  }

  SUBCASE("unknown channel name") {
    write_scan(scan_with(testing::random_matrix(rng, 4, 11), f), dir / "d");
    spit(dir / "d.manifest", replace_line(slurp(dir / "d.manifest"), "channels", "S11,S99"));
    CHECK_THROWS_AS((void)load_scan(dir / "d"), FormatError);
  }

  SUBCASE("bad format version") {
    write_scan(scan_with(testing::random_matrix(rng, 4, 11), f), dir / "e");
    spit(dir / "e.manifest", replace_line(slurp(dir / "e.manifest"), "format_version", "2"));
    CHECK_THROWS_AS((void)load_scan(dir / "e"), FormatError);
  }

  SUBCASE("missing manifest") {
    CHECK_THROWS_AS((void)load_scan(dir / "nope"), IoError);
  }
}

TEST_CASE("calibrate identities") {
  std::mt19937_64 rng(11);
  FrequencyAxis f(1e9, 2e9, 3);
  auto s = scan_with(testing::random_matrix(rng, 2, 3), f);
  auto zero = scan_with(Matrix<cplx>(2, 3), f);

  auto self = calibrate(s, s);
  for (auto v : self.channel("S11").data()) CHECK(v == cplx(0.0, 0.0));
  CHECK(calibrate(s, zero) == s);

  // Scalar loop oracle on random 2x3 matrices.
  auto a = testing::random_matrix(rng, 2, 3), b = testing::random_matrix(rng, 2, 3);
  auto c = calibrate(scan_with(a, f), scan_with(b, f)).channel("S11");
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 0; k < 3; ++k) {
      const double re = a(r, k).real() - b(r, k).real();
      const double im = a(r, k).imag() - b(r, k).imag();
      CHECK(c(r, k).real() == re);
      CHECK(c(r, k).imag() == im);
    }
}

TEST_CASE("calibrate is anticommutative") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    auto t = testing::random_scan(rng);
    auto ch = t.channels();
    for (auto& [name, m] : ch) m = testing::random_matrix(rng, m.rows(), m.cols());
    FrequencySweepScan r(t.geometry(), t.freq(), ch, {});
    auto ab = calibrate(t, r), ba = calibrate(r, t);
    for (const auto& [name, m] : ab.channels())
      for (std::size_t j = 0; j < m.size(); ++j) CHECK(m.data()[j] == -ba.channel(name).data()[j]);
  }
}

TEST_CASE("calibrate rejects mismatched scans") {
  std::mt19937_64 rng(13);
  FrequencyAxis f(1e9, 2e9, 3), g(1e9, 3e9, 3);
  auto a = scan_with(testing::random_matrix(rng, 2, 3), f);
  CHECK_THROWS_AS(calibrate(a, scan_with(testing::random_matrix(rng, 2, 3), g)), IncompatibleScanError);
  CHECK_THROWS_AS(calibrate(a, scan_with(testing::random_matrix(rng, 3, 3), f)), IncompatibleScanError);
  FrequencySweepScan with21(a.geometry(), f, {{"S11", Matrix<cplx>(2, 3)}, {"S21", Matrix<cplx>(2, 3)}}, {});
  CHECK_THROWS_AS(calibrate(a, with21), IncompatibleScanError);
}

TEST_CASE("time domain: zero spectrum and sampling step") {
  FrequencyAxis f(1e9, 9e9, 1001);
  auto td = to_time_domain(scan_with(Matrix<cplx>(3, 1001), f), "S11");
  CHECK(td.n_samples() == 4004);
  for (double v : td.traces.data()) CHECK(v == 0.0);
  const double expected_dt = 1.0 / (4004.0 * f.step_hz());
  CHECK(std::abs(td.dt_s - expected_dt) <= 1e-12 * expected_dt);
  CHECK_THROWS_AS((void)to_time_domain(scan_with(Matrix<cplx>(3, 1001), f), "S21"), FormatError);
  CHECK_THROWS_AS((void)to_time_domain(scan_with(Matrix<cplx>(3, 1001), f), "S11",
                                       SpectralWindow::rectangular, 0),
                  ConfigError);
}

TEST_CASE("time domain: delay line peaks at the sample nearest tau") {
  FrequencyAxis f(1e9, 9e9, 1001);
  const double tau = 10e-9;
  Matrix<cplx> s(2, 1001);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t k = 0; k < 1001; ++k)
      s(a, k) = std::polar(1.0, -2.0 * std::numbers::pi * f.frequency_hz(k) * tau);
  auto td = to_time_domain(scan_with(s, f), "S11", SpectralWindow::rectangular, 4);
  const auto nearest = static_cast<std::size_t>(std::llround((tau - td.t0_s) / td.dt_s));
  for (std::size_t a = 0; a < 2; ++a) {
    std::size_t best = 0;
    for (std::size_t n = 1; n < td.n_samples(); ++n)
      if (std::abs(td.traces(a, n)) > std::abs(td.traces(a, best))) best = n;
    CHECK(best == nearest);
  }
}

TEST_CASE("time domain: forward DFT of the output recovers the windowed spectrum") {
  std::mt19937_64 rng(5);
  FrequencyAxis f(1e9, 3e9, 61);
  for (auto window : {SpectralWindow::rectangular, SpectralWindow::raised_cosine}) {
    for (std::size_t pad : {1u, 4u}) {
      auto x = testing::random_matrix(rng, 2, 61);
      auto z = to_time_domain_complex(x, f, window, pad);
      const std::size_t m = pad * 61;
      REQUIRE(z.cols() == m);
      const double dt = 1.0 / (static_cast<double>(m) * f.step_hz());
      auto w = spectral_window_weights(window, 61);

      // Real traces are the real part of the complex transform.
      auto td = to_time_domain(scan_with(x, f), "S11", window, pad);
      for (std::size_t j = 0; j < z.size(); ++j) CHECK(td.traces.data()[j] == z.data()[j].real());

      for (std::size_t a = 0; a < 2; ++a) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < 61; ++k) {
          // Independent O(M) DFT bin with the carrier removed.
          cplx acc = 0.0;
          for (std::size_t n = 0; n < m; ++n) {
            const double t = static_cast<double>(n) * dt;
            const double ph = -2.0 * std::numbers::pi *
                              (f.f_start_hz() * t + static_cast<double>(k * n % m) / static_cast<double>(m));
            acc += z(a, n) * std::polar(1.0, ph);
          }
          const cplx want = w[k] * x(a, k);
          num += std::norm(acc - want);
          den += std::norm(want);
        }
        CHECK(std::sqrt(num / den) <= 1e-9);
      }
    }
  }
}

TEST_CASE("time domain is linear") {
  std::mt19937_64 rng(6);
  FrequencyAxis f(1e9, 9e9, 201);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 5; ++i) {
    auto x = testing::random_matrix(rng, 3, 201), y = testing::random_matrix(rng, 3, 201);
    const double a = u(rng), b = u(rng);
    Matrix<cplx> xy(3, 201);
    for (std::size_t j = 0; j < xy.size(); ++j) xy.data()[j] = a * x.data()[j] + b * y.data()[j];
    for (auto window : {SpectralWindow::rectangular, SpectralWindow::raised_cosine}) {
      auto tx = to_time_domain(scan_with(x, f), "S11", window);
      auto ty = to_time_domain(scan_with(y, f), "S11", window);
      auto txy = to_time_domain(scan_with(xy, f), "S11", window);
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < txy.traces.size(); ++j) {
        const double want = a * tx.traces.data()[j] + b * ty.traces.data()[j];
        num += (txy.traces.data()[j] - want) * (txy.traces.data()[j] - want);
        den += want * want;
      }
      CHECK(std::sqrt(num / den) <= 1e-9);
    }
  }
}

TEST_CASE("raised-cosine weights") {
  auto w = spectral_window_weights(SpectralWindow::raised_cosine, 5);
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[2] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(w[3]));
  for (double v : spectral_window_weights(SpectralWindow::rectangular, 7)) CHECK(v == 1.0);
}
