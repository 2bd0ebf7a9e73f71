#include <algorithm>
#include <cmath>

#include "cbvc/error.hpp"
#include "cbvc/rng.hpp"
#include "cbvc/saliency.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace cbvc;

namespace {

const VideoGeometry kGeo256{256, 256, 10, 24.0, 1};

// Grey frame with a saturated red square whose top-left corner is (x, y).
Frame red_square(const VideoGeometry& g, int x, int y, int size) {
  Frame f = Frame::blank(g, 0, 502, 512, 512);
  for (int j = y; j < y + size; ++j)
    for (int i = x; i < x + size; ++i) f.y[static_cast<std::size_t>(j) * g.width + i] = 250;
  for (int j = y / 2; j < (y + size) / 2; ++j)
    for (int i = x / 2; i < (x + size) / 2; ++i) {
      f.u[static_cast<std::size_t>(j) * (g.width / 2) + i] = 409;
      f.v[static_cast<std::size_t>(j) * (g.width / 2) + i] = 960;
    }
  return f;
}

std::pair<int, int> argmax(const Field& f) {
  const auto it = std::max_element(f.values.begin(), f.values.end());
  const auto i = static_cast<int>(it - f.values.begin());
  return {i % f.width, i / f.width};
}

LabFrame lab_from(const Field& l, const Field& a, const Field& b) {
  return {l.width, l.height, l.values, a.values, b.values};
}

void check_unit_range(const Field& f) {
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  CHECK(*lo == doctest::Approx(0.0));
  CHECK(*hi == doctest::Approx(1.0));
}

}  // namespace

TEST_SUITE("saliency") {

TEST_CASE("config validation") {
  CHECK_NOTHROW(SdspConfig{}.validate());
  SdspConfig c;
  c.omega0 = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.sigma_c = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.working_resolution = 16;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("log-Gabor transfer values") {
  SdspConfig c;
  c.omega0 = 0.05;
  c.sigma_f = 0.8;
  const Field g = log_gabor_transfer(64, 64, c);
  CHECK(g.at(0, 0) == 0.0);
  // k=3 -> 3/64 cycles/pixel
  const double r = 3.0 / 64;
  const double lr = std::log(r / 0.05);
  CHECK(g.at(3, 0) == doctest::Approx(std::exp(-lr * lr / (2 * 0.64))));
  // negative frequencies mirror positive ones
  CHECK(g.at(61, 0) == doctest::Approx(g.at(3, 0)));
  CHECK(g.at(0, 61) == doctest::Approx(g.at(3, 0)));
}

TEST_CASE("frequency filter equals circular convolution with the inverse transfer") {
  Rng rng(5);
  SdspConfig c;
  c.omega0 = 0.06;
  c.sigma_f = 0.7;
  for (auto [w, h] : {std::pair{64, 64}, std::pair{24, 18}}) {
    Field plane(w, h);
    for (auto& v : plane.values) v = rng.uniform01() * 100.0 - 50.0;
    const Field transfer = log_gabor_transfer(w, h, c);
    const Field got = filter_frequency_domain(plane, transfer);
    const auto want = oracle::convolve_with_inverse_transfer({w, h, plane.values},
                                                             {w, h, transfer.values});
    double worst = 0.0;
    for (std::size_t i = 0; i < got.values.size(); ++i)
      worst = std::max(worst, std::abs(got.values[i] - want.v[i]));
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("frequency prior: constant input is all zero") {
  const Field l(64, 64, 50.0), a(64, 64, 3.0), b(64, 64, -2.0);
  const Field p = frequency_prior(lab_from(l, a, b), SdspConfig{});
  for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("frequency prior peaks at an impulse") {
  Field l(256, 256, 0.0), a(256, 256, 0.0), b(256, 256, 0.0);
  l.at(90, 170) = 100.0;
  const Field p = frequency_prior(lab_from(l, a, b), SdspConfig{});
  const auto [x, y] = argmax(p);
  CHECK(std::abs(x - 90) <= 3);
  CHECK(std::abs(y - 170) <= 3);
  check_unit_range(p);
}

TEST_CASE("color prior") {
  Field l(32, 32, 50.0), a(32, 32, 0.0), b(32, 32, 0.0);
  for (int y = 10; y < 14; ++y)
    for (int x = 20; x < 24; ++x) {
      a.at(x, y) = 80.0;
      b.at(x, y) = 67.0;
    }
  SdspConfig c;
  const Field p = color_prior(lab_from(l, a, b), c);
  const auto [x, y] = argmax(p);
  CHECK((x >= 20 && x < 24 && y >= 10 && y < 14));
  CHECK(p.at(21, 11) == doctest::Approx(1.0 - std::exp(-2.0 / (c.sigma_c * c.sigma_c))));
  CHECK(p.at(0, 0) == 0.0);

  const Field flat = color_prior(lab_from(l, Field(32, 32, 4.0), Field(32, 32, 4.0)), c);
  for (double v : flat.values) CHECK(v == 0.0);
}

TEST_CASE("color prior is monotone in warmth") {
  Field l(3, 1, 50.0), a(3, 1), b(3, 1);
  a.values = {0, 5, 10};
  b.values = {0, 5, 10};
  const Field p = color_prior(lab_from(l, a, b), SdspConfig{});
  CHECK(p.values[0] < p.values[1]);
  CHECK(p.values[1] < p.values[2]);
}

TEST_CASE("location prior") {
  SdspConfig c;
  const Field p = location_prior(256, 256, c);
  CHECK(p.at(128, 128) == 1.0);
  CHECK(p.at(0, 0) == doctest::Approx(std::exp(-(128.0 * 128 + 128.0 * 128) / (114.0 * 114))));
  CHECK(p.at(0, 0) == doctest::Approx(0.0804).epsilon(1e-3));
  // quarter turns about the centre pixel
  for (int y = 1; y < 256; y += 7)
    for (int x = 1; x < 256; x += 5) {
      const int dx = x - 128, dy = y - 128;
      CHECK(p.at(128 - dy, 128 + dx) == doctest::Approx(p.at(x, y)));
    }
  for (double v : p.values) CHECK((v > 0.0 && v <= 1.0));
}

TEST_CASE("sdsp: constant frame is all zero") {
  const auto s = sdsp(Frame::blank(kGeo256, 0, 400, 512, 512), kGeo256);
  CHECK(s.values.width == 256);
  for (double v : s.values.values) CHECK(v == 0.0);
}

TEST_CASE("sdsp: red square is salient and normalized") {
  const auto s = sdsp(red_square(kGeo256, 100, 60, 24), kGeo256);
  check_unit_range(s.values);
  const auto [x, y] = argmax(s.values);
  CHECK((x >= 100 && x < 124 && y >= 60 && y < 84));
}

TEST_CASE("sdsp: argmax tracks a translated square without the location prior") {
  const auto a = argmax(sdsp(red_square(kGeo256, 116, 116, 24), kGeo256).values);
  const auto b = argmax(sdsp(red_square(kGeo256, 20, 200, 24), kGeo256).values);
  CHECK(std::abs((b.first - a.first) - (20 - 116)) <= 3);
  CHECK(std::abs((b.second - a.second) - (200 - 116)) <= 3);
}

TEST_CASE("sdsp: other frame sizes are resampled to the working resolution") {
  const VideoGeometry g{96, 64, 8, 24.0, 1};
  Frame f = Frame::blank(g, 3, 120, 128, 128);
  for (int y = 20; y < 36; ++y)
    for (int x = 40; x < 56; ++x) f.y[static_cast<std::size_t>(y) * 96 + x] = 230;
  SdspConfig c;
  c.working_resolution = 64;
  const auto s = sdsp(f, g, c);
  CHECK(s.frame_index == 3);
  CHECK(s.values.width == 64);
  CHECK(s.values.height == 64);
  for (double v : s.values.values) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("sdsp with the location prior stays normalized") {
  SdspConfig c;
  c.include_location_prior = true;
  const auto s = sdsp(red_square(kGeo256, 20, 20, 24), kGeo256, c);
  check_unit_range(s.values);
}

TEST_CASE("ccr is the complement and an involution") {
  SaliencyMap s{4, Field(2, 1)};
  s.values.values = {0.3, 1.0};
  const CcrMap c = ccr_from_saliency(s);
  CHECK(c.frame_index == 4);
  CHECK(c.values.values[0] == doctest::Approx(0.7));
  CHECK(c.values.values[1] == 0.0);
  CHECK(saliency_from_ccr(c).values.values[0] == doctest::Approx(0.3));
  const CcrMap ones = ccr_from_saliency({0, Field(3, 3, 0.0)});
  for (double v : ones.values.values) CHECK(v == 1.0);
}

TEST_CASE("map file round trip and PGM output") {
  test::TempDir dir;
  Rng rng(3);
  std::vector<Field> maps(3, Field(5, 4));
  for (auto& m : maps)
    for (auto& v : m.values) v = static_cast<float>(rng.uniform01());
  write_map_file(dir / "m.bin", maps);
  CHECK(std::filesystem::file_size(dir / "m.bin") == 8 + 12 + 3 * 20 * 4);
  const auto back = read_map_file(dir / "m.bin");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i].values == maps[i].values);

  test::write_file(dir / "bad.bin", "NOTAMAP!xxxxxxxxxxxx");
  CHECK_THROWS_AS(read_map_file(dir / "bad.bin"), MalformedInputError);

  write_pgm(dir / "m.pgm", maps[0]);
  const auto pgm = test::read_file(dir / "m.pgm");
  CHECK(pgm.rfind("P5\n5 4\n255\n", 0) == 0);
  CHECK(pgm.size() == std::string("P5\n5 4\n255\n").size() + 20);
}

}  // TEST_SUITE
