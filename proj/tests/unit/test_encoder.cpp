#include <algorithm>
#include <cmath>
#include <filesystem>

#include "cbvc/encoder.hpp"
#include "cbvc/process.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cbvc;

namespace {

EncodeJob stub_job(const test::TempDir& dir, int frames = 48, int qp = 22) {
  EncodeJob j;
  j.input = dir / "in.yuv";
  j.geometry = {64, 64, 10, 24.0, frames};
  j.base_qp = qp;
  j.output = dir / "out.hevc";
  j.encoder.kind = EncoderKind::stub;
  return j;
}

bool has_pair(const std::vector<std::string>& v, const std::string& a, const std::string& b) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (v[i] == a && v[i + 1] == b) return true;
  return false;
}

// Fake encoder: writes its argument list to the output and exits with $1
// taken from the FAKE_EXIT variable baked into the script.
std::filesystem::path fake_encoder(const test::TempDir& dir, int exit_code, bool write = true) {
  const auto p = dir / ("fake-enc-" + std::to_string(exit_code) + (write ? "w" : "n"));
  std::string script = "#!/bin/sh\nout=\"\"\nwhile [ $# -gt 0 ]; do\n"
                       "  if [ \"$1\" = -o ]; then out=\"$2\"; fi\n  shift\ndone\n";
  if (write) script += "printf 'bitstream' > \"$out\"\n";
  script += "echo 'fake encoder says hi' >&2\nexit " + std::to_string(exit_code) + "\n";
  test::write_file(p, script);
  std::filesystem::permissions(p, std::filesystem::perms::owner_all);
  return p;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("command carries the fixed encoder parameters") {
  test::TempDir dir;
  EncodeJob j = stub_job(dir);
  j.geometry = {1920, 1080, 10, 24.0, 240};
  j.encoder.binary = "kvazaar";
  const auto cmd = build_command(j);
  CHECK(cmd.front() == "kvazaar");
  CHECK(has_pair(cmd, "--period", "0"));
  CHECK(has_pair(cmd, "--gop", "0"));
  CHECK(has_pair(cmd, "--input-res", "1920x1080"));
  CHECK(has_pair(cmd, "--preset", "ultrafast"));
  CHECK(has_pair(cmd, "--input-bitdepth", "10"));
  CHECK(has_pair(cmd, "--input-fps", "24"));
  CHECK(has_pair(cmd, "--qp", "22"));
  CHECK(std::find(cmd.begin(), cmd.end(), "--roi") == cmd.end());
  CHECK(cmd == build_command(j));
}

TEST_CASE("command with ROI and extras") {
  test::TempDir dir;
  EncodeJob j = stub_job(dir);
  j.encoder.binary = "enc";
  j.roi = build_roi_map({uniform_grid()}, std::vector<int>(48, 3), 22);
  j.encoder.extra_flags = {"--threads", "2"};
  const auto cmd = build_command(j);
  CHECK(has_pair(cmd, "--roi", j.roi_path().string()));
  CHECK(has_pair(cmd, "--threads", "2"));
  CHECK(cmd[cmd.size() - 2] == "-o");
  CHECK(cmd.back() == j.output.string());
}

TEST_CASE("binary name resolution") {
  EncoderSettings s;
  s.binary = "/opt/x/kvz";
  CHECK(s.resolved_binary_name() == "/opt/x/kvz");
}

TEST_CASE("bitrate arithmetic") {
  CHECK(bitrate_bps(1000000, 24.0, 240) == doctest::Approx(800000.0));
}

TEST_CASE("stub model sizes") {
  test::TempDir dir;
  auto j = stub_job(dir);
  CHECK(stub_size(j) == 576000);
  j.base_qp = 28;
  CHECK(stub_size(j) == 288000);
  auto r = stub_job(dir);
  r.roi = build_roi_map({uniform_grid()}, std::vector<int>(48, 6), 22);
  CHECK(stub_size(r) == 288000);

  std::uint64_t prev = UINT64_MAX;
  for (int qp = 0; qp <= 51; ++qp) {
    j.base_qp = qp;
    const auto s = stub_size(j);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("stub encode writes a file of the modelled size") {
  test::TempDir dir;
  const auto j = stub_job(dir, 10, 30);
  const auto r = encode(j);
  CHECK(r.size == stub_size(j));
  CHECK(std::filesystem::file_size(j.output) == r.size);
  CHECK(r.bitrate == doctest::Approx(8.0 * r.size * 24 / 10));
  CHECK(test::read_file(j.output).substr(0, 8) == "CBVCSTUB");
}

TEST_CASE("job validation") {
  test::TempDir dir;
  auto j = stub_job(dir);
  j.base_qp = 52;
  CHECK_THROWS_AS(encode(j), ConfigError);
}

TEST_CASE("missing external binary leaves nothing behind") {
  test::TempDir dir;
  auto j = stub_job(dir);
  test::write_file(j.input, "x");
  j.encoder.kind = EncoderKind::external;
  j.encoder.binary = "cbvc-no-such-encoder-binary";
  CHECK_THROWS_AS(encode(j), EncoderError);
  CHECK_FALSE(std::filesystem::exists(j.output));
}

TEST_CASE("external encoder: success, ROI adaptation") {
  test::TempDir dir;
  auto j = stub_job(dir, 2);
  test::write_file(j.input, "x");
  j.encoder.kind = EncoderKind::external;
  j.encoder.binary = fake_encoder(dir, 0).string();
  j.geometry = {128, 64, 10, 24.0, 2};
  RoiQpVideoMap roi;
  roi.blocks_w = 10;
  roi.blocks_h = 10;
  for (int f = 0; f < 2; ++f) roi.frames.push_back({f, 10, 10, std::vector<int>(100, f + 1)});
  j.roi = roi;
  const auto r = encode(j);
  CHECK(r.size == 9);
  CHECK(test::read_file(j.roi_path()) == "2 1\n1 1\n2 2\n");

  j.encoder.remap_roi_to_ctu = false;
  j.encoder.roi_mode = RoiFileMode::static_first_frame;
  encode(j);
  const auto text = test::read_file(j.roi_path());
  CHECK(text.rfind("10 10\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("external encoder: failure surfaces stderr and removes output") {
  test::TempDir dir;
  auto j = stub_job(dir, 2);
  test::write_file(j.input, "x");
  j.encoder.kind = EncoderKind::external;
  j.encoder.binary = fake_encoder(dir, 3).string();
  try {
    encode(j);
    FAIL("expected EncoderError");
  } catch (const EncoderError& e) {
    CHECK(std::string(e.what()).find("status 3") != std::string::npos);
    CHECK(std::string(e.what()).find("fake encoder says hi") != std::string::npos);
  }
  CHECK_FALSE(std::filesystem::exists(j.output));

  j.encoder.binary = fake_encoder(dir, 0, false).string();
  CHECK_THROWS_AS(encode(j), EncoderError);
  CHECK_FALSE(std::filesystem::exists(j.output));
}

TEST_CASE("process runner") {
  const auto sh = find_executable("sh");
  REQUIRE(sh);
  const auto r = run_process({"sh", "-c", "echo oops >&2; exit 4"});
  CHECK(r.exit_code == 4);
  CHECK(r.stderr_text == "oops\n");
  CHECK_FALSE(find_executable("cbvc-no-such-encoder-binary"));
}

}  // TEST_SUITE
