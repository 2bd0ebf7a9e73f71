#include "cbvc/csv.hpp"
#include "cbvc/error.hpp"
#include "cbvc/manifest.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cbvc;

namespace {

ManifestRow row(const std::string& id, const std::string& status = "ok") {
  ManifestRow r;
  r.id = id;
  r.role = "stimulus";
  r.source = "Market";
  r.schedule = "gaussian";
  r.window = "16";
  r.blocks = "10x10";
  r.roi = true;
  r.qp = 22;
  r.size_bytes = 123456;
  r.bitrate_bps = 987654.321;
  r.fps = 24;
  r.frames = 240;
  r.paired_id = id + "-C-QP";
  r.output = "Market/stimuli/" + id + ".hevc";
  r.status = status;
  return r;
}

}  // namespace

TEST_SUITE("manifest") {

TEST_CASE("csv split and join") {
  CHECK(csv::split("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(csv::split("\"x,y\",\"q\"\"q\"") == std::vector<std::string>{"x,y", "q\"q"});
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  const std::vector<std::string> f = {"a", "b,c", "d\"e", ""};
  CHECK(csv::split(csv::join(f)) == f);
}

TEST_CASE("writer creates a header and round trips rows") {
  test::TempDir dir;
  {
    ManifestWriter w(dir / "m.csv");
    w.append(row("A"));
    w.append(row("B", "error: encoder exited with status 1, see log"));
  }
  {
    ManifestWriter w(dir / "m.csv");  // reopen appends, no second header
    w.append(row("A"));
  }
  const auto text = test::read_file(dir / "m.csv");
  CHECK(text.rfind(std::string(kManifestHeader) + "\n", 0) == 0);
  const auto rows = read_manifest(dir / "m.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].id == "A");
  CHECK(rows[0].bitrate_bps == doctest::Approx(987654.321));
  CHECK(rows[0].size_bytes == 123456);
  CHECK(rows[0].roi);
  CHECK(rows[1].status == "error: encoder exited with status 1, see log");
  CHECK_FALSE(rows[1].ok());
}

TEST_CASE("latest_rows keeps the last version in first-appearance order") {
  auto a1 = row("A", "error: x");
  auto b = row("B");
  auto a2 = row("A");
  const auto latest = latest_rows({a1, b, a2});
  REQUIRE(latest.size() == 2);
  CHECK(latest[0].id == "A");
  CHECK(latest[0].ok());
  CHECK(latest[1].id == "B");
}

TEST_CASE("malformed manifests") {
  test::TempDir dir;
  test::write_file(dir / "h.csv", "id,role\n");
  CHECK_THROWS_AS(read_manifest(dir / "h.csv"), ParseError);
  test::write_file(dir / "c.csv", std::string(kManifestHeader) + "\nA,stimulus\n");
  try {
    read_manifest(dir / "c.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(read_manifest(dir / "missing.csv"), IoError);
}

}  // TEST_SUITE
