#include <cmath>
#include <string>
#include <vector>

#include "cbvc/analysis.hpp"
#include "cbvc/rng.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace cbvc;

namespace {

struct Builder {
  RatingSet set;
  std::map<std::string, int> next_index;
  void add(const std::string& obs, const std::string& stim, int score) {
    set.records.push_back({obs, stim, score, "t", next_index[obs]++});
  }
};

std::vector<oracle::Score> to_oracle(const RatingSet& s) {
  std::vector<oracle::Score> out;
  for (const auto& r : s.records)
    out.push_back({r.observer, r.stimulus, r.score, r.presentation_index});
  return out;
}

// Density of Student t integrated by Simpson's rule over [|t|, far].
double oracle_p(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * std::acos(-1.0));
  auto f = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const double a = std::fabs(t), b = a + 2000.0;
  const int n = 400000;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return 2.0 * s * h / 3.0;
}

ManifestRow row(const std::string& id, const std::string& role, const std::string& src,
                const std::string& sched, const std::string& window, bool roi,
                std::uint64_t bytes, const std::string& paired) {
  ManifestRow r;
  r.id = id;
  r.role = role;
  r.source = src;
  r.schedule = sched;
  r.window = window;
  r.blocks = roi ? "10x10" : "1x1";
  r.roi = roi;
  r.size_bytes = bytes;
  r.fps = 24;
  r.frames = 240;
  r.paired_id = paired;
  return r;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("MOS of the market fixture") {
  Builder b;
  for (int i = 0; i < 15; ++i) b.add("O" + std::to_string(i), "Market", 5);
  b.add("O15", "Market", 4);
  const auto m = mos(b.set, "Market");
  CHECK(m.mean == doctest::Approx(4.9375).epsilon(1e-12));
  CHECK(m.sd == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(m.n == 16);
}

TEST_CASE("MOS degenerate cases") {
  Builder b;
  for (int i = 0; i < 4; ++i) b.add("O" + std::to_string(i), "A", 4);
  b.add("O0", "B", 3);
  CHECK(mos(b.set, "A").mean == 4.0);
  CHECK(mos(b.set, "A").sd == 0.0);
  CHECK(mos(b.set, "B").mean == 3.0);
  CHECK(mos(b.set, "B").sd == 0.0);
  CHECK_THROWS_AS(mos(b.set, "C"), AnalysisError);
}

TEST_CASE("MOS ignores the repeat presentation") {
  Builder b;
  b.add("O1", "A", 2);
  b.add("O2", "A", 4);
  b.add("O1", "A", 5);  // repeat
  CHECK(mos(b.set, "A").mean == 3.0);
}

TEST_CASE("agreement fixture") {
  Builder b;
  b.add("O1", "A", 5);
  b.add("O1", "B", 1);
  b.add("O2", "A", 4);
  b.add("O2", "B", 2);
  b.add("O3", "A", 4);
  b.add("O3", "B", 2);
  CHECK(agreement_percentage(b.set, "O1") == 0.0);
  CHECK(agreement_percentage(b.set, "O2") == 1.0);
  CHECK(agreement_percentage(b.set, "O3") == 1.0);
}

TEST_CASE("agreement with identical scores is total") {
  Builder b;
  for (int o = 0; o < 5; ++o)
    for (int s = 0; s < 4; ++s) b.add("O" + std::to_string(o), "S" + std::to_string(s), 3);
  for (int o = 0; o < 5; ++o) CHECK(agreement_percentage(b.set, "O" + std::to_string(o)) == 1.0);
}

TEST_CASE("agreement needs three raters per stimulus") {
  Builder b;
  b.add("O1", "A", 3);
  b.add("O2", "A", 3);
  CHECK_THROWS_AS(agreement_percentage(b.set, "O1"), AnalysisError);
}

TEST_CASE("intra-observer distance") {
  Builder b;
  b.add("O1", "A", 4);
  b.add("O1", "B", 3);
  b.add("O1", "A", 5);
  b.add("O1", "B", 3);
  const auto rep = repeated_stimuli(b.set);
  REQUIRE(rep == std::vector<std::string>{"A", "B"});
  CHECK(intra_observer_distance(b.set, "O1", rep) == doctest::Approx(0.5));
  CHECK_THROWS_AS(intra_observer_distance(b.set, "O2", rep), AnalysisError);
  CHECK_THROWS_AS(intra_observer_distance(b.set, "O1", {}), AnalysisError);
}

TEST_CASE("repeat table across observers") {
  Builder b;
  for (int i = 0; i < 16; ++i) {
    const std::string o = "O" + std::to_string(i);
    const int d = i < 9 ? 0 : i < 15 ? 1 : 2;
    b.add(o, "R", 3);
    b.add(o, "R", 3 + d);
  }
  const auto t = repeat_table(b.set, {"R"});
  REQUIRE(t.size() == 1);
  CHECK(t[0].mean == doctest::Approx(0.5));
  CHECK(t[0].sd == doctest::Approx(0.63246).epsilon(1e-4));
  CHECK(t[0].min == 0);
  CHECK(t[0].max == 2);
  CHECK(t[0].n == 16);
}

TEST_CASE("screening thresholds are exclusive") {
  // X agrees on k of 100 stimuli; two steady raters give 3 everywhere.
  // Ten repeated stimuli: X differs by 2 on nine and 1 on one (1.9).
  auto build = [](int k, int big) {
    Builder b;
    for (int s = 0; s < 100; ++s) {
      const std::string id = "S" + std::to_string(s);
      b.add("X", id, s < k ? 3 : 5);
      b.add("Y", id, 3);
      b.add("Z", id, 3);
    }
    for (int s = 0; s < 10; ++s) {
      const std::string id = "S" + std::to_string(s);
      b.add("X", id, 3 + (s < big ? 2 : 1));
      b.add("Y", id, 3);
      b.add("Z", id, 3);
    }
    return b.set;
  };
  auto find = [](const std::vector<ObserverReliability>& v, const std::string& o) {
    for (const auto& r : v)
      if (r.observer == o) return r;
    FAIL("missing observer");
    return ObserverReliability{};
  };

  auto s = build(49, 9);
  auto x = find(screen_observers(s, repeated_stimuli(s)), "X");
  CHECK(x.agreement == doctest::Approx(0.49));
  CHECK(x.low_agreement);
  CHECK(*x.intra_distance == doctest::Approx(1.9));
  CHECK_FALSE(x.high_distance);

  s = build(51, 9);
  x = find(screen_observers(s, repeated_stimuli(s)), "X");
  CHECK_FALSE(x.low_agreement);
  CHECK_FALSE(x.high_distance);

  s = build(50, 10);
  x = find(screen_observers(s, repeated_stimuli(s)), "X");
  CHECK(x.low_agreement);  // exactly 0.5
  CHECK(*x.intra_distance == doctest::Approx(2.0));
  CHECK_FALSE(x.high_distance);  // exactly 2

  // Screening only reports.
  CHECK(s.records.size() == 330);
}

TEST_CASE("t distribution tail") {
  CHECK(std::fabs(t_two_tailed_p(2.042, 30) - 0.05) < 0.002);
  CHECK(t_two_tailed_p(0.0, 5) == doctest::Approx(1.0));
  for (double t : {0.3, 1.0, 2.5})
    for (double df : {3.0, 8.0, 40.0})
      CHECK(t_two_tailed_p(t, df) == doctest::Approx(oracle_p(t, df)).epsilon(1e-6));
  CHECK_THROWS_AS(t_two_tailed_p(1.0, 0.0), AnalysisError);
}

TEST_CASE("two-sample t by hand") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10};
  const auto pooled = two_sample_t(a, b);
  CHECK(pooled.df == 8.0);
  CHECK(pooled.t == doctest::Approx(-3.0 / std::sqrt(2.5)));
  CHECK(pooled.p == doctest::Approx(oracle_p(pooled.t, 8.0)).epsilon(1e-6));
  const auto w = two_sample_t(a, b, true);
  CHECK(w.t == doctest::Approx(pooled.t));
  CHECK(w.df == doctest::Approx(6.25 / 1.0625));
}

TEST_CASE("two-sample t invariants") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) a.push_back(rng.uniform_int(1, 5));
    for (int i = 0; i < 12; ++i) b.push_back(rng.uniform_int(1, 5));
    if (oracle::sample_sd(a) == 0 && oracle::sample_sd(b) == 0) continue;
    const auto ab = two_sample_t(a, b);
    const auto ba = two_sample_t(b, a);
    CHECK(ab.p == doctest::Approx(ba.p));
    CHECK(ab.t == doctest::Approx(-ba.t));
    auto a2 = a, b2 = b;
    for (auto& v : a2) v += 7.0;
    for (auto& v : b2) v += 7.0;
    const auto shifted = two_sample_t(a2, b2);
    CHECK(shifted.t == doctest::Approx(ab.t));
    CHECK(shifted.p == doctest::Approx(ab.p));
  }
  const auto same = two_sample_t({3, 3, 3}, {3, 3});
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  CHECK_THROWS_AS(two_sample_t({3, 3, 3}, {4, 4}), AnalysisError);
  CHECK_THROWS_AS(two_sample_t({3}, {4, 5}), AnalysisError);
}

TEST_CASE("bitrate of a single pair") {
  const std::vector<ManifestRow> m{
      row("A-nf-16-BS-10-G", "stimulus", "A", "gaussian", "16", true, 1000000,
          "A-nf-16-BS-10-G-C-QP"),
      row("A-nf-16-BS-10-G-C-QP", "baseline", "A", "gaussian", "16", true, 950000,
          "A-nf-16-BS-10-G")};
  const auto r = bitrate_report(m);
  REQUIRE(r.columns == std::vector<std::string>{"nf=16/G"});
  REQUIRE(r.rows.size() == 1);
  const auto& c = r.rows[0].cells[0];
  CHECK(c.stimulus_mbps == doctest::Approx(0.8));
  CHECK(c.baseline_mbps == doctest::Approx(0.76));
  CHECK(c.ratio == doctest::Approx(0.95));
  CHECK(c.baseline_min);
  CHECK_FALSE(c.stimulus_min);
  const auto text = format_bitrate_text(r);
  CHECK(text.find("0.8000") != std::string::npos);
  CHECK(text.find("0.7600*") != std::string::npos);
  CHECK(format_bitrate_csv(r).find("0.9500,baseline") != std::string::npos);
}

TEST_CASE("unpaired rows are an error") {
  std::vector<ManifestRow> m{row("S", "stimulus", "A", "gaussian", "16", true, 10, "B")};
  CHECK_THROWS_AS(bitrate_report(m), AnalysisError);
  m.push_back(row("B", "baseline", "A", "gaussian", "16", true, 10, "other"));
  CHECK_THROWS_AS(bitrate_report(m), AnalysisError);
  m[1].paired_id = "S";
  CHECK_NOTHROW(bitrate_report(m));
  // Failed rows drop out, which leaves the stimulus unpaired.
  m[1].status = "error: probe";
  CHECK_THROWS_AS(bitrate_report(m), AnalysisError);
}

TEST_CASE("full manifest gives eight rows of four columns") {
  std::vector<ManifestRow> m;
  Rng rng(3);
  const std::vector<std::pair<std::string, std::string>> cfgs{
      {"cubic", "full"}, {"gaussian", "full"}, {"gaussian", "32"}, {"gaussian", "16"}};
  std::uint64_t lowest = ~0ull;
  std::string lowest_id;
  for (const std::string src : {"Market", "Tango", "Ritual", "Dinner"})
    for (const auto& [sched, win] : cfgs)
      for (bool roi : {true, false}) {
        const std::string id = src + "-" + sched + win + (roi ? "-roi" : "");
        const auto sb = static_cast<std::uint64_t>(rng.uniform_int(500000, 900000));
        const auto bb = static_cast<std::uint64_t>(rng.uniform_int(480000, 900000));
        m.push_back(row(id, "stimulus", src, sched, win, roi, sb, id + "-C-QP"));
        m.push_back(row(id + "-C-QP", "baseline", src, sched, win, roi, bb, id));
        if (src == "Tango") {
          if (sb < lowest) lowest = sb, lowest_id = id;
          if (bb < lowest) lowest = bb, lowest_id = id + "-C-QP";
        }
      }
  const auto r = bitrate_report(m);
  CHECK(r.columns == std::vector<std::string>{"nf=16/G", "nf=32/G", "nf=FL/G", "nf=FL/P3"});
  REQUIRE(r.rows.size() == 8);
  CHECK(r.rows[0].source == "Market");
  CHECK_FALSE(r.rows[0].roi);
  CHECK(r.rows[1].roi);
  int flags = 0;
  for (const auto& row : r.rows)
    for (const auto& c : row.cells) {
      REQUIRE_FALSE(c.stimulus_id.empty());
      if (row.source == "Tango" && (c.stimulus_min || c.baseline_min)) {
        ++flags;
        CHECK((c.stimulus_min ? c.stimulus_id : c.baseline_id) == lowest_id);
      }
    }
  CHECK(flags == 1);
}

TEST_CASE("random rating sets agree with the oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Builder b;
    const int observers = rng.uniform_int(3, 8);
    const int stimuli = rng.uniform_int(2, 10);
    for (int o = 0; o < observers; ++o)
      for (int s = 0; s < stimuli; ++s)
        b.add("O" + std::to_string(o), "S" + std::to_string(s), rng.uniform_int(1, 5));
    for (int o = 0; o < observers; ++o)
      for (int s = 0; s < 2; ++s)
        b.add("O" + std::to_string(o), "S" + std::to_string(s), rng.uniform_int(1, 5));
    const auto h = oracle::history(to_oracle(b.set));
    const auto rep = repeated_stimuli(b.set);
    for (int o = 0; o < observers; ++o) {
      const std::string id = "O" + std::to_string(o);
      REQUIRE(agreement_percentage(b.set, id) == doctest::Approx(oracle::agreement(h, id)));
      REQUIRE(intra_observer_distance(b.set, id, rep) ==
              doctest::Approx(oracle::repeat_distance(h, id)));
    }
    for (const auto& m : mos_all(b.set)) {
      std::vector<double> v;
      for (const auto& [o, per] : h) v.push_back(per.at(m.stimulus).front());
      REQUIRE(m.mean == doctest::Approx(oracle::mean(v)));
      REQUIRE(m.sd == doctest::Approx(oracle::sample_sd(v)));
    }
  }
}

}  // TEST_SUITE
