#include <cmath>
#include <set>

#include "cbvc/encoder.hpp"
#include "cbvc/rng.hpp"
#include "cbvc/size_match.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace cbvc;

namespace {

SizeOracle stub_oracle(int frames = 48) {
  return [frames](int qp) {
    EncodeJob j;
    j.geometry = {64, 64, 10, 24.0, frames};
    j.base_qp = qp;
    return stub_size(j);
  };
}

struct Counting {
  SizeOracle inner;
  int calls = 0;
  std::set<int> seen;
  std::uint64_t operator()(int qp) {
    ++calls;
    seen.insert(qp);
    return inner(qp);
  }
};

}  // namespace

TEST_SUITE("size_match") {

TEST_CASE("exact target is found with ratio 1") {
  const auto fn = stub_oracle();
  const auto r = match_constant_qp(fn(25), fn, {});
  CHECK(r.qp == 25);
  CHECK(r.ratio == 1.0);
  CHECK_FALSE(r.exhaustive);
}

TEST_CASE("target below the smallest size picks the top QP") {
  const auto fn = stub_oracle();
  const std::uint64_t target = fn(51) + fn(51) / 40;  // size(51) within 5% below
  const auto r = match_constant_qp(target, fn, {});
  CHECK(r.qp == 51);
  CHECK(r.ratio >= 0.95);
  CHECK(match_constant_qp(fn(51) / 2, fn, {}).qp == 51);
}

TEST_CASE("agrees with the exhaustive scan") {
  Rng rng(77);
  const auto fn = stub_oracle();
  for (int n = 0; n < 300; ++n) {
    const auto target = static_cast<std::uint64_t>(rng.uniform_int(10000, 10000000));
    const auto want = oracle::best_qp(target, fn, 0.95);
    Counting counted{fn};
    if (!want) {
      CHECK_THROWS_AS(match_constant_qp(target, std::ref(counted), {}), InfeasibleMatchError);
      continue;
    }
    const auto r = match_constant_qp(target, std::ref(counted), {});
    CHECK(r.qp == want->first);
    CHECK(r.size == want->second);
    CHECK(r.ratio >= 0.95);
    CHECK(counted.seen.size() <= 9);
    CHECK(counted.calls == static_cast<int>(counted.seen.size()));
    CHECK(r.probes.size() == counted.seen.size());
  }
}

TEST_CASE("ties go to the larger size") {
  // target sits exactly between two sizes
  auto fn = [](int qp) -> std::uint64_t { return static_cast<std::uint64_t>(1000 - 10 * qp); };
  const auto r = match_constant_qp(905, fn, {});
  CHECK(r.size == 910);
  CHECK(r.qp == 9);
}

TEST_CASE("plateau prefers the QP nearest the crossing") {
  auto fn = [](int qp) -> std::uint64_t { return qp < 20 ? 2000 : qp < 30 ? 1000 : 500; };
  CHECK(match_constant_qp(990, fn, {}).qp == 29);   // above target: largest QP on the plateau
  CHECK(match_constant_qp(1010, fn, {}).qp == 20);  // below target: smallest QP
}

TEST_CASE("infeasible target reports the probes") {
  const auto fn = stub_oracle();
  try {
    match_constant_qp(fn(0) * 2, fn, {});
    FAIL("expected InfeasibleMatchError");
  } catch (const InfeasibleMatchError& e) {
    CHECK(e.probes().size() == 2);
  }
}

TEST_CASE("restricted QP range") {
  const auto fn = stub_oracle();
  MatchConstraint c;
  c.qp_min = 20;
  c.qp_max = 30;
  CHECK(match_constant_qp(fn(21), fn, c).qp == 21);
  CHECK(match_constant_qp(fn(20) + fn(20) / 50, fn, c).qp == 20);
  CHECK(match_constant_qp(fn(35), fn, c).qp == 30);
  CHECK_THROWS_AS(match_constant_qp(fn(10), fn, c), InfeasibleMatchError);
}

TEST_CASE("non-monotone curve falls back to a full scan") {
  auto fn = [](int qp) -> std::uint64_t {
    if (qp == 44) return 5000;  // on the bisection path for target 2000
    return static_cast<std::uint64_t>(4000 - 50 * qp);
  };
  const auto r = match_constant_qp(2000, fn, {});
  CHECK(r.exhaustive);
  CHECK_FALSE(r.warnings.empty());
  const auto want = oracle::best_qp(2000, fn, 0.95);
  CHECK(r.qp == want->first);
}

TEST_CASE("constraint validation") {
  const auto fn = stub_oracle();
  MatchConstraint c;
  c.min_ratio = 0;
  CHECK_THROWS_AS(match_constant_qp(1000, fn, c), ConfigError);
  c = {};
  c.qp_min = 40;
  c.qp_max = 30;
  CHECK_THROWS_AS(match_constant_qp(1000, fn, c), ConfigError);
  CHECK_THROWS_AS(match_constant_qp(0, fn, {}), ConfigError);
}

}  // TEST_SUITE
