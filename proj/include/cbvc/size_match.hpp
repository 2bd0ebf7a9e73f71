#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cbvc/error.hpp"

namespace cbvc {

struct MatchConstraint {
  double min_ratio = 0.95;  // baseline may be at most 5% smaller than the target
  int qp_min = 0;
  int qp_max = 51;

  void validate() const;
};

using Probe = std::pair<int, std::uint64_t>;  // (qp, size)

struct MatchResult {
  int qp = 0;
  std::uint64_t size = 0;
  double ratio = 0.0;  // size / target
  std::vector<Probe> probes;
  bool exhaustive = false;  // monotonicity violated, fell back to a full scan
  std::vector<std::string> warnings;
};

class InfeasibleMatchError : public Error {
 public:
  InfeasibleMatchError(const std::string& what, std::vector<Probe> probes)
      : Error(what), probes_(std::move(probes)) {}
  const std::vector<Probe>& probes() const { return probes_; }

 private:
  std::vector<Probe> probes_;
};

using SizeOracle = std::function<std::uint64_t(int qp)>;

// Picks the constant QP whose size is closest to target_size subject to
// size >= min_ratio * target_size. Among equal distances the larger size
// wins; among equal sizes the QP nearest the target crossing wins (largest
// QP when size >= target, smallest otherwise).
//
// Assumes size is non-increasing in QP: a bracketed binary search for the
// crossing, then the two neighbours around it. At most
// 2 + ceil(log2(range)) distinct QPs are probed. If the probes reveal a
// non-monotone curve, the whole range is scanned instead.
MatchResult match_constant_qp(std::uint64_t target_size, const SizeOracle& encode_fn,
                              const MatchConstraint& c = {});

}  // namespace cbvc
