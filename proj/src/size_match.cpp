#include "cbvc/size_match.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace cbvc {

namespace {

class ProbeLog {
 public:
  explicit ProbeLog(const SizeOracle& fn) : fn_(fn) {}

  std::uint64_t operator()(int qp) {
    if (auto it = cache_.find(qp); it != cache_.end()) return it->second;
    const std::uint64_t size = fn_(qp);
    cache_.emplace(qp, size);
    order_.emplace_back(qp, size);
    return size;
  }

  // First adjacent pair (by QP) whose size increases, if any.
  bool monotone(std::string* detail) const {
    const std::pair<const int, std::uint64_t>* prev = nullptr;
    for (const auto& entry : cache_) {
      if (prev && entry.second > prev->second) {
        if (detail)
          *detail = "size(" + std::to_string(entry.first) + ")=" + std::to_string(entry.second) +
                    " > size(" + std::to_string(prev->first) + ")=" + std::to_string(prev->second);
        return false;
      }
      prev = &entry;
    }
    return true;
  }

  const std::vector<Probe>& order() const { return order_; }

 private:
  const SizeOracle& fn_;
  std::map<int, std::uint64_t> cache_;
  std::vector<Probe> order_;
};

bool feasible(std::uint64_t size, std::uint64_t target, double min_ratio) {
  return static_cast<double>(size) >= min_ratio * static_cast<double>(target);
}

// Preference order shared by the bracketed search and the full scan.
bool better(const Probe& a, const Probe& b, std::uint64_t target) {
  auto dist = [&](std::uint64_t s) { return s >= target ? s - target : target - s; };
  const auto da = dist(a.second);
  const auto db = dist(b.second);
  if (da != db) return da < db;
  if (a.second != b.second) return a.second > b.second;
  return a.second >= target ? a.first > b.first : a.first < b.first;
}

MatchResult finish(const Probe& chosen, std::uint64_t target, const ProbeLog& log) {
  MatchResult r;
  r.qp = chosen.first;
  r.size = chosen.second;
  r.ratio = static_cast<double>(chosen.second) / static_cast<double>(target);
  r.probes = log.order();
  return r;
}

MatchResult exhaustive(std::uint64_t target, ProbeLog& log, const MatchConstraint& c,
                       const std::string& reason) {
  std::optional<Probe> best;
  for (int qp = c.qp_min; qp <= c.qp_max; ++qp) {
    const Probe p{qp, log(qp)};
    if (!feasible(p.second, target, c.min_ratio)) continue;
    if (!best || better(p, *best, target)) best = p;
  }
  if (!best)
    throw InfeasibleMatchError("no QP in [" + std::to_string(c.qp_min) + "," +
                                   std::to_string(c.qp_max) + "] reaches " +
                                   std::to_string(c.min_ratio) + " of the target size",
                               log.order());
  MatchResult r = finish(*best, target, log);
  r.exhaustive = true;
  r.warnings.push_back("non-monotone size curve (" + reason + "); used exhaustive scan");
  return r;
}

}  // namespace

void MatchConstraint::validate() const {
  if (!(min_ratio > 0.0 && min_ratio <= 1.0))
    throw ConfigError("match: min_ratio must lie in (0, 1]");
  if (qp_min < 0 || qp_max > 51 || qp_min > qp_max)
    throw ConfigError("match: qp range must be a non-empty subrange of [0,51]");
}

MatchResult match_constant_qp(std::uint64_t target_size, const SizeOracle& encode_fn,
                              const MatchConstraint& c) {
  c.validate();
  if (target_size == 0) throw ConfigError("match: target size must be positive");
  ProbeLog log(encode_fn);
  std::string detail;

  int lo = c.qp_min;
  int hi = c.qp_max;
  const std::uint64_t s_hi = log(hi);
  if (s_hi >= target_size) return finish({hi, s_hi}, target_size, log);

  const std::uint64_t s_lo = log(lo);
  if (!log.monotone(&detail)) return exhaustive(target_size, log, c, detail);
  if (s_lo < target_size) {
    if (!feasible(s_lo, target_size, c.min_ratio))
      throw InfeasibleMatchError("even qp " + std::to_string(lo) + " gives " +
                                     std::to_string(s_lo) + " bytes, below " +
                                     std::to_string(c.min_ratio) + " x target " +
                                     std::to_string(target_size),
                                 log.order());
    return finish({lo, s_lo}, target_size, log);
  }

  // size(lo) >= target > size(hi)
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (log(mid) >= target_size)
      lo = mid;
    else
      hi = mid;
    if (!log.monotone(&detail)) return exhaustive(target_size, log, c, detail);
  }

  const Probe above{lo, log(lo)};
  const Probe below{hi, log(hi)};
  if (!feasible(below.second, target_size, c.min_ratio))
    return finish(above, target_size, log);
  return finish(better(below, above, target_size) ? below : above, target_size, log);
}

}  // namespace cbvc
