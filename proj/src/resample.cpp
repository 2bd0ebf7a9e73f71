#include "cbvc/resample.hpp"

#include <algorithm>
#include <cmath>

#include "cbvc/error.hpp"

namespace cbvc {

namespace {

// Sums are taken relative to the sample nearest the centre (anchor) so a
// constant input comes back bit-exact.
struct Taps {
  int first = 0;
  int anchor = 0;
  std::vector<double> weights;
};

// Per-output-sample taps along one axis.
std::vector<Taps> axis_taps(int in, int out, bool antialias) {
  const double scale = static_cast<double>(out) / in;
  const bool widen = antialias && scale < 1.0;
  const double kscale = widen ? scale : 1.0;
  const double support = 2.0 / kscale;

  std::vector<Taps> taps(static_cast<std::size_t>(out));
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) / scale - 0.5;
    const int first = static_cast<int>(std::floor(center - support)) + 1;
    const int last = static_cast<int>(std::ceil(center + support)) - 1;
    Taps& t = taps[static_cast<std::size_t>(o)];
    t.first = first;
    t.anchor = static_cast<int>(std::lround(center));
    double sum = 0.0;
    for (int i = first; i <= last; ++i) {
      const double w = kscale * cubic_kernel(kscale * (center - i));
      t.weights.push_back(w);
      sum += w;
    }
    for (double& w : t.weights) w /= sum;
  }
  return taps;
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

Field resize_cubic(const Field& src, int out_width, int out_height, bool antialias) {
  if (src.width < 1 || src.height < 1 || out_width < 1 || out_height < 1)
    throw ConfigError("resize_cubic: dimensions must be >= 1");

  const auto xt = axis_taps(src.width, out_width, antialias);
  const auto yt = axis_taps(src.height, out_height, antialias);

  // Horizontal pass.
  Field tmp(out_width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int o = 0; o < out_width; ++o) {
      const Taps& t = xt[static_cast<std::size_t>(o)];
      const double anchor = src.at(std::clamp(t.anchor, 0, src.width - 1), y);
      double acc = 0.0;
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        const int x = std::clamp(t.first + static_cast<int>(k), 0, src.width - 1);
        acc += t.weights[k] * (src.at(x, y) - anchor);
      }
      tmp.at(o, y) = anchor + acc;
    }
  }

  // Vertical pass.
  Field out(out_width, out_height);
  for (int o = 0; o < out_height; ++o) {
    const Taps& t = yt[static_cast<std::size_t>(o)];
    for (int x = 0; x < out_width; ++x) {
      const double anchor = tmp.at(x, std::clamp(t.anchor, 0, src.height - 1));
      double acc = 0.0;
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        const int y = std::clamp(t.first + static_cast<int>(k), 0, src.height - 1);
        acc += t.weights[k] * (tmp.at(x, y) - anchor);
      }
      out.at(x, o) = anchor + acc;
    }
  }
  return out;
}

void normalize_minmax(Field& f) {
  if (f.values.empty()) return;
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) {
    std::fill(f.values.begin(), f.values.end(), 0.0);
    return;
  }
  for (double& v : f.values) v = (v - min) / range;
}

}  // namespace cbvc
