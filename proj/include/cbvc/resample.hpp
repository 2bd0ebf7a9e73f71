#pragma once

#include <cstddef>
#include <vector>

namespace cbvc {

// Dense row-major scalar image.
struct Field {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Field() = default;
  Field(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return values.size(); }
};

// Catmull-Rom cubic (a = -0.5).
double cubic_kernel(double x);

// Cubic resampling with pixel-centre alignment and edge clamping. When
// shrinking with antialias on, the kernel is widened by the scale factor
// (imresize-style); weights are always normalised to sum to one.
Field resize_cubic(const Field& src, int out_width, int out_height,
                   bool antialias = true);

// Min-max normalise into [0,1]; a constant field becomes all zeros.
void normalize_minmax(Field& f);

}  // namespace cbvc
