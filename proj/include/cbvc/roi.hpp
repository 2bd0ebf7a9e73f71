#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cbvc/resample.hpp"
#include "cbvc/saliency.hpp"

namespace cbvc {

inline constexpr int kMaxQp = 51;

// CCR resampled onto the encoder block grid, values in [0,1].
struct BlockGrid {
  Field values;
  int blocks_w() const { return values.width; }
  int blocks_h() const { return values.height; }
};

struct RoiQpFrame {
  int frame_index = 0;
  int blocks_w = 0;
  int blocks_h = 0;
  std::vector<int> values;  // row-major delta QP

  double mean() const;
  friend bool operator==(const RoiQpFrame&, const RoiQpFrame&) = default;
};

struct RoiQpVideoMap {
  int blocks_w = 0;
  int blocks_h = 0;
  std::vector<RoiQpFrame> frames;

  // Uniform dims, values within [0, kMaxQp].
  void validate() const;
  friend bool operator==(const RoiQpVideoMap&, const RoiQpVideoMap&) = default;
};

enum class RoiFileMode { per_frame, static_first_frame };

// Cubic (Catmull-Rom) resampling to the block grid, clamped to [0,1].
BlockGrid resize_ccr(const CcrMap& ccr, int blocks_w, int blocks_h, bool antialias = true);

// The single-block grid used when no spatial CCR is encoded.
BlockGrid uniform_grid();

// clamp(round(grid * frame_delta), 0, 51 - base_qp) per block.
RoiQpFrame roi_qp_frame(const BlockGrid& grid, int frame_delta, int base_qp, int frame_index = 0);

// One RoiQpFrame per schedule entry; grids has either one entry (reused for
// every frame) or one per frame.
RoiQpVideoMap build_roi_map(const std::vector<BlockGrid>& grids, const std::vector<int>& deltas,
                            int base_qp);

// Canonical text form: "<blocks_w> <blocks_h>\n" then one line per frame of
// space-separated row-major integers; LF endings.
std::string format_roi(const RoiQpVideoMap& map, RoiFileMode mode = RoiFileMode::per_frame);
RoiQpVideoMap parse_roi(const std::string& text);

void write_roi_file(const RoiQpVideoMap& map, const std::filesystem::path& path,
                    RoiFileMode mode = RoiFileMode::per_frame);
RoiQpVideoMap read_roi_file(const std::filesystem::path& path);

// Nearest-block lookup of each CTU centre; the result has
// ceil(width/ctu) x ceil(height/ctu) blocks.
RoiQpVideoMap remap_to_ctu_grid(const RoiQpVideoMap& map, int frame_width, int frame_height,
                                int ctu_size = 64);

}  // namespace cbvc
