#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbvc/resample.hpp"

namespace cbvc {

struct VideoGeometry {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  double fps = 24.0;
  int num_frames = 1;

  // Throws ConfigError when any invariant fails: even dims >= 16,
  // bit depth 8 or 10, fps > 0, at least one frame.
  void validate() const;

  int chroma_width() const { return width / 2; }
  int chroma_height() const { return height / 2; }
  int max_sample() const { return (1 << bit_depth) - 1; }
  int bytes_per_sample() const { return bit_depth > 8 ? 2 : 1; }
  std::size_t luma_samples() const {
    return static_cast<std::size_t>(width) * height;
  }
  std::size_t chroma_samples() const { return luma_samples() / 4; }
  std::uintmax_t frame_bytes() const {
    return (luma_samples() + 2 * chroma_samples()) * bytes_per_sample();
  }
};

// One 4:2:0 picture. Planes are row-major.
struct Frame {
  int index = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> y;
  std::vector<std::uint16_t> u;
  std::vector<std::uint16_t> v;

  static Frame blank(const VideoGeometry& g, int index, std::uint16_t y_value,
                     std::uint16_t u_value, std::uint16_t v_value);

  std::uint16_t luma(int x, int yy) const {
    return y[static_cast<std::size_t>(yy) * width + x];
  }
  std::uint16_t cb(int x, int yy) const {
    return u[static_cast<std::size_t>(yy) * (width / 2) + x];
  }
  std::uint16_t cr(int x, int yy) const {
    return v[static_cast<std::size_t>(yy) * (width / 2) + x];
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct VideoSequence {
  VideoGeometry geometry;
  std::vector<Frame> frames;
};

// CIELAB planes at luma resolution.
struct LabFrame {
  int width = 0;
  int height = 0;
  std::vector<double> l;
  std::vector<double> a;
  std::vector<double> b;
};

// Streaming reader for planar yuv420p / yuv420p10le files. The file size is
// checked on open; frames are decoded one at a time by next().
class YuvReader {
 public:
  YuvReader(const std::filesystem::path& path, const VideoGeometry& geometry);

  std::optional<Frame> next();
  const VideoGeometry& geometry() const { return geometry_; }

 private:
  std::filesystem::path path_;
  VideoGeometry geometry_;
  std::ifstream in_;
  int next_index_ = 0;
  std::vector<unsigned char> buffer_;
};

std::vector<Frame> read_yuv(const std::filesystem::path& path,
                            const VideoGeometry& geometry);

// Appends frames in the same layout YuvReader consumes.
class YuvWriter {
 public:
  YuvWriter(const std::filesystem::path& path, const VideoGeometry& geometry);
  void write(const Frame& frame);

 private:
  VideoGeometry geometry_;
  std::ofstream out_;
  std::vector<unsigned char> buffer_;
};

void write_yuv(const std::filesystem::path& path, const VideoGeometry& geometry,
               std::span<const Frame> frames);

enum class YuvRange { limited, full };

// BT.709 YCbCr -> sRGB (D65) -> CIELAB. Chroma is upsampled by
// nearest-neighbour. Out-of-gamut RGB is clipped to [0,1] before
// linearisation.
LabFrame yuv_to_lab(const Frame& frame, const VideoGeometry& geometry,
                    YuvRange range = YuvRange::limited);

// Same conversion on real-valued planes that already share one resolution
// (e.g. after resampling). Sample values are in code units of bit_depth.
LabFrame ycbcr_to_lab(const Field& y, const Field& cb, const Field& cr,
                      int bit_depth, YuvRange range = YuvRange::limited);

// Moving-rectangle test content.
struct SynthRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  int vx = 0;  // px/frame
  int vy = 0;
  int luma = 0;
  int cb = -1;  // -1: mid-level (neutral)
  int cr = -1;
};

struct SynthSpec {
  VideoGeometry geometry;
  int background_luma = -1;  // -1: mid-level
  int background_cb = -1;
  int background_cr = -1;
  int noise = 0;  // uniform luma noise amplitude, in code values
  std::uint64_t seed = 1;
  std::vector<SynthRect> rects;

  // key=value text; see docs/synth-format.md.
  static SynthSpec parse(const std::string& text);
  static SynthSpec load(const std::filesystem::path& path);
};

VideoSequence synth_video(const SynthSpec& spec);

}  // namespace cbvc
