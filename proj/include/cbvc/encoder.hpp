#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbvc/error.hpp"
#include "cbvc/roi.hpp"
#include "cbvc/video.hpp"

namespace cbvc {

enum class EncoderKind { external, stub };

EncoderKind parse_encoder_kind(const std::string& s);
const char* to_string(EncoderKind kind);

class EncoderError : public Error {
 public:
  using Error::Error;
};

struct EncoderSettings {
  EncoderKind kind = EncoderKind::stub;
  // Binary name or path; empty means $CBVC_ENCODER, falling back to "kvazaar".
  std::string binary;
  // Variant of the ROI file handed to the encoder.
  RoiFileMode roi_mode = RoiFileMode::per_frame;
  bool remap_roi_to_ctu = true;
  int ctu_size = 64;
  double stub_bytes_per_frame = 12000.0;
  std::vector<std::string> extra_flags;

  std::string resolved_binary_name() const;
};

struct EncodeJob {
  std::filesystem::path input;
  VideoGeometry geometry;
  int base_qp = 22;
  std::optional<RoiQpVideoMap> roi;
  std::filesystem::path output;
  EncoderSettings encoder;

  void validate() const;
  // Where the encoder-specific ROI file is written for this job.
  std::filesystem::path roi_path() const;
};

struct EncodeResult {
  std::filesystem::path output;
  std::uint64_t size = 0;  // bytes
  double bitrate = 0.0;    // bits/second
  double wall_seconds = 0.0;
  std::string encoder;
};

// 8 * bytes * fps / frames.
double bitrate_bps(std::uint64_t bytes, double fps, int frames);

// Encoder invocation: fixed GOP structure (one intra picture, no
// period), ultrafast preset, constant base QP, optional ROI delta map.
std::vector<std::string> build_command(const EncodeJob& job);

// The ROI map as the configured encoder expects it (CTU remap).
RoiQpVideoMap adapt_roi_for_encoder(const RoiQpVideoMap& map, const EncodeJob& job);

EncodeResult encode(const EncodeJob& job);

// Deterministic size model:
// sum over frames of round(C * 2^(-(base_qp + mean_roi_delta - 22) / 6)).
std::uint64_t stub_size(const EncodeJob& job);
EncodeResult stub_encode(const EncodeJob& job);

}  // namespace cbvc
