#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cbvc/resample.hpp"
#include "cbvc/video.hpp"

namespace cbvc {

// Simple-priors saliency. Defaults follow the reference implementation of
// the method: 256x256 working grid, log-Gabor omega0 = 0.002, sigmaF = 6.2,
// sigmaC = 0.25, sigmaD = 114. The centre-bias (location) prior is off by
// default.
struct SdspConfig {
  int working_resolution = 256;
  double omega0 = 0.002;  // cycles/pixel
  double sigma_f = 6.2;
  double sigma_c = 0.25;
  double sigma_d = 114.0;  // pixels at working resolution
  bool include_location_prior = false;
  YuvRange range = YuvRange::limited;

  void validate() const;
};

struct SaliencyMap {
  int frame_index = 0;
  Field values;  // [0,1]
};

// Compression candidate regions: the complement of saliency.
struct CcrMap {
  int frame_index = 0;
  Field values;  // [0,1]
};

// Log-Gabor transfer function on the unshifted DFT grid; DC is zero.
Field log_gabor_transfer(int width, int height, const SdspConfig& cfg);

Field frequency_prior(const LabFrame& lab, const SdspConfig& cfg);
Field color_prior(const LabFrame& lab, const SdspConfig& cfg);
Field location_prior(int width, int height, const SdspConfig& cfg);

// Band-pass filters one plane in the frequency domain:
// real(IDFT(DFT(plane) * transfer)).
Field filter_frequency_domain(const Field& plane, const Field& transfer);

SaliencyMap sdsp(const Frame& frame, const VideoGeometry& geometry,
                 const SdspConfig& cfg = {});

CcrMap ccr_from_saliency(const SaliencyMap& s);
SaliencyMap saliency_from_ccr(const CcrMap& c);

// Packed map file: 8-byte magic "CBVCMAP1", then uint32 LE width, height,
// frame count, then width*height*count float32 LE values, frame-major and
// row-major within a frame.
void write_map_file(const std::filesystem::path& path, std::span<const Field> maps);
std::vector<Field> read_map_file(const std::filesystem::path& path);

// 8-bit binary PGM (P5), value * 255 rounded.
void write_pgm(const std::filesystem::path& path, const Field& map);

}  // namespace cbvc
