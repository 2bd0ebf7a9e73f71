#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbvc/encoder.hpp"
#include "cbvc/manifest.hpp"
#include "cbvc/saliency.hpp"
#include "cbvc/schedule.hpp"
#include "cbvc/size_match.hpp"
#include "cbvc/video.hpp"

namespace cbvc {

struct SourceConfig {
  std::string name;
  std::filesystem::path path;          // raw YUV
  std::optional<std::filesystem::path> synth;  // generator spec; YUV is produced on run
  VideoGeometry geometry;
};

struct PipelineConfig {
  std::vector<SourceConfig> sources;
  int peak = 29;
  int floor = 0;
  double sigma_frac = 1.0 / 6.0;
  int blocks_w = 10;
  int blocks_h = 10;
  int base_qp = 22;
  EncoderSettings encoder;
  MatchConstraint match;
  SdspConfig sdsp;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  unsigned jobs = 1;

  // JSON document; relative paths resolve against base_dir.
  static PipelineConfig from_json(const std::string& text, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  void validate() const;
};

// <Source>-nf-<N>-BS-<blocks>-<G|P3>; the size-matched baseline appends -C-QP.
std::string stimulus_id(const std::string& source, const ExperimentConfig& cfg, int blocks_w,
                        int blocks_h);
std::string baseline_id(const std::string& stimulus);

struct PipelineSummary {
  std::filesystem::path manifest;
  int encodes = 0;    // encoder invocations, including size-matching probes
  int completed = 0;  // stimulus/baseline pairs produced this run
  int skipped = 0;    // pairs already present in the manifest
  int failed = 0;
  std::vector<std::string> errors;
};

// For every source and each of the 8 configurations: build the ROI map,
// encode the stimulus, size-match and encode the constant-QP baseline.
// Rows are appended to <output_dir>/manifest.csv as pairs complete; pairs
// already recorded as ok are skipped.
PipelineSummary run_pipeline(const PipelineConfig& cfg);

// Per-frame CCR block grids for a whole sequence.
std::vector<BlockGrid> compute_ccr_grids(const std::filesystem::path& yuv,
                                         const VideoGeometry& geometry, const SdspConfig& sdsp,
                                         int blocks_w, int blocks_h, unsigned jobs);

}  // namespace cbvc
