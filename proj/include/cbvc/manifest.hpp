#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cbvc {

// One encoded stimulus. Spatiotemporal rows have role "stimulus" and point
// at their constant-QP baseline through paired_id; baselines point back.
struct ManifestRow {
  std::string id;
  std::string role;      // "stimulus" | "baseline"
  std::string source;
  std::string schedule;  // "gaussian" | "cubic"
  std::string window;    // "16", "32", ... or "full"
  std::string blocks;    // "10x10", "1x1"
  bool roi = false;      // CCR scenario
  int qp = 0;
  std::uint64_t size_bytes = 0;
  double bitrate_bps = 0.0;
  double fps = 0.0;
  int frames = 0;
  std::string paired_id;
  std::string output;    // relative to the pipeline output directory
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

extern const char* const kManifestHeader;

std::string format_manifest_row(const ManifestRow& row);

// Later rows with the same id supersede earlier ones (append-only updates).
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Last row per id, in order of first appearance.
std::vector<ManifestRow> latest_rows(const std::vector<ManifestRow>& rows);

class ManifestWriter {
 public:
  // Creates the file with a header when missing; appends otherwise.
  explicit ManifestWriter(const std::filesystem::path& path);
  void append(const ManifestRow& row);

 private:
  std::filesystem::path path_;
};

}  // namespace cbvc
