#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cbvc {

enum class ScheduleKind { gaussian, cubic };

const char* to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& s);

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::gaussian;
  std::optional<int> window;  // nf; nullopt means the full sequence
  int peak = 29;
  int floor = 0;
  double sigma_frac = 1.0 / 6.0;
  int total_frames = 0;
  int base_qp = 22;
  // Permits a cubic curve over a finite window (repeats table naming).
  bool allow_windowed_cubic = false;

  int window_length() const { return window.value_or(total_frames); }
  // Throws ConfigError on invariant violations.
  void validate() const;
};

// Round half away from zero.
int round_qp(double v);

std::vector<int> gaussian_schedule(const ScheduleConfig& cfg);
std::vector<int> cubic_schedule(const ScheduleConfig& cfg);
// Window for cfg.kind.
std::vector<int> schedule_window(const ScheduleConfig& cfg);

// out[f] = window[f mod nf] for f < total_frames.
std::vector<int> tile_schedule(const std::vector<int>& window, int total_frames);

// The ROI scenario a configuration is encoded under.
enum class RoiScenario { ccr, none };

struct ExperimentConfig {
  ScheduleConfig schedule;
  RoiScenario roi = RoiScenario::ccr;
};

// gaussian/16, gaussian/32, gaussian/full, cubic/full, each crossed with
// {CCR on, CCR off}; ordered schedule-major, CCR first.
std::vector<ExperimentConfig> enumerate_configurations(int total_frames,
                                                       const ScheduleConfig& defaults = {});

// "frame,delta_qp" CSV.
void write_schedule_csv(const std::filesystem::path& path, const std::vector<int>& deltas);
std::vector<int> read_schedule_csv(const std::filesystem::path& path);

}  // namespace cbvc
