#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbvc/error.hpp"
#include "cbvc/manifest.hpp"
#include "cbvc/study.hpp"

namespace cbvc {

class AnalysisError : public Error {
 public:
  using Error::Error;
};

// Statistics use each observer's first presentation of a stimulus (lowest
// presentation index); the repeat presentation only feeds the
// intra-observer measures. Standard deviations use the n-1 denominator and
// are 0 for a single value.

struct MosEntry {
  std::string stimulus;
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& values);

// stimulus -> observer -> first-presentation score
using ScoreTable = std::map<std::string, std::map<std::string, int>>;
ScoreTable primary_scores(const RatingSet& ratings);

MosEntry mos(const RatingSet& ratings, const std::string& stimulus);
std::vector<MosEntry> mos_all(const RatingSet& ratings);

// Fraction of the observer's stimuli whose score lies in
// [mu - sd, mu + sd] of all other observers (bounds inclusive).
double agreement_percentage(const RatingSet& ratings, const std::string& observer);

// Stimuli some observer rated more than once, sorted.
std::vector<std::string> repeated_stimuli(const RatingSet& ratings);

// Mean |S_orig - S_repeat| over the repeated stimuli.
double intra_observer_distance(const RatingSet& ratings, const std::string& observer,
                               const std::vector<std::string>& repeated);

// Cross-observer view of the same differences, one row per repeated stimulus.
struct RepeatStat {
  std::string stimulus;
  double mean = 0.0;
  double sd = 0.0;
  int min = 0;
  int max = 0;
  int n = 0;
};
std::vector<RepeatStat> repeat_table(const RatingSet& ratings,
                                     const std::vector<std::string>& repeated);

struct ObserverReliability {
  std::string observer;
  double agreement = 0.0;
  std::optional<double> intra_distance;  // absent without repeats
  bool low_agreement = false;
  bool high_distance = false;
};

struct ScreeningThresholds {
  double agreement = 0.5;  // flagged unless strictly above
  double distance = 2.0;   // flagged when strictly above
};

// Reporting only; never drops data.
std::vector<ObserverReliability> screen_observers(const RatingSet& ratings,
                                                  const std::vector<std::string>& repeated,
                                                  const ScreeningThresholds& thresholds = {});

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-tailed
};

double t_two_tailed_p(double t, double df);

// Pooled-variance Student t by default; Welch-Satterthwaite when welch.
TTestResult two_sample_t(const std::vector<double>& a, const std::vector<double>& b,
                         bool welch = false);

struct BitrateCell {
  std::string label;  // nf=16/G, nf=FL/P3, ...
  std::string stimulus_id;
  std::string baseline_id;
  double stimulus_mbps = 0.0;
  double baseline_mbps = 0.0;
  double ratio = 0.0;  // baseline / stimulus
  bool stimulus_min = false;
  bool baseline_min = false;
};

struct BitrateRow {
  std::string source;
  bool roi = false;
  std::vector<BitrateCell> cells;  // aligned with BitrateReport::columns
};

struct BitrateReport {
  std::vector<std::string> columns;
  std::vector<BitrateRow> rows;
};

double mbps(std::uint64_t bytes, double fps, int frames);

BitrateReport bitrate_report(const std::vector<ManifestRow>& manifest);
std::string format_bitrate_csv(const BitrateReport& report);
std::string format_bitrate_text(const BitrateReport& report);

// MOS +/- SD for each stimulus and its size-matched baseline, with the
// pairwise t-test, for external plotting.
std::string format_plot_data_csv(const RatingSet& ratings,
                                 const std::vector<ManifestRow>& manifest);

}  // namespace cbvc
