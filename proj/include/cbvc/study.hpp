#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbvc/error.hpp"

namespace cbvc {

enum class StimulusRole { test, hidden_reference, repeat, training_good, training_bad };

const char* to_string(StimulusRole role);
StimulusRole parse_stimulus_role(const std::string& s);
bool is_training(StimulusRole role);

struct StimulusRecord {
  std::string id;  // e.g. Market-nf-32-BS-10-G, Market-SRC
  std::string media;
  StimulusRole role = StimulusRole::test;
  std::string provenance;  // free-form config descriptor
  std::string repeat_of;   // set on repeat entries only

  friend bool operator==(const StimulusRecord&, const StimulusRecord&) = default;
};

struct SessionPolicy {
  bool single_playback = true;
  bool unlimited_rating_time = true;
  bool allow_adjacent_repeats = false;

  friend bool operator==(const SessionPolicy&, const SessionPolicy&) = default;
};

inline const std::vector<std::string> kDefaultScaleLabels = {"Bad", "Poor", "Fair", "Good",
                                                             "Excellent"};

struct SessionPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> scale_labels = kDefaultScaleLabels;
  SessionPolicy policy;
  std::vector<StimulusRecord> training;  // good first, then bad
  std::vector<StimulusRecord> items;     // presentation order

  std::string to_json() const;
  static SessionPlan from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SessionPlan load(const std::filesystem::path& path);

  friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

struct SessionOptions {
  int repeat_count = 6;
  std::uint64_t seed = 1;
  // When non-empty, these rated ids are repeated instead of a random draw.
  std::vector<std::string> fixed_repeats;
  bool allow_adjacent_repeats = false;
  int max_reshuffles = 10000;
  std::vector<std::string> scale_labels = kDefaultScaleLabels;
};

// stimuli: test and hidden_reference records plus exactly one training_good
// and one training_bad. Repeats are drawn from the rated (test + reference)
// items, the main list is shuffled, and shuffles are retried until no item
// sits next to its own repeat.
SessionPlan build_session(const std::vector<StimulusRecord>& stimuli,
                          const SessionOptions& options);

enum class ViolationKind {
  missing_training,
  training_in_main,
  duplicate_id,
  dangling_repeat,
  repeat_multiplicity,
  adjacent_repeat,
  bad_scale,
  empty_plan,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

std::vector<Violation> validate_session(const SessionPlan& plan);

struct Rating {
  std::string observer;
  std::string stimulus;
  int score = 0;  // 1 = Bad ... 5 = Excellent
  std::string timestamp;
  int presentation_index = 0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct RatingSet {
  std::vector<Rating> records;
};

extern const char* const kRatingsHeader;

class IngestError : public Error {
 public:
  IngestError(const std::string& what, long row) : Error(what), row_(row) {}
  long row() const { return row_; }  // 1-based data row, header excluded

 private:
  long row_;
};

RatingSet parse_ratings(const std::string& text);
RatingSet ingest_ratings(const std::filesystem::path& path);
std::string format_rating_row(const Rating& r);

}  // namespace cbvc
