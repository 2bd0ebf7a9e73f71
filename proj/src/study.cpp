#include "cbvc/study.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cbvc/csv.hpp"
#include "cbvc/rng.hpp"
#include "json.hpp"

namespace cbvc {

using nlohmann::json;

const char* const kRatingsHeader = "observer,stimulus,score,timestamp,presentation_index";

const char* to_string(StimulusRole role) {
  switch (role) {
    case StimulusRole::test: return "test";
    case StimulusRole::hidden_reference: return "hidden_reference";
    case StimulusRole::repeat: return "repeat";
    case StimulusRole::training_good: return "training_good";
    case StimulusRole::training_bad: return "training_bad";
  }
  return "?";
}

StimulusRole parse_stimulus_role(const std::string& s) {
  for (auto r : {StimulusRole::test, StimulusRole::hidden_reference, StimulusRole::repeat,
                 StimulusRole::training_good, StimulusRole::training_bad})
    if (s == to_string(r)) return r;
  throw ConfigError("unknown stimulus role '" + s + "'");
}

bool is_training(StimulusRole role) {
  return role == StimulusRole::training_good || role == StimulusRole::training_bad;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::missing_training: return "missing_training";
    case ViolationKind::training_in_main: return "training_in_main";
    case ViolationKind::duplicate_id: return "duplicate_id";
    case ViolationKind::dangling_repeat: return "dangling_repeat";
    case ViolationKind::repeat_multiplicity: return "repeat_multiplicity";
    case ViolationKind::adjacent_repeat: return "adjacent_repeat";
    case ViolationKind::bad_scale: return "bad_scale";
    case ViolationKind::empty_plan: return "empty_plan";
  }
  return "?";
}

namespace {

json record_to_json(const StimulusRecord& r) {
  json j = {{"id", r.id}, {"role", to_string(r.role)}, {"media", r.media}};
  if (!r.provenance.empty()) j["provenance"] = r.provenance;
  if (!r.repeat_of.empty()) j["repeat_of"] = r.repeat_of;
  return j;
}

StimulusRecord record_from_json(const json& j) {
  StimulusRecord r;
  r.id = j.at("id").get<std::string>();
  r.role = parse_stimulus_role(j.at("role").get<std::string>());
  r.media = j.value("media", "");
  r.provenance = j.value("provenance", "");
  r.repeat_of = j.value("repeat_of", "");
  return r;
}

bool has_adjacent_pair(const std::vector<StimulusRecord>& items) {
  for (std::size_t i = 1; i < items.size(); ++i)
    if (items[i].id == items[i - 1].id) return true;
  return false;
}

}  // namespace

std::string SessionPlan::to_json() const {
  json j;
  j["schema"] = "cbvc-session-plan";
  j["version"] = 1;
  j["seed"] = seed;
  j["scale_labels"] = scale_labels;
  j["policy"] = {{"single_playback", policy.single_playback},
                 {"unlimited_rating_time", policy.unlimited_rating_time},
                 {"allow_adjacent_repeats", policy.allow_adjacent_repeats}};
  j["training"] = json::array();
  for (const auto& t : training) j["training"].push_back(record_to_json(t));
  j["items"] = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    json item = record_to_json(items[i]);
    item["presentation_index"] = i;
    j["items"].push_back(std::move(item));
  }
  return j.dump(2) + "\n";
}

SessionPlan SessionPlan::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedInputError(std::string("session plan: ") + e.what());
  }
  try {
    if (j.value("schema", "") != "cbvc-session-plan" || j.value("version", 0) != 1)
      throw MalformedInputError("session plan: unsupported schema or version");
    SessionPlan p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.scale_labels = j.at("scale_labels").get<std::vector<std::string>>();
    const auto& pol = j.at("policy");
    p.policy.single_playback = pol.value("single_playback", true);
    p.policy.unlimited_rating_time = pol.value("unlimited_rating_time", true);
    p.policy.allow_adjacent_repeats = pol.value("allow_adjacent_repeats", false);
    for (const auto& t : j.at("training")) p.training.push_back(record_from_json(t));
    for (const auto& item : j.at("items")) p.items.push_back(record_from_json(item));
    return p;
  } catch (const json::exception& e) {
    throw MalformedInputError(std::string("session plan: ") + e.what());
  }
}

void SessionPlan::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << to_json();
}

SessionPlan SessionPlan::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

SessionPlan build_session(const std::vector<StimulusRecord>& stimuli,
                          const SessionOptions& options) {
  std::vector<StimulusRecord> rated;
  std::optional<StimulusRecord> good, bad;
  std::set<std::string> seen;
  int references = 0;
  for (const auto& s : stimuli) {
    if (!seen.insert(s.id).second) throw PlanError("duplicate stimulus id '" + s.id + "'");
    switch (s.role) {
      case StimulusRole::test:
        rated.push_back(s);
        break;
      case StimulusRole::hidden_reference:
        rated.push_back(s);
        ++references;
        break;
      case StimulusRole::training_good:
        if (good) throw PlanError("more than one training_good stimulus");
        good = s;
        break;
      case StimulusRole::training_bad:
        if (bad) throw PlanError("more than one training_bad stimulus");
        bad = s;
        break;
      case StimulusRole::repeat:
        throw PlanError("input stimuli must not contain repeat entries ('" + s.id + "')");
    }
  }
  if (!good || !bad) throw PlanError("a training_good and a training_bad stimulus are required");
  if (references == 0) throw PlanError("no hidden_reference (source) stimuli given");

  Rng rng(options.seed);
  std::vector<std::size_t> repeat_idx;
  if (!options.fixed_repeats.empty()) {
    for (const auto& id : options.fixed_repeats) {
      const auto it = std::find_if(rated.begin(), rated.end(),
                                   [&](const StimulusRecord& r) { return r.id == id; });
      if (it == rated.end()) throw PlanError("fixed repeat '" + id + "' is not a rated stimulus");
      const auto idx = static_cast<std::size_t>(it - rated.begin());
      if (std::find(repeat_idx.begin(), repeat_idx.end(), idx) != repeat_idx.end())
        throw PlanError("fixed repeat '" + id + "' listed twice");
      repeat_idx.push_back(idx);
    }
  } else {
    if (options.repeat_count < 0 || static_cast<std::size_t>(options.repeat_count) > rated.size())
      throw PlanError("repeat_count " + std::to_string(options.repeat_count) +
                      " exceeds the number of rated stimuli");
    std::vector<std::size_t> all(rated.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rng.shuffle(std::span<std::size_t>(all));
    repeat_idx.assign(all.begin(), all.begin() + options.repeat_count);
    std::sort(repeat_idx.begin(), repeat_idx.end());
  }

  std::vector<StimulusRecord> items = rated;
  for (std::size_t idx : repeat_idx) {
    StimulusRecord r = rated[idx];
    r.role = StimulusRole::repeat;
    r.repeat_of = r.id;
    items.push_back(std::move(r));
  }

  int attempt = 0;
  for (;;) {
    rng.shuffle(std::span<StimulusRecord>(items));
    if (options.allow_adjacent_repeats || !has_adjacent_pair(items)) break;
    if (++attempt >= options.max_reshuffles)
      throw PlanError("could not separate repeats from their originals after " +
                      std::to_string(attempt) + " shuffles");
  }
  // The earlier presentation of a repeated pair is the original.
  std::map<std::string, StimulusRole> original_role;
  for (std::size_t idx : repeat_idx) original_role.emplace(rated[idx].id, rated[idx].role);
  std::set<std::string> placed;
  for (auto& item : items) {
    const auto it = original_role.find(item.id);
    if (it == original_role.end()) continue;
    if (placed.insert(item.id).second) {
      item.role = it->second;
      item.repeat_of.clear();
    } else {
      item.role = StimulusRole::repeat;
      item.repeat_of = item.id;
    }
  }

  SessionPlan plan;
  plan.seed = options.seed;
  plan.scale_labels = options.scale_labels;
  plan.policy.allow_adjacent_repeats = options.allow_adjacent_repeats;
  plan.training = {*good, *bad};
  plan.items = std::move(items);
  return plan;
}

std::vector<Violation> validate_session(const SessionPlan& plan) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  if (plan.items.empty()) add(ViolationKind::empty_plan, "main list is empty");
  if (plan.scale_labels.size() != 5)
    add(ViolationKind::bad_scale,
        "expected 5 scale labels, got " + std::to_string(plan.scale_labels.size()));

  std::set<std::string> training_ids;
  int goods = 0, bads = 0;
  for (const auto& t : plan.training) {
    training_ids.insert(t.id);
    if (t.role == StimulusRole::training_good) ++goods;
    if (t.role == StimulusRole::training_bad) ++bads;
  }
  if (goods != 1 || bads != 1)
    add(ViolationKind::missing_training, "training must hold one good and one bad example");

  std::map<std::string, int> originals;
  std::map<std::string, int> repeats;
  std::map<std::string, std::size_t> first_pos;
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    const auto& item = plan.items[i];
    if (is_training(item.role) || training_ids.count(item.id))
      add(ViolationKind::training_in_main,
          "training stimulus '" + item.id + "' at presentation " + std::to_string(i));
    if (item.role == StimulusRole::repeat) {
      ++repeats[item.id];
      if (item.repeat_of != item.id)
        add(ViolationKind::dangling_repeat,
            "repeat at presentation " + std::to_string(i) + " references '" + item.repeat_of +
                "' but carries id '" + item.id + "'");
    } else {
      if (++originals[item.id] > 1)
        add(ViolationKind::duplicate_id,
            "id '" + item.id + "' appears twice without a repeat role");
    }
    first_pos.emplace(item.id, i);
    if (i > 0 && plan.items[i - 1].id == item.id && !plan.policy.allow_adjacent_repeats)
      add(ViolationKind::adjacent_repeat, "'" + item.id + "' presented back to back at " +
                                              std::to_string(i - 1) + "/" + std::to_string(i));
  }
  for (const auto& [id, n] : repeats) {
    if (!originals.count(id))
      add(ViolationKind::dangling_repeat, "repeat of '" + id + "' has no original");
    else if (n != 1)
      add(ViolationKind::repeat_multiplicity,
          "'" + id + "' presented " + std::to_string(n + originals[id]) + " times");
  }
  return out;
}

RatingSet parse_ratings(const std::string& text) {
  std::istringstream in(text);
  long lineno = 0;
  const auto header = csv::next_line(in, lineno);
  if (!header) throw IngestError("ratings: missing header", 0);
  if (*header != kRatingsHeader)
    throw IngestError("ratings: expected header '" + std::string(kRatingsHeader) + "'", 0);

  RatingSet set;
  std::set<std::pair<std::string, int>> keys;
  long row = 0;
  while (const auto line = csv::next_line(in, lineno)) {
    ++row;
    const auto where = "ratings: row " + std::to_string(row) + " (line " + std::to_string(lineno) +
                       "): ";
    const auto f = csv::split(*line);
    if (f.size() != 5)
      throw IngestError(where + "expected 5 columns, got " + std::to_string(f.size()), row);
    Rating r;
    r.observer = f[0];
    r.stimulus = f[1];
    r.timestamp = f[3];
    if (r.observer.empty() || r.stimulus.empty())
      throw IngestError(where + "empty observer or stimulus", row);
    auto to_int = [&](const std::string& s, const char* what) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size())
        throw IngestError(where + "non-integer " + what + " '" + s + "'", row);
      return v;
    };
    r.score = to_int(f[2], "score");
    if (r.score < 1 || r.score > 5)
      throw IngestError(where + "score " + std::to_string(r.score) + " outside 1..5", row);
    r.presentation_index = to_int(f[4], "presentation_index");
    if (r.presentation_index < 0)
      throw IngestError(where + "negative presentation_index", row);
    if (!keys.emplace(r.observer, r.presentation_index).second)
      throw IngestError(where + "duplicate rating for observer '" + r.observer +
                            "' at presentation " + std::to_string(r.presentation_index),
                        row);
    set.records.push_back(std::move(r));
  }
  return set;
}

RatingSet ingest_ratings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ratings(ss.str());
}

std::string format_rating_row(const Rating& r) {
  return csv::join({r.observer, r.stimulus, std::to_string(r.score), r.timestamp,
                    std::to_string(r.presentation_index)});
}

}  // namespace cbvc
