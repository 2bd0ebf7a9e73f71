#include "cbvc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "cbvc/csv.hpp"

namespace cbvc {

namespace {

// Slack on the agreement interval so integer scores sitting exactly on a
// bound are not lost to round-off in mu +/- sd.
constexpr double kBoundSlack = 1e-9;

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Per observer and stimulus: scores ordered by presentation index.
std::map<std::string, std::map<std::string, std::vector<std::pair<int, int>>>> by_observer(
    const RatingSet& ratings) {
  std::map<std::string, std::map<std::string, std::vector<std::pair<int, int>>>> out;
  for (const auto& r : ratings.records)
    out[r.observer][r.stimulus].emplace_back(r.presentation_index, r.score);
  for (auto& [obs, per] : out)
    for (auto& [stim, v] : per) std::sort(v.begin(), v.end());
  return out;
}

std::string label_for(const ManifestRow& r) {
  const std::string kind = r.schedule == "cubic" ? "P3" : "G";
  return "nf=" + (r.window == "full" ? std::string("FL") : r.window) + "/" + kind;
}

// Column order: numeric windows ascending, then full length; G before P3.
bool column_less(const ManifestRow& a, const ManifestRow& b) {
  auto key = [](const ManifestRow& r) {
    const long w = r.window == "full" ? std::numeric_limits<long>::max() : std::stol(r.window);
    return std::make_pair(w, r.schedule == "cubic" ? 1 : 0);
  };
  return key(a) < key(b);
}

}  // namespace

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

ScoreTable primary_scores(const RatingSet& ratings) {
  ScoreTable table;
  std::map<std::pair<std::string, std::string>, int> first_index;
  for (const auto& r : ratings.records) {
    const auto key = std::make_pair(r.stimulus, r.observer);
    auto it = first_index.find(key);
    if (it == first_index.end() || r.presentation_index < it->second) {
      first_index[key] = r.presentation_index;
      table[r.stimulus][r.observer] = r.score;
    }
  }
  return table;
}

MosEntry mos(const RatingSet& ratings, const std::string& stimulus) {
  const auto table = primary_scores(ratings);
  const auto it = table.find(stimulus);
  if (it == table.end()) throw AnalysisError("mos: no ratings for stimulus '" + stimulus + "'");
  std::vector<double> scores;
  for (const auto& [obs, s] : it->second) scores.push_back(s);
  const auto ms = mean_sd(scores);
  return {stimulus, ms.mean, ms.sd, static_cast<int>(scores.size())};
}

std::vector<MosEntry> mos_all(const RatingSet& ratings) {
  std::vector<MosEntry> out;
  for (const auto& [stim, per] : primary_scores(ratings)) {
    std::vector<double> scores;
    for (const auto& [obs, s] : per) scores.push_back(s);
    const auto ms = mean_sd(scores);
    out.push_back({stim, ms.mean, ms.sd, static_cast<int>(scores.size())});
  }
  return out;
}

double agreement_percentage(const RatingSet& ratings, const std::string& observer) {
  const auto table = primary_scores(ratings);
  std::vector<std::string> thin;
  for (const auto& [stim, per] : table)
    if (per.size() < 3) thin.push_back(stim);
  if (!thin.empty()) {
    std::string list;
    for (const auto& s : thin) list += (list.empty() ? "" : ", ") + s;
    throw AnalysisError("agreement needs >= 3 raters per stimulus; insufficient: " + list);
  }

  int rated = 0;
  int agreed = 0;
  for (const auto& [stim, per] : table) {
    const auto own = per.find(observer);
    if (own == per.end()) continue;
    std::vector<double> others;
    for (const auto& [obs, s] : per)
      if (obs != observer) others.push_back(s);
    const auto ms = mean_sd(others);
    ++rated;
    const double score = own->second;
    if (score >= ms.mean - ms.sd - kBoundSlack && score <= ms.mean + ms.sd + kBoundSlack)
      ++agreed;
  }
  if (rated == 0) throw AnalysisError("agreement: observer '" + observer + "' rated nothing");
  return static_cast<double>(agreed) / rated;
}

std::vector<std::string> repeated_stimuli(const RatingSet& ratings) {
  std::set<std::string> out;
  for (const auto& [obs, per] : by_observer(ratings))
    for (const auto& [stim, v] : per)
      if (v.size() > 1) out.insert(stim);
  return {out.begin(), out.end()};
}

double intra_observer_distance(const RatingSet& ratings, const std::string& observer,
                               const std::vector<std::string>& repeated) {
  if (repeated.empty()) throw AnalysisError("intra-observer distance: no repeated stimuli");
  const auto all = by_observer(ratings);
  const auto obs = all.find(observer);
  double total = 0.0;
  for (const auto& stim : repeated) {
    const std::vector<std::pair<int, int>>* v = nullptr;
    if (obs != all.end()) {
      if (auto it = obs->second.find(stim); it != obs->second.end()) v = &it->second;
    }
    if (!v || v->size() < 2)
      throw AnalysisError("observer '" + observer + "' lacks a repeat pair for '" + stim + "'");
    total += std::abs((*v)[0].second - (*v)[1].second);
  }
  return total / static_cast<double>(repeated.size());
}

std::vector<RepeatStat> repeat_table(const RatingSet& ratings,
                                     const std::vector<std::string>& repeated) {
  const auto all = by_observer(ratings);
  std::vector<RepeatStat> out;
  for (const auto& stim : repeated) {
    std::vector<double> diffs;
    for (const auto& [obs, per] : all) {
      const auto it = per.find(stim);
      if (it == per.end() || it->second.size() < 2) continue;
      diffs.push_back(std::abs(it->second[0].second - it->second[1].second));
    }
    RepeatStat row;
    row.stimulus = stim;
    row.n = static_cast<int>(diffs.size());
    if (!diffs.empty()) {
      const auto ms = mean_sd(diffs);
      row.mean = ms.mean;
      row.sd = ms.sd;
      row.min = static_cast<int>(*std::min_element(diffs.begin(), diffs.end()));
      row.max = static_cast<int>(*std::max_element(diffs.begin(), diffs.end()));
    }
    out.push_back(row);
  }
  return out;
}

std::vector<ObserverReliability> screen_observers(const RatingSet& ratings,
                                                  const std::vector<std::string>& repeated,
                                                  const ScreeningThresholds& thresholds) {
  std::set<std::string> observers;
  for (const auto& r : ratings.records) observers.insert(r.observer);
  std::vector<ObserverReliability> out;
  for (const auto& o : observers) {
    ObserverReliability rel;
    rel.observer = o;
    rel.agreement = agreement_percentage(ratings, o);
    if (!repeated.empty()) rel.intra_distance = intra_observer_distance(ratings, o, repeated);
    rel.low_agreement = !(rel.agreement > thresholds.agreement);
    rel.high_distance = rel.intra_distance && *rel.intra_distance > thresholds.distance;
    out.push_back(rel);
  }
  return out;
}

double t_two_tailed_p(double t, double df) {
  if (!(df > 0.0)) throw AnalysisError("t distribution needs df > 0");
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TTestResult two_sample_t(const std::vector<double>& a, const std::vector<double>& b, bool welch) {
  if (a.size() < 2 || b.size() < 2) throw AnalysisError("t-test needs >= 2 values per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const auto sa = mean_sd(a);
  const auto sb = mean_sd(b);
  const double va = sa.sd * sa.sd;
  const double vb = sb.sd * sb.sd;

  TTestResult r;
  double se;
  if (welch) {
    const double qa = va / na;
    const double qb = vb / nb;
    se = std::sqrt(qa + qb);
    r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  } else {
    r.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  }
  const double diff = sa.mean - sb.mean;
  if (!(se > 0.0)) {
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
      if (welch) r.df = na + nb - 2.0;
      return r;
    }
    throw AnalysisError("t-test: zero variance in both groups with different means");
  }
  r.t = diff / se;
  r.p = t_two_tailed_p(r.t, r.df);
  return r;
}

double mbps(std::uint64_t bytes, double fps, int frames) {
  return 8.0 * static_cast<double>(bytes) * fps / frames / 1e6;
}

BitrateReport bitrate_report(const std::vector<ManifestRow>& manifest) {
  const auto rows = latest_rows(manifest);
  std::map<std::string, const ManifestRow*> by_id;
  for (const auto& r : rows)
    if (r.ok()) by_id[r.id] = &r;

  std::vector<const ManifestRow*> stimuli;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    if (r.role == "stimulus") {
      const auto it = by_id.find(r.paired_id);
      if (r.paired_id.empty() || it == by_id.end() || it->second->role != "baseline" ||
          it->second->paired_id != r.id)
        throw AnalysisError("bitrate report: stimulus '" + r.id + "' has no paired baseline");
      stimuli.push_back(&r);
    } else if (r.role == "baseline") {
      const auto it = by_id.find(r.paired_id);
      if (r.paired_id.empty() || it == by_id.end() || it->second->paired_id != r.id)
        throw AnalysisError("bitrate report: baseline '" + r.id + "' is unpaired");
    } else {
      throw AnalysisError("bitrate report: row '" + r.id + "' has unknown role '" + r.role + "'");
    }
  }

  // Columns.
  std::vector<const ManifestRow*> column_rows;
  for (const auto* s : stimuli) {
    const auto label = label_for(*s);
    if (std::none_of(column_rows.begin(), column_rows.end(),
                     [&](const ManifestRow* c) { return label_for(*c) == label; }))
      column_rows.push_back(s);
  }
  std::stable_sort(column_rows.begin(), column_rows.end(),
                   [](const ManifestRow* a, const ManifestRow* b) { return column_less(*a, *b); });
  BitrateReport report;
  for (const auto* c : column_rows) report.columns.push_back(label_for(*c));

  // Rows: sources in first-appearance order, no-CCR before CCR.
  std::vector<std::string> sources;
  for (const auto* s : stimuli)
    if (std::find(sources.begin(), sources.end(), s->source) == sources.end())
      sources.push_back(s->source);
  for (const auto& src : sources) {
    for (bool roi : {false, true}) {
      BitrateRow row;
      row.source = src;
      row.roi = roi;
      row.cells.resize(report.columns.size());
      bool any = false;
      for (const auto* s : stimuli) {
        if (s->source != src || s->roi != roi) continue;
        const auto col = static_cast<std::size_t>(
            std::find(report.columns.begin(), report.columns.end(), label_for(*s)) -
            report.columns.begin());
        const ManifestRow& base = *by_id.at(s->paired_id);
        BitrateCell& cell = row.cells[col];
        cell.label = report.columns[col];
        cell.stimulus_id = s->id;
        cell.baseline_id = base.id;
        cell.stimulus_mbps = mbps(s->size_bytes, s->fps, s->frames);
        cell.baseline_mbps = mbps(base.size_bytes, base.fps, base.frames);
        cell.ratio = cell.baseline_mbps / cell.stimulus_mbps;
        any = true;
      }
      if (any) report.rows.push_back(std::move(row));
    }
  }

  // Lowest bitrate per source, across both ROI rows.
  for (const auto& src : sources) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& row : report.rows)
      if (row.source == src)
        for (const auto& c : row.cells)
          if (!c.stimulus_id.empty()) lowest = std::min({lowest, c.stimulus_mbps, c.baseline_mbps});
    for (auto& row : report.rows)
      if (row.source == src)
        for (auto& c : row.cells) {
          if (c.stimulus_id.empty()) continue;
          c.stimulus_min = c.stimulus_mbps == lowest;
          c.baseline_min = c.baseline_mbps == lowest;
        }
  }
  return report;
}

std::string format_bitrate_csv(const BitrateReport& report) {
  std::string out =
      "source,roi,config,stimulus_id,stimulus_mbps,baseline_id,baseline_mbps,ratio,lowest\n";
  for (const auto& row : report.rows)
    for (const auto& c : row.cells) {
      if (c.stimulus_id.empty()) continue;
      const std::string lowest = c.stimulus_min ? "stimulus" : c.baseline_min ? "baseline" : "";
      out += csv::join({row.source, row.roi ? "with CCR" : "no CCR", c.label, c.stimulus_id,
                        fixed(c.stimulus_mbps, 4), c.baseline_id, fixed(c.baseline_mbps, 4),
                        fixed(c.ratio, 4), lowest}) +
             "\n";
    }
  return out;
}

std::string format_bitrate_text(const BitrateReport& report) {
  std::ostringstream out;
  constexpr int kNameWidth = 26;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s", kNameWidth, "Source video");
  out << buf;
  for (const auto& col : report.columns) {
    std::snprintf(buf, sizeof buf, " | %-10s %-10s", col.c_str(), "C-QP");
    out << buf;
  }
  out << "\n" << std::string(kNameWidth + report.columns.size() * 24, '-') << "\n";
  for (const auto& row : report.rows) {
    const std::string name = row.source + (row.roi ? "-with CCR" : "-No CCR");
    std::snprintf(buf, sizeof buf, "%-*s", kNameWidth, name.c_str());
    out << buf;
    for (const auto& c : row.cells) {
      if (c.stimulus_id.empty()) {
        std::snprintf(buf, sizeof buf, " | %-10s %-10s", "-", "-");
      } else {
        const std::string s = fixed(c.stimulus_mbps, 4) + (c.stimulus_min ? "*" : "");
        const std::string b = fixed(c.baseline_mbps, 4) + (c.baseline_min ? "*" : "");
        std::snprintf(buf, sizeof buf, " | %-10s %-10s", s.c_str(), b.c_str());
      }
      out << buf;
    }
    out << "\n";
  }
  out << "Bitrates in Mbps; * marks the lowest per source video.\n";
  return out.str();
}

std::string format_plot_data_csv(const RatingSet& ratings,
                                 const std::vector<ManifestRow>& manifest) {
  const auto table = primary_scores(ratings);
  auto scores_of = [&](const std::string& id) {
    std::vector<double> v;
    if (auto it = table.find(id); it != table.end())
      for (const auto& [obs, s] : it->second) v.push_back(s);
    return v;
  };
  const auto rows = latest_rows(manifest);
  std::string out =
      "source,roi,config,stimulus_id,stimulus_mos,stimulus_sd,stimulus_n,baseline_id,"
      "baseline_mos,baseline_sd,baseline_n,t,df,p\n";
  for (const auto& r : rows) {
    if (!r.ok() || r.role != "stimulus") continue;
    const auto a = scores_of(r.id);
    const auto b = scores_of(r.paired_id);
    const auto ma = mean_sd(a);
    const auto mb = mean_sd(b);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    TTestResult t{nan, nan, nan};
    if (a.size() >= 2 && b.size() >= 2) {
      try {
        t = two_sample_t(a, b);
      } catch (const AnalysisError&) {
      }
    }
    out += csv::join({r.source, r.roi ? "with CCR" : "no CCR", label_for(r), r.id,
                      a.empty() ? "" : fixed(ma.mean, 4), a.empty() ? "" : fixed(ma.sd, 4),
                      std::to_string(a.size()), r.paired_id, b.empty() ? "" : fixed(mb.mean, 4),
                      b.empty() ? "" : fixed(mb.sd, 4), std::to_string(b.size()), fixed(t.t, 4),
                      fixed(t.df, 2), fixed(t.p, 4)}) +
           "\n";
  }
  return out;
}

}  // namespace cbvc
