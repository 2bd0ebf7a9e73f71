#include "cbvc/schedule.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cbvc/error.hpp"

namespace cbvc {

const char* to_string(ScheduleKind kind) {
  return kind == ScheduleKind::gaussian ? "gaussian" : "cubic";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "gaussian" || s == "G") return ScheduleKind::gaussian;
  if (s == "cubic" || s == "P3") return ScheduleKind::cubic;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

void ScheduleConfig::validate() const {
  if (total_frames < 2) throw ConfigError("schedule: total_frames must be >= 2");
  if (floor < 0 || floor > peak)
    throw ConfigError("schedule: need 0 <= floor <= peak (floor=" + std::to_string(floor) +
                      ", peak=" + std::to_string(peak) + ")");
  if (base_qp < 0 || base_qp + peak > 51)
    throw ConfigError("schedule: base_qp + peak must not exceed 51 (base_qp=" +
                      std::to_string(base_qp) + ", peak=" + std::to_string(peak) + ")");
  if (window && *window < 2) throw ConfigError("schedule: window length must be >= 2");
  if (kind == ScheduleKind::gaussian && !(sigma_frac > 0.0))
    throw ConfigError("schedule: sigma_frac must be positive");
  if (kind == ScheduleKind::cubic && window && *window != total_frames &&
      !allow_windowed_cubic)
    throw ConfigError("schedule: cubic schedule is only defined over the full sequence");
}

int round_qp(double v) { return static_cast<int>(std::lround(v)); }

std::vector<int> gaussian_schedule(const ScheduleConfig& cfg) {
  if (cfg.kind != ScheduleKind::gaussian) throw ConfigError("gaussian_schedule: wrong kind");
  cfg.validate();
  const int nf = cfg.window_length();
  const double c = (nf - 1) / 2.0;
  const double sigma = cfg.sigma_frac * nf;
  std::vector<int> w(static_cast<std::size_t>(nf));
  for (int f = 0; f < nf; ++f) {
    const double d = f - c;
    w[static_cast<std::size_t>(f)] =
        round_qp(cfg.floor + (cfg.peak - cfg.floor) * std::exp(-(d * d) / (2.0 * sigma * sigma)));
  }
  return w;
}

std::vector<int> cubic_schedule(const ScheduleConfig& cfg) {
  if (cfg.kind != ScheduleKind::cubic) throw ConfigError("cubic_schedule: wrong kind");
  cfg.validate();
  const int n = cfg.window_length();
  std::vector<int> w(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const double t = static_cast<double>(f) / (n - 1);
    w[static_cast<std::size_t>(f)] = round_qp(cfg.floor + (cfg.peak - cfg.floor) * t * t * t);
  }
  return w;
}

std::vector<int> schedule_window(const ScheduleConfig& cfg) {
  return cfg.kind == ScheduleKind::gaussian ? gaussian_schedule(cfg) : cubic_schedule(cfg);
}

std::vector<int> tile_schedule(const std::vector<int>& window, int total_frames) {
  if (window.size() < 2) throw ConfigError("tile_schedule: window length must be >= 2");
  std::vector<int> out(static_cast<std::size_t>(std::max(total_frames, 0)));
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = window[f % window.size()];
  return out;
}

std::vector<ExperimentConfig> enumerate_configurations(int total_frames,
                                                       const ScheduleConfig& defaults) {
  if (total_frames < 2) throw ConfigError("enumerate_configurations: total_frames must be >= 2");
  struct Shape {
    ScheduleKind kind;
    std::optional<int> window;
  };
  const Shape shapes[] = {{ScheduleKind::gaussian, 16},
                          {ScheduleKind::gaussian, 32},
                          {ScheduleKind::gaussian, std::nullopt},
                          {ScheduleKind::cubic, std::nullopt}};
  std::vector<ExperimentConfig> out;
  for (const auto& shape : shapes) {
    for (RoiScenario roi : {RoiScenario::ccr, RoiScenario::none}) {
      ExperimentConfig c;
      c.schedule = defaults;
      c.schedule.kind = shape.kind;
      c.schedule.window = shape.window;
      c.schedule.total_frames = total_frames;
      c.roi = roi;
      out.push_back(c);
    }
  }
  return out;
}

void write_schedule_csv(const std::filesystem::path& path, const std::vector<int>& deltas) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "frame,delta_qp\n";
  for (std::size_t f = 0; f < deltas.size(); ++f) out << f << ',' << deltas[f] << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<int> read_schedule_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line) || line.rfind("frame,delta_qp", 0) != 0)
    throw ParseError(path.string() + ": line 1: expected header 'frame,delta_qp'", 1);
  std::vector<int> deltas;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    long frame = -1;
    long delta = 0;
    char comma = 0;
    if (!(ss >> frame >> comma >> delta) || comma != ',' ||
        frame != static_cast<long>(deltas.size()))
      throw ParseError(path.string() + ": line " + std::to_string(lineno) +
                           ": expected '<frame>,<delta_qp>' with consecutive frames",
                       lineno);
    deltas.push_back(static_cast<int>(delta));
  }
  return deltas;
}

}  // namespace cbvc
