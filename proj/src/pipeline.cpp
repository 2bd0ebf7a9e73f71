#include "cbvc/pipeline.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "cbvc/parallel.hpp"
#include "cbvc/roi.hpp"
#include "json.hpp"

namespace cbvc {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string window_token(const ScheduleConfig& s) {
  return s.window ? std::to_string(*s.window) : "full";
}

std::string blocks_token(int w, int h) {
  return std::to_string(w) + "x" + std::to_string(h);
}

// Manifest cells hold a single line; encoder stderr may not.
std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

struct PairOutcome {
  std::vector<ManifestRow> rows;
  int encodes = 0;
  std::string error;
};

}  // namespace

PipelineConfig PipelineConfig::from_json(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    for (const auto& s : j.at("sources")) {
      SourceConfig src;
      src.name = s.at("name").get<std::string>();
      if (s.contains("synth")) {
        src.synth = resolve(base_dir, s.at("synth").get<std::string>());
      } else {
        src.path = resolve(base_dir, s.at("path").get<std::string>());
        src.geometry.width = s.at("width").get<int>();
        src.geometry.height = s.at("height").get<int>();
        src.geometry.bit_depth = s.value("bit_depth", 10);
        src.geometry.fps = s.value("fps", 24.0);
        src.geometry.num_frames = s.at("frames").get<int>();
      }
      cfg.sources.push_back(std::move(src));
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      cfg.peak = s.value("peak", cfg.peak);
      cfg.floor = s.value("floor", cfg.floor);
      cfg.sigma_frac = s.value("sigma_frac", cfg.sigma_frac);
    }
    if (j.contains("blocks")) {
      cfg.blocks_w = j["blocks"].value("w", cfg.blocks_w);
      cfg.blocks_h = j["blocks"].value("h", cfg.blocks_h);
    }
    cfg.base_qp = j.value("base_qp", cfg.base_qp);
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      cfg.encoder.kind = parse_encoder_kind(e.value("kind", "stub"));
      cfg.encoder.binary = e.value("binary", "");
      const std::string mode = e.value("roi_mode", "per_frame");
      if (mode == "per_frame")
        cfg.encoder.roi_mode = RoiFileMode::per_frame;
      else if (mode == "static_first_frame")
        cfg.encoder.roi_mode = RoiFileMode::static_first_frame;
      else
        throw ConfigError("pipeline config: unknown roi_mode '" + mode + "'");
      cfg.encoder.remap_roi_to_ctu = e.value("remap_roi_to_ctu", true);
      cfg.encoder.ctu_size = e.value("ctu_size", 64);
      cfg.encoder.stub_bytes_per_frame = e.value("stub_bytes_per_frame", 12000.0);
      cfg.encoder.extra_flags = e.value("extra_flags", std::vector<std::string>{});
    }
    if (j.contains("match")) {
      cfg.match.min_ratio = j["match"].value("min_ratio", cfg.match.min_ratio);
      cfg.match.qp_min = j["match"].value("qp_min", cfg.match.qp_min);
      cfg.match.qp_max = j["match"].value("qp_max", cfg.match.qp_max);
    }
    if (j.contains("sdsp")) {
      const auto& s = j["sdsp"];
      cfg.sdsp.working_resolution = s.value("working_resolution", cfg.sdsp.working_resolution);
      cfg.sdsp.omega0 = s.value("omega0", cfg.sdsp.omega0);
      cfg.sdsp.sigma_f = s.value("sigma_f", cfg.sdsp.sigma_f);
      cfg.sdsp.sigma_c = s.value("sigma_c", cfg.sdsp.sigma_c);
      cfg.sdsp.sigma_d = s.value("sigma_d", cfg.sdsp.sigma_d);
      cfg.sdsp.include_location_prior =
          s.value("include_location_prior", cfg.sdsp.include_location_prior);
      if (s.value("full_range", false)) cfg.sdsp.range = YuvRange::full;
    }
    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

void PipelineConfig::validate() const {
  if (sources.empty()) throw ConfigError("pipeline: at least one source is required");
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (s.name.empty() || s.name.find_first_of("/\\ ,") != std::string::npos)
      throw ConfigError("pipeline: bad source name '" + s.name + "'");
    if (!names.insert(s.name).second)
      throw ConfigError("pipeline: duplicate source name '" + s.name + "'");
    std::error_code ec;
    const auto& file = s.synth ? *s.synth : s.path;
    if (!std::filesystem::is_regular_file(file, ec))
      throw ConfigError("pipeline: source file missing: " + file.string());
    if (!s.synth) s.geometry.validate();
  }
  if (blocks_w < 1 || blocks_h < 1) throw ConfigError("pipeline: block grid must be >= 1x1");
  ScheduleConfig probe;
  probe.peak = peak;
  probe.floor = floor;
  probe.sigma_frac = sigma_frac;
  probe.base_qp = base_qp;
  probe.total_frames = 2;
  probe.validate();
  match.validate();
  sdsp.validate();
}

std::string stimulus_id(const std::string& source, const ExperimentConfig& cfg, int blocks_w,
                        int blocks_h) {
  const std::string bs = cfg.roi == RoiScenario::none ? "1"
                         : blocks_w == blocks_h       ? std::to_string(blocks_w)
                                                      : blocks_token(blocks_w, blocks_h);
  return source + "-nf-" + std::to_string(cfg.schedule.window_length()) + "-BS-" + bs + "-" +
         (cfg.schedule.kind == ScheduleKind::gaussian ? "G" : "P3");
}

std::string baseline_id(const std::string& stimulus) { return stimulus + "-C-QP"; }

std::vector<BlockGrid> compute_ccr_grids(const std::filesystem::path& yuv,
                                         const VideoGeometry& geometry, const SdspConfig& sdsp_cfg,
                                         int blocks_w, int blocks_h, unsigned jobs) {
  YuvReader reader(yuv, geometry);
  std::vector<BlockGrid> grids(static_cast<std::size_t>(geometry.num_frames));
  const std::size_t batch = std::max(1u, jobs) * 4;
  std::vector<Frame> frames;
  for (;;) {
    frames.clear();
    while (frames.size() < batch) {
      auto f = reader.next();
      if (!f) break;
      frames.push_back(std::move(*f));
    }
    if (frames.empty()) break;
    parallel_for(frames.size(), jobs, [&](std::size_t i) {
      const auto ccr = ccr_from_saliency(sdsp(frames[i], geometry, sdsp_cfg));
      grids[static_cast<std::size_t>(frames[i].index)] = resize_ccr(ccr, blocks_w, blocks_h);
    });
  }
  return grids;
}

PipelineSummary run_pipeline(const PipelineConfig& cfg_in) {
  PipelineConfig cfg = cfg_in;
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);

  PipelineSummary summary;
  summary.manifest = cfg.output_dir / "manifest.csv";
  std::map<std::string, ManifestRow> done;
  if (std::filesystem::exists(summary.manifest))
    for (auto& r : latest_rows(read_manifest(summary.manifest))) done.emplace(r.id, r);
  ManifestWriter writer(summary.manifest);

  for (auto& src : cfg.sources) {
    if (src.synth) {
      const SynthSpec spec = SynthSpec::load(*src.synth);
      src.geometry = spec.geometry;
      src.path = cfg.output_dir / (src.name + ".yuv");
      const auto seq = synth_video(spec);
      write_yuv(src.path, seq.geometry, seq.frames);
    }
    const VideoGeometry& g = src.geometry;

    ScheduleConfig defaults;
    defaults.peak = cfg.peak;
    defaults.floor = cfg.floor;
    defaults.sigma_frac = cfg.sigma_frac;
    defaults.base_qp = cfg.base_qp;
    const auto configs = enumerate_configurations(g.num_frames, defaults);

    std::vector<std::size_t> pending;
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const auto id = stimulus_id(src.name, configs[k], cfg.blocks_w, cfg.blocks_h);
      const auto s = done.find(id);
      const auto b = done.find(baseline_id(id));
      if (s != done.end() && s->second.ok() && b != done.end() && b->second.ok())
        ++summary.skipped;
      else
        pending.push_back(k);
    }
    if (pending.empty()) continue;

    const auto src_dir = cfg.output_dir / src.name;
    for (const char* sub : {"stimuli", "baselines", "roi", "probes"})
      std::filesystem::create_directories(src_dir / sub);

    std::vector<BlockGrid> grids;
    const bool need_ccr = std::any_of(pending.begin(), pending.end(), [&](std::size_t k) {
      return configs[k].roi == RoiScenario::ccr;
    });
    if (need_ccr) {
      try {
        grids = compute_ccr_grids(src.path, g, cfg.sdsp, cfg.blocks_w, cfg.blocks_h, cfg.jobs);
      } catch (const Error& e) {
        for (std::size_t k : pending) {
          if (configs[k].roi != RoiScenario::ccr) continue;
          ++summary.failed;
          summary.errors.push_back(stimulus_id(src.name, configs[k], cfg.blocks_w, cfg.blocks_h) +
                                   ": saliency failed: " + e.what());
        }
        pending.erase(std::remove_if(pending.begin(), pending.end(),
                                     [&](std::size_t k) {
                                       return configs[k].roi == RoiScenario::ccr;
                                     }),
                      pending.end());
      }
    }

    auto relative = [&](const std::filesystem::path& p) {
      return std::filesystem::relative(p, cfg.output_dir).generic_string();
    };

    auto produce = [&](const ExperimentConfig& ec) {
      PairOutcome out;
      const std::string sid = stimulus_id(src.name, ec, cfg.blocks_w, cfg.blocks_h);
      const std::string bid = baseline_id(sid);
      ManifestRow srow;
      srow.id = sid;
      srow.role = "stimulus";
      srow.source = src.name;
      srow.schedule = to_string(ec.schedule.kind);
      srow.window = window_token(ec.schedule);
      srow.roi = ec.roi == RoiScenario::ccr;
      srow.blocks = srow.roi ? blocks_token(cfg.blocks_w, cfg.blocks_h) : "1x1";
      srow.fps = g.fps;
      srow.frames = g.num_frames;
      srow.paired_id = bid;
      ManifestRow brow = srow;
      brow.id = bid;
      brow.role = "baseline";
      brow.paired_id = sid;
      try {
        const auto deltas = tile_schedule(schedule_window(ec.schedule), g.num_frames);
        const auto map = ec.roi == RoiScenario::ccr
                             ? build_roi_map(grids, deltas, cfg.base_qp)
                             : build_roi_map({uniform_grid()}, deltas, cfg.base_qp);
        write_roi_file(map, src_dir / "roi" / (sid + ".roi.txt"));

        EncodeJob job;
        job.input = src.path;
        job.geometry = g;
        job.base_qp = cfg.base_qp;
        job.roi = map;
        job.output = src_dir / "stimuli" / (sid + ".hevc");
        job.encoder = cfg.encoder;
        const EncodeResult sres = encode(job);
        ++out.encodes;
        srow.qp = cfg.base_qp;
        srow.size_bytes = sres.size;
        srow.bitrate_bps = sres.bitrate;
        srow.output = relative(sres.output);

        std::map<int, std::filesystem::path> probe_files;
        auto encode_at = [&](int qp) -> std::uint64_t {
          EncodeJob b;
          b.input = src.path;
          b.geometry = g;
          b.base_qp = qp;
          b.output = src_dir / "probes" / (bid + "-qp" + std::to_string(qp) + ".hevc");
          b.encoder = cfg.encoder;
          const EncodeResult r = encode(b);
          ++out.encodes;
          probe_files[qp] = r.output;
          return r.size;
        };
        const MatchResult m = match_constant_qp(sres.size, encode_at, cfg.match);
        const auto final_path = src_dir / "baselines" / (bid + ".hevc");
        std::filesystem::rename(probe_files.at(m.qp), final_path);
        for (const auto& [qp, p] : probe_files)
          if (qp != m.qp) std::filesystem::remove(p);
        brow.qp = m.qp;
        brow.size_bytes = m.size;
        brow.bitrate_bps = bitrate_bps(m.size, g.fps, g.num_frames);
        brow.output = relative(final_path);
      } catch (const std::exception& e) {
        out.error = sid + ": " + e.what();
        srow.status = "error: " + one_line(e.what());
        brow.status = srow.status;
      }
      out.rows = {srow, brow};
      return out;
    };

    // Pairs are produced in parallel but committed to the manifest in
    // configuration order.
    std::vector<std::optional<PairOutcome>> outcomes(pending.size());
    std::mutex commit_mutex;
    std::size_t next_commit = 0;
    parallel_for(pending.size(), cfg.jobs, [&](std::size_t i) {
      PairOutcome o = produce(configs[pending[i]]);
      std::lock_guard lock(commit_mutex);
      outcomes[i] = std::move(o);
      while (next_commit < outcomes.size() && outcomes[next_commit]) {
        const PairOutcome& c = *outcomes[next_commit];
        for (const auto& row : c.rows) writer.append(row);
        summary.encodes += c.encodes;
        if (c.error.empty()) {
          ++summary.completed;
        } else {
          ++summary.failed;
          summary.errors.push_back(c.error);
        }
        ++next_commit;
      }
    });
  }
  return summary;
}

}  // namespace cbvc
