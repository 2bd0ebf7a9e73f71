// cbvc: command-line front end for the perceptual video-coding toolkit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cbvc/analysis.hpp"
#include "cbvc/csv.hpp"
#include "cbvc/encoder.hpp"
#include "cbvc/manifest.hpp"
#include "cbvc/parallel.hpp"
#include "cbvc/pipeline.hpp"
#include "cbvc/roi.hpp"
#include "cbvc/saliency.hpp"
#include "cbvc/schedule.hpp"
#include "cbvc/service.hpp"
#include "cbvc/size_match.hpp"
#include "cbvc/study.hpp"
#include "cbvc/video.hpp"

namespace fs = std::filesystem;
using namespace cbvc;

namespace {

struct GeometryArgs {
  int width = 0;
  int height = 0;
  int bit_depth = 10;
  double fps = 24.0;
  int frames = 0;  // 0: derive from file size

  void add(CLI::App* app) {
    app->add_option("--width", width, "Frame width")->required();
    app->add_option("--height", height, "Frame height")->required();
    app->add_option("--bit-depth", bit_depth, "8 or 10")->capture_default_str();
    app->add_option("--fps", fps, "Frame rate")->capture_default_str();
    app->add_option("--frames", frames, "Frame count (default: whole file)");
  }

  VideoGeometry resolve(const fs::path& yuv) const {
    VideoGeometry g{width, height, bit_depth, fps, 1};
    g.validate();
    if (frames > 0) {
      g.num_frames = frames;
    } else {
      const auto bytes = fs::file_size(yuv);
      g.num_frames = static_cast<int>(bytes / g.frame_bytes());
      if (g.num_frames < 1) throw TruncatedFileError(yuv.string() + ": shorter than one frame", 0);
    }
    return g;
  }
};

void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + p.string());
}

ScheduleConfig schedule_from(const std::string& kind, const std::string& window, int peak,
                             int floor, double sigma_frac, int total, bool windowed_cubic) {
  ScheduleConfig c;
  c.kind = parse_schedule_kind(kind);
  if (window != "full") c.window = std::stoi(window);
  c.peak = peak;
  c.floor = floor;
  c.sigma_frac = sigma_frac;
  c.total_frames = total;
  c.allow_windowed_cubic = windowed_cubic;
  c.validate();
  return c;
}

RoiFileMode roi_mode_from(const std::string& s) {
  if (s == "per_frame") return RoiFileMode::per_frame;
  if (s == "static") return RoiFileMode::static_first_frame;
  throw ConfigError("unknown roi mode '" + s + "' (per_frame|static)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency-driven spatiotemporal QP allocation and subjective-study toolkit"};
  app.require_subcommand(1);

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Render a synthetic YUV sequence from a spec file");
  fs::path synth_spec, synth_out;
  synth->add_option("spec", synth_spec)->required()->check(CLI::ExistingFile);
  synth->add_option("-o,--output", synth_out)->required();

  // saliency ---------------------------------------------------------------
  auto* sal = app.add_subcommand("saliency", "Per-frame saliency and CCR maps");
  fs::path sal_in, sal_out, sal_pgm_dir;
  GeometryArgs sal_geo;
  SdspConfig sal_cfg;
  bool sal_full_range = false, sal_ccr = false;
  unsigned sal_jobs = 1;
  sal->add_option("input", sal_in, "Raw YUV 4:2:0")->required()->check(CLI::ExistingFile);
  sal_geo.add(sal);
  sal->add_option("-o,--output", sal_out, "Map file")->required();
  sal->add_flag("--ccr", sal_ccr, "Store 1 - saliency instead of saliency");
  sal->add_option("--pgm-dir", sal_pgm_dir, "Also write one PGM per frame");
  sal->add_option("--resolution", sal_cfg.working_resolution)->capture_default_str();
  sal->add_option("--omega0", sal_cfg.omega0)->capture_default_str();
  sal->add_option("--sigma-f", sal_cfg.sigma_f)->capture_default_str();
  sal->add_option("--sigma-c", sal_cfg.sigma_c)->capture_default_str();
  sal->add_option("--sigma-d", sal_cfg.sigma_d)->capture_default_str();
  sal->add_flag("--location-prior", sal_cfg.include_location_prior);
  sal->add_flag("--full-range", sal_full_range, "Input uses full-range YCbCr");
  sal->add_option("-j,--jobs", sal_jobs)->capture_default_str();

  // schedule ---------------------------------------------------------------
  auto* sch = app.add_subcommand("schedule", "Per-frame temporal delta-QP schedule");
  std::string sch_kind = "G", sch_window = "full";
  int sch_peak = 29, sch_floor = 0, sch_total = 0;
  double sch_sigma = 1.0 / 6.0;
  bool sch_windowed_cubic = false;
  fs::path sch_out;
  sch->add_option("--kind", sch_kind, "G (Gaussian) or P3 (cubic)")->capture_default_str();
  sch->add_option("--window", sch_window, "Window length or 'full'")->capture_default_str();
  sch->add_option("--frames", sch_total, "Total frames")->required();
  sch->add_option("--peak", sch_peak)->capture_default_str();
  sch->add_option("--floor", sch_floor)->capture_default_str();
  sch->add_option("--sigma-frac", sch_sigma)->capture_default_str();
  sch->add_flag("--allow-windowed-cubic", sch_windowed_cubic);
  sch->add_option("-o,--output", sch_out, "CSV file (default: stdout)");

  // roi --------------------------------------------------------------------
  auto* roi = app.add_subcommand("roi", "Combine CCR maps and a schedule into an ROI delta-QP file");
  fs::path roi_ccr, roi_sched, roi_out;
  int roi_bw = 10, roi_bh = 10, roi_base = 22, roi_ctu_w = 0, roi_ctu_h = 0, roi_ctu = 64;
  std::string roi_mode = "per_frame";
  roi->add_option("--ccr", roi_ccr, "CCR map file (omit for a uniform 1x1 grid)");
  roi->add_option("--schedule", roi_sched, "Schedule CSV")->required()->check(CLI::ExistingFile);
  roi->add_option("--blocks-w", roi_bw)->capture_default_str();
  roi->add_option("--blocks-h", roi_bh)->capture_default_str();
  roi->add_option("--base-qp", roi_base)->capture_default_str();
  roi->add_option("--mode", roi_mode, "per_frame or static")->capture_default_str();
  roi->add_option("--ctu-remap", roi_ctu_w, "Frame width; remaps to the CTU grid");
  roi->add_option("--ctu-height", roi_ctu_h, "Frame height for --ctu-remap");
  roi->add_option("--ctu-size", roi_ctu)->capture_default_str();
  roi->add_option("-o,--output", roi_out)->required();

  // encode -----------------------------------------------------------------
  auto* enc = app.add_subcommand("encode", "Encode one sequence");
  fs::path enc_in, enc_out, enc_roi;
  GeometryArgs enc_geo;
  int enc_qp = 22;
  std::string enc_kind = "external", enc_bin;
  bool enc_dry = false, enc_no_remap = false;
  enc->add_option("input", enc_in)->required()->check(CLI::ExistingFile);
  enc_geo.add(enc);
  enc->add_option("--qp", enc_qp)->capture_default_str();
  enc->add_option("--roi", enc_roi, "ROI delta-QP file")->check(CLI::ExistingFile);
  enc->add_option("--encoder", enc_kind, "external or stub")->capture_default_str();
  enc->add_option("--binary", enc_bin, "Encoder binary (default $CBVC_ENCODER or kvazaar)");
  enc->add_flag("--no-ctu-remap", enc_no_remap);
  enc->add_flag("--dry-run", enc_dry, "Print the command line only");
  enc->add_option("-o,--output", enc_out)->required();

  // match ------------------------------------------------------------------
  auto* mat = app.add_subcommand("match", "Find the constant QP whose size matches a target");
  fs::path mat_in, mat_target_file, mat_out;
  GeometryArgs mat_geo;
  std::uint64_t mat_target = 0;
  std::string mat_kind = "external", mat_bin;
  MatchConstraint mat_c;
  mat->add_option("input", mat_in)->required()->check(CLI::ExistingFile);
  mat_geo.add(mat);
  auto* tgt = mat->add_option("--target-bytes", mat_target);
  mat->add_option("--target-file", mat_target_file, "Use this file's size as the target")
      ->check(CLI::ExistingFile)
      ->excludes(tgt);
  mat->add_option("--min-ratio", mat_c.min_ratio)->capture_default_str();
  mat->add_option("--qp-min", mat_c.qp_min)->capture_default_str();
  mat->add_option("--qp-max", mat_c.qp_max)->capture_default_str();
  mat->add_option("--encoder", mat_kind)->capture_default_str();
  mat->add_option("--binary", mat_bin);
  mat->add_option("-o,--output", mat_out, "Keep the chosen encode here")->required();

  // pipeline ---------------------------------------------------------------
  auto* pipe = app.add_subcommand("pipeline", "Produce all stimuli and baselines from a config");
  fs::path pipe_cfg;
  std::string pipe_out, pipe_encoder;
  int pipe_jobs = 0;
  pipe->add_option("config", pipe_cfg, "Pipeline JSON")->required()->check(CLI::ExistingFile);
  pipe->add_option("--output-dir", pipe_out, "Override output_dir");
  pipe->add_option("--encoder", pipe_encoder, "Override encoder kind (external|stub)");
  pipe->add_option("-j,--jobs", pipe_jobs, "Override job count");

  // plan -------------------------------------------------------------------
  auto* pln = app.add_subcommand("plan", "Build a randomized session plan from a manifest");
  fs::path pln_manifest, pln_out, pln_good, pln_bad;
  std::vector<std::string> pln_refs, pln_fixed;
  SessionOptions pln_opt;
  pln->add_option("--manifest", pln_manifest)->required()->check(CLI::ExistingFile);
  pln->add_option("--reference", pln_refs, "SOURCE=media for each hidden reference")->required();
  pln->add_option("--training-good", pln_good)->required();
  pln->add_option("--training-bad", pln_bad)->required();
  pln->add_option("--repeats", pln_opt.repeat_count)->capture_default_str();
  pln->add_option("--fixed-repeat", pln_fixed, "Repeat these ids instead of a random draw");
  pln->add_option("--seed", pln_opt.seed)->capture_default_str();
  pln->add_flag("--allow-adjacent-repeats", pln_opt.allow_adjacent_repeats);
  pln->add_option("-o,--output", pln_out)->required();

  // serve ------------------------------------------------------------------
  auto* srv = app.add_subcommand("serve", "Run the rating session HTTP service");
  fs::path srv_plan, srv_media, srv_ratings = "ratings.csv";
  std::string srv_host = "127.0.0.1";
  int srv_port = 8080;
  srv->add_option("plan", srv_plan)->required()->check(CLI::ExistingFile);
  srv->add_option("--media-root", srv_media, "Base directory for relative media paths");
  srv->add_option("--ratings", srv_ratings)->capture_default_str();
  srv->add_option("--host", srv_host)->capture_default_str();
  srv->add_option("--port", srv_port)->capture_default_str();

  // analyze ----------------------------------------------------------------
  auto* ana = app.add_subcommand("analyze", "MOS, observer screening, bitrates and t-tests");
  fs::path ana_ratings, ana_manifest, ana_out = "report";
  bool ana_welch = false;
  double ana_agree = 0.5, ana_dist = 2.0;
  std::string ana_a, ana_b;
  ana->add_option("--ratings", ana_ratings)->check(CLI::ExistingFile);
  ana->add_option("--manifest", ana_manifest)->check(CLI::ExistingFile);
  ana->add_option("-o,--output-dir", ana_out)->capture_default_str();
  ana->add_option("--min-agreement", ana_agree)->capture_default_str();
  ana->add_option("--max-distance", ana_dist)->capture_default_str();
  ana->add_option("--compare-a", ana_a, "Stimulus id for a two-sample t-test");
  ana->add_option("--compare-b", ana_b, "Second stimulus id");
  ana->add_flag("--welch", ana_welch, "Welch instead of pooled t-test");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto seq = synth_video(SynthSpec::load(synth_spec));
      write_yuv(synth_out, seq.geometry, seq.frames);
      const auto& g = seq.geometry;
      std::printf("%s: %dx%d, %d-bit, %d frames\n", synth_out.c_str(), g.width, g.height,
                  g.bit_depth, g.num_frames);
    } else if (*sal) {
      if (sal_full_range) sal_cfg.range = YuvRange::full;
      sal_cfg.validate();
      const auto g = sal_geo.resolve(sal_in);
      const auto frames = read_yuv(sal_in, g);
      std::vector<Field> maps(frames.size());
      parallel_for(frames.size(), sal_jobs, [&](std::size_t i) {
        auto s = sdsp(frames[i], g, sal_cfg);
        maps[i] = sal_ccr ? ccr_from_saliency(s).values : std::move(s.values);
      });
      write_map_file(sal_out, maps);
      if (!sal_pgm_dir.empty()) {
        fs::create_directories(sal_pgm_dir);
        for (std::size_t i = 0; i < maps.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%05zu.pgm", i);
          write_pgm(sal_pgm_dir / name, maps[i]);
        }
      }
      std::printf("%zu maps (%dx%d) -> %s\n", maps.size(), sal_cfg.working_resolution,
                  sal_cfg.working_resolution, sal_out.c_str());
    } else if (*sch) {
      const auto cfg = schedule_from(sch_kind, sch_window, sch_peak, sch_floor, sch_sigma,
                                     sch_total, sch_windowed_cubic);
      const auto deltas = tile_schedule(schedule_window(cfg), sch_total);
      if (sch_out.empty()) {
        std::cout << "frame,delta_qp\n";
        for (std::size_t f = 0; f < deltas.size(); ++f) std::cout << f << ',' << deltas[f] << '\n';
      } else {
        write_schedule_csv(sch_out, deltas);
      }
    } else if (*roi) {
      const auto deltas = read_schedule_csv(roi_sched);
      std::vector<BlockGrid> grids;
      if (roi_ccr.empty()) {
        grids.push_back(uniform_grid());
      } else {
        const auto maps = read_map_file(roi_ccr);
        for (std::size_t i = 0; i < maps.size(); ++i)
          grids.push_back(resize_ccr(CcrMap{static_cast<int>(i), maps[i]}, roi_bw, roi_bh));
      }
      auto map = build_roi_map(grids, deltas, roi_base);
      if (roi_ctu_w > 0) {
        if (roi_ctu_h <= 0) throw ConfigError("--ctu-remap needs --ctu-height");
        map = remap_to_ctu_grid(map, roi_ctu_w, roi_ctu_h, roi_ctu);
      }
      write_roi_file(map, roi_out, roi_mode_from(roi_mode));
      std::printf("%zu frames, %dx%d blocks -> %s\n", map.frames.size(), map.blocks_w,
                  map.blocks_h, roi_out.c_str());
    } else if (*enc) {
      EncodeJob job;
      job.input = enc_in;
      job.geometry = enc_geo.resolve(enc_in);
      job.base_qp = enc_qp;
      job.output = enc_out;
      job.encoder.kind = parse_encoder_kind(enc_kind);
      job.encoder.binary = enc_bin;
      job.encoder.remap_roi_to_ctu = !enc_no_remap;
      if (!enc_roi.empty()) job.roi = read_roi_file(enc_roi);
      if (enc_dry) {
        for (const auto& a : build_command(job)) std::cout << a << ' ';
        std::cout << '\n';
        return 0;
      }
      const auto r = encode(job);
      std::printf("%s: %llu bytes, %.1f kbit/s, %.2f s\n", r.output.c_str(),
                  static_cast<unsigned long long>(r.size), r.bitrate / 1000.0, r.wall_seconds);
    } else if (*mat) {
      if (!mat_target_file.empty()) mat_target = fs::file_size(mat_target_file);
      if (mat_target == 0) throw ConfigError("give --target-bytes or --target-file");
      const auto g = mat_geo.resolve(mat_in);
      const fs::path probe_dir = mat_out.string() + ".probes";
      fs::create_directories(probe_dir);
      std::map<int, fs::path> files;
      auto encode_at = [&](int qp) {
        EncodeJob job;
        job.input = mat_in;
        job.geometry = g;
        job.base_qp = qp;
        job.output = probe_dir / ("qp" + std::to_string(qp) + ".hevc");
        job.encoder.kind = parse_encoder_kind(mat_kind);
        job.encoder.binary = mat_bin;
        const auto r = encode(job);
        files[qp] = r.output;
        std::fprintf(stderr, "probe qp=%d size=%llu\n", qp,
                     static_cast<unsigned long long>(r.size));
        return r.size;
      };
      MatchResult m;
      try {
        m = match_constant_qp(mat_target, encode_at, mat_c);
      } catch (...) {
        fs::remove_all(probe_dir);
        throw;
      }
      for (const auto& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      fs::rename(files.at(m.qp), mat_out);
      fs::remove_all(probe_dir);
      std::printf("qp=%d size=%llu ratio=%.4f probes=%zu%s\n", m.qp,
                  static_cast<unsigned long long>(m.size), m.ratio, m.probes.size(),
                  m.exhaustive ? " (exhaustive)" : "");
    } else if (*pipe) {
      auto cfg = PipelineConfig::load(pipe_cfg);
      if (!pipe_out.empty()) cfg.output_dir = pipe_out;
      if (!pipe_encoder.empty()) cfg.encoder.kind = parse_encoder_kind(pipe_encoder);
      if (pipe_jobs > 0) cfg.jobs = static_cast<unsigned>(pipe_jobs);
      const auto s = run_pipeline(cfg);
      std::printf("manifest %s: %d pairs produced, %d skipped, %d failed, %d encodes\n",
                  s.manifest.c_str(), s.completed, s.skipped, s.failed, s.encodes);
      for (const auto& e : s.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
      return s.failed > 0 ? 3 : 0;
    } else if (*pln) {
      const auto rows = latest_rows(read_manifest(pln_manifest));
      const fs::path root = fs::absolute(pln_manifest).parent_path();
      std::vector<StimulusRecord> stimuli;
      for (const auto& r : rows) {
        if (!r.ok()) throw PlanError("manifest row '" + r.id + "' is not ok: " + r.status);
        stimuli.push_back({r.id, (root / r.output).string(), StimulusRole::test,
                           r.schedule + "/" + r.window + "/" + r.blocks + "/" + r.role, ""});
      }
      for (const auto& ref : pln_refs) {
        const auto eq = ref.find('=');
        if (eq == std::string::npos || eq == 0)
          throw ConfigError("--reference expects SOURCE=media, got '" + ref + "'");
        stimuli.push_back({ref.substr(0, eq) + "-SRC", fs::absolute(ref.substr(eq + 1)).string(),
                           StimulusRole::hidden_reference, "source", ""});
      }
      stimuli.push_back({"training-good", fs::absolute(pln_good).string(),
                         StimulusRole::training_good, "training", ""});
      stimuli.push_back({"training-bad", fs::absolute(pln_bad).string(),
                         StimulusRole::training_bad, "training", ""});
      pln_opt.fixed_repeats = pln_fixed;
      const auto plan = build_session(stimuli, pln_opt);
      plan.save(pln_out);
      std::printf("%zu presentations (+%zu training) -> %s\n", plan.items.size(),
                  plan.training.size(), pln_out.c_str());
    } else if (*srv) {
      SessionService service(SessionPlan::load(srv_plan), srv_media, srv_ratings);
      SessionServer server(service);
      std::printf("serving %d items on http://%s:%d (ratings -> %s)\n", service.total_items(),
                  srv_host.c_str(), srv_port, srv_ratings.c_str());
      std::fflush(stdout);
      server.listen(srv_host, srv_port);
    } else if (*ana) {
      if (ana_ratings.empty() && ana_manifest.empty())
        throw ConfigError("give --ratings and/or --manifest");
      fs::create_directories(ana_out);
      std::vector<ManifestRow> manifest;
      if (!ana_manifest.empty()) {
        manifest = latest_rows(read_manifest(ana_manifest));
        const auto report = bitrate_report(manifest);
        spit(ana_out / "bitrates.csv", format_bitrate_csv(report));
        const auto text = format_bitrate_text(report);
        spit(ana_out / "bitrates.txt", text);
        std::cout << text << '\n';
      }
      if (!ana_ratings.empty()) {
        const auto ratings = ingest_ratings(ana_ratings);
        std::ostringstream mos_csv;
        mos_csv << "stimulus,mos,sd,n\n";
        for (const auto& e : mos_all(ratings))
          mos_csv << csv::escape(e.stimulus) << ',' << e.mean << ',' << e.sd << ',' << e.n << '\n';
        spit(ana_out / "mos.csv", mos_csv.str());

        const auto repeated = repeated_stimuli(ratings);
        std::ostringstream rep;
        rep << "stimulus,mean,sd,min,max,n\n";
        for (const auto& r : repeat_table(ratings, repeated))
          rep << csv::escape(r.stimulus) << ',' << r.mean << ',' << r.sd << ',' << r.min << ','
              << r.max << ',' << r.n << '\n';
        spit(ana_out / "repeats.csv", rep.str());

        std::ostringstream obs;
        obs << "observer,agreement,intra_distance,low_agreement,high_distance\n";
        std::cout << "observer          agreement  distance  flags\n";
        for (const auto& o : screen_observers(ratings, repeated, {ana_agree, ana_dist})) {
          obs << csv::escape(o.observer) << ',' << o.agreement << ','
              << (o.intra_distance ? std::to_string(*o.intra_distance) : "") << ','
              << o.low_agreement << ',' << o.high_distance << '\n';
          std::printf("%-16s  %9.3f  %8s  %s%s\n", o.observer.c_str(), o.agreement,
                      o.intra_distance ? std::to_string(*o.intra_distance).substr(0, 6).c_str()
                                       : "-",
                      o.low_agreement ? "low-agreement " : "",
                      o.high_distance ? "high-distance" : "");
        }
        spit(ana_out / "observers.csv", obs.str());
        if (!manifest.empty())
          spit(ana_out / "plot_data.csv", format_plot_data_csv(ratings, manifest));

        if (!ana_a.empty() || !ana_b.empty()) {
          if (ana_a.empty() || ana_b.empty())
            throw ConfigError("--compare-a and --compare-b go together");
          const auto table = primary_scores(ratings);
          auto column = [&](const std::string& id) {
            const auto it = table.find(id);
            if (it == table.end()) throw AnalysisError("no ratings for '" + id + "'");
            std::vector<double> v;
            for (const auto& [o, s] : it->second) v.push_back(s);
            return v;
          };
          const auto t = two_sample_t(column(ana_a), column(ana_b), ana_welch);
          std::printf("%s vs %s (%s): t=%.4f df=%.2f p=%.4f\n", ana_a.c_str(), ana_b.c_str(),
                      ana_welch ? "Welch" : "pooled", t.t, t.df, t.p);
        }
      }
      std::printf("report written to %s\n", ana_out.c_str());
    }
  } catch (const TruncatedFileError& e) {
    std::fprintf(stderr, "cbvc: %s (frame %ld)\n", e.what(), static_cast<long>(e.frame()));
    return 1;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "cbvc: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cbvc: %s\n", e.what());
    return 1;
  }
  return 0;
}
