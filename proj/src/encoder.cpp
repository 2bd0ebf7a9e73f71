#include "cbvc/encoder.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdlib>
#include <sstream>

#include "cbvc/process.hpp"

namespace cbvc {

namespace {

std::string format_fps(double fps) {
  std::ostringstream ss;
  ss << fps;
  return ss.str();
}

std::string stderr_tail(const std::string& text, std::size_t max = 2000) {
  if (text.size() <= max) return text;
  return "..." + text.substr(text.size() - max);
}

void remove_quietly(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::remove(p, ec);
}

}  // namespace

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "stub") return EncoderKind::stub;
  if (s == "external") return EncoderKind::external;
  throw ConfigError("unknown encoder kind '" + s + "' (expected stub or external)");
}

const char* to_string(EncoderKind kind) {
  return kind == EncoderKind::stub ? "stub" : "external";
}

std::string EncoderSettings::resolved_binary_name() const {
  if (!binary.empty()) return binary;
  if (const char* env = std::getenv("CBVC_ENCODER"); env && *env) return env;
  return "kvazaar";
}

void EncodeJob::validate() const {
  geometry.validate();
  if (base_qp < 0 || base_qp > kMaxQp)
    throw ConfigError("encode: base_qp " + std::to_string(base_qp) + " outside [0,51]");
  if (output.empty()) throw ConfigError("encode: output path is empty");
  if (roi) roi->validate();
}

std::filesystem::path EncodeJob::roi_path() const {
  auto p = output;
  p += ".roi.txt";
  return p;
}

double bitrate_bps(std::uint64_t bytes, double fps, int frames) {
  return 8.0 * static_cast<double>(bytes) * fps / frames;
}

RoiQpVideoMap adapt_roi_for_encoder(const RoiQpVideoMap& map, const EncodeJob& job) {
  if (!job.encoder.remap_roi_to_ctu) return map;
  return remap_to_ctu_grid(map, job.geometry.width, job.geometry.height, job.encoder.ctu_size);
}

std::vector<std::string> build_command(const EncodeJob& job) {
  const auto& g = job.geometry;
  std::vector<std::string> cmd = {
      job.encoder.resolved_binary_name(),
      "-i", job.input.string(),
      "--input-res", std::to_string(g.width) + "x" + std::to_string(g.height),
      "--input-bitdepth", std::to_string(g.bit_depth),
      "--input-fps", format_fps(g.fps),
      "--period", "0",
      "--gop", "0",
      "--preset", "ultrafast",
      "--qp", std::to_string(job.base_qp),
  };
  if (job.roi) {
    cmd.push_back("--roi");
    cmd.push_back(job.roi_path().string());
  }
  cmd.insert(cmd.end(), job.encoder.extra_flags.begin(), job.encoder.extra_flags.end());
  cmd.push_back("-o");
  cmd.push_back(job.output.string());
  return cmd;
}

std::uint64_t stub_size(const EncodeJob& job) {
  std::uint64_t total = 0;
  const double c = job.encoder.stub_bytes_per_frame;
  for (int f = 0; f < job.geometry.num_frames; ++f) {
    double mean_delta = 0.0;
    if (job.roi && !job.roi->frames.empty()) {
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(f), job.roi->frames.size() - 1);
      mean_delta = job.roi->frames[idx].mean();
    }
    const double bytes = c * std::exp2(-(job.base_qp + mean_delta - 22.0) / 6.0);
    total += static_cast<std::uint64_t>(std::llround(bytes));
  }
  return total;
}

EncodeResult stub_encode(const EncodeJob& job) {
  job.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t size = stub_size(job);
  if (size == 0) throw EncoderError("stub encoder produced an empty bitstream");
  {
    std::ofstream out(job.output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + job.output.string());
    static constexpr char kTag[8] = {'C', 'B', 'V', 'C', 'S', 'T', 'U', 'B'};
    out.write(kTag, static_cast<std::streamsize>(std::min<std::uint64_t>(size, sizeof kTag)));
  }
  std::filesystem::resize_file(job.output, size);
  EncodeResult r;
  r.output = job.output;
  r.size = size;
  r.bitrate = bitrate_bps(size, job.geometry.fps, job.geometry.num_frames);
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.encoder = "stub(C=" + std::to_string(static_cast<long long>(job.encoder.stub_bytes_per_frame)) +
              ")";
  return r;
}

EncodeResult encode(const EncodeJob& job) {
  if (job.encoder.kind == EncoderKind::stub) return stub_encode(job);

  job.validate();
  const std::string name = job.encoder.resolved_binary_name();
  const auto binary = find_executable(name);
  if (!binary)
    throw EncoderError("encoder binary '" + name +
                       "' not found (set CBVC_ENCODER or encoder.binary)");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(job.input, ec))
    throw IoError("encoder input missing: " + job.input.string());

  if (job.roi) {
    const RoiQpVideoMap adapted = adapt_roi_for_encoder(*job.roi, job);
    write_roi_file(adapted, job.roi_path(), job.encoder.roi_mode);
  }

  auto cmd = build_command(job);
  cmd.front() = binary->string();
  remove_quietly(job.output);
  ProcessResult pr;
  try {
    pr = run_process(cmd);
  } catch (...) {
    remove_quietly(job.output);
    throw;
  }
  if (pr.exit_code != 0) {
    remove_quietly(job.output);
    throw EncoderError(name + " exited with status " + std::to_string(pr.exit_code) + ": " +
                       stderr_tail(pr.stderr_text));
  }
  const auto size = std::filesystem::file_size(job.output, ec);
  if (ec || size == 0) {
    remove_quietly(job.output);
    throw EncoderError(name + " produced no output at " + job.output.string());
  }

  EncodeResult r;
  r.output = job.output;
  r.size = size;
  r.bitrate = bitrate_bps(size, job.geometry.fps, job.geometry.num_frames);
  r.wall_seconds = pr.wall_seconds;
  r.encoder = binary->string();
  return r;
}

}  // namespace cbvc
