#include "cbvc/saliency.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>

#include "cbvc/error.hpp"

namespace cbvc {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftWorkspace {
 public:
  FftWorkspace(int width, int height) : width_(width), height_(height) {
    const auto n = static_cast<std::size_t>(width) * height;
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_2d(height, width, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(height, width, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftWorkspace() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buf_);
  }
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  bool fits(int w, int h) const { return w == width_ && h == height_; }

  Field filter(const Field& plane, const Field& transfer) {
    const auto n = plane.size();
    for (std::size_t i = 0; i < n; ++i) {
      buf_[i][0] = plane.values[i];
      buf_[i][1] = 0.0;
    }
    fftw_execute(forward_);
    for (std::size_t i = 0; i < n; ++i) {
      buf_[i][0] *= transfer.values[i];
      buf_[i][1] *= transfer.values[i];
    }
    fftw_execute(backward_);
    Field out(width_, height_);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = buf_[i][0] * inv_n;
    return out;
  }

 private:
  int width_;
  int height_;
  fftw_complex* buf_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

FftWorkspace& workspace_for(int width, int height) {
  thread_local std::unique_ptr<FftWorkspace> ws;
  if (!ws || !ws->fits(width, height)) ws = std::make_unique<FftWorkspace>(width, height);
  return *ws;
}

double dft_frequency(int k, int n) {
  return static_cast<double>(k < (n + 1) / 2 ? k : k - n) / n;
}

Field plane_field(const std::vector<double>& v, int w, int h) {
  Field f(w, h);
  f.values = v;
  return f;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw MalformedInputError("map file: truncated header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr std::array<char, 8> kMapMagic = {'C', 'B', 'V', 'C', 'M', 'A', 'P', '1'};

}  // namespace

void SdspConfig::validate() const {
  if (working_resolution < 32) throw ConfigError("sdsp: working_resolution must be >= 32");
  if (!(omega0 > 0.0 && omega0 < 0.5)) throw ConfigError("sdsp: omega0 must lie in (0, 0.5)");
  if (!(sigma_f > 0.0) || !(sigma_c > 0.0) || !(sigma_d > 0.0))
    throw ConfigError("sdsp: sigmas must be positive");
}

Field log_gabor_transfer(int width, int height, const SdspConfig& cfg) {
  Field g(width, height);
  const double denom = 2.0 * cfg.sigma_f * cfg.sigma_f;
  for (int ky = 0; ky < height; ++ky) {
    const double fy = dft_frequency(ky, height);
    for (int kx = 0; kx < width; ++kx) {
      const double fx = dft_frequency(kx, width);
      const double radius = std::sqrt(fx * fx + fy * fy);
      if (radius == 0.0) {
        g.at(kx, ky) = 0.0;
        continue;
      }
      const double lr = std::log(radius / cfg.omega0);
      g.at(kx, ky) = std::exp(-(lr * lr) / denom);
    }
  }
  return g;
}

Field filter_frequency_domain(const Field& plane, const Field& transfer) {
  if (plane.width != transfer.width || plane.height != transfer.height)
    throw ConfigError("filter_frequency_domain: transfer size mismatch");
  return workspace_for(plane.width, plane.height).filter(plane, transfer);
}

Field frequency_prior(const LabFrame& lab, const SdspConfig& cfg) {
  const int w = lab.width;
  const int h = lab.height;
  const Field transfer = log_gabor_transfer(w, h, cfg);
  Field prior(w, h);
  for (const auto* channel : {&lab.l, &lab.a, &lab.b}) {
    const Field filtered = filter_frequency_domain(plane_field(*channel, w, h), transfer);
    for (std::size_t i = 0; i < prior.size(); ++i)
      prior.values[i] += filtered.values[i] * filtered.values[i];
  }
  for (double& v : prior.values) v = std::sqrt(v);
  // Round-off leaves ~1e-15 residue on band-limited-flat input; treat it as
  // zero energy so constant frames hit the degenerate rule.
  const double peak = *std::max_element(prior.values.begin(), prior.values.end());
  if (peak < 1e-9) std::fill(prior.values.begin(), prior.values.end(), 0.0);
  normalize_minmax(prior);
  return prior;
}

Field color_prior(const LabFrame& lab, const SdspConfig& cfg) {
  const int w = lab.width;
  const int h = lab.height;
  Field an = plane_field(lab.a, w, h);
  Field bn = plane_field(lab.b, w, h);
  normalize_minmax(an);
  normalize_minmax(bn);
  Field prior(w, h);
  const double s2 = cfg.sigma_c * cfg.sigma_c;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const double d2 = an.values[i] * an.values[i] + bn.values[i] * bn.values[i];
    prior.values[i] = 1.0 - std::exp(-d2 / s2);
  }
  return prior;
}

Field location_prior(int width, int height, const SdspConfig& cfg) {
  Field prior(width, height);
  const int cx = width / 2;
  const int cy = height / 2;
  const double s2 = cfg.sigma_d * cfg.sigma_d;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      prior.at(x, y) = std::exp(-(dx * dx + dy * dy) / s2);
    }
  return prior;
}

SaliencyMap sdsp(const Frame& frame, const VideoGeometry& geometry, const SdspConfig& cfg) {
  cfg.validate();
  const int n = cfg.working_resolution;
  Field y(frame.width, frame.height);
  for (std::size_t i = 0; i < y.size(); ++i) y.values[i] = frame.y[i];
  Field cb(frame.width / 2, frame.height / 2);
  Field cr(frame.width / 2, frame.height / 2);
  for (std::size_t i = 0; i < cb.size(); ++i) {
    cb.values[i] = frame.u[i];
    cr.values[i] = frame.v[i];
  }
  const LabFrame lab = ycbcr_to_lab(resize_cubic(y, n, n), resize_cubic(cb, n, n),
                                    resize_cubic(cr, n, n), geometry.bit_depth, cfg.range);

  const Field freq = frequency_prior(lab, cfg);
  const Field color = color_prior(lab, cfg);
  SaliencyMap map;
  map.frame_index = frame.index;
  map.values = Field(n, n);
  for (std::size_t i = 0; i < map.values.size(); ++i)
    map.values.values[i] = freq.values[i] * color.values[i];
  if (cfg.include_location_prior) {
    const Field loc = location_prior(n, n, cfg);
    for (std::size_t i = 0; i < map.values.size(); ++i) map.values.values[i] *= loc.values[i];
  }
  normalize_minmax(map.values);
  return map;
}

CcrMap ccr_from_saliency(const SaliencyMap& s) {
  CcrMap c{s.frame_index, s.values};
  for (double& v : c.values.values) v = 1.0 - v;
  return c;
}

SaliencyMap saliency_from_ccr(const CcrMap& c) {
  SaliencyMap s{c.frame_index, c.values};
  for (double& v : s.values.values) v = 1.0 - v;
  return s;
}

void write_map_file(const std::filesystem::path& path, std::span<const Field> maps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  const int w = maps.empty() ? 0 : maps.front().width;
  const int h = maps.empty() ? 0 : maps.front().height;
  out.write(kMapMagic.data(), kMapMagic.size());
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(maps.size()));
  for (const auto& m : maps) {
    if (m.width != w || m.height != h) throw ConfigError("map file: inconsistent map sizes");
    for (double v : m.values) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Field> read_map_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 8 || magic != kMapMagic)
    throw MalformedInputError(path.string() + ": not a map file (bad magic)");
  const auto w = get_u32(in);
  const auto h = get_u32(in);
  const auto count = get_u32(in);
  std::vector<Field> maps;
  maps.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Field m(static_cast<int>(w), static_cast<int>(h));
    for (double& v : m.values) {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      if (in.gcount() != 4)
        throw MalformedInputError(path.string() + ": truncated in map " + std::to_string(k));
      const std::uint32_t bits =
          b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      v = f;
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

void write_pgm(const std::filesystem::path& path, const Field& map) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  std::vector<unsigned char> bytes(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    bytes[i] = static_cast<unsigned char>(
        std::lround(std::clamp(map.values[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cbvc
