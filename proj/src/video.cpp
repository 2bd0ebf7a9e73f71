#include "cbvc/video.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbvc/error.hpp"
#include "cbvc/rng.hpp"

namespace cbvc {

namespace {

const char* plane_name(int plane) {
  switch (plane) {
    case 0: return "Y";
    case 1: return "U";
    default: return "V";
  }
}

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t)
                                   : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long parse_int(const std::string& token, int line) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(token, &used);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": expected integer, got '" +
                         token + "'",
                     line);
  }
  if (used != token.size())
    throw ParseError("line " + std::to_string(line) + ": trailing characters in '" +
                         token + "'",
                     line);
  return value;
}

int resolve_level(int value, int bit_depth) {
  return value < 0 ? 1 << (bit_depth - 1) : value;
}

}  // namespace

void VideoGeometry::validate() const {
  if (width < 16 || height < 16 || width % 2 != 0 || height % 2 != 0)
    throw ConfigError("geometry: width and height must be even and >= 16, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  if (bit_depth != 8 && bit_depth != 10)
    throw ConfigError("geometry: bit depth must be 8 or 10, got " +
                      std::to_string(bit_depth));
  if (!(fps > 0.0) || !std::isfinite(fps))
    throw ConfigError("geometry: fps must be positive");
  if (num_frames < 1) throw ConfigError("geometry: need at least one frame");
}

Frame Frame::blank(const VideoGeometry& g, int index, std::uint16_t y_value,
                   std::uint16_t u_value, std::uint16_t v_value) {
  Frame f;
  f.index = index;
  f.width = g.width;
  f.height = g.height;
  f.y.assign(g.luma_samples(), y_value);
  f.u.assign(g.chroma_samples(), u_value);
  f.v.assign(g.chroma_samples(), v_value);
  return f;
}

YuvReader::YuvReader(const std::filesystem::path& path,
                     const VideoGeometry& geometry)
    : path_(path), geometry_(geometry) {
  geometry_.validate();
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
  const auto frame_bytes = geometry_.frame_bytes();
  const auto expected = frame_bytes * static_cast<std::uintmax_t>(geometry_.num_frames);
  if (size < expected) {
    const auto frame = static_cast<long>(size / frame_bytes);
    throw TruncatedFileError(path.string() + ": truncated at frame " +
                                 std::to_string(frame) + " (" + std::to_string(size) +
                                 " of " + std::to_string(expected) + " bytes)",
                             frame);
  }
  if (size > expected)
    throw MalformedInputError(path.string() + ": " + std::to_string(size - expected) +
                              " trailing bytes after frame " +
                              std::to_string(geometry_.num_frames - 1));
  in_.open(path, std::ios::binary);
  if (!in_) throw IoError("cannot open " + path.string());
  buffer_.resize(frame_bytes);
}

std::optional<Frame> YuvReader::next() {
  if (next_index_ >= geometry_.num_frames) return std::nullopt;
  in_.read(reinterpret_cast<char*>(buffer_.data()),
           static_cast<std::streamsize>(buffer_.size()));
  if (in_.gcount() != static_cast<std::streamsize>(buffer_.size()))
    throw TruncatedFileError(path_.string() + ": truncated at frame " +
                                 std::to_string(next_index_),
                             next_index_);

  Frame frame;
  frame.index = next_index_;
  frame.width = geometry_.width;
  frame.height = geometry_.height;
  const int bps = geometry_.bytes_per_sample();
  const int max = geometry_.max_sample();
  const unsigned char* p = buffer_.data();
  std::vector<std::uint16_t>* planes[3] = {&frame.y, &frame.u, &frame.v};
  const std::size_t counts[3] = {geometry_.luma_samples(), geometry_.chroma_samples(),
                                 geometry_.chroma_samples()};
  for (int plane = 0; plane < 3; ++plane) {
    auto& out = *planes[plane];
    out.resize(counts[plane]);
    for (std::size_t i = 0; i < counts[plane]; ++i) {
      std::uint16_t s = bps == 1 ? p[0] : static_cast<std::uint16_t>(p[0] | (p[1] << 8));
      p += bps;
      if (s > max)
        throw MalformedInputError(path_.string() + ": frame " +
                                  std::to_string(next_index_) + " plane " +
                                  plane_name(plane) + ": sample " + std::to_string(s) +
                                  " exceeds " + std::to_string(geometry_.bit_depth) +
                                  "-bit range");
      out[i] = s;
    }
  }
  ++next_index_;
  return frame;
}

std::vector<Frame> read_yuv(const std::filesystem::path& path,
                            const VideoGeometry& geometry) {
  YuvReader reader(path, geometry);
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(geometry.num_frames));
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

YuvWriter::YuvWriter(const std::filesystem::path& path,
                     const VideoGeometry& geometry)
    : geometry_(geometry), out_(path, std::ios::binary | std::ios::trunc) {
  geometry_.validate();
  if (!out_) throw IoError("cannot create " + path.string());
  buffer_.resize(geometry_.frame_bytes());
}

void YuvWriter::write(const Frame& frame) {
  if (frame.width != geometry_.width || frame.height != geometry_.height ||
      frame.y.size() != geometry_.luma_samples() ||
      frame.u.size() != geometry_.chroma_samples() ||
      frame.v.size() != geometry_.chroma_samples())
    throw ConfigError("frame " + std::to_string(frame.index) +
                      " does not match writer geometry");
  const bool wide = geometry_.bytes_per_sample() == 2;
  unsigned char* p = buffer_.data();
  for (const auto* plane : {&frame.y, &frame.u, &frame.v}) {
    for (std::uint16_t s : *plane) {
      *p++ = static_cast<unsigned char>(s & 0xff);
      if (wide) *p++ = static_cast<unsigned char>(s >> 8);
    }
  }
  out_.write(reinterpret_cast<const char*>(buffer_.data()),
             static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw IoError("write failed");
}

void write_yuv(const std::filesystem::path& path, const VideoGeometry& geometry,
               std::span<const Frame> frames) {
  YuvWriter writer(path, geometry);
  for (const auto& f : frames) writer.write(f);
}

LabFrame ycbcr_to_lab(const Field& y, const Field& cb, const Field& cr,
                      int bit_depth, YuvRange range) {
  if (cb.width != y.width || cb.height != y.height || cr.width != y.width ||
      cr.height != y.height)
    throw ConfigError("ycbcr_to_lab: planes must share one resolution");

  const double scale = static_cast<double>(1 << (bit_depth - 8));
  const double max = static_cast<double>((1 << bit_depth) - 1);
  const double mid = static_cast<double>(1 << (bit_depth - 1));
  double y_off, y_den, c_den;
  if (range == YuvRange::limited) {
    y_off = 16.0 * scale;
    y_den = 219.0 * scale;
    c_den = 224.0 * scale;
  } else {
    y_off = 0.0;
    y_den = max;
    c_den = max;
  }

  LabFrame lab;
  lab.width = y.width;
  lab.height = y.height;
  const auto n = y.size();
  lab.l.resize(n);
  lab.a.resize(n);
  lab.b.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double yp = (y.values[i] - y_off) / y_den;
    const double pb = (cb.values[i] - mid) / c_den;
    const double pr = (cr.values[i] - mid) / c_den;
    // BT.709: Kr = 0.2126, Kb = 0.0722.
    double r = yp + 1.5748 * pr;
    double g = yp - 0.187324 * pb - 0.468124 * pr;
    double b = yp + 1.8556 * pb;
    r = srgb_to_linear(std::clamp(r, 0.0, 1.0));
    g = srgb_to_linear(std::clamp(g, 0.0, 1.0));
    b = srgb_to_linear(std::clamp(b, 0.0, 1.0));

    const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(X / 0.95047);
    const double fy = lab_f(Y / 1.00000);
    const double fz = lab_f(Z / 1.08883);
    lab.l[i] = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
    lab.a[i] = 500.0 * (fx - fy);
    lab.b[i] = 200.0 * (fy - fz);
  }
  return lab;
}

LabFrame yuv_to_lab(const Frame& frame, const VideoGeometry& geometry,
                    YuvRange range) {
  const int w = frame.width;
  const int h = frame.height;
  if (w != geometry.width || h != geometry.height ||
      frame.y.size() != geometry.luma_samples() ||
      frame.u.size() != geometry.chroma_samples() ||
      frame.v.size() != geometry.chroma_samples())
    throw ConfigError("yuv_to_lab: frame does not match geometry");

  Field y(w, h), cb(w, h), cr(w, h);
  for (int yy = 0; yy < h; ++yy) {
    for (int x = 0; x < w; ++x) {
      y.at(x, yy) = frame.luma(x, yy);
      cb.at(x, yy) = frame.cb(x / 2, yy / 2);
      cr.at(x, yy) = frame.cr(x / 2, yy / 2);
    }
  }
  return ycbcr_to_lab(y, cb, cr, geometry.bit_depth, range);
}

SynthSpec SynthSpec::parse(const std::string& text) {
  SynthSpec spec;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    const std::string entry = trim(raw);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line) + ": expected key=value", line);
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    auto as_int = [&] { return static_cast<int>(parse_int(value, line)); };

    if (key == "width") {
      spec.geometry.width = as_int();
    } else if (key == "height") {
      spec.geometry.height = as_int();
    } else if (key == "bit_depth") {
      spec.geometry.bit_depth = as_int();
    } else if (key == "fps") {
      try {
        spec.geometry.fps = std::stod(value);
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": bad fps", line);
      }
    } else if (key == "frames") {
      spec.geometry.num_frames = as_int();
    } else if (key == "background") {
      spec.background_luma = as_int();
    } else if (key == "background_cb") {
      spec.background_cb = as_int();
    } else if (key == "background_cr") {
      spec.background_cr = as_int();
    } else if (key == "noise") {
      spec.noise = as_int();
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_int(value, line));
    } else if (key == "rect") {
      std::vector<int> fields;
      std::istringstream parts(value);
      std::string tok;
      while (std::getline(parts, tok, ','))
        fields.push_back(static_cast<int>(parse_int(trim(tok), line)));
      if (fields.size() != 7 && fields.size() != 9)
        throw ParseError("line " + std::to_string(line) +
                             ": rect needs x,y,w,h,vx,vy,luma[,cb,cr]",
                         line);
      SynthRect r{fields[0], fields[1], fields[2], fields[3],
                  fields[4], fields[5], fields[6]};
      if (fields.size() == 9) {
        r.cb = fields[7];
        r.cr = fields[8];
      }
      spec.rects.push_back(r);
    } else {
      throw ParseError("line " + std::to_string(line) + ": unknown key '" + key + "'",
                       line);
    }
  }
  return spec;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

VideoSequence synth_video(const SynthSpec& spec) {
  const VideoGeometry& g = spec.geometry;
  g.validate();
  const int max = g.max_sample();
  const int bg_y = resolve_level(spec.background_luma, g.bit_depth);
  const int bg_u = resolve_level(spec.background_cb, g.bit_depth);
  const int bg_v = resolve_level(spec.background_cr, g.bit_depth);
  auto check_level = [&](int v, const char* what) {
    if (v > max)
      throw ConfigError(std::string("synth: ") + what + " exceeds sample range");
  };
  check_level(bg_y, "background");
  check_level(bg_u, "background_cb");
  check_level(bg_v, "background_cr");
  if (spec.noise < 0) throw ConfigError("synth: noise must be >= 0");

  for (std::size_t k = 0; k < spec.rects.size(); ++k) {
    const auto& r = spec.rects[k];
    if (r.w <= 0 || r.h <= 0)
      throw ConfigError("synth: rect " + std::to_string(k) + " has empty size");
    check_level(r.luma, "rect luma");
    check_level(resolve_level(r.cb, g.bit_depth), "rect cb");
    check_level(resolve_level(r.cr, g.bit_depth), "rect cr");
    for (int f : {0, g.num_frames - 1}) {
      const long x = r.x + static_cast<long>(r.vx) * f;
      const long y = r.y + static_cast<long>(r.vy) * f;
      if (x < 0 || y < 0 || x + r.w > g.width || y + r.h > g.height)
        throw ConfigError("synth: rect " + std::to_string(k) + " leaves the frame at frame " +
                          std::to_string(f));
    }
  }

  Rng rng(spec.seed);
  VideoSequence seq;
  seq.geometry = g;
  seq.frames.reserve(static_cast<std::size_t>(g.num_frames));
  const int cw = g.chroma_width();
  for (int f = 0; f < g.num_frames; ++f) {
    Frame frame = Frame::blank(g, f, static_cast<std::uint16_t>(bg_y),
                               static_cast<std::uint16_t>(bg_u),
                               static_cast<std::uint16_t>(bg_v));
    for (const auto& r : spec.rects) {
      const int x0 = r.x + r.vx * f;
      const int y0 = r.y + r.vy * f;
      for (int y = y0; y < y0 + r.h; ++y)
        for (int x = x0; x < x0 + r.w; ++x)
          frame.y[static_cast<std::size_t>(y) * g.width + x] =
              static_cast<std::uint16_t>(r.luma);
      const auto cb = static_cast<std::uint16_t>(resolve_level(r.cb, g.bit_depth));
      const auto cr = static_cast<std::uint16_t>(resolve_level(r.cr, g.bit_depth));
      for (int y = y0 / 2; y < (y0 + r.h + 1) / 2; ++y)
        for (int x = x0 / 2; x < (x0 + r.w + 1) / 2; ++x) {
          frame.u[static_cast<std::size_t>(y) * cw + x] = cb;
          frame.v[static_cast<std::size_t>(y) * cw + x] = cr;
        }
    }
    if (spec.noise > 0) {
      for (auto& s : frame.y) {
        const long v = s + rng.uniform_int(-spec.noise, spec.noise);
        s = static_cast<std::uint16_t>(std::clamp<long>(v, 0, max));
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace cbvc
