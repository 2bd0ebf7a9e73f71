#include "cbvc/roi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cbvc/error.hpp"
#include "cbvc/schedule.hpp"

namespace cbvc {

double RoiQpFrame::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void RoiQpVideoMap::validate() const {
  if (blocks_w < 1 || blocks_h < 1) throw ConfigError("roi map: grid dims must be >= 1");
  const auto n = static_cast<std::size_t>(blocks_w) * blocks_h;
  for (const auto& f : frames) {
    if (f.blocks_w != blocks_w || f.blocks_h != blocks_h || f.values.size() != n)
      throw ConfigError("roi map: frame " + std::to_string(f.frame_index) +
                        " has inconsistent dims");
    for (int v : f.values)
      if (v < 0 || v > kMaxQp)
        throw ConfigError("roi map: frame " + std::to_string(f.frame_index) + " value " +
                          std::to_string(v) + " outside [0,51]");
  }
}

BlockGrid resize_ccr(const CcrMap& ccr, int blocks_w, int blocks_h, bool antialias) {
  BlockGrid grid{resize_cubic(ccr.values, blocks_w, blocks_h, antialias)};
  for (double& v : grid.values.values) v = std::clamp(v, 0.0, 1.0);
  return grid;
}

BlockGrid uniform_grid() { return BlockGrid{Field(1, 1, 1.0)}; }

RoiQpFrame roi_qp_frame(const BlockGrid& grid, int frame_delta, int base_qp, int frame_index) {
  if (base_qp < 0 || base_qp > kMaxQp)
    throw ConfigError("roi_qp_frame: base_qp " + std::to_string(base_qp) + " outside [0,51]");
  if (frame_delta < 0) throw ConfigError("roi_qp_frame: negative frame delta");
  const int ceiling = kMaxQp - base_qp;
  RoiQpFrame f;
  f.frame_index = frame_index;
  f.blocks_w = grid.blocks_w();
  f.blocks_h = grid.blocks_h();
  f.values.reserve(grid.values.size());
  for (double v : grid.values.values)
    f.values.push_back(std::clamp(round_qp(v * frame_delta), 0, ceiling));
  return f;
}

RoiQpVideoMap build_roi_map(const std::vector<BlockGrid>& grids, const std::vector<int>& deltas,
                            int base_qp) {
  if (grids.empty()) throw ConfigError("build_roi_map: no grids");
  if (grids.size() != 1 && grids.size() != deltas.size())
    throw ConfigError("build_roi_map: " + std::to_string(grids.size()) + " grids for " +
                      std::to_string(deltas.size()) + " frames");
  RoiQpVideoMap map;
  map.blocks_w = grids.front().blocks_w();
  map.blocks_h = grids.front().blocks_h();
  map.frames.reserve(deltas.size());
  for (std::size_t f = 0; f < deltas.size(); ++f) {
    const BlockGrid& g = grids.size() == 1 ? grids.front() : grids[f];
    map.frames.push_back(roi_qp_frame(g, deltas[f], base_qp, static_cast<int>(f)));
  }
  map.validate();
  return map;
}

std::string format_roi(const RoiQpVideoMap& map, RoiFileMode mode) {
  std::string out = std::to_string(map.blocks_w) + ' ' + std::to_string(map.blocks_h) + '\n';
  const std::size_t count =
      mode == RoiFileMode::static_first_frame ? std::min<std::size_t>(1, map.frames.size())
                                              : map.frames.size();
  for (std::size_t f = 0; f < count; ++f) {
    const auto& values = map.frames[f].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(values[i]);
    }
    out += '\n';
  }
  return out;
}

RoiQpVideoMap parse_roi(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long lineno = 0;

  auto tokens_of = [&](const std::string& s) {
    std::vector<long> values;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      long v = 0;
      try {
        v = std::stol(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != tok.size())
        throw ParseError("roi: line " + std::to_string(lineno) + ": non-integer token '" + tok +
                             "'",
                         lineno);
      values.push_back(v);
    }
    return values;
  };

  RoiQpVideoMap map;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      const auto dims = tokens_of(line);
      if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1)
        throw ParseError("roi: line " + std::to_string(lineno) +
                             ": expected header '<blocks_w> <blocks_h>'",
                         lineno);
      map.blocks_w = static_cast<int>(dims[0]);
      map.blocks_h = static_cast<int>(dims[1]);
      have_header = true;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto values = tokens_of(line);
    const auto expected = static_cast<std::size_t>(map.blocks_w) * map.blocks_h;
    if (values.size() != expected)
      throw ParseError("roi: line " + std::to_string(lineno) + ": expected " +
                           std::to_string(expected) + " values, got " +
                           std::to_string(values.size()),
                       lineno);
    RoiQpFrame f;
    f.frame_index = static_cast<int>(map.frames.size());
    f.blocks_w = map.blocks_w;
    f.blocks_h = map.blocks_h;
    for (long v : values) {
      if (v < 0 || v > kMaxQp)
        throw ParseError("roi: line " + std::to_string(lineno) + ": value " + std::to_string(v) +
                             " outside [0,51]",
                         lineno);
      f.values.push_back(static_cast<int>(v));
    }
    map.frames.push_back(std::move(f));
  }
  if (!have_header) throw ParseError("roi: empty file", 1);
  return map;
}

void write_roi_file(const RoiQpVideoMap& map, const std::filesystem::path& path,
                    RoiFileMode mode) {
  map.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  const std::string text = format_roi(map, mode);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

RoiQpVideoMap read_roi_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_roi(ss.str());
}

RoiQpVideoMap remap_to_ctu_grid(const RoiQpVideoMap& map, int frame_width, int frame_height,
                                int ctu_size) {
  if (ctu_size < 1) throw ConfigError("remap_to_ctu_grid: ctu_size must be >= 1");
  RoiQpVideoMap out;
  out.blocks_w = (frame_width + ctu_size - 1) / ctu_size;
  out.blocks_h = (frame_height + ctu_size - 1) / ctu_size;
  for (const auto& f : map.frames) {
    RoiQpFrame g;
    g.frame_index = f.frame_index;
    g.blocks_w = out.blocks_w;
    g.blocks_h = out.blocks_h;
    for (int cy = 0; cy < out.blocks_h; ++cy) {
      const double py = (cy * ctu_size + std::min((cy + 1) * ctu_size, frame_height)) / 2.0;
      const int by = std::min(static_cast<int>(py * map.blocks_h / frame_height), map.blocks_h - 1);
      for (int cx = 0; cx < out.blocks_w; ++cx) {
        const double px = (cx * ctu_size + std::min((cx + 1) * ctu_size, frame_width)) / 2.0;
        const int bx =
            std::min(static_cast<int>(px * map.blocks_w / frame_width), map.blocks_w - 1);
        g.values.push_back(f.values[static_cast<std::size_t>(by) * map.blocks_w + bx]);
      }
    }
    out.frames.push_back(std::move(g));
  }
  return out;
}

}  // namespace cbvc
