#include "cbvc/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cbvc/csv.hpp"
#include "cbvc/error.hpp"

namespace cbvc {

const char* const kManifestHeader =
    "id,role,source,schedule,window,blocks,roi,qp,size_bytes,bitrate_bps,fps,frames,paired_id,"
    "output,status";

namespace {

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

template <typename T>
T parse_number(const std::string& s, long lineno, const char* column) {
  std::istringstream ss(s);
  T v{};
  if (!(ss >> v) || !ss.eof())
    throw ParseError("manifest: line " + std::to_string(lineno) + ": bad " + column + " '" + s +
                         "'",
                     lineno);
  return v;
}

}  // namespace

std::string format_manifest_row(const ManifestRow& r) {
  return csv::join({r.id, r.role, r.source, r.schedule, r.window, r.blocks, r.roi ? "1" : "0",
                    std::to_string(r.qp), std::to_string(r.size_bytes),
                    format_double(r.bitrate_bps), format_double(r.fps), std::to_string(r.frames),
                    r.paired_id, r.output, r.status});
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  long lineno = 0;
  const auto header = csv::next_line(in, lineno);
  if (!header || *header != kManifestHeader)
    throw ParseError("manifest: line 1: unexpected header", 1);
  std::vector<ManifestRow> rows;
  while (const auto line = csv::next_line(in, lineno)) {
    const auto f = csv::split(*line);
    if (f.size() != 15)
      throw ParseError("manifest: line " + std::to_string(lineno) + ": expected 15 columns, got " +
                           std::to_string(f.size()),
                       lineno);
    ManifestRow r;
    r.id = f[0];
    r.role = f[1];
    r.source = f[2];
    r.schedule = f[3];
    r.window = f[4];
    r.blocks = f[5];
    r.roi = f[6] == "1";
    r.qp = parse_number<int>(f[7], lineno, "qp");
    r.size_bytes = parse_number<std::uint64_t>(f[8], lineno, "size_bytes");
    r.bitrate_bps = parse_number<double>(f[9], lineno, "bitrate_bps");
    r.fps = parse_number<double>(f[10], lineno, "fps");
    r.frames = parse_number<int>(f[11], lineno, "frames");
    r.paired_id = f[12];
    r.output = f[13];
    r.status = f[14];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ManifestRow> latest_rows(const std::vector<ManifestRow>& rows) {
  std::vector<ManifestRow> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    if (auto it = index.find(r.id); it != index.end()) {
      out[it->second] = r;
    } else {
      index.emplace(r.id, out.size());
      out.push_back(r);
    }
  }
  return out;
}

ManifestWriter::ManifestWriter(const std::filesystem::path& path) : path_(path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << kManifestHeader << '\n';
  }
}

void ManifestWriter::append(const ManifestRow& row) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path_.string());
  out << format_manifest_row(row) << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path_.string());
}

}  // namespace cbvc
