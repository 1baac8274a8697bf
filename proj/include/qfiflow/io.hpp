#pragma once

// Dataset output: CSV tables (9 significant digits, fixed column order)
// and JSON run manifests.  Writes go through a temp file and rename so a
// crashed run never leaves a half-written dataset behind.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfiflow {

inline std::string format_sig9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

// header: first column name then one name per series; all series share the
// leading axis column.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<double>& axis, const std::vector<std::vector<double>>& series) {
  if (header.size() != series.size() + 1) throw std::invalid_argument("write_csv: header/series mismatch");
  for (const auto& s : series)
    if (s.size() != axis.size()) throw std::invalid_argument("write_csv: column length mismatch");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < axis.size(); ++r) {
    out += format_sig9(axis[r]);
    for (const auto& s : series) {
      out += ',';
      out += format_sig9(s[r]);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace qfiflow
