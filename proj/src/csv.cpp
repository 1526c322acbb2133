#include "hypolab/csv.hpp"

#include <cstdio>
#include <fstream>

#include "hypolab/stats.hpp"

namespace hypolab {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::string path, const std::vector<std::string>& header)
    : path_(std::move(path)), n_cols_(header.size()) {
  if (header.empty()) throw IoError("csv: header row is mandatory");
  row(header);
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
    // Destructors must not throw; an explicit close() reports the failure.
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (closed_) throw IoError("csv: row after close on '" + path_ + "'");
  if (cells.size() != n_cols_)
    throw IoError("csv: row width " + std::to_string(cells.size()) + " != header width " +
                  std::to_string(n_cols_) + " on '" + path_ + "'");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += csv_quote(cells[i]);
  }
  buf_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw IoError("csv: cannot open '" + path_ + "' for writing");
  out.write(buf_.data(), std::streamsize(buf_.size()));
  out.flush();
  if (!out) throw IoError("csv: write failed on '" + path_ + "'");
  closed_ = true;
}

std::uint64_t CsvWriter::content_hash() const { return fnv1a64(buf_); }

}  // namespace hypolab
