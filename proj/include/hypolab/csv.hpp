#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypolab/errors.hpp"

namespace hypolab {

// Doubles serialized with 17 significant digits (round-trip exact).
std::string fmt_g17(double v);

// RFC-4180 quoting: wraps the cell in quotes (doubling inner quotes) when it
// contains a comma, quote, or newline.
std::string csv_quote(const std::string& cell);

// Buffered CSV emitter: header row mandatory, every row must match the header
// width. Content is written on close() so the byte stream can be hashed for
// the run manifest. Unix newlines.
class CsvWriter {
 public:
  CsvWriter(std::string path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  // Flush to disk; IoError on failure. Idempotent.
  void close();

  const std::string& path() const { return path_; }
  // FNV-1a hash of the emitted bytes (valid once all rows are in).
  std::uint64_t content_hash() const;

 private:
  std::string path_;
  std::string buf_;
  std::size_t n_cols_ = 0;
  bool closed_ = false;
};

}  // namespace hypolab
