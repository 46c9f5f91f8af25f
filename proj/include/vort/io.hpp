#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

namespace vort {

/* Plain-text key-value configuration: one `key = value` per line, '#'
 * comments, UTF-8, unknown keys rejected by the consumers. Values stay
 * strings here; typed access with defaults and strict parse errors.
 */
struct Config {
  std::map<std::string, std::string> kv;

  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  std::int64_t get(const std::string& key, std::int64_t fallback) const;

  // keys consumed so far; anything else in `kv` is a typo worth rejecting
  mutable std::vector<std::string> seen;
  void reject_unknown() const;  // throws listing unconsumed keys
};

/* RFC 4180 CSV writer: CRLF line endings, minimal quoting, doubles printed
 * with %.17g in the classic locale so reruns are byte-identical.
 */
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  void close();
  const std::string& path() const { return path_; }

  static std::string num(double v);
  static std::string num(std::int64_t v);

 private:
  std::string path_;
  FILE* f_ = nullptr;
};

std::string sha256_file(const std::string& path);  // lowercase hex
std::string sha256_hex(const std::string& data);

// create `dir` (and parents); error if it exists as a non-directory
void ensure_dir(const std::string& dir);

std::string read_text_file(const std::string& path);

}  // namespace vort
