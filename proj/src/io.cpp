#include "vort/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <sys/stat.h>
#include <sys/types.h>

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

namespace vort {

Config Config::parse_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    c.kv[key] = val;
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  return parse_text(read_text_file(path));
}

bool Config::has(const std::string& key) const { return kv.count(key) != 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  seen.push_back(key);
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double Config::get(const std::string& key, double fallback) const {
  seen.push_back(key);
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t pos = 0;
  const double v = std::stod(it->second, &pos);
  if (pos != it->second.size())
    throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
  return v;
}

std::int64_t Config::get(const std::string& key, std::int64_t fallback) const {
  seen.push_back(key);
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  size_t pos = 0;
  const long long v = std::stoll(it->second, &pos);
  if (pos != it->second.size())
    throw std::runtime_error("config key '" + key + "': not an integer: " + it->second);
  return v;
}

void Config::reject_unknown() const {
  std::string bad;
  for (const auto& [key, val] : kv) {
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      if (!bad.empty()) bad += ", ";
      bad += key;
    }
  }
  if (!bad.empty()) throw std::runtime_error("config: unknown keys: " + bad);
}

CsvWriter::CsvWriter(const std::string& path) : path_(path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw std::runtime_error("cannot open for writing: " + path);
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::close() {
  if (f_) {
    std::fclose(f_);
    f_ = nullptr;
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") != std::string::npos) {
      line += '"';
      for (char ch : c) {
        if (ch == '"') line += '"';
        line += ch;
      }
      line += '"';
    } else {
      line += c;
    }
  }
  line += "\r\n";
  if (std::fwrite(line.data(), 1, line.size(), f_) != line.size())
    throw std::runtime_error("short write: " + path_);
}

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvWriter::num(std::int64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
  return buf;
}

namespace {

std::string digest_to_hex(const unsigned char* md, unsigned len) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for hashing: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 init failed");
  }
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<size_t>(got)) != 1) {
      EVP_MD_CTX_free(ctx);
      throw std::runtime_error("sha256 update failed");
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return digest_to_hex(md, len);
}

std::string sha256_hex(const std::string& data) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 init failed");
  }
  EVP_DigestUpdate(ctx, data.data(), data.size());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return digest_to_hex(md, len);
}

void ensure_dir(const std::string& dir) {
  std::string partial;
  for (size_t i = 0; i <= dir.size(); ++i) {
    if (i < dir.size() && dir[i] != '/') continue;
    partial = dir.substr(0, i == dir.size() ? i : i + 1);
    if (partial.empty() || partial == "/") continue;
    struct stat st{};
    if (stat(partial.c_str(), &st) == 0) {
      if (!S_ISDIR(st.st_mode))
        throw std::runtime_error("not a directory: " + partial);
      continue;
    }
    if (mkdir(partial.c_str(), 0755) != 0 && errno != EEXIST)
      throw std::runtime_error("mkdir failed: " + partial + ": " + std::strerror(errno));
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vort
