#pragma once

// Line-delimited text IO: tab-separated key=value records, config files,
// and the FNV-1a content hash used by stage manifests.
//
// The on-disk grammar is deliberately tiny.  One record per line, fields
// separated by a single tab, each field "key=value".  Keys are bare
// identifiers; values may not contain tabs or newlines (we validate on
// write instead of escaping).  Doubles are printed with %.17g so that a
// write/read round trip is bit-exact.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace unishare {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;  // offset basis
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;  // FNV prime
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline double parse_double(const std::string& s, const std::string& where) {
  if (s.empty()) throw ParseError(where + ": empty number");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError(where + ": bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
  if (s.empty()) throw ParseError(where + ": empty integer");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError(where + ": bad integer '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& where) {
  if (s.empty() || s[0] == '-') throw ParseError(where + ": bad unsigned '" + s + "'");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError(where + ": bad unsigned '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, char delim) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(delim);
    out += parts[i];
  }
  return out;
}

// One parsed line.  `origin` is "path:line" for error messages.
struct Record {
  std::vector<std::pair<std::string, std::string>> fields;
  std::string origin;

  void add(const std::string& key, const std::string& value) {
    if (value.find('\t') != std::string::npos ||
        value.find('\n') != std::string::npos)
      throw std::invalid_argument("record value for '" + key +
                                  "' contains tab/newline");
    fields.emplace_back(key, value);
  }
  void add(const std::string& key, long long v) { add(key, std::to_string(v)); }
  void add(const std::string& key, int v) { add(key, std::to_string(v)); }
  void add_real(const std::string& key, double v) { add(key, format_double(v)); }
  void add_reals(const std::string& key, const std::vector<double>& vs) {
    std::vector<std::string> parts;
    parts.reserve(vs.size());
    for (double v : vs) parts.push_back(format_double(v));
    add(key, join(parts, ','));
  }
  void add_ints(const std::string& key, const std::vector<long long>& vs) {
    std::vector<std::string> parts;
    parts.reserve(vs.size());
    for (long long v : vs) parts.push_back(std::to_string(v));
    add(key, join(parts, ','));
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : fields)
      if (k == key) return &v;
    return nullptr;
  }
  const std::string& get(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ParseError(origin + ": missing field '" + key + "'");
    return *v;
  }
  long long get_int(const std::string& key) const {
    return parse_int(get(key), origin + " field '" + key + "'");
  }
  double get_real(const std::string& key) const {
    return parse_double(get(key), origin + " field '" + key + "'");
  }
  std::vector<double> get_reals(const std::string& key) const {
    const std::string& raw = get(key);
    std::vector<double> out;
    if (raw.empty()) return out;
    for (const std::string& p : split(raw, ','))
      out.push_back(parse_double(p, origin + " field '" + key + "'"));
    return out;
  }
  std::vector<long long> get_ints(const std::string& key) const {
    const std::string& raw = get(key);
    std::vector<long long> out;
    if (raw.empty()) return out;
    for (const std::string& p : split(raw, ','))
      out.push_back(parse_int(p, origin + " field '" + key + "'"));
    return out;
  }

  // Strictness contract: every key on the line must be one we expect.
  void check_keys(std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : fields) {
      (void)v;
      bool ok = false;
      for (const char* a : allowed)
        if (k == a) { ok = true; break; }
      if (!ok) throw ParseError(origin + ": unknown field '" + k + "'");
    }
  }

  std::string to_line() const {
    std::vector<std::string> parts;
    parts.reserve(fields.size());
    for (const auto& [k, v] : fields) parts.push_back(k + "=" + v);
    return join(parts, '\t');
  }
};

inline Record parse_record_line(const std::string& line,
                                const std::string& origin) {
  Record rec;
  rec.origin = origin;
  for (const std::string& field : split(line, '\t')) {
    std::size_t eq = field.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError(origin + ": malformed field '" + field + "'");
    std::string key = field.substr(0, eq);
    if (rec.find(key))
      throw ParseError(origin + ": duplicate field '" + key + "'");
    rec.fields.emplace_back(std::move(key), field.substr(eq + 1));
  }
  return rec;
}

class RecordWriter {
 public:
  explicit RecordWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot open for write: " + path);
  }
  void write(const Record& rec) {
    out_ << rec.to_line() << '\n';
    if (!out_) throw std::runtime_error("write failed: " + path_);
  }
  void close() {
    out_.close();
    if (out_.fail()) throw std::runtime_error("close failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class RecordReader {
 public:
  explicit RecordReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open for read: " + path);
  }
  // Returns false at end of file.  Blank lines are skipped.
  bool next(Record& rec) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      rec = parse_record_line(line, path_ + ":" + std::to_string(line_no_));
      return true;
    }
    return false;
  }
  int line() const { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << body;
  out.close();
  if (out.fail()) throw std::runtime_error("write failed: " + path);
}

inline std::string file_hash(const std::string& path) {
  return hex64(fnv1a64(read_text_file(path)));
}

// A flat key=value config.  Files hold one pair per line; '#' starts a
// comment; later assignments win.  Insertion order is preserved so a
// snapshot written into a manifest is stable.
class Config {
 public:
  static Config from_file(const std::string& path) {
    Config cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      // trim
      std::size_t b = line.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      std::size_t e = line.find_last_not_of(" \t");
      line = line.substr(b, e - b + 1);
      std::string origin = path + ":" + std::to_string(line_no);
      std::size_t eq = line.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError(origin + ": expected key=value, got '" + line + "'");
      auto trim = [](std::string s) {
        std::size_t tb = s.find_first_not_of(" \t");
        if (tb == std::string::npos) return std::string();
        std::size_t te = s.find_last_not_of(" \t");
        return s.substr(tb, te - tb + 1);
      };
      std::string key = trim(line.substr(0, eq));
      if (key.empty())
        throw ParseError(origin + ": expected key=value, got '" + line + "'");
      cfg.set(key, trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  // Parses "key=value" strings, e.g. from --set flags.
  void set_kv(const std::string& kv) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError("override: expected key=value, got '" + kv + "'");
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }

  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : items_)
      if (k == key) { v = value; return; }
    items_.emplace_back(key, value);
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::string get_str(const std::string& key, const std::string& dflt) const {
    const std::string* v = find(key);
    return v ? *v : dflt;
  }
  long long get_int(const std::string& key, long long dflt) const {
    const std::string* v = find(key);
    return v ? parse_int(*v, "config key '" + key + "'") : dflt;
  }
  std::uint64_t get_uint(const std::string& key, std::uint64_t dflt) const {
    const std::string* v = find(key);
    return v ? parse_uint(*v, "config key '" + key + "'") : dflt;
  }
  double get_real(const std::string& key, double dflt) const {
    const std::string* v = find(key);
    return v ? parse_double(*v, "config key '" + key + "'") : dflt;
  }
  bool get_bool(const std::string& key, bool dflt) const {
    const std::string* v = find(key);
    if (!v) return dflt;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ParseError("config key '" + key + "': bad bool '" + *v + "'");
  }

  // Every present key must be recognized by the stage consuming the config.
  void check_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : items_) {
      (void)v;
      if (!known.count(k))
        throw ParseError("config: unknown key '" + k + "'");
    }
  }

  std::string snapshot() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + "=" + v + "\n";
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& items() const {
    return items_;
  }

 private:
  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : items_)
      if (k == key) return &v;
    return nullptr;
  }

  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace unishare
