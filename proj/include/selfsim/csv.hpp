#pragma once

// Plain CSV tables: '#'-prefixed key=value metadata, a header row, then rows.
// Reals are printed with 17 significant digits so files round-trip exactly.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace selfsim {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw std::invalid_argument("csv: no columns");
  }

  CsvTable& meta(const std::string& key, const std::string& value) {
    meta_.emplace_back(key, value);
    return *this;
  }
  CsvTable& meta(const std::string& key, double value) { return meta(key, format_real(value)); }

  CsvTable& row(std::vector<Cell> cells) {
    if (cells.size() != columns_.size()) throw std::invalid_argument("csv: row width differs from header");
    std::vector<std::string> out;
    out.reserve(cells.size());
    for (const auto& c : cells) out.push_back(render(c));
    rows_.push_back(std::move(out));
    return *this;
  }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : meta_) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write(f);
    if (!f) throw std::runtime_error("failed writing " + path);
  }

 private:
  static std::string render(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + '"';
  }

  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<std::string>> rows_;
};

/// Splits a data file produced by CsvTable into metadata, header and rows.
struct CsvContents {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvContents parse_csv(std::istream& is) {
  CsvContents c;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (!header && line[0] == '#') {
      const auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) c.meta.emplace_back(body, "");
      else c.meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (!header) {
      c.columns = split_csv_line(line);
      header = true;
      continue;
    }
    c.rows.push_back(split_csv_line(line));
  }
  return c;
}

}  // namespace selfsim
