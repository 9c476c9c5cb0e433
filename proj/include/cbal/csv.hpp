#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cbal/common.hpp"

namespace cbal::csv {

// Minimal RFC-4180-ish CSV: comma-delimited, optional double-quote quoting,
// UTF-8 passthrough. Strict: ragged rows are an error.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return out;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Schema, "cannot open CSV file: " + path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() && in.peek() == EOF) break;
    auto fields = split_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      require(fields.size() == t.header.size(), ErrorKind::Schema,
              "ragged CSV row " + std::to_string(t.rows.size() + 1) + " in " + path);
      t.rows.push_back(std::move(fields));
    }
  }
  require(!first, ErrorKind::Schema, "empty CSV file (no header): " + path);
  return t;
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += "\"\"";
    else q.push_back(ch);
  }
  q += "\"";
  return q;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path) {
    require(out_.good(), ErrorKind::Validation, "cannot open for writing: " + path);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out_ << ',';
      out_ << quote_if_needed(fields[j]);
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// Strict double parse; empty cells and non-numeric text are errors.
inline double parse_double(const std::string& s, const std::string& context) {
  require(!s.empty(), ErrorKind::Validation, "missing value in " + context);
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  require(end == begin + s.size(), ErrorKind::Validation, "non-numeric value '" + s + "' in " + context);
  return v;
}

}  // namespace cbal::csv
