#include "coxbound/report.hpp"

#include <cstdio>
#include <fstream>

#include "coxbound/errors.hpp"

namespace coxbound {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace jsonw {

std::string num(double x) { return fmt17(x); }
std::string integer(long long x) { return std::to_string(x); }
std::string boolean(bool b) { return b ? "true" : "false"; }

std::string str(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string arr(const std::vector<std::string>& elems) {
  std::string out = "[";
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (i) out += ',';
    out += elems[i];
  }
  out += ']';
  return out;
}

std::string obj(const std::vector<std::pair<std::string, std::string>>& kvs) {
  std::string out = "{";
  for (std::size_t i = 0; i < kvs.size(); ++i) {
    if (i) out += ',';
    out += str(kvs[i].first);
    out += ':';
    out += kvs[i].second;
  }
  out += '}';
  return out;
}

std::string matrix(const Eigen::MatrixXd& m) {
  std::vector<std::string> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < m.cols(); ++j) cells.push_back(num(m(i, j)));
    rows.push_back(arr(cells));
  }
  return arr(rows);
}

}  // namespace jsonw

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open output file: " + path);
  f << content;
  if (!f) throw ValidationError("failed writing output file: " + path);
}

}  // namespace coxbound
