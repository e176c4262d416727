#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

namespace coxbound {

// Numbers are printed with 17 significant digits so every double round-trips
// and repeated runs are byte-identical.
std::string fmt17(double x);

// minimal deterministic JSON assembly (insertion-ordered keys)
namespace jsonw {
std::string num(double x);
std::string integer(long long x);
std::string boolean(bool b);
std::string str(const std::string& s);
std::string arr(const std::vector<std::string>& elems);
std::string obj(const std::vector<std::pair<std::string, std::string>>& kvs);
std::string matrix(const Eigen::MatrixXd& m);
}  // namespace jsonw

// RFC-style CSV: comma separator, dot decimal, header row, newline-terminated
std::string csv_line(const std::vector<std::string>& fields);

void write_file(const std::string& path, const std::string& content);

}  // namespace coxbound
