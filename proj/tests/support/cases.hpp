#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testsupport {

inline std::string case_dir() {
  const char* dir = std::getenv("GRIDOPT_CASE_DIR");
  if (dir) return dir;
  return "tests/cases";
}

inline std::string case_path(const std::string& name) { return case_dir() + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string read_case(const std::string& name) { return read_file(case_path(name)); }

}  // namespace testsupport
