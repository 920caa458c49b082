#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "qin/linalg.hpp"

namespace qin::testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qin_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

inline void fill_normal(std::span<double> xs, Rng& rng, double std = 1.0) {
  for (auto& v : xs) v = rng.normal(0.0, std);
}

}  // namespace qin::testing
