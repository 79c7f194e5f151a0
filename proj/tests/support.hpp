#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <fstream>
#include <string>
#include <random>

#include <cogmtl/core.hpp>

namespace testing_support {

using cogmtl::Matrix;
using cogmtl::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, cogmtl::Index rows, cogmtl::Index cols, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(rows, cols);
  for (cogmtl::Index j = 0; j < cols; ++j)
    for (cogmtl::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, cogmtl::Index n, double sd = 1.0) {
  return random_matrix(rng, n, 1, sd).col(0);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Minimizes a 1-D convex function on [lo, hi] by golden-section search.
template <class F>
double golden_min(F&& f, double lo, double hi, int iters = 200) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc; c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + r * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace testing_support

namespace testing_support {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cogmtl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_support
