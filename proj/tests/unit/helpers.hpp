#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "mrccc/model.hpp"

namespace testutil {

using mrccc::MatrixXd;
using mrccc::VectorXd;

inline MatrixXd randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& g) {
  std::normal_distribution<double> N;
  MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = N(g);
  return m;
}

inline VectorXd randn(Eigen::Index r, std::mt19937_64& g) { return randn(r, 1, g).col(0); }

inline mrccc::Dataset random_dataset(Eigen::Index n, Eigen::Index pG, Eigen::Index pH,
                                     Eigen::Index pV, std::mt19937_64& g) {
  mrccc::Dataset d;
  d.G = randn(n, pG, g);
  d.H = randn(n, pH, g);
  d.V = randn(n, pV, g);
  d.x = randn(n, g);
  d.z = randn(n, g);
  d.y = randn(n, g);
  return d;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mrccc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
