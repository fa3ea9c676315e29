#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include <Eigen/Eigenvalues>

#include "divkit/dataio.hpp"
#include "divkit/errors.hpp"

namespace testing {

inline divkit::ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const divkit::Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected divkit::Error");
}

// -sum lambda log lambda straight from Eigen.
inline double entropy_oracle(const divkit::Matrix& a) {
  Eigen::SelfAdjointEigenSolver<divkit::Matrix> es(a, Eigen::EigenvaluesOnly);
  double h = 0.0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    const double l = es.eigenvalues()(j);
    if (l > 1e-300) h -= l * std::log(l);
  }
  return h;
}

inline double min_eig(const divkit::Matrix& a) {
  Eigen::SelfAdjointEigenSolver<divkit::Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("divkit-unit-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" +
            std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path operator/(const std::string& s) const { return path / s; }
};

}  // namespace testing
