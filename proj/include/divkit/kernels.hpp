#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "divkit/dataio.hpp"
#include "divkit/errors.hpp"

namespace divkit {

enum class KernelFamily { gaussian, cosine };

/// Normalized kernel: k(x, x) = 1.
///
/// Gaussian convention: k(x, y) = exp(-|x - y|^2 / (2 bandwidth^2)), with the
/// bandwidth in embedding units. Cosine unit-normalizes both arguments and
/// takes no bandwidth. No implicit normalization is applied to the Gaussian
/// inputs.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;

  static KernelSpec gaussian(double bandwidth) { return {KernelFamily::gaussian, bandwidth}; }
  static KernelSpec cosine() { return {KernelFamily::cosine, 0.0}; }

  /// Throws NonPositiveBandwidth for a gaussian spec with bandwidth <= 0.
  void validate() const;

  Json to_json() const;
  static KernelSpec from_json(const Json& j);

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

template <class DerivedX, class DerivedY>
double gaussian_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                       double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error(ErrorKind::NonPositiveBandwidth, "gaussian bandwidth must be > 0");
  return std::exp(-(x - y).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

template <class DerivedX, class DerivedY>
double cosine_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw Error(ErrorKind::ZeroVector, "cosine kernel of a zero vector");
  return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

template <class DerivedX, class DerivedY>
double kernel(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  return spec.family == KernelFamily::gaussian ? gaussian_kernel(x, y, spec.bandwidth) : cosine_kernel(x, y);
}

/// Symmetric n x n Gram matrix with unit diagonal. `power` records provenance:
/// 1 for K itself, 2 for the Hadamard square K o K.
class GramMatrix {
 public:
  /// Symmetrizes (K + K^T)/2, forces the diagonal to 1 after checking it is
  /// within 1e-9 of 1, and checks entries lie in [-1, 1].
  static GramMatrix from_values(Matrix values, KernelSpec spec = {}, int power = 1);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index n() const noexcept { return values_.rows(); }
  const KernelSpec& spec() const noexcept { return spec_; }
  int power() const noexcept { return power_; }

 private:
  GramMatrix(Matrix values, KernelSpec spec, int power)
      : values_(std::move(values)), spec_(spec), power_(power) {}

  friend GramMatrix gram(const Matrix& x, const KernelSpec& spec);
  friend GramMatrix hadamard_square(const GramMatrix& k);

  Matrix values_;
  KernelSpec spec_;
  int power_ = 1;
};

/// Computes the upper triangle once and mirrors it, so symmetry is exact.
GramMatrix gram(const Matrix& x, const KernelSpec& spec);
inline GramMatrix gram(const EmbeddingSet& x, const KernelSpec& spec) { return gram(x.data(), spec); }

/// Cross-kernel block k(x_i, y_j); not square in general.
Matrix cross_gram(const Matrix& x, const Matrix& y, const KernelSpec& spec);

/// Entrywise square. PSD by the Schur product theorem.
GramMatrix hadamard_square(const GramMatrix& k);

/// Smallest eigenvalue of a symmetric matrix (dense eigensolve).
double min_eigenvalue(const Matrix& a);

GramMatrix load_gram(const std::filesystem::path& path);
void save_gram(const GramMatrix& k, const std::filesystem::path& path);

}  // namespace divkit
