#include "divkit/discrepancy.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace divkit {
namespace {

Matrix covariance(const Matrix& x, const Vector& mean) {
  const Matrix centered = x.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

Matrix psd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "covariance eigensolve failed");
  return solver.eigenvectors() * solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         solver.eigenvectors().transpose();
}

double block_mean(const Matrix& k, bool skip_diagonal) {
  if (!skip_diagonal) return k.mean();
  const double n = static_cast<double>(k.rows());
  return (k.sum() - k.trace()) / (n * (n - 1.0));
}

}  // namespace

double kd_fixed_support(const GramMatrix& k, const WeightVector& q, const WeightVector& q0) {
  if (q.n() != k.n() || q0.n() != k.n()) throw Error(ErrorKind::DimensionMismatch, "kd: weight length vs Gram order");
  const Vector diff = q.values() - q0.values();
  return std::max(0.0, diff.dot(k.values() * diff));
}

double mmd2(const EmbeddingSet& x, const EmbeddingSet& y, const KernelSpec& spec, MmdEstimator estimator) {
  if (x.d() != y.d()) throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ");
  const bool unbiased = estimator == MmdEstimator::unbiased;
  if (unbiased && (x.n() < 2 || y.n() < 2))
    throw Error(ErrorKind::TooFewSamples, "unbiased MMD needs at least two samples per set");
  const double xx = block_mean(gram(x, spec).values(), unbiased);
  const double yy = block_mean(gram(y, spec).values(), unbiased);
  const double xy = cross_gram(x.data(), y.data(), spec).mean();
  const double value = xx - 2.0 * xy + yy;
  return unbiased ? value : std::max(value, 0.0);
}

double frechet_distance(const EmbeddingSet& x, const EmbeddingSet& y) {
  if (x.n() < 2 || y.n() < 2) throw Error(ErrorKind::TooFewSamples, "FD needs at least two samples per set");
  if (x.d() != y.d()) throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ");
  const Vector mx = x.data().colwise().mean();
  const Vector my = y.data().colwise().mean();
  const Matrix sx = covariance(x.data(), mx);
  const Matrix sy = covariance(y.data(), my);
  const Matrix root = psd_sqrt(sx);
  Matrix inner = root * sy * root;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(inner, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "FD eigensolve failed");
  const double cross = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mx - my).squaredNorm() + sx.trace() + sy.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

Json DiscrepancyReport::to_json() const {
  Json j{{"kd_squared", kd_squared}, {"kernel", spec.to_json()}};
  if (fd) j["fd"] = *fd;
  if (mmd2) j["mmd2_unbiased"] = *mmd2;
  return j;
}

DiscrepancyReport discrepancy(const EmbeddingSet& x, const EmbeddingSet& y, const KernelSpec& spec) {
  DiscrepancyReport r;
  r.spec = spec;
  r.kd_squared = mmd2(x, y, spec, MmdEstimator::biased);
  if (x.n() >= 2 && y.n() >= 2) {
    r.mmd2 = mmd2(x, y, spec, MmdEstimator::unbiased);
    r.fd = frechet_distance(x, y);
  }
  return r;
}

}  // namespace divkit
