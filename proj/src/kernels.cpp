#include "divkit/kernels.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>

namespace divkit {

void KernelSpec::validate() const {
  if (family == KernelFamily::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
    throw Error(ErrorKind::NonPositiveBandwidth, "gaussian bandwidth must be finite and > 0");
}

Json KernelSpec::to_json() const {
  if (family == KernelFamily::cosine) return Json{{"family", "cosine"}};
  return Json{{"family", "gaussian"}, {"bandwidth", bandwidth}};
}

KernelSpec KernelSpec::from_json(const Json& j) {
  const std::string family = j.value("family", std::string("gaussian"));
  KernelSpec spec;
  if (family == "gaussian") {
    spec = gaussian(j.value("bandwidth", 1.0));
  } else if (family == "cosine") {
    spec = cosine();
  } else {
    throw Error(ErrorKind::Usage, "unknown kernel family '" + family + "'");
  }
  spec.validate();
  return spec;
}

GramMatrix GramMatrix::from_values(Matrix values, KernelSpec spec, int power) {
  if (values.rows() == 0 || values.rows() != values.cols())
    throw Error(ErrorKind::DimensionMismatch, "Gram matrix must be square and nonempty");
  Matrix sym = 0.5 * (values + values.transpose());
  for (Eigen::Index i = 0; i < sym.rows(); ++i) {
    if (std::abs(sym(i, i) - 1.0) > 1e-9)
      throw Error(ErrorKind::BadArguments, "Gram diagonal entry " + std::to_string(i) + " is not 1");
    sym(i, i) = 1.0;
  }
  if (!sym.allFinite() || sym.maxCoeff() > 1.0 + 1e-12 || sym.minCoeff() < -1.0 - 1e-12)
    throw Error(ErrorKind::BadArguments, "Gram entries must lie in [-1, 1]");
  return GramMatrix(std::move(sym), spec, power);
}

GramMatrix gram(const Matrix& x, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  if (spec.family == KernelFamily::gaussian) {
    const double scale = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, i) = 1.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = std::exp(-(x.row(i) - x.row(j)).squaredNorm() * scale);
        k(i, j) = v;
        k(j, i) = v;
      }
    }
  } else {
    Matrix unit = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = unit.row(i).norm();
      if (norm == 0.0) throw Error(ErrorKind::ZeroVector, "row " + std::to_string(i) + " is zero");
      unit.row(i) /= norm;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, i) = 1.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = std::clamp(unit.row(i).dot(unit.row(j)), -1.0, 1.0);
        k(i, j) = v;
        k(j, i) = v;
      }
    }
  }
  return GramMatrix(std::move(k), spec, 1);
}

Matrix cross_gram(const Matrix& x, const Matrix& y, const KernelSpec& spec) {
  spec.validate();
  if (x.cols() != y.cols()) throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ");
  Matrix k(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j) k(i, j) = kernel(spec, x.row(i), y.row(j));
  return k;
}

GramMatrix hadamard_square(const GramMatrix& k) {
  return GramMatrix(k.values().cwiseProduct(k.values()), k.spec(), 2 * k.power());
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "symmetric eigensolve failed");
  return solver.eigenvalues()(0);
}

GramMatrix load_gram(const std::filesystem::path& path) {
  return GramMatrix::from_values(read_matrix_binary(path, kGramMagic));
}

void save_gram(const GramMatrix& k, const std::filesystem::path& path) {
  write_matrix_binary(k.values(), path, kGramMagic);
}

}  // namespace divkit
