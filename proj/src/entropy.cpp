#include "divkit/entropy.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace divkit {
namespace {

void check_dims(const GramMatrix& k, const WeightVector& q) {
  if (k.n() != q.n())
    throw Error(ErrorKind::DimensionMismatch,
                "Gram order " + std::to_string(k.n()) + " vs weight length " + std::to_string(q.n()));
}

void check_cap(Eigen::Index n, const EntropyOptions& opts) {
  if (n > opts.size_cap)
    throw Error(ErrorKind::SizeCapExceeded,
                "n = " + std::to_string(n) + " exceeds the exact-eigensolve cap " + std::to_string(opts.size_cap));
}

Vector clamp_spectrum(Vector ascending, double trace) {
  const double tol = -1e-10 * std::max(1.0, trace);
  if (ascending.size() > 0 && ascending(0) < tol)
    throw Error(ErrorKind::NotPSD, "eigenvalue " + std::to_string(ascending(0)) + " below tolerance");
  return ascending.cwiseMax(0.0);
}

double entropy_of(const Vector& eigenvalues, double floor) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues(i);
    if (l > floor) h -= l * std::log(l);
  }
  return std::max(h, 0.0);
}

}  // namespace

SpectrumReport spectrum(const Matrix& a, double floor) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "spectrum of a non-square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "symmetric eigensolve failed");
  SpectrumReport report;
  report.trace = a.trace();
  report.floor = floor;
  report.eigenvalues = clamp_spectrum(solver.eigenvalues(), report.trace).reverse();
  return report;
}

double von_neumann_entropy(const SpectrumReport& s) { return entropy_of(s.eigenvalues, s.floor); }

double von_neumann_entropy(const Matrix& a, double floor) {
  if (std::abs(a.trace() - 1.0) > 1e-6)
    throw Error(ErrorKind::NotUnitTrace, "trace " + std::to_string(a.trace()));
  return von_neumann_entropy(spectrum(a, floor));
}

WeightVector::WeightVector(Vector weights) : w_(std::move(weights)) {
  if (w_.size() == 0) throw Error(ErrorKind::EmptySet, "empty weight vector");
  if (!w_.allFinite() || w_.minCoeff() < 0.0)
    throw Error(ErrorKind::BadArguments, "weights must be finite and nonnegative");
  const double total = w_.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::BadArguments, "weights sum to zero");
  w_ /= total;
}

WeightVector WeightVector::uniform(Eigen::Index n) { return WeightVector(Vector::Constant(n, 1.0)); }

WeightVector WeightVector::point_mass(Eigen::Index n, Eigen::Index i) {
  Vector w = Vector::Zero(n);
  w(i) = 1.0;
  return WeightVector(std::move(w));
}

Json DiversityScore::to_json() const {
  return Json{{"vendi", vendi}, {"log_vendi", log_vendi}, {"rke", rke}, {"n", n}, {"kernel", spec.to_json()}};
}

DiversityScore vendi(const GramMatrix& k, const EntropyOptions& opts) {
  check_cap(k.n(), opts);
  const double n = static_cast<double>(k.n());
  const double h = std::min(von_neumann_entropy(spectrum(k.values() / n, opts.spectral_floor)), std::log(n));
  DiversityScore s;
  s.log_vendi = h;
  s.vendi = std::exp(h);
  s.rke = rke(k);
  s.n = k.n();
  s.spec = k.spec();
  return s;
}

DiversityScore vendi(const EmbeddingSet& x, const KernelSpec& spec, const EntropyOptions& opts) {
  check_cap(x.n(), opts);
  return vendi(gram(x, spec), opts);
}

double rke(const GramMatrix& k) {
  const double n = static_cast<double>(k.n());
  return n * n / k.values().squaredNorm();
}

Matrix weighted_gram(const GramMatrix& k, const WeightVector& q) {
  check_dims(k, q);
  const Vector s = q.values().cwiseSqrt();
  return s.asDiagonal() * k.values() * s.asDiagonal();
}

double vne_weighted(const GramMatrix& k, const WeightVector& q, const EntropyOptions& opts) {
  return vne_evaluate(k, q, opts, false).entropy;
}

VneEvaluation vne_evaluate(const GramMatrix& k, const WeightVector& q, const EntropyOptions& opts,
                           bool with_gradient) {
  check_dims(k, q);
  check_cap(k.n(), opts);
  const Matrix a = weighted_gram(k, q);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, with_gradient ? Eigen::ComputeEigenvectors
                                                                 : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "symmetric eigensolve failed");

  VneEvaluation out;
  out.eigenvalues = clamp_spectrum(solver.eigenvalues(), 1.0);
  out.entropy = entropy_of(out.eigenvalues, opts.spectral_floor);
  if (!with_gradient) return out;

  const Eigen::Index n = k.n();
  const double floor = opts.spectral_floor;
  const Matrix& u = solver.eigenvectors();
  // lambda_j (log lambda_j + 1), with the floor inside the logarithm.
  Vector weight(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = out.eigenvalues(j);
    weight(j) = l > floor ? l * (std::log(l) + 1.0) : 0.0;
  }

  out.gradient.resize(n);
  const Vector& w = q.values();
  Matrix projected;  // K diag(sqrt q) U, built only when a weight is degenerate
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w(i) > opts.weight_floor) {
      out.gradient(i) = -u.row(i).cwiseAbs2().dot(weight) / w(i);
      continue;
    }
    if (projected.size() == 0) projected = k.values() * w.cwiseSqrt().asDiagonal() * u;
    double inside = 0.0;
    double g = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double l = out.eigenvalues(j);
      if (l <= floor) continue;
      const double c2 = projected(i, j) * projected(i, j) / l;
      inside += c2;
      g += (std::log(l) + 1.0) * c2;
    }
    g += (std::log(floor) + 1.0) * std::max(0.0, 1.0 - inside);
    out.gradient(i) = -g;
  }
  return out;
}

Vector vne_gradient(const GramMatrix& k, const WeightVector& q, const EntropyOptions& opts) {
  return vne_evaluate(k, q, opts, true).gradient;
}

double inverse_rke_weighted(const GramMatrix& k2, const WeightVector& q) {
  check_dims(k2, q);
  return q.values().dot(k2.values() * q.values());
}

}  // namespace divkit
