#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "divkit/kernels.hpp"

namespace divkit {

struct EntropyOptions {
  /// Eigenvalues at or below this (relative to unit trace) count as zero and
  /// the logarithm is evaluated at max(lambda, floor).
  double spectral_floor = 1e-12;
  /// Weights at or below this take the support-restricted gradient path.
  double weight_floor = 1e-15;
  /// Largest n for which an exact dense eigensolve is attempted.
  Eigen::Index size_cap = 20000;
};

struct SpectrumReport {
  Vector eigenvalues;  // descending, clamped at 0
  double trace = 0.0;
  double floor = 1e-12;
};

/// Eigenvalues of a symmetric PSD matrix. Values below -1e-10 * max(1, trace)
/// raise NotPSD; the rest of the negative part is clamped to 0.
SpectrumReport spectrum(const Matrix& a, double floor = 1e-12);

/// Sum of lambda log(1/lambda) over eigenvalues above the floor, in nats.
double von_neumann_entropy(const SpectrumReport& s);
/// Checks trace within 1e-6 of 1 (NotUnitTrace) and PSD (NotPSD).
double von_neumann_entropy(const Matrix& a, double floor = 1e-12);

/// Nonnegative weights on the simplex, renormalized on construction.
class WeightVector {
 public:
  explicit WeightVector(Vector weights);

  static WeightVector uniform(Eigen::Index n);
  static WeightVector point_mass(Eigen::Index n, Eigen::Index i);

  const Vector& values() const noexcept { return w_; }
  Eigen::Index n() const noexcept { return w_.size(); }
  double operator[](Eigen::Index i) const { return w_(i); }

 private:
  Vector w_;
};

struct DiversityScore {
  double vendi = 1.0;
  double log_vendi = 0.0;
  double rke = 1.0;
  Eigen::Index n = 0;
  KernelSpec spec;

  Json to_json() const;
};

/// Vendi (exp of the VNE of K/n) and RKE of an embedding set.
DiversityScore vendi(const EmbeddingSet& x, const KernelSpec& spec, const EntropyOptions& opts = {});
DiversityScore vendi(const GramMatrix& k, const EntropyOptions& opts = {});

/// n^2 / sum_ij K_ij^2, straight from the Frobenius norm.
double rke(const GramMatrix& k);

/// A(q) = diag(sqrt q) K diag(sqrt q); unit trace since K has unit diagonal.
Matrix weighted_gram(const GramMatrix& k, const WeightVector& q);

double vne_weighted(const GramMatrix& k, const WeightVector& q, const EntropyOptions& opts = {});

struct VneEvaluation {
  double entropy = 0.0;
  Vector gradient;
  Vector eigenvalues;
};

/// Entropy of Q_q and its gradient in q from one eigendecomposition of A(q).
///
/// With A(q) = U diag(lambda) U^T, the derivative is
///   dH/dq_i = -(1/q_i) sum_j lambda_j (log lambda_j + 1) U_ij^2,
/// i.e. -<phi_i, (log C(q) + I) phi_i>. For q_i at or below the weight floor
/// the feature phi_i is expanded through the kernel trick,
/// <v_j, phi_i> = (K diag(sqrt q) U)_ij / sqrt(lambda_j), and the part of phi_i
/// outside the support of C(q) is charged log(floor) + 1.
VneEvaluation vne_evaluate(const GramMatrix& k, const WeightVector& q, const EntropyOptions& opts = {},
                           bool with_gradient = true);

Vector vne_gradient(const GramMatrix& k, const WeightVector& q, const EntropyOptions& opts = {});

/// q^T K~ q for a Hadamard-square Gram K~. RKE(Q_q) is its reciprocal.
double inverse_rke_weighted(const GramMatrix& k2, const WeightVector& q);

}  // namespace divkit
