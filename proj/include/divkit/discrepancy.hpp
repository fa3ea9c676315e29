#pragma once

#include <optional>

#include "divkit/entropy.hpp"
#include "divkit/kernels.hpp"

namespace divkit {

/// (q - q0)^T K (q - q0), clamped at 0 from below.
double kd_fixed_support(const GramMatrix& k, const WeightVector& q, const WeightVector& q0);

enum class MmdEstimator { biased, unbiased };

/// Squared MMD. Unbiased drops the diagonals of the within-set blocks and
/// needs at least two samples per set (TooFewSamples).
double mmd2(const EmbeddingSet& x, const EmbeddingSet& y, const KernelSpec& spec,
            MmdEstimator estimator = MmdEstimator::biased);

/// |mu_x - mu_y|^2 + tr(S_x + S_y - 2 (S_x^{1/2} S_y S_x^{1/2})^{1/2}) on raw
/// embeddings with (n - 1)-normalized covariances.
double frechet_distance(const EmbeddingSet& x, const EmbeddingSet& y);

struct DiscrepancyReport {
  double kd_squared = 0.0;  // biased squared MMD between the two sets
  std::optional<double> fd;
  std::optional<double> mmd2;  // unbiased
  KernelSpec spec;

  Json to_json() const;
};

DiscrepancyReport discrepancy(const EmbeddingSet& x, const EmbeddingSet& y, const KernelSpec& spec);

}  // namespace divkit
