#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "divkit/entropy.hpp"
#include "divkit/rng.hpp"

namespace divkit {

/// Draws n fresh samples; must be a pure function of (n, seed).
using Sampler = std::function<EmbeddingSet(Eigen::Index n, const RunSeed& seed)>;

double plugin_entropy(std::span<const std::uint64_t> counts);

/// Leading Miller bias term (r - 1) / (2n), nats.
double miller_gap(std::uint64_t r, std::uint64_t n);

struct DiscreteLawSpec {
  std::uint64_t alphabet_size = 2;  // uniform law on {1, ..., r}
};

/// Mixture of 2^d equal-weight isotropic Gaussians centered on the vertices
/// of [-1, 1]^d; bit j of the component index selects the sign of coordinate j.
struct CubeMixtureSpec {
  unsigned dimension = 2;
  double component_std = 1e-4;

  std::uint64_t component_count() const { return std::uint64_t{1} << dimension; }
  Vector center(std::uint64_t index) const;
  void validate() const;
};

EmbeddingSet sample_cube_mixture(const CubeMixtureSpec& spec, Eigen::Index n, const RunSeed& seed);
Sampler cube_sampler(const CubeMixtureSpec& spec);

enum class CurveMetric { exp_shannon, vendi, rke };
const char* to_string(CurveMetric metric) noexcept;
CurveMetric parse_curve_metric(std::string_view name);

/// Per-size mean and 95% normal-approximation CI (mean +- 1.96 sd / sqrt M)
/// of the score, and the same statistics on the log scale (entropy in nats).
struct DiversityCurve {
  std::vector<Eigen::Index> sizes;
  std::vector<double> mean, ci_low, ci_high;
  std::vector<double> log_mean, log_ci_low, log_ci_high;
  std::vector<std::vector<double>> log_values;  // raw per-trial entropies
  std::size_t trials = 0;
  CurveMetric metric = CurveMetric::vendi;

  Json to_json() const;
  /// Rows of size, mean, ci_low, ci_high for the plot-data file.
  std::vector<std::vector<double>> plot_rows() const;
};

struct CurveOptions {
  unsigned jobs = 1;
  EntropyOptions entropy;
};

DiversityCurve run_discrete_bias(const DiscreteLawSpec& spec, const std::vector<Eigen::Index>& sizes,
                                 std::size_t trials, const RunSeed& seed, const CurveOptions& opts = {});

/// Fresh draws per trial from `sampler`.
DiversityCurve vendi_curve(const Sampler& sampler, const std::vector<Eigen::Index>& sizes, std::size_t trials,
                           const KernelSpec& spec, const RunSeed& seed, const CurveOptions& opts = {},
                           CurveMetric metric = CurveMetric::vendi);
/// Uniform subsets of a fixed dataset per trial.
DiversityCurve vendi_curve(const EmbeddingSet& x, const std::vector<Eigen::Index>& sizes, std::size_t trials,
                           const KernelSpec& spec, const RunSeed& seed, const CurveOptions& opts = {},
                           CurveMetric metric = CurveMetric::vendi);

struct MonotoneReport {
  bool pass = true;
  std::vector<bool> pair_pass;
  /// (log_mean[k+1] - log_mean[k]) + sqrt(hw_k^2 + hw_{k+1}^2); pass iff >= 0.
  std::vector<double> slack;

  Json to_json() const;
};

MonotoneReport check_monotone_logvendi(const DiversityCurve& curve);

struct ConcentrationBound {
  std::uint64_t m = 2;
  double delta = 0.05;
  double c_m = 0.0;        // (1/m) log(2m - 1) + h(1/m)
  double c_m_upper = 0.0;  // log(e m) / m
  double t_delta = 0.0;    // c_m sqrt((m/2) log(2/delta))

  bool within_upper() const { return c_m <= c_m_upper; }
  Json to_json() const;
};

ConcentrationBound concentration_bound(std::uint64_t m, double delta);

struct ConcentrationReport {
  ConcentrationBound bound;
  std::vector<double> log_vendi;
  double mean = 0.0;
  double threshold = 0.0;
  std::size_t violations = 0;
  double fraction = 0.0;
  double allowed = 0.0;  // delta + 3 sqrt(delta (1 - delta) / trials)
  bool pass = false;

  Json to_json() const;
};

/// `threshold_override` replaces t_delta (harness sanity checks).
ConcentrationReport check_concentration(const Sampler& sampler, Eigen::Index m, std::size_t trials,
                                        const KernelSpec& spec, double delta, const RunSeed& seed,
                                        const CurveOptions& opts = {},
                                        std::optional<double> threshold_override = std::nullopt);

struct PopulationRkeEstimate {
  double inverse_rke = 0.0;  // mean of k^2 over pairs
  double inverse_rke_stderr = 0.0;
  double rke = 0.0;
  double rke_stderr = 0.0;  // delta method
  std::uint64_t pairs = 0;

  Json to_json() const;
};

PopulationRkeEstimate population_rke_mc(const Sampler& sampler, const KernelSpec& spec, std::uint64_t pair_count,
                                        const RunSeed& seed);

}  // namespace divkit
