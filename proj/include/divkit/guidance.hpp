#pragma once

#include <vector>

#include <Eigen/Core>

#include "divkit/discrepancy.hpp"
#include "divkit/entropy.hpp"
#include "divkit/rng.hpp"

namespace divkit {

using Point2 = Eigen::Vector2d;

struct MixtureSpec2D {
  std::vector<Point2> centers;
  Vector weights;  // simplex over components
  double component_std = 0.1;

  /// `modes` centers evenly spaced on a circle of `radius`, uniform weights.
  static MixtureSpec2D circle(int modes, double radius, double component_std);
  /// rows x cols lattice with the given spacing, centered at the origin.
  static MixtureSpec2D grid(int rows, int cols, double spacing, double component_std);

  MixtureSpec2D with_weights(Vector w) const;
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(centers.size()); }
  /// Smallest distance between two centers.
  double min_spacing() const;
  void validate() const;
};

EmbeddingSet sample_mixture(const MixtureSpec2D& spec, Eigen::Index n, const RunSeed& seed);

enum class ScheduleKind { linear_beta, cosine };

/// alphas_bar[t] for t = 0..T; alphas_bar[0] = 1 (clean data), strictly
/// decreasing towards alphas_bar[T] ~ 0.
struct NoiseSchedule {
  std::vector<double> alphas_bar;
  ScheduleKind kind = ScheduleKind::linear_beta;

  int steps() const noexcept { return static_cast<int>(alphas_bar.size()) - 1; }

  /// beta_t linear from 0.1/T to 20/T, the discretized VP path.
  static NoiseSchedule linear_beta(int steps);
  static NoiseSchedule cosine(int steps);
  void validate() const;
};

/// grad_z log p_t(z), where p_t has centers sqrt(abar_t) c_k and per-component
/// variance abar_t s^2 + (1 - abar_t). Log-sum-exp stabilized.
Point2 noised_mixture_score(const Point2& z, int t, const MixtureSpec2D& spec, const NoiseSchedule& sched);

enum class SamplerKind { ddim, ancestral };

/// z_t -> z_{t-1} using the exact score. DDIM is deterministic; the ancestral
/// step adds sqrt(beta_t) N(0, I) noise drawn from `rng`.
Point2 reverse_step(const Point2& z, int t, const MixtureSpec2D& spec, const NoiseSchedule& sched, Rng& rng,
                    SamplerKind kind = SamplerKind::ddim);

enum class BankPolicy { all_finals, every_k_steps };

struct MemoryBank {
  std::vector<Point2> entries;
  std::size_t capacity = 1 << 20;
  BankPolicy policy = BankPolicy::all_finals;
  int every_k = 10;

  /// FIFO once full.
  void add(const Point2& z);
  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
};

struct GuidanceConfig {
  double eta = 0.03;
  bool linear_decay = false;  // eta_t = eta * t / T when set
  int apply_every = 10;
  KernelSpec kernel = KernelSpec::gaussian(0.5);

  double eta_at(int t, int total_steps) const;
  bool applies_at(int t, int total_steps) const { return (total_steps - t) % apply_every == 0; }
  void validate() const;
};

/// (1/m) sum_i k(z, b_i)^2.
double irke_objective(const Point2& z, const MemoryBank& bank, const KernelSpec& kernel);
Point2 irke_gradient(const Point2& z, const MemoryBank& bank, const KernelSpec& kernel);

struct GuidedStep {
  Point2 z;
  bool applied = false;
  bool empty_bank = false;
};

/// z_tilde - eta_t grad J(z_tilde; bank) on scheduled steps, identity otherwise.
GuidedStep guided_step(const Point2& z_tilde, const MemoryBank& bank, const GuidanceConfig& cfg, int t,
                       int total_steps);

struct SampleMetrics {
  DiversityScore score;
  std::vector<int> mode_counts;
  int covered_modes = 0;
  double kd = 0.0;
  double fd = 0.0;

  Json to_json() const;
};

/// Mode k is covered when some sample lies within 3 component_std of c_k.
std::vector<int> mode_counts(const EmbeddingSet& samples, const MixtureSpec2D& spec);

struct GuidanceRunConfig {
  MixtureSpec2D target;
  Vector base_weights;  // weights of the (biased) base sampler; empty means target weights
  Eigen::Index n_samples = 1000;
  NoiseSchedule schedule = NoiseSchedule::linear_beta(200);
  GuidanceConfig guidance;
  SamplerKind sampler = SamplerKind::ddim;
  BankPolicy bank_policy = BankPolicy::all_finals;
  std::size_t bank_capacity = 1 << 20;
  int bank_every_k = 10;
  bool record_trajectories = false;
};

struct GuidanceRun {
  EmbeddingSet guided;
  EmbeddingSet baseline;
  EmbeddingSet reference;  // fresh draw from the target mixture
  SampleMetrics guided_metrics;
  SampleMetrics baseline_metrics;
  std::size_t bank_size = 0;
  std::size_t guidance_applications = 0;
  std::vector<Matrix> trajectories;  // (T+1) x 2 per guided sample, if recorded

  Json to_json() const;
};

/// Common random numbers: sample i of the guided and baseline runs share the
/// initial latent and all sampler noise, so they differ only by guidance.
GuidanceRun run_guided_sampling(const GuidanceRunConfig& cfg, const RunSeed& seed);

}  // namespace divkit
