#include "divkit/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace divkit {
namespace {

std::size_t draw_component(const Vector& weights, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    acc += weights(k);
    if (u < acc) return static_cast<std::size_t>(k);
  }
  return static_cast<std::size_t>(weights.size() - 1);
}

Matrix to_matrix(const std::vector<Point2>& points) {
  Matrix m(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return m;
}

SampleMetrics measure(const EmbeddingSet& samples, const EmbeddingSet& reference, const MixtureSpec2D& target,
                      const KernelSpec& kernel) {
  SampleMetrics m;
  m.score = vendi(samples, kernel);
  m.mode_counts = mode_counts(samples, target);
  m.covered_modes = static_cast<int>(std::count_if(m.mode_counts.begin(), m.mode_counts.end(), [](int c) { return c > 0; }));
  m.kd = mmd2(samples, reference, kernel, MmdEstimator::biased);
  m.fd = frechet_distance(samples, reference);
  return m;
}

}  // namespace

MixtureSpec2D MixtureSpec2D::circle(int modes, double radius, double component_std) {
  MixtureSpec2D spec;
  for (int k = 0; k < modes; ++k) {
    const double a = 2.0 * std::numbers::pi * k / modes;
    spec.centers.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  spec.weights = Vector::Constant(modes, 1.0 / modes);
  spec.component_std = component_std;
  spec.validate();
  return spec;
}

MixtureSpec2D MixtureSpec2D::grid(int rows, int cols, double spacing, double component_std) {
  MixtureSpec2D spec;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      spec.centers.emplace_back(spacing * (c - 0.5 * (cols - 1)), spacing * (r - 0.5 * (rows - 1)));
  spec.weights = Vector::Constant(rows * cols, 1.0 / (rows * cols));
  spec.component_std = component_std;
  spec.validate();
  return spec;
}

MixtureSpec2D MixtureSpec2D::with_weights(Vector w) const {
  MixtureSpec2D spec = *this;
  spec.weights = WeightVector(std::move(w)).values();
  spec.validate();
  return spec;
}

double MixtureSpec2D::min_spacing() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) best = std::min(best, (centers[i] - centers[j]).norm());
  return best;
}

void MixtureSpec2D::validate() const {
  if (centers.empty()) throw Error(ErrorKind::BadArguments, "mixture needs at least one component");
  if (weights.size() != size()) throw Error(ErrorKind::DimensionMismatch, "mixture weights vs centers");
  if (!(component_std > 0.0)) throw Error(ErrorKind::BadArguments, "component_std must be > 0");
  if (weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-9)
    throw Error(ErrorKind::BadArguments, "mixture weights must lie on the simplex");
  if (centers.size() > 1 && !(min_spacing() > 0.0)) throw Error(ErrorKind::BadArguments, "mixture centers must be distinct");
}

EmbeddingSet sample_mixture(const MixtureSpec2D& spec, Eigen::Index n, const RunSeed& seed) {
  spec.validate();
  Rng rng(seed);
  Matrix x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2& c = spec.centers[draw_component(spec.weights, rng)];
    x(i, 0) = c.x() + spec.component_std * rng.normal();
    x(i, 1) = c.y() + spec.component_std * rng.normal();
  }
  return EmbeddingSet(std::move(x), "mixture2d");
}

NoiseSchedule NoiseSchedule::linear_beta(int steps) {
  if (steps < 10) throw Error(ErrorKind::BadArguments, "schedule needs at least 10 steps");
  NoiseSchedule s;
  s.kind = ScheduleKind::linear_beta;
  s.alphas_bar.resize(static_cast<std::size_t>(steps) + 1);
  s.alphas_bar[0] = 1.0;
  const double lo = 0.1 / steps;
  const double hi = 20.0 / steps;
  for (int t = 1; t <= steps; ++t) {
    const double beta = lo + (hi - lo) * (t - 1) / (steps - 1);
    s.alphas_bar[static_cast<std::size_t>(t)] = s.alphas_bar[static_cast<std::size_t>(t) - 1] * (1.0 - beta);
  }
  return s;
}

NoiseSchedule NoiseSchedule::cosine(int steps) {
  if (steps < 10) throw Error(ErrorKind::BadArguments, "schedule needs at least 10 steps");
  constexpr double kOffset = 0.008;
  auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / steps + kOffset) / (1.0 + kOffset) * std::numbers::pi / 2);
    return c * c;
  };
  NoiseSchedule s;
  s.kind = ScheduleKind::cosine;
  s.alphas_bar.resize(static_cast<std::size_t>(steps) + 1);
  s.alphas_bar[0] = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double beta = std::min(1.0 - f(t) / f(t - 1), 0.999);
    s.alphas_bar[static_cast<std::size_t>(t)] = s.alphas_bar[static_cast<std::size_t>(t) - 1] * (1.0 - beta);
  }
  return s;
}

void NoiseSchedule::validate() const {
  if (steps() < 10) throw Error(ErrorKind::BadArguments, "schedule needs at least 10 steps");
  for (std::size_t t = 0; t < alphas_bar.size(); ++t) {
    if (!(alphas_bar[t] > 0.0 && alphas_bar[t] <= 1.0)) throw Error(ErrorKind::BadArguments, "alphas_bar outside (0, 1]");
    if (t > 0 && !(alphas_bar[t] < alphas_bar[t - 1]))
      throw Error(ErrorKind::BadArguments, "alphas_bar must be strictly decreasing");
  }
}

Point2 noised_mixture_score(const Point2& z, int t, const MixtureSpec2D& spec, const NoiseSchedule& sched) {
  if (t < 0 || t > sched.steps()) throw Error(ErrorKind::BadArguments, "step index out of range");
  const double ab = sched.alphas_bar[static_cast<std::size_t>(t)];
  const double scale = std::sqrt(ab);
  const double var = ab * spec.component_std * spec.component_std + (1.0 - ab);
  const Eigen::Index m = spec.size();
  Vector logits(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double w = spec.weights(k);
    logits(k) = w > 0.0 ? std::log(w) - (z - scale * spec.centers[static_cast<std::size_t>(k)]).squaredNorm() / (2.0 * var)
                        : -std::numeric_limits<double>::infinity();
  }
  const double top = logits.maxCoeff();
  Point2 acc = Point2::Zero();
  double total = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double r = std::exp(logits(k) - top);
    total += r;
    acc += r * (scale * spec.centers[static_cast<std::size_t>(k)] - z);
  }
  return acc / (total * var);
}

Point2 reverse_step(const Point2& z, int t, const MixtureSpec2D& spec, const NoiseSchedule& sched, Rng& rng,
                    SamplerKind kind) {
  if (t < 1 || t > sched.steps()) throw Error(ErrorKind::BadArguments, "reverse step needs 1 <= t <= T");
  const double ab = sched.alphas_bar[static_cast<std::size_t>(t)];
  const double ab_prev = sched.alphas_bar[static_cast<std::size_t>(t) - 1];
  const Point2 score = noised_mixture_score(z, t, spec, sched);
  if (kind == SamplerKind::ddim) {
    const Point2 eps = -std::sqrt(1.0 - ab) * score;
    const Point2 x0 = (z - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    return std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps;
  }
  const double alpha = ab / ab_prev;
  const double beta = 1.0 - alpha;
  const double sd = std::sqrt(beta);
  const double n0 = rng.normal();
  const double n1 = rng.normal();
  return (z + beta * score) / std::sqrt(alpha) + sd * Point2(n0, n1);
}

void MemoryBank::add(const Point2& z) {
  if (capacity == 0) return;
  if (entries.size() >= capacity) entries.erase(entries.begin());
  entries.push_back(z);
}

double GuidanceConfig::eta_at(int t, int total_steps) const {
  return linear_decay ? eta * static_cast<double>(t) / total_steps : eta;
}

void GuidanceConfig::validate() const {
  if (!(eta >= 0.0)) throw Error(ErrorKind::BadArguments, "guidance eta must be >= 0");
  if (apply_every < 1) throw Error(ErrorKind::BadArguments, "apply_every must be >= 1");
  kernel.validate();
}

double irke_objective(const Point2& z, const MemoryBank& bank, const KernelSpec& kernel) {
  if (bank.empty()) throw Error(ErrorKind::EmptyBank, "memory bank is empty");
  double sum = 0.0;
  for (const auto& b : bank.entries) {
    const double k = divkit::kernel(kernel, z, b);
    sum += k * k;
  }
  return sum / static_cast<double>(bank.size());
}

Point2 irke_gradient(const Point2& z, const MemoryBank& bank, const KernelSpec& kernel) {
  if (bank.empty()) throw Error(ErrorKind::EmptyBank, "memory bank is empty");
  Point2 g = Point2::Zero();
  if (kernel.family == KernelFamily::gaussian) {
    // d/dz exp(-|z-b|^2 / s^2) = -2 (z - b) / s^2 * k^2
    const double s2 = kernel.bandwidth * kernel.bandwidth;
    for (const auto& b : bank.entries) {
      const Point2 d = z - b;
      g += -2.0 / s2 * std::exp(-d.squaredNorm() / s2) * d;
    }
  } else {
    const double nz = z.norm();
    if (nz == 0.0) throw Error(ErrorKind::ZeroVector, "cosine guidance at the origin");
    for (const auto& b : bank.entries) {
      const double nb = b.norm();
      if (nb == 0.0) continue;
      const double c = z.dot(b) / (nz * nb);
      g += 2.0 * c * (b / (nz * nb) - c * z / (nz * nz));
    }
  }
  return g / static_cast<double>(bank.size());
}

GuidedStep guided_step(const Point2& z_tilde, const MemoryBank& bank, const GuidanceConfig& cfg, int t,
                       int total_steps) {
  GuidedStep out{z_tilde, false, bank.empty()};
  if (!cfg.applies_at(t, total_steps) || bank.empty()) return out;
  const double eta = cfg.eta_at(t, total_steps);
  if (eta == 0.0) return out;
  out.z = z_tilde - eta * irke_gradient(z_tilde, bank, cfg.kernel);
  out.applied = true;
  return out;
}

std::vector<int> mode_counts(const EmbeddingSet& samples, const MixtureSpec2D& spec) {
  std::vector<int> counts(spec.centers.size(), 0);
  const double radius = 3.0 * spec.component_std;
  for (Eigen::Index i = 0; i < samples.n(); ++i) {
    const Point2 z(samples.data()(i, 0), samples.data()(i, 1));
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < spec.centers.size(); ++k) {
      const double d = (z - spec.centers[k]).norm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best_d <= radius) ++counts[best];
  }
  return counts;
}

Json SampleMetrics::to_json() const {
  return Json{{"score", score.to_json()}, {"mode_counts", mode_counts}, {"covered_modes", covered_modes},
              {"kd", kd}, {"fd", fd}};
}

Json GuidanceRun::to_json() const {
  return Json{{"guided", guided_metrics.to_json()},
              {"baseline", baseline_metrics.to_json()},
              {"bank_size", bank_size},
              {"guidance_applications", guidance_applications}};
}

GuidanceRun run_guided_sampling(const GuidanceRunConfig& cfg, const RunSeed& seed) {
  cfg.target.validate();
  cfg.schedule.validate();
  cfg.guidance.validate();
  if (cfg.n_samples < 2) throw Error(ErrorKind::TooFewSamples, "guided sampling needs n_samples >= 2");
  const MixtureSpec2D base =
      cfg.base_weights.size() == 0 ? cfg.target : cfg.target.with_weights(cfg.base_weights);
  const int total = cfg.schedule.steps();

  MemoryBank bank;
  bank.capacity = cfg.bank_capacity;
  bank.policy = cfg.bank_policy;
  bank.every_k = cfg.bank_every_k;

  std::vector<Point2> guided(static_cast<std::size_t>(cfg.n_samples));
  std::vector<Point2> baseline(guided.size());
  std::vector<Matrix> trajectories;
  std::size_t applications = 0;

  for (Eigen::Index i = 0; i < cfg.n_samples; ++i) {
    const RunSeed stream = seed.derive(static_cast<std::uint64_t>(i));
    for (int pass = 0; pass < 2; ++pass) {
      const bool guide = pass == 0;
      Rng rng(stream);
      Point2 z(rng.normal(), rng.normal());
      Matrix path;
      if (guide && cfg.record_trajectories) {
        path.resize(total + 1, 2);
        path.row(0) = z.transpose();
      }
      std::vector<Point2> intermediates;
      for (int t = total; t >= 1; --t) {
        z = reverse_step(z, t, base, cfg.schedule, rng, cfg.sampler);
        if (guide) {
          const GuidedStep step = guided_step(z, bank, cfg.guidance, t, total);
          z = step.z;
          applications += step.applied ? 1 : 0;
          if (cfg.bank_policy == BankPolicy::every_k_steps && (total - t + 1) % cfg.bank_every_k == 0)
            intermediates.push_back(z);
          if (path.size() > 0) path.row(total - t + 1) = z.transpose();
        }
      }
      if (guide) {
        guided[static_cast<std::size_t>(i)] = z;
        if (cfg.bank_policy == BankPolicy::all_finals) {
          bank.add(z);
        } else {
          for (const auto& p : intermediates) bank.add(p);
        }
        if (path.size() > 0) trajectories.push_back(std::move(path));
      } else {
        baseline[static_cast<std::size_t>(i)] = z;
      }
    }
  }

  EmbeddingSet guided_set(to_matrix(guided), "guided");
  EmbeddingSet baseline_set(to_matrix(baseline), "baseline");
  EmbeddingSet reference = sample_mixture(cfg.target, cfg.n_samples, seed.derive(0xFFFFFFFFFFFFULL));
  reference = EmbeddingSet(reference.data(), "reference");
  SampleMetrics gm = measure(guided_set, reference, cfg.target, cfg.guidance.kernel);
  SampleMetrics bm = measure(baseline_set, reference, cfg.target, cfg.guidance.kernel);
  return GuidanceRun{std::move(guided_set), std::move(baseline_set), std::move(reference), std::move(gm),
                     std::move(bm), bank.size(), applications, std::move(trajectories)};
}

}  // namespace divkit
