#include <doctest.h>

#include "divkit/guidance.hpp"
#include "helpers.hpp"

using namespace divkit;
using testing::kind_of;

namespace {

MixtureSpec2D single(Point2 c, double sd) {
  MixtureSpec2D s;
  s.centers = {c};
  s.weights = Vector::Ones(1);
  s.component_std = sd;
  return s;
}

double log_density(const Point2& z, int t, const MixtureSpec2D& spec, const NoiseSchedule& sched) {
  const double ab = sched.alphas_bar[t];
  const double var = ab * spec.component_std * spec.component_std + 1.0 - ab;
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (Eigen::Index k = 0; k < spec.size(); ++k) {
    terms.push_back(std::log(spec.weights(k)) - (z - std::sqrt(ab) * spec.centers[k]).squaredNorm() / (2 * var));
    mx = std::max(mx, terms.back());
  }
  double s = 0.0;
  for (double v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

GuidanceRunConfig grid_config(double ratio, Eigen::Index n, double eta) {
  GuidanceRunConfig cfg;
  cfg.target = MixtureSpec2D::grid(4, 4, 1.0, 0.05);
  cfg.base_weights.resize(16);
  for (int k = 0; k < 16; ++k) cfg.base_weights(k) = std::pow(ratio, k);
  cfg.base_weights /= cfg.base_weights.sum();
  cfg.n_samples = n;
  cfg.guidance.eta = eta;
  cfg.guidance.kernel = KernelSpec::gaussian(0.5);
  return cfg;
}

}  // namespace

TEST_CASE("mixture specs") {
  const MixtureSpec2D g = MixtureSpec2D::grid(4, 4, 1.0, 0.05);
  CHECK(g.size() == 16);
  CHECK(g.min_spacing() == doctest::Approx(1.0));
  Point2 mean = Point2::Zero();
  for (const auto& c : g.centers) mean += c / 16.0;
  CHECK(mean.norm() < 1e-12);
  const MixtureSpec2D c = MixtureSpec2D::circle(8, 2.0, 0.1);
  CHECK(c.centers[3].norm() == doctest::Approx(2.0));
  CHECK(c.min_spacing() == doctest::Approx(2 * 2.0 * std::sin(M_PI / 8)));
  CHECK(kind_of([&] { g.with_weights(Vector::Ones(3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("schedules") {
  for (const NoiseSchedule& s : {NoiseSchedule::linear_beta(200), NoiseSchedule::cosine(200)}) {
    CHECK(s.steps() == 200);
    CHECK(s.alphas_bar[0] == 1.0);
    for (int t = 1; t <= 200; ++t) CHECK(s.alphas_bar[t] < s.alphas_bar[t - 1]);
    CHECK(s.alphas_bar[200] < 1e-3);
  }
  // Linear beta from 0.1/T to 20/T.
  const NoiseSchedule lin = NoiseSchedule::linear_beta(100);
  CHECK(1.0 - lin.alphas_bar[1] == doctest::Approx(0.1 / 100));
  CHECK(1.0 - lin.alphas_bar[100] / lin.alphas_bar[99] == doctest::Approx(20.0 / 100));
}

TEST_CASE("noised mixture score") {
  const NoiseSchedule sched = NoiseSchedule::linear_beta(100);
  const MixtureSpec2D one = single(Point2(0.7, -0.4), 0.2);
  for (int t : {0, 10, 50, 100}) {
    const Point2 z(0.3, 0.9);
    const double ab = sched.alphas_bar[t];
    const double var = ab * 0.04 + 1 - ab;
    const Point2 expect = -(z - std::sqrt(ab) * one.centers[0]) / var;
    CHECK((noised_mixture_score(z, t, one, sched) - expect).norm() < 1e-12);
  }
  MixtureSpec2D two;
  two.centers = {Point2(-1, 0), Point2(1, 0)};
  two.weights = Vector::Constant(2, 0.5);
  two.component_std = 0.1;
  CHECK(noised_mixture_score(Point2(0, 0), 30, two, sched).norm() < 1e-12);

  const MixtureSpec2D skew = MixtureSpec2D::grid(3, 3, 1.0, 0.1).with_weights(Vector::LinSpaced(9, 1, 9));
  Rng rng(RunSeed{31, 0});
  for (int i = 0; i < 100; ++i) {
    const int t = static_cast<int>(rng.below(101));
    const Point2 z(2 * rng.normal(), 2 * rng.normal());
    const Point2 s = noised_mixture_score(z, t, skew, sched);
    const double h = 1e-5;
    Point2 fd;
    for (int j = 0; j < 2; ++j) {
      Point2 zp = z, zm = z;
      zp(j) += h;
      zm(j) -= h;
      fd(j) = (log_density(zp, t, skew, sched) - log_density(zm, t, skew, sched)) / (2 * h);
    }
    CHECK((s - fd).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("reverse steps") {
  const NoiseSchedule sched = NoiseSchedule::linear_beta(200);
  const MixtureSpec2D origin = single(Point2::Zero(), 0.05);
  Rng rng(RunSeed{32, 0});
  Point2 z(1.5, -2.0);
  for (int t = 200; t >= 1; --t) z = reverse_step(z, t, origin, sched, rng, SamplerKind::ddim);
  CHECK(z.norm() < 0.05 * 2.5 * 1.5);

  // Ancestral sampler: moments after a full reverse pass.
  const MixtureSpec2D target = single(Point2(1.0, -0.5), 0.3);
  const int n = 10000;
  Eigen::Matrix<double, Eigen::Dynamic, 2> out(n, 2);
  for (int i = 0; i < n; ++i) {
    Rng r(RunSeed{33, 0}.derive(i));
    Point2 x(r.normal(), r.normal());
    for (int t = 200; t >= 1; --t) x = reverse_step(x, t, target, sched, r, SamplerKind::ancestral);
    out.row(i) = x.transpose();
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = out.col(j).mean();
    const double sd = std::sqrt((out.col(j).array() - mean).square().sum() / (n - 1));
    CHECK(std::abs(mean - target.centers[0](j)) < 3 * 0.3 / std::sqrt(n) + 0.01);
    CHECK(std::abs(sd - 0.3) < 3 * 0.3 / std::sqrt(2.0 * n) + 0.01);
  }

  Rng a(RunSeed{34, 0}), b(RunSeed{34, 0});
  Point2 za(0.2, 0.2), zb(0.2, 0.2);
  for (int t = 200; t >= 1; --t) {
    za = reverse_step(za, t, target, sched, a, SamplerKind::ancestral);
    zb = reverse_step(zb, t, target, sched, b, SamplerKind::ancestral);
  }
  CHECK(za == zb);
}

TEST_CASE("inverse-RKE objective and gradient") {
  const KernelSpec g = KernelSpec::gaussian(0.5);
  MemoryBank bank;
  CHECK(kind_of([&] { irke_objective(Point2::Zero(), bank, g); }) == ErrorKind::EmptyBank);
  bank.add(Point2(1, 1));
  CHECK(irke_objective(Point2(1, 1), bank, g) == 1.0);
  CHECK(irke_objective(Point2(40, 40), bank, g) < 1e-300);
  bank.add(Point2(-1, 1));
  const double kr = gaussian_kernel(Point2(0, 0), Point2(1, 1), 0.5);
  CHECK(irke_objective(Point2(0, 0), bank, g) == doctest::Approx(kr * kr).epsilon(1e-14));

  Rng rng(RunSeed{35, 0});
  for (int i = 0; i < 5; ++i) bank.add(Point2(rng.normal(), rng.normal()));
  for (const KernelSpec spec : {g, KernelSpec::cosine()}) {
    const Point2 z(0.3, -0.8);
    const Point2 grad = irke_gradient(z, bank, spec);
    for (int j = 0; j < 2; ++j) {
      Point2 zp = z, zm = z;
      zp(j) += 1e-6;
      zm(j) -= 1e-6;
      const double fd = (irke_objective(zp, bank, spec) - irke_objective(zm, bank, spec)) / 2e-6;
      CHECK(grad(j) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("memory bank") {
  MemoryBank bank;
  bank.capacity = 3;
  for (int i = 0; i < 5; ++i) bank.add(Point2(i, 0));
  CHECK(bank.size() == 3);
  CHECK(bank.entries.front()(0) == 2.0);
  CHECK(bank.entries.back()(0) == 4.0);
}

TEST_CASE("guided step") {
  GuidanceConfig cfg;
  cfg.kernel = KernelSpec::gaussian(0.5);
  cfg.apply_every = 1;
  MemoryBank bank;
  const Point2 z(0.2, 0.1);
  CHECK(guided_step(z, bank, cfg, 5, 10).empty_bank);
  CHECK(guided_step(z, bank, cfg, 5, 10).z == z);
  bank.add(z);
  CHECK(guided_step(z, bank, cfg, 5, 10).z == z);
  bank.entries = {Point2(0.0, 0.0)};
  cfg.eta = 0.0;
  CHECK(guided_step(z, bank, cfg, 5, 10).z == z);
  cfg.eta = 0.05;
  const GuidedStep s = guided_step(z, bank, cfg, 5, 10);
  CHECK(s.applied);
  CHECK((s.z - z).dot(z - bank.entries[0]) > 0.0);
  CHECK(irke_objective(s.z, bank, cfg.kernel) < irke_objective(z, bank, cfg.kernel));

  cfg.apply_every = 10;
  CHECK(guided_step(z, bank, cfg, 200, 200).applied);
  CHECK_FALSE(guided_step(z, bank, cfg, 195, 200).applied);
  CHECK(guided_step(z, bank, cfg, 190, 200).applied);
  cfg.linear_decay = true;
  CHECK(cfg.eta_at(100, 200) == doctest::Approx(0.025));
}

TEST_CASE("guided sampling without guidance equals the baseline") {
  GuidanceRunConfig cfg = grid_config(1.0, 2000, 0.0);
  cfg.schedule = NoiseSchedule::linear_beta(100);
  const GuidanceRun run = run_guided_sampling(cfg, RunSeed{36, 0});
  CHECK(run.guided.data() == run.baseline.data());
  CHECK(run.guided_metrics.to_json() == run.baseline_metrics.to_json());
  // 2,000 uniform draws over 16 modes miss one with probability < 16 (15/16)^2000.
  CHECK(run.guided_metrics.covered_modes == 16);
  CHECK(run.guidance_applications == 0);
}

TEST_CASE("guidance raises diversity on a skewed base") {
  int rke_wins = 0, coverage_wins = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const GuidanceRun run = run_guided_sampling(grid_config(0.5, 500, 3.0), RunSeed{37 + s, 0});
    rke_wins += run.guided_metrics.score.rke > run.baseline_metrics.score.rke;
    coverage_wins += run.guided_metrics.covered_modes > run.baseline_metrics.covered_modes;
    CHECK(run.guidance_applications > 0);
    CHECK(run.bank_size == 500);
  }
  CHECK(rke_wins >= 3);
  CHECK(coverage_wins >= 3);
}

TEST_CASE("guidance on a single mode trades fidelity for spread") {
  GuidanceRunConfig cfg;
  cfg.target = single(Point2(0.5, 0.5), 0.1);
  cfg.n_samples = 300;
  cfg.guidance.eta = 0.05;
  cfg.guidance.kernel = KernelSpec::gaussian(0.1);
  const GuidanceRun run = run_guided_sampling(cfg, RunSeed{42, 0});
  CHECK(run.guided_metrics.score.rke > run.baseline_metrics.score.rke);
  CHECK(run.guided_metrics.fd > run.baseline_metrics.fd);
  MESSAGE("single mode: rke " << run.baseline_metrics.score.rke << " -> " << run.guided_metrics.score.rke << ", fd "
                              << run.baseline_metrics.fd << " -> " << run.guided_metrics.fd);
}

TEST_CASE("every-k bank policy") {
  GuidanceRunConfig cfg = grid_config(0.7, 50, 0.03);
  cfg.schedule = NoiseSchedule::linear_beta(40);
  cfg.bank_policy = BankPolicy::every_k_steps;
  cfg.bank_every_k = 10;
  cfg.record_trajectories = true;
  const GuidanceRun run = run_guided_sampling(cfg, RunSeed{43, 0});
  CHECK(run.bank_size > 50);
  REQUIRE(run.trajectories.size() == 50);
  CHECK(run.trajectories[0].rows() == 41);
  CHECK(run.trajectories[7](40, 0) == run.guided.data()(7, 0));
}
