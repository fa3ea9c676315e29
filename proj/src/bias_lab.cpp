#include "divkit/bias_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "divkit/parallel.hpp"

namespace divkit {
namespace {

constexpr double kZ95 = 1.96;

struct Summary {
  double mean = 0.0;
  double half_width = 0.0;
};

// Sorted reduction so the result does not depend on trial completion order.
Summary summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / m;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  return {mean, kZ95 * sd / std::sqrt(m)};
}

void validate_grid(const std::vector<Eigen::Index>& sizes, std::size_t trials) {
  if (sizes.empty()) throw Error(ErrorKind::InvalidGrid, "empty size grid");
  if (trials < 2) throw Error(ErrorKind::InvalidGrid, "at least two trials are needed for a CI");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw Error(ErrorKind::InvalidGrid, "sizes must be >= 1");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error(ErrorKind::InvalidGrid, "sizes must be strictly ascending");
  }
}

// Runs trial(size_index, trial_index, seed) -> (value, log_value) over the grid.
template <class Trial>
DiversityCurve build_curve(const std::vector<Eigen::Index>& sizes, std::size_t trials, const RunSeed& seed,
                           unsigned jobs, CurveMetric metric, Trial&& trial) {
  validate_grid(sizes, trials);
  const std::size_t total = sizes.size() * trials;
  std::vector<double> values(total), logs(total);
  parallel_for(total, jobs, [&](std::size_t task) {
    const std::size_t s = task / trials;
    const std::size_t t = task % trials;
    const auto [value, log_value] = trial(sizes[s], seed.derive(s).derive(t));
    values[task] = value;
    logs[task] = log_value;
  });

  DiversityCurve curve;
  curve.sizes = sizes;
  curve.trials = trials;
  curve.metric = metric;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const auto first = static_cast<std::ptrdiff_t>(s * trials);
    const auto last = first + static_cast<std::ptrdiff_t>(trials);
    const Summary v = summarize({values.begin() + first, values.begin() + last});
    const Summary l = summarize({logs.begin() + first, logs.begin() + last});
    curve.mean.push_back(v.mean);
    curve.ci_low.push_back(v.mean - v.half_width);
    curve.ci_high.push_back(v.mean + v.half_width);
    curve.log_mean.push_back(l.mean);
    curve.log_ci_low.push_back(l.mean - l.half_width);
    curve.log_ci_high.push_back(l.mean + l.half_width);
    curve.log_values.emplace_back(logs.begin() + first, logs.begin() + last);
  }
  return curve;
}

std::pair<double, double> score_pair(const EmbeddingSet& x, const KernelSpec& spec, const EntropyOptions& opts,
                                     CurveMetric metric) {
  if (metric == CurveMetric::rke) {
    const double r = rke(gram(x, spec));
    return {r, std::log(r)};
  }
  const DiversityScore s = vendi(x, spec, opts);
  return {s.vendi, s.log_vendi};
}

double binary_entropy(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return -t * std::log(t) - (1.0 - t) * std::log1p(-t);
}

}  // namespace

double plugin_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Error(ErrorKind::EmptyHistogram, "histogram has no counts");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double miller_gap(std::uint64_t r, std::uint64_t n) {
  if (r < 2 || n < 1) throw Error(ErrorKind::BadArguments, "miller_gap needs r >= 2 and n >= 1");
  return static_cast<double>(r - 1) / (2.0 * static_cast<double>(n));
}

Vector CubeMixtureSpec::center(std::uint64_t index) const {
  Vector c(dimension);
  for (unsigned j = 0; j < dimension; ++j) c(j) = ((index >> j) & 1U) ? 1.0 : -1.0;
  return c;
}

void CubeMixtureSpec::validate() const {
  if (dimension < 1) throw Error(ErrorKind::BadArguments, "cube dimension must be >= 1");
  if (dimension > 24) throw Error(ErrorKind::DimensionTooLarge, "cube dimension must be <= 24");
  if (!(component_std >= 0.0) || !std::isfinite(component_std))
    throw Error(ErrorKind::BadArguments, "component_std must be finite and >= 0");
}

EmbeddingSet sample_cube_mixture(const CubeMixtureSpec& spec, Eigen::Index n, const RunSeed& seed) {
  spec.validate();
  if (n < 1) throw Error(ErrorKind::EmptySet, "sample size must be >= 1");
  Rng rng(seed);
  const auto r = spec.component_count();
  Matrix x(n, spec.dimension);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint64_t idx = rng.below(r);
    for (unsigned j = 0; j < spec.dimension; ++j)
      x(i, j) = (((idx >> j) & 1U) ? 1.0 : -1.0) + spec.component_std * rng.normal();
  }
  return EmbeddingSet(std::move(x), "cube_mixture");
}

Sampler cube_sampler(const CubeMixtureSpec& spec) {
  spec.validate();
  return [spec](Eigen::Index n, const RunSeed& seed) { return sample_cube_mixture(spec, n, seed); };
}

const char* to_string(CurveMetric metric) noexcept {
  switch (metric) {
    case CurveMetric::exp_shannon: return "exp_shannon";
    case CurveMetric::vendi: return "vendi";
    case CurveMetric::rke: return "rke";
  }
  return "vendi";
}

CurveMetric parse_curve_metric(std::string_view name) {
  for (auto m : {CurveMetric::exp_shannon, CurveMetric::vendi, CurveMetric::rke})
    if (name == to_string(m)) return m;
  throw Error(ErrorKind::Usage, "unknown curve metric '" + std::string(name) + "'");
}

Json DiversityCurve::to_json() const {
  return Json{{"metric", to_string(metric)}, {"trials", trials},   {"sizes", sizes},
              {"mean", mean},                {"ci_low", ci_low},   {"ci_high", ci_high},
              {"log_mean", log_mean},        {"log_ci_low", log_ci_low}, {"log_ci_high", log_ci_high},
              {"log_values", log_values}};
}

std::vector<std::vector<double>> DiversityCurve::plot_rows() const {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    rows.push_back({static_cast<double>(sizes[i]), mean[i], ci_low[i], ci_high[i]});
  return rows;
}

DiversityCurve run_discrete_bias(const DiscreteLawSpec& spec, const std::vector<Eigen::Index>& sizes,
                                 std::size_t trials, const RunSeed& seed, const CurveOptions& opts) {
  if (spec.alphabet_size < 2) throw Error(ErrorKind::BadArguments, "alphabet size must be >= 2");
  return build_curve(sizes, trials, seed, opts.jobs, CurveMetric::exp_shannon,
                     [&](Eigen::Index n, const RunSeed& s) {
                       Rng rng(s);
                       std::vector<std::uint64_t> counts(spec.alphabet_size, 0);
                       for (Eigen::Index i = 0; i < n; ++i) ++counts[rng.below(spec.alphabet_size)];
                       const double h = plugin_entropy(counts);
                       return std::pair{std::exp(h), h};
                     });
}

DiversityCurve vendi_curve(const Sampler& sampler, const std::vector<Eigen::Index>& sizes, std::size_t trials,
                           const KernelSpec& spec, const RunSeed& seed, const CurveOptions& opts,
                           CurveMetric metric) {
  spec.validate();
  if (metric == CurveMetric::exp_shannon) throw Error(ErrorKind::Usage, "exp_shannon is not a kernel metric");
  if (metric == CurveMetric::vendi)
    for (auto n : sizes)
      if (n > opts.entropy.size_cap)
        throw Error(ErrorKind::SizeCapExceeded, "size " + std::to_string(n) + " exceeds the eigensolve cap");
  return build_curve(sizes, trials, seed, opts.jobs, metric, [&](Eigen::Index n, const RunSeed& s) {
    return score_pair(sampler(n, s), spec, opts.entropy, metric);
  });
}

DiversityCurve vendi_curve(const EmbeddingSet& x, const std::vector<Eigen::Index>& sizes, std::size_t trials,
                           const KernelSpec& spec, const RunSeed& seed, const CurveOptions& opts,
                           CurveMetric metric) {
  Sampler draw = [&x](Eigen::Index n, const RunSeed& s) { return subsample(x, n, s); };
  return vendi_curve(draw, sizes, trials, spec, seed, opts, metric);
}

Json MonotoneReport::to_json() const { return Json{{"pass", pass}, {"pair_pass", pair_pass}, {"slack", slack}}; }

MonotoneReport check_monotone_logvendi(const DiversityCurve& curve) {
  MonotoneReport report;
  for (std::size_t k = 0; k + 1 < curve.sizes.size(); ++k) {
    const double hw0 = curve.log_ci_high[k] - curve.log_mean[k];
    const double hw1 = curve.log_ci_high[k + 1] - curve.log_mean[k + 1];
    const double slack = (curve.log_mean[k + 1] - curve.log_mean[k]) + std::sqrt(hw0 * hw0 + hw1 * hw1);
    report.slack.push_back(slack);
    report.pair_pass.push_back(slack >= 0.0);
    report.pass = report.pass && slack >= 0.0;
  }
  return report;
}

Json ConcentrationBound::to_json() const {
  return Json{{"m", m},       {"delta", delta},     {"c_m", c_m}, {"c_m_upper", c_m_upper},
              {"t_delta", t_delta}, {"within_upper", within_upper()}};
}

ConcentrationBound concentration_bound(std::uint64_t m, double delta) {
  if (m < 2) throw Error(ErrorKind::BadArguments, "concentration bound needs m >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::BadArguments, "delta must lie in (0, 1)");
  const double md = static_cast<double>(m);
  ConcentrationBound b;
  b.m = m;
  b.delta = delta;
  b.c_m = std::log(2.0 * md - 1.0) / md + binary_entropy(1.0 / md);
  b.c_m_upper = (1.0 + std::log(md)) / md;
  b.t_delta = b.c_m * std::sqrt(0.5 * md * std::log(2.0 / delta));
  return b;
}

Json ConcentrationReport::to_json() const {
  return Json{{"bound", bound.to_json()}, {"log_vendi", log_vendi}, {"mean", mean},
              {"threshold", threshold},   {"violations", violations}, {"fraction", fraction},
              {"allowed", allowed},       {"pass", pass}};
}

ConcentrationReport check_concentration(const Sampler& sampler, Eigen::Index m, std::size_t trials,
                                        const KernelSpec& spec, double delta, const RunSeed& seed,
                                        const CurveOptions& opts, std::optional<double> threshold_override) {
  if (trials < 30) throw Error(ErrorKind::BadArguments, "concentration check needs at least 30 trials");
  ConcentrationReport report;
  report.bound = concentration_bound(static_cast<std::uint64_t>(m), delta);
  report.log_vendi.resize(trials);
  parallel_for(trials, opts.jobs, [&](std::size_t t) {
    report.log_vendi[t] = vendi(sampler(m, seed.derive(t)), spec, opts.entropy).log_vendi;
  });
  report.mean = summarize(report.log_vendi).mean;
  report.threshold = threshold_override.value_or(report.bound.t_delta);
  for (double v : report.log_vendi)
    if (std::abs(v - report.mean) > report.threshold) ++report.violations;
  const double tr = static_cast<double>(trials);
  report.fraction = static_cast<double>(report.violations) / tr;
  report.allowed = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / tr);
  report.pass = report.fraction <= report.allowed;
  return report;
}

Json PopulationRkeEstimate::to_json() const {
  return Json{{"inverse_rke", inverse_rke}, {"inverse_rke_stderr", inverse_rke_stderr},
              {"rke", rke},                 {"rke_stderr", rke_stderr},
              {"pairs", pairs}};
}

PopulationRkeEstimate population_rke_mc(const Sampler& sampler, const KernelSpec& spec, std::uint64_t pair_count,
                                        const RunSeed& seed) {
  spec.validate();
  if (pair_count < 100) throw Error(ErrorKind::BadArguments, "population RKE needs at least 100 pairs");
  constexpr std::uint64_t kChunk = 1 << 16;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t done = 0, chunk = 0; done < pair_count; done += kChunk, ++chunk) {
    const auto c = static_cast<Eigen::Index>(std::min(kChunk, pair_count - done));
    const EmbeddingSet x = sampler(c, seed.derive(2 * chunk));
    const EmbeddingSet y = sampler(c, seed.derive(2 * chunk + 1));
    for (Eigen::Index i = 0; i < c; ++i) {
      const double k = kernel(spec, x.row(i), y.row(i));
      sum += k * k;
      sum_sq += k * k * k * k;
    }
  }
  const double n = static_cast<double>(pair_count);
  PopulationRkeEstimate est;
  est.pairs = pair_count;
  est.inverse_rke = sum / n;
  const double var = std::max(0.0, (sum_sq - n * est.inverse_rke * est.inverse_rke) / (n - 1.0));
  est.inverse_rke_stderr = std::sqrt(var / n);
  est.rke = 1.0 / est.inverse_rke;
  est.rke_stderr = est.inverse_rke_stderr / (est.inverse_rke * est.inverse_rke);
  return est;
}

}  // namespace divkit
