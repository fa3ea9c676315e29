#include "divkit/projection.hpp"

#include "divkit/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace divkit {
namespace {

constexpr double kMinStep = 1e-30;
constexpr double kMaxStep = 1e8;

struct Evaluation {
  double objective = 0.0;
  double entropy = 0.0;
};

double kd_value(const Matrix& k, const Vector& q, const Vector& q0) {
  const Vector d = q - q0;
  return std::max(0.0, d.dot(k * d));
}

double vne_of(const GramMatrix& k, const Vector& q, const EntropyOptions& opts) {
  return vne_evaluate(k, WeightVector(q), opts, false).entropy;
}

// Frank-Wolfe gap restricted to the support face: upper bound on F(q) - F* for
// convex F over that face.
double fw_gap(const Vector& q, const Vector& g) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) > 0.0) best = std::min(best, g(i));
  return q.dot(g) - best;
}

void finish(ProjectionResult& r, const GramMatrix& k, const EntropyOptions& opts) {
  const Eigen::Index n = k.n();
  const WeightVector uniform = WeightVector::uniform(n);
  const WeightVector q(r.q_star);
  r.q_star = q.values();
  const GramMatrix k2 = hadamard_square(k);
  r.kd_to_uniform = kd_fixed_support(k, q, uniform);
  r.vendi_before = std::exp(vne_weighted(k, uniform, opts));
  r.vendi_after = std::exp(vne_weighted(k, q, opts));
  r.rke_before = 1.0 / inverse_rke_weighted(k2, uniform);
  r.rke_after = 1.0 / inverse_rke_weighted(k2, q);
}

struct Descent {
  Vector q;
  Evaluation value;
  int iterations = 0;
  bool converged = false;
};

// Exponentiated gradient with backtracking: every accepted step satisfies
// F(q_{t+1}) <= F(q_t). Stops when an accepted step changes F by at most
// tol * max(1, |F|), when the support-face Frank-Wolfe gap drops below tol,
// or when no stepsize down to kMinStep decreases F.
Descent minimize(Vector q, double& step, int max_iters, double tol, double weight_floor,
                 const std::function<Evaluation(const Vector&)>& value,
                 const std::function<Vector(const Vector&, int)>& gradient,
                 ProjectionResult* trace = nullptr) {
  Descent d;
  d.value = value(q);
  int it = 0;
  for (; it < max_iters; ++it) {
    const Vector g = gradient(q, it);
    if (fw_gap(q, g) <= tol) {
      d.converged = true;
      break;
    }
    Vector next;
    Evaluation trial;
    bool accepted = false;
    for (; step >= kMinStep; step *= 0.5) {
      next = eg_step(q, g, step, weight_floor);
      trial = value(next);
      if (trial.objective <= d.value.objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      step = kMinStep;
      d.converged = true;  // numerically stationary
      break;
    }
    const double change = d.value.objective - trial.objective;
    q = std::move(next);
    d.value = trial;
    if (trace) {
      trace->objective_trace.push_back(d.value.objective);
      trace->entropy_trace.push_back(d.value.entropy);
    }
    step = std::min(2.0 * step, kMaxStep);
    if (change <= tol * std::max(1.0, std::abs(d.value.objective))) {
      d.converged = true;
      ++it;
      break;
    }
  }
  d.iterations = it;
  d.q = std::move(q);
  return d;
}

ProjectionResult descend(const GramMatrix& k, const ProjectionConfig& cfg,
                         const std::function<Evaluation(const Vector&)>& value,
                         const std::function<Vector(const Vector&, int)>& gradient) {
  ProjectionResult r;
  const Vector q0 = Vector::Constant(k.n(), 1.0 / static_cast<double>(k.n()));
  const Evaluation start = value(q0);
  r.objective_trace.push_back(start.objective);
  r.entropy_trace.push_back(start.entropy);
  double step = cfg.eta;
  Descent d = minimize(q0, step, cfg.max_iters, cfg.tol, cfg.weight_floor, value, gradient, &r);
  r.status = d.converged ? ProjectionStatus::converged : ProjectionStatus::max_iters;
  r.iterations = d.iterations;
  r.q_star = std::move(d.q);
  finish(r, k, cfg.entropy);
  return r;
}

}  // namespace

const char* to_string(ProjectionMode mode) noexcept {
  switch (mode) {
    case ProjectionMode::vne_constrained: return "vne_constrained";
    case ProjectionMode::vne_penalized: return "vne_penalized";
    case ProjectionMode::rke_penalized: return "rke_penalized";
  }
  return "vne_penalized";
}

ProjectionMode parse_projection_mode(std::string_view name) {
  for (auto m : {ProjectionMode::vne_constrained, ProjectionMode::vne_penalized, ProjectionMode::rke_penalized})
    if (name == to_string(m)) return m;
  throw Error(ErrorKind::Usage, "unknown projection mode '" + std::string(name) + "'");
}

const char* to_string(ProjectionStatus status) noexcept {
  switch (status) {
    case ProjectionStatus::converged: return "converged";
    case ProjectionStatus::max_iters: return "max_iters";
    case ProjectionStatus::infeasible: return "infeasible";
  }
  return "max_iters";
}

void ProjectionConfig::validate() const {
  if (!(eta > 0.0) || !(tol > 0.0) || !(weight_floor >= 0.0))
    throw Error(ErrorKind::BadArguments, "eta and tol must be > 0");
  if (mode == ProjectionMode::vne_constrained && (!(gamma > 0.0) || !std::isfinite(rho)))
    throw Error(ErrorKind::BadArguments, "vne_constrained needs gamma > 0 and a finite rho");
  if (mode != ProjectionMode::vne_constrained && !(lambda >= 0.0))
    throw Error(ErrorKind::BadArguments, "lambda must be >= 0");
  if (max_iters < 0 || refresh_every < 1) throw Error(ErrorKind::BadArguments, "bad iteration settings");
}

Json ProjectionConfig::to_json() const {
  return Json{{"mode", to_string(mode)}, {"rho", rho},     {"lambda", lambda},     {"eta", eta},
              {"gamma", gamma},          {"max_iters", max_iters}, {"tol", tol}, {"weight_floor", weight_floor},
              {"refresh_every", refresh_every}};
}

Json ProjectionResult::to_json() const {
  return Json{{"q_star", std::vector<double>(q_star.data(), q_star.data() + q_star.size())},
              {"objective_trace", objective_trace},
              {"entropy_trace", entropy_trace},
              {"dual_trace", dual_trace},
              {"status", to_string(status)},
              {"iterations", iterations},
              {"kd_to_uniform", kd_to_uniform},
              {"vendi_before", vendi_before},
              {"vendi_after", vendi_after},
              {"rke_before", rke_before},
              {"rke_after", rke_after}};
}

Vector eg_step(const Vector& q, const Vector& g, double eta, double weight_floor) {
  if (q.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "eg_step: gradient length");
  const double mean = q.dot(g);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) > 0.0) top = std::max(top, -eta * (g(i) - mean));
  Vector out = Vector::Zero(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) > 0.0) out(i) = q(i) * std::exp(-eta * (g(i) - mean) - top);
  out /= out.sum();
  bool dropped = false;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out(i) > 0.0 && out(i) <= weight_floor) {
      out(i) = 0.0;
      dropped = true;
    }
  if (dropped) out /= out.sum();
  return out;
}

double vendi_penalized_objective(const GramMatrix& k, double lambda, const WeightVector& q,
                                 const EntropyOptions& opts) {
  const Vector q0 = Vector::Constant(k.n(), 1.0 / static_cast<double>(k.n()));
  return kd_value(k.values(), q.values(), q0) - lambda * vne_weighted(k, q, opts);
}

double rke_penalized_objective(const GramMatrix& k, const GramMatrix& k2, double lambda, const WeightVector& q) {
  const Vector q0 = Vector::Constant(k.n(), 1.0 / static_cast<double>(k.n()));
  return kd_value(k.values(), q.values(), q0) + lambda * inverse_rke_weighted(k2, q);
}

ProjectionResult project_vendi_penalized(const GramMatrix& k, double lambda, const ProjectionConfig& cfg) {
  ProjectionConfig c = cfg;
  c.mode = ProjectionMode::vne_penalized;
  c.lambda = lambda;
  c.validate();
  const Matrix& km = k.values();
  const Vector q0 = Vector::Constant(k.n(), 1.0 / static_cast<double>(k.n()));
  Vector entropy_grad;
  auto value = [&](const Vector& q) {
    const double h = vne_of(k, q, c.entropy);
    return Evaluation{kd_value(km, q, q0) - lambda * h, h};
  };
  auto gradient = [&](const Vector& q, int it) -> Vector {
    if (entropy_grad.size() == 0 || it % c.refresh_every == 0)
      entropy_grad = vne_evaluate(k, WeightVector(q), c.entropy, true).gradient;
    return 2.0 * km * (q - q0) - lambda * entropy_grad;
  };
  return descend(k, c, value, gradient);
}

ProjectionResult project_rke_penalized(const GramMatrix& k, double lambda, const ProjectionConfig& cfg) {
  ProjectionConfig c = cfg;
  c.mode = ProjectionMode::rke_penalized;
  c.lambda = lambda;
  c.validate();
  const Matrix& km = k.values();
  const Matrix k2 = km.cwiseProduct(km);
  const Vector q0 = Vector::Constant(k.n(), 1.0 / static_cast<double>(k.n()));
  auto value = [&](const Vector& q) {
    const double inv = q.dot(k2 * q);
    return Evaluation{kd_value(km, q, q0) + lambda * inv, -std::log(inv)};
  };
  auto gradient = [&](const Vector& q, int) -> Vector { return 2.0 * km * (q - q0) + 2.0 * lambda * (k2 * q); };
  return descend(k, c, value, gradient);
}

ProjectionResult project_vne(const GramMatrix& k, double rho, const ProjectionConfig& cfg) {
  ProjectionConfig c = cfg;
  c.mode = ProjectionMode::vne_constrained;
  c.rho = rho;
  c.validate();
  const Eigen::Index n = k.n();
  const Matrix& km = k.values();
  const Vector q0 = Vector::Constant(n, 1.0 / static_cast<double>(n));

  ProjectionResult r;
  Vector q = q0;
  double h = vne_of(k, q, c.entropy);
  double dual = 0.0;
  r.objective_trace.push_back(0.0);
  r.entropy_trace.push_back(h);
  r.dual_trace.push_back(dual);
  r.status = ProjectionStatus::max_iters;

  int it = 0;
  if (h >= rho - c.tol) {
    r.status = ProjectionStatus::converged;
  } else if (rho > std::log(static_cast<double>(n)) + c.tol) {
    r.status = ProjectionStatus::infeasible;  // rank n caps the entropy at log n
  } else {
    // Method of multipliers. Each primal step minimizes the augmented
    // Lagrangian KD(q) + (max(0, dual + g (rho - H))^2 - dual^2) / (2 g) by
    // warm-started exponentiated gradient; the dual update is then
    // dual <- max(0, dual + g (rho - H)). g starts at gamma and grows tenfold
    // whenever the violation fails to shrink by 4x.
    double penalty = c.gamma;
    double step = c.eta;
    double last_violation = std::max(0.0, rho - h);
    std::deque<double> violations;
    Vector entropy_grad;
    for (; it < c.max_iters; ++it) {
      const double mult = dual, pen = penalty;
      auto value = [&](const Vector& x) {
        const double hx = vne_of(k, x, c.entropy);
        const double shifted = std::max(0.0, mult + pen * (rho - hx));
        return Evaluation{kd_value(km, x, q0) + (shifted * shifted - mult * mult) / (2.0 * pen), hx};
      };
      auto gradient = [&](const Vector& x, int inner) -> Vector {
        if (entropy_grad.size() == 0 || inner % c.refresh_every == 0)
          entropy_grad = vne_evaluate(k, WeightVector(x), c.entropy, true).gradient;
        const double shifted = std::max(0.0, mult + pen * (rho - vne_of(k, x, c.entropy)));
        return 2.0 * km * (x - q0) - shifted * entropy_grad;
      };
      step = std::max(step, c.eta);
      Descent d = minimize(q, step, c.max_iters, 0.1 * c.tol, c.weight_floor, value, gradient);
      entropy_grad.resize(0);
      const double moved = (d.q - q).lpNorm<1>();
      q = std::move(d.q);
      h = d.value.entropy;
      const double violation = std::max(0.0, rho - h);
      dual = std::max(0.0, dual + penalty * (rho - h));
      if (violation > 0.25 * last_violation) penalty = std::min(10.0 * penalty, c.lambda_ceiling);
      last_violation = violation;
      r.objective_trace.push_back(kd_value(km, q, q0));
      r.entropy_trace.push_back(h);
      r.dual_trace.push_back(dual);

      if (violation <= c.tol && moved <= c.tol) {
        r.status = ProjectionStatus::converged;
        ++it;
        break;
      }
      violations.push_back(violation);
      if (static_cast<int>(violations.size()) > c.stagnation_window) violations.pop_front();
      if (dual > c.lambda_ceiling && static_cast<int>(violations.size()) == c.stagnation_window &&
          violations.front() - violations.back() < 1e-12) {
        r.status = ProjectionStatus::infeasible;
        ++it;
        break;
      }
    }
  }
  r.iterations = it;
  r.q_star = q;
  finish(r, k, c.entropy);
  return r;
}

ProjectionResult project(const GramMatrix& k, const ProjectionConfig& cfg) {
  switch (cfg.mode) {
    case ProjectionMode::vne_constrained: return project_vne(k, cfg.rho, cfg);
    case ProjectionMode::vne_penalized: return project_vendi_penalized(k, cfg.lambda, cfg);
    case ProjectionMode::rke_penalized: return project_rke_penalized(k, cfg.lambda, cfg);
  }
  return project_vendi_penalized(k, cfg.lambda, cfg);
}

}  // namespace divkit
