#pragma once

#include <string_view>
#include <vector>

#include "divkit/entropy.hpp"

namespace divkit {

enum class ProjectionMode { vne_constrained, vne_penalized, rke_penalized };
const char* to_string(ProjectionMode mode) noexcept;
ProjectionMode parse_projection_mode(std::string_view name);

struct ProjectionConfig {
  ProjectionMode mode = ProjectionMode::vne_penalized;
  double rho = 0.0;       // entropy target in nats (vne_constrained)
  double lambda = 0.01;   // penalty weight (penalized modes)
  double eta = 0.1;       // initial primal stepsize
  double gamma = 1.0;     // dual stepsize (vne_constrained)
  int max_iters = 5000;
  double tol = 1e-8;
  double weight_floor = 1e-15;
  int refresh_every = 1;  // entropy-gradient refresh period in the VNE modes
  double lambda_ceiling = 1e6;
  int stagnation_window = 100;
  EntropyOptions entropy;

  void validate() const;
  Json to_json() const;
};

enum class ProjectionStatus { converged, max_iters, infeasible };
const char* to_string(ProjectionStatus status) noexcept;

struct ProjectionResult {
  Vector q_star;
  std::vector<double> objective_trace;
  std::vector<double> entropy_trace;  // H_VNE, or log RKE in rke mode
  std::vector<double> dual_trace;     // vne_constrained only
  ProjectionStatus status = ProjectionStatus::max_iters;
  int iterations = 0;
  double kd_to_uniform = 0.0;
  double vendi_before = 1.0, vendi_after = 1.0;
  double rke_before = 1.0, rke_after = 1.0;

  WeightVector weights() const { return WeightVector(q_star); }
  Json to_json() const;
};

/// q'_i proportional to q_i exp(-eta (g_i - gbar)), gbar the q-weighted mean
/// of g. Zero components stay zero; components that land at or below
/// `weight_floor` are set to zero and held there.
Vector eg_step(const Vector& q, const Vector& g, double eta, double weight_floor = 0.0);

/// (q - q0)^T K (q - q0) - lambda H_VNE(q).
double vendi_penalized_objective(const GramMatrix& k, double lambda, const WeightVector& q,
                                 const EntropyOptions& opts = {});
/// (q - q0)^T K (q - q0) + lambda q^T K~ q.
double rke_penalized_objective(const GramMatrix& k, const GramMatrix& k2, double lambda, const WeightVector& q);

/// Primal-dual exponentiated gradient for min KD(q, q0) s.t. H_VNE(q) >= rho.
ProjectionResult project_vne(const GramMatrix& k, double rho, const ProjectionConfig& cfg);
ProjectionResult project_vendi_penalized(const GramMatrix& k, double lambda, const ProjectionConfig& cfg);
ProjectionResult project_rke_penalized(const GramMatrix& k, double lambda, const ProjectionConfig& cfg);

/// Dispatches on cfg.mode using cfg.rho / cfg.lambda.
ProjectionResult project(const GramMatrix& k, const ProjectionConfig& cfg);

}  // namespace divkit
