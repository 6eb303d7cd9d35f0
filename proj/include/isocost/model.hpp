#pragma once

#include "isocost/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace isocost {

using DynamicsFn = std::function<VectorXd(const VectorXd&, const VectorXd&)>;
using CostRateFn = std::function<double(const VectorXd&, const VectorXd&)>;

// Continuous-time control-affine-or-not system dx/dt = f(x, u) with a running
// cost rate g(x, u) >= 0 that vanishes only at the equilibrium (0, 0).
struct SystemModel {
  std::string label;
  int state_dim = 0;
  int control_dim = 0;
  DynamicsFn dynamics;
  CostRateFn cost_rate;
  // Optional box the solver may assume the interesting states live in.
  std::optional<std::vector<Interval>> state_domain;
};

// Feedback law u = c(x).
struct ControlLaw {
  std::string label;
  std::function<VectorXd(const VectorXd&)> fn;
  VectorXd operator()(const VectorXd& x) const { return fn(x); }
};

// Checked evaluation: dimension mismatches raise UsageError, non-finite
// dynamics raise ModelEvaluationError, negative or non-finite cost rates
// raise ModelEvaluationError (a broken cost definition poisons everything
// downstream, so fail loudly at the point of evaluation).
VectorXd eval_dynamics(const SystemModel& model, const VectorXd& x, const VectorXd& u);
double eval_cost_rate(const SystemModel& model, const VectorXd& x, const VectorXd& u);

// Benchmark plant:  x1' = x2,  x2' = u - x1^2,
// g = x1^2 + sin^2(x2) + cos^2(x2) (u - x1^2)^2.
SystemModel make_system_a();

// Inverted pendulum about the upright equilibrium, in error coordinates
// e1 = angle - pi, e2 = angular rate (m = 1, l = 1, b = 0.5, g = 9.81):
//   e1' = e2,  e2' = 9.81 sin(e1 + pi) - 0.5 e2 - u,   g = e1^2 + e2^2 + u^2.
SystemModel make_pendulum();

// z1' = z2, z2' = v, g = z1^2 + z2^2 + v^2. Linear-quadratic reference model.
SystemModel make_double_integrator();

// Change of variables that turns make_system_a() into a double integrator
// wherever cos(x2) != 0:  z = (x1, sin x2),  v = cos(x2) (u - x1^2).
Vector2d system_a_forward_state(const VectorXd& x);
double system_a_forward_control(const VectorXd& x, double u);

struct InverseControl {
  double u = 0.0;
  // |cos(x2)| fell below the caution threshold (1e-2); u is still usable but
  // amplified, callers may prefer to clamp or discard.
  bool near_singular = false;
};

// Recovers u from v at state x: u = v / cos(x2) + x1^2. Throws
// SingularityError when |cos(x2)| < floor (default 1e-6).
InverseControl system_a_inverse_control(const VectorXd& x, double v, double cos_floor = 1e-6,
                                        double caution_threshold = 1e-2);

// Wraps a linear feedback v = -K z designed for the transformed model into a
// control law for make_system_a() via the inverse transform above.
ControlLaw system_a_law_from_linear_gain(const Eigen::RowVectorXd& K, double cos_floor = 1e-6);

// Registry of models addressable by name from the CLI / harness. The three
// built-ins above are pre-registered as "system_a", "pendulum",
// "double_integrator". Unknown names raise UsageError; so do duplicates.
SystemModel get_model(const std::string& name);
void register_model(const SystemModel& model);
std::vector<std::string> registered_models();

}  // namespace isocost
