#pragma once

#include "isocost/model.hpp"
#include "isocost/types.hpp"

#include <iosfwd>
#include <vector>

namespace isocost {

// One classic fourth-order Runge-Kutta step with the control held constant
// over the step (zero-order hold). dt may be negative to integrate backward.
VectorXd rk4_step(const SystemModel& model, const VectorXd& x, const VectorXd& u, double dt);

enum class Termination {
  reached_stop_radius,  // state entered the ball ||x|| <= stop_radius
  hit_time_limit,       // integrated to t_max without entering the ball
};

const char* to_string(Termination t);

// Closed-loop rollout sampled every dt. Cost is accumulated with the
// trapezoidal rule on the running cost rate.
struct Trajectory {
  std::vector<double> t;
  std::vector<VectorXd> x;
  std::vector<VectorXd> u;  // control applied from this sample onward
  std::vector<double> cumulative_cost;
  Termination termination = Termination::hit_time_limit;

  double total_cost() const { return cumulative_cost.empty() ? 0.0 : cumulative_cost.back(); }
  double final_time() const { return t.empty() ? 0.0 : t.back(); }

  // Columns: t, x1..xn, u1..um, cumulative_cost.
  void write_csv(std::ostream& os) const;
};

// Rolls the closed loop u = law(x) forward from x0 until the state enters the
// stop ball or t exceeds t_max. A state norm above divergence_bound raises
// InstabilityError; non-finite values raise IntegrationError.
Trajectory simulate_closed_loop(const SystemModel& model, const ControlLaw& law,
                                const VectorXd& x0, double dt, double t_max, double stop_radius,
                                double divergence_bound = 1e3);

struct BackwardOptions {
  // Below this cost rate the backward time step is considered undefined.
  double g_floor = 1e-10;
  // Absolute cap on |dt| for one backward step; beyond it the step is a stall.
  double max_backward_dt = 1e3;
  // Integration substep so large backward steps do not lose accuracy.
  double substep = 0.25;
  // checked_backward_step only: the trapezoidal estimate of the cost actually
  // accrued along the step must stay within this factor of dgamma, otherwise
  // the step's cost label would be a lie and the step is marked invalid.
  double cost_ratio_cap = 2.0;
};

struct BackwardStep {
  VectorXd state;  // pre-image: integrating forward from here by |dt| returns to x
  double dt = 0.0;  // negative
};

// Moves a point backward along the flow by the time needed to accrue dgamma
// of cost at the current cost rate: dt = -dgamma / g(x, u). The control is
// held constant. Cost rates below g_floor and |dt| beyond max_backward_dt
// raise StallError.
BackwardStep backward_step(const SystemModel& model, const VectorXd& x, const VectorXd& u,
                           double dgamma, const BackwardOptions& opts = {});

struct CheckedBackwardStep {
  VectorXd state;
  double dt = 0.0;
  bool valid = false;
  // Trapezoidal estimate of accrued cost divided by dgamma (1 = exact label).
  double cost_ratio = 0.0;
};

// backward_step plus a self-consistency check: the step is valid only when
// the cost actually accrued along it matches dgamma within cost_ratio_cap.
// Numerical failures are folded into valid = false instead of throwing, so
// this is safe to call inside search objectives.
CheckedBackwardStep checked_backward_step(const SystemModel& model, const VectorXd& x,
                                          const VectorXd& u, double dgamma,
                                          const BackwardOptions& opts = {});

}  // namespace isocost
