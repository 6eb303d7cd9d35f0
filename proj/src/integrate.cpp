#include "isocost/integrate.hpp"

#include "isocost/errors.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace isocost {

VectorXd rk4_step(const SystemModel& model, const VectorXd& x, const VectorXd& u, double dt) {
  if (!std::isfinite(dt)) throw UsageError("rk4_step: dt must be finite");
  const VectorXd k1 = eval_dynamics(model, x, u);
  const VectorXd k2 = eval_dynamics(model, x + 0.5 * dt * k1, u);
  const VectorXd k3 = eval_dynamics(model, x + 0.5 * dt * k2, u);
  const VectorXd k4 = eval_dynamics(model, x + dt * k3, u);
  VectorXd out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) {
    std::ostringstream os;
    os << "rk4_step: non-finite state after step dt = " << dt << " from x = [" << x.transpose()
       << "]";
    throw IntegrationError(os.str());
  }
  return out;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::reached_stop_radius: return "reached_stop_radius";
    case Termination::hit_time_limit: return "hit_time_limit";
  }
  return "unknown";
}

void Trajectory::write_csv(std::ostream& os) const {
  const int n = x.empty() ? 0 : static_cast<int>(x.front().size());
  const int m = u.empty() ? 0 : static_cast<int>(u.front().size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= m; ++i) os << ",u" << i;
  os << ",cumulative_cost\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << format_double(t[k]);
    for (int i = 0; i < n; ++i) os << ',' << format_double(x[k](i));
    for (int i = 0; i < m; ++i) os << ',' << format_double(u[k](i));
    os << ',' << format_double(cumulative_cost[k]) << '\n';
  }
}

Trajectory simulate_closed_loop(const SystemModel& model, const ControlLaw& law,
                                const VectorXd& x0, double dt, double t_max, double stop_radius,
                                double divergence_bound) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("simulate_closed_loop: dt must be > 0");
  if (!(t_max >= 0.0)) throw UsageError("simulate_closed_loop: t_max must be >= 0");
  if (!(stop_radius >= 0.0)) {
    throw UsageError("simulate_closed_loop: stop_radius must be >= 0");
  }
  if (!law.fn) throw UsageError("simulate_closed_loop: control law is empty");

  Trajectory traj;
  VectorXd x = x0;
  double cost = 0.0;
  const long max_steps = static_cast<long>(std::ceil(t_max / dt - 1e-12));

  VectorXd u = law(x);
  traj.t.push_back(0.0);
  traj.x.push_back(x);
  traj.u.push_back(u);
  traj.cumulative_cost.push_back(cost);

  if (x.norm() <= stop_radius) {
    traj.termination = Termination::reached_stop_radius;
    return traj;
  }

  for (long k = 0; k < max_steps; ++k) {
    const double g0 = eval_cost_rate(model, x, u);
    VectorXd x_next = rk4_step(model, x, u, dt);
    const double g1 = eval_cost_rate(model, x_next, u);
    cost += 0.5 * dt * (g0 + g1);

    x = x_next;
    const double t_now = static_cast<double>(k + 1) * dt;
    if (x.norm() > divergence_bound) {
      std::ostringstream os;
      os << "closed loop diverged: ||x|| = " << x.norm() << " > " << divergence_bound
         << " at t = " << t_now << " under law '" << law.label << "'";
      throw InstabilityError(os.str());
    }

    u = law(x);
    traj.t.push_back(t_now);
    traj.x.push_back(x);
    traj.u.push_back(u);
    traj.cumulative_cost.push_back(cost);

    if (x.norm() <= stop_radius) {
      traj.termination = Termination::reached_stop_radius;
      return traj;
    }
  }
  traj.termination = Termination::hit_time_limit;
  return traj;
}

BackwardStep backward_step(const SystemModel& model, const VectorXd& x, const VectorXd& u,
                           double dgamma, const BackwardOptions& opts) {
  if (!(dgamma >= 0.0) || !std::isfinite(dgamma)) {
    throw UsageError("backward_step: dgamma must be >= 0");
  }
  if (dgamma == 0.0) {
    BackwardStep out;
    out.state = x;
    out.dt = 0.0;
    return out;
  }
  const double g = eval_cost_rate(model, x, u);
  if (g < opts.g_floor) {
    std::ostringstream os;
    os << "backward_step: cost rate " << g << " below floor " << opts.g_floor << " at x = ["
       << x.transpose() << "]; backward time step undefined";
    throw StallError(os.str());
  }
  const double dt = -dgamma / g;
  if (std::abs(dt) > opts.max_backward_dt) {
    std::ostringstream os;
    os << "backward_step: |dt| = " << std::abs(dt) << " exceeds cap " << opts.max_backward_dt;
    throw StallError(os.str());
  }

  BackwardStep out;
  out.dt = dt;
  if (std::abs(dt) <= opts.substep) {
    out.state = rk4_step(model, x, u, dt);
    return out;
  }
  // Long backward excursions are split so integration accuracy does not decay
  // with 1/g; each substep is at most opts.substep long.
  const int n_sub = static_cast<int>(std::ceil(std::abs(dt) / opts.substep));
  const double h = dt / n_sub;
  VectorXd state = x;
  for (int i = 0; i < n_sub; ++i) state = rk4_step(model, state, u, h);
  out.state = state;
  return out;
}

CheckedBackwardStep checked_backward_step(const SystemModel& model, const VectorXd& x,
                                          const VectorXd& u, double dgamma,
                                          const BackwardOptions& opts) {
  CheckedBackwardStep out;
  try {
    const BackwardStep step = backward_step(model, x, u, dgamma, opts);
    const double g_start = eval_cost_rate(model, x, u);
    const double g_end = eval_cost_rate(model, step.state, u);
    const double accrued = 0.5 * std::abs(step.dt) * (g_start + g_end);
    const double ratio = accrued / dgamma;
    out.state = step.state;
    out.dt = step.dt;
    out.cost_ratio = ratio;
    out.valid = std::isfinite(ratio) && ratio <= opts.cost_ratio_cap &&
                ratio >= 1.0 / opts.cost_ratio_cap;
  } catch (const NumericalError&) {
    out.valid = false;
  }
  return out;
}

}  // namespace isocost
