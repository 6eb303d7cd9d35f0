#pragma once

#include "isocost/model.hpp"
#include "isocost/types.hpp"

#include <iosfwd>
#include <vector>

namespace isocost {

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};

// Discretization for the value-iteration baseline on a 2-state model with a
// scalar control.
struct GridSpec {
  GridAxis x1{-10.0, 10.0, 40};
  GridAxis x2{-10.0, 10.0, 40};
  GridAxis u{-50.0, 50.0, 30};
  double dt = 0.05;
  // Fraction of value retained after one time constant; the per-step
  // discount is decay^(dt / time_constant).
  double decay = 0.9;
  double time_constant = 1.0;
  double tolerance = 1e-5;
  int max_iterations = 10000;
  int workers = 1;
};

// Per-step discount factor decay^(dt / time_constant).
double dp_discount(const GridSpec& spec);

// JSON echo of a grid specification (used in reports and provenance).
std::string grid_spec_json(const GridSpec& spec);

struct ValueField {
  GridSpec spec;
  std::vector<double> value;     // row-major, index = i1 * n2 + i2
  std::vector<int> greedy;       // greedy control index per node (-1 if unknown)
  std::vector<double> greedy_u;  // greedy control value per node
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  bool boundary_clipped = false;  // some successor left the grid during the solve
  std::vector<double> residual_history;

  // Bilinear interpolation; queries outside the box are clamped onto it.
  double value_at(double x1, double x2) const;
  double greedy_control_at(double x1, double x2) const;

  // Columns: x1, x2, V, u_greedy (row-major node order).
  void write_csv(std::ostream& os) const;
};

// Jacobi value iteration for the discounted discrete-time shadow of the
// continuous problem: one RK4 step per (node, control), stage cost
// g(x, u) * dt, bilinear interpolation of the successor value. Successors
// that leave the box are clamped onto it and charged the node's worst
// per-step cost as a penalty. Runs until the sup-norm residual drops below
// spec.tolerance; hitting max_iterations first returns the field with
// converged = false instead of throwing, so callers can inspect how far it
// got.
ValueField solve_dp(const SystemModel& model, const GridSpec& spec);

// Reads a field written by write_csv, reconstructing the grid from the node
// coordinates (which must form a complete uniform lattice).
ValueField load_value_field(std::istream& is);

// Feedback law interpolating the greedy control between nodes. Requires a
// converged field unless accept_unconverged is set.
ControlLaw dp_policy(const ValueField& field, bool accept_unconverged = false);

}  // namespace isocost
