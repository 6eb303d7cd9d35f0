#pragma once

#include "isocost/integrate.hpp"
#include "isocost/model.hpp"
#include "isocost/types.hpp"

#include <cstdint>
#include <vector>

namespace isocost {

// One sample travelling with an isocost level set. The control is the one
// that was applied over the most recent backward step (zero for fresh
// agents). Dead agents keep their last trustworthy state and stop moving.
struct FrontAgent {
  int id = 0;
  VectorXd state;
  VectorXd control;
  double gamma = 0.0;
  bool alive = true;
};

// Level set {x : optimal cost-to-origin = gamma}, sampled by agents.
struct IsoCostFront {
  double gamma = 0.0;
  int generation = 0;
  std::vector<FrontAgent> agents;

  int n_alive() const;
};

// Agents on the circle of radius r0 at uniformly random angles (seeded).
// Requires n_agents >= 3, r0 > 0, gamma0 > 0.
IsoCostFront init_front_random(int n_agents, double r0, double gamma0, std::uint64_t seed,
                               int control_dim = 1);

// Agents equally spaced (in angle) on the quadratic level set {x'Px = gamma}.
// P must be 2x2 symmetric positive definite.
IsoCostFront front_on_quadratic_level(const MatrixXd& P, double gamma, int n_agents,
                                      int control_dim = 1);

// Places the initial front on the level set of the local LQR value function
// x'Px = gamma0 and stamps each agent with its LQR control -Kx. Near the
// origin the LQR value function approximates the true cost-to-go, so this
// start is already close to a true isocost set.
IsoCostFront init_front_lqr(const SystemModel& model, int n_agents, double gamma0,
                            double fd_eps = 1e-5, double gamma_min = 1e-12);

struct PropagateOptions {
  BackwardOptions backward;
  int workers = 1;
  // A front with fewer than this many living agents cannot be polygonized
  // and is reported as degenerate.
  int min_alive = 3;
};

// Pushes every living agent one backward step under u = law(state). Agents
// whose step is invalid (stalled, runaway, mislabelled cost) die in place.
// Returns the next front at gamma + dgamma. dgamma = 0 returns the input
// unchanged.
IsoCostFront propagate_front(const SystemModel& model, const ControlLaw& law,
                             const IsoCostFront& front, double dgamma,
                             const PropagateOptions& opts = {});

// Root-mean-square norm of the living agents.
double front_radius(const IsoCostFront& front);

// Area enclosed by the polygon through the living agents, ordered by angle
// around the origin (shoelace formula). Duplicate angles keep the agent of
// larger norm. Fewer than 3 distinct directions raises GeometryError.
double front_hypervolume(const IsoCostFront& front);

struct SurroundVerdict {
  bool surrounds = false;
  std::vector<int> violators;  // ids of inner agents outside the outer polygon
};

// True when every living agent of `inner` lies inside (or on, within a
// tolerance of 1e-6 times the outer radius) the polygon through the living
// agents of `outer`. Fronts are star-shaped around the origin here, so
// inclusion is tested radially: a point is inside iff its norm does not
// exceed the polygon boundary along its own direction. With
// require_equal_gamma the two fronts must carry the same gamma within 1e-9;
// disable it to compare fronts across levels or across control laws.
SurroundVerdict surrounds(const IsoCostFront& outer, const IsoCostFront& inner,
                          bool require_equal_gamma = true);

}  // namespace isocost
