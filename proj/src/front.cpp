#include "isocost/front.hpp"

#include "isocost/errors.hpp"
#include "isocost/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace isocost {

namespace {

constexpr double kAngleDedupEps = 1e-12;

struct PolyVertex {
  double angle;
  Vector2d p;
};

// Living agents sorted by angle around the origin, duplicate directions
// collapsed to the outermost agent. The fronts produced by this solver are
// star-shaped around the origin, so this ordering traces the boundary. With
// require_polygon the result must span at least 3 distinct directions.
std::vector<PolyVertex> polygonize(const IsoCostFront& front, bool require_polygon = true) {
  std::vector<PolyVertex> verts;
  for (const auto& a : front.agents) {
    if (!a.alive) continue;
    if (a.state.size() != 2) throw UsageError("front geometry requires 2-D states");
    const double n = a.state.norm();
    if (n == 0.0) continue;  // the origin has no direction
    verts.push_back({std::atan2(a.state(1), a.state(0)), Vector2d(a.state(0), a.state(1))});
  }
  std::sort(verts.begin(), verts.end(), [](const PolyVertex& a, const PolyVertex& b) {
    if (a.angle != b.angle) return a.angle < b.angle;
    return a.p.squaredNorm() < b.p.squaredNorm();
  });
  std::vector<PolyVertex> dedup;
  for (const auto& v : verts) {
    if (!dedup.empty() && std::abs(v.angle - dedup.back().angle) < kAngleDedupEps) {
      if (v.p.squaredNorm() > dedup.back().p.squaredNorm()) dedup.back() = v;
    } else {
      dedup.push_back(v);
    }
  }
  // Wrap-around duplicate (angles -pi and pi describe the same direction).
  if (dedup.size() >= 2 &&
      std::abs((dedup.back().angle - 2.0 * M_PI) - dedup.front().angle) < kAngleDedupEps) {
    if (dedup.back().p.squaredNorm() > dedup.front().p.squaredNorm()) {
      dedup.front() = dedup.back();
      dedup.front().angle -= 2.0 * M_PI;
    }
    dedup.pop_back();
  }
  if (require_polygon && dedup.size() < 3) {
    std::ostringstream os;
    os << "front spans only " << dedup.size() << " distinct directions; need at least 3";
    throw GeometryError(os.str());
  }
  return dedup;
}

// Radius of the polygon boundary along direction `angle`: intersect the ray
// from the origin with the edge whose vertex angles bracket it.
double boundary_radius(const std::vector<PolyVertex>& poly, double angle) {
  const std::size_t n = poly.size();
  // poly is sorted by angle in [-pi, pi]; find first vertex with angle > query
  std::size_t hi = 0;
  while (hi < n && poly[hi].angle <= angle) ++hi;
  const std::size_t i_next = hi % n;                // first vertex ahead of the ray
  const std::size_t i_prev = (i_next + n - 1) % n;  // vertex behind the ray
  const Vector2d a = poly[i_prev].p;
  const Vector2d b = poly[i_next].p;
  const Vector2d d(std::cos(angle), std::sin(angle));
  // Solve a + t (b - a) = s d for t, s.
  const double denom = d(0) * (a(1) - b(1)) - d(1) * (a(0) - b(0));
  if (std::abs(denom) < 1e-300) {
    // Edge is parallel to the ray (or degenerate); fall back to the nearer
    // vertex radius, which is exact when the ray passes through a vertex.
    return std::min(a.norm(), b.norm());
  }
  const double s = (a(0) * (a(1) - b(1)) - a(1) * (a(0) - b(0))) / denom;
  if (s <= 0.0) {
    // The bracketing edge lies behind the origin: the polygon is not
    // star-shaped along this direction.
    throw GeometryError("front polygon is not star-shaped around the origin");
  }
  return s;
}

}  // namespace

int IsoCostFront::n_alive() const {
  int n = 0;
  for (const auto& a : agents) n += a.alive ? 1 : 0;
  return n;
}

IsoCostFront init_front_random(int n_agents, double r0, double gamma0, std::uint64_t seed,
                               int control_dim) {
  if (n_agents < 3) throw UsageError("init_front_random: need at least 3 agents");
  if (!(r0 > 0.0)) throw UsageError("init_front_random: r0 must be > 0");
  if (!(gamma0 > 0.0)) throw UsageError("init_front_random: gamma0 must be > 0");
  if (control_dim < 1) throw UsageError("init_front_random: control_dim must be >= 1");

  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  IsoCostFront front;
  front.gamma = gamma0;
  front.generation = 0;
  front.agents.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const double th = angle(rng);
    FrontAgent& a = front.agents[i];
    a.id = i;
    a.state = VectorXd(2);
    a.state << r0 * std::cos(th), r0 * std::sin(th);
    a.control = VectorXd::Zero(control_dim);
    a.gamma = gamma0;
    a.alive = true;
  }
  return front;
}

IsoCostFront front_on_quadratic_level(const MatrixXd& P, double gamma, int n_agents,
                                      int control_dim) {
  if (P.rows() != 2 || P.cols() != 2) {
    throw UsageError("front_on_quadratic_level: P must be 2x2");
  }
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw UsageError("front_on_quadratic_level: P must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw UsageError("front_on_quadratic_level: P must be positive definite");
  }
  if (!(gamma > 0.0)) throw UsageError("front_on_quadratic_level: gamma must be > 0");
  if (n_agents < 3) throw UsageError("front_on_quadratic_level: need at least 3 agents");

  IsoCostFront front;
  front.gamma = gamma;
  front.generation = 0;
  front.agents.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const double th = 2.0 * M_PI * i / n_agents;
    const Vector2d d(std::cos(th), std::sin(th));
    const double scale = std::sqrt(gamma / (d.transpose() * P * d)(0));
    FrontAgent& a = front.agents[i];
    a.id = i;
    a.state = scale * d;
    a.control = VectorXd::Zero(control_dim);
    a.gamma = gamma;
    a.alive = true;
  }
  return front;
}

IsoCostFront init_front_lqr(const SystemModel& model, int n_agents, double gamma0, double fd_eps,
                            double gamma_min) {
  if (gamma0 < gamma_min) {
    std::ostringstream os;
    os << "init_front_lqr: gamma0 = " << gamma0 << " below minimum " << gamma_min;
    throw UsageError(os.str());
  }
  if (model.state_dim != 2) throw UsageError("init_front_lqr: requires a 2-state model");
  const LqrDesign d = design_lqr(model, fd_eps);
  IsoCostFront front = front_on_quadratic_level(d.P, gamma0, n_agents, model.control_dim);
  for (auto& a : front.agents) a.control = -(d.K * a.state);
  return front;
}

IsoCostFront propagate_front(const SystemModel& model, const ControlLaw& law,
                             const IsoCostFront& front, double dgamma,
                             const PropagateOptions& opts) {
  if (dgamma < 0.0 || !std::isfinite(dgamma)) {
    throw UsageError("propagate_front: dgamma must be >= 0");
  }
  if (!law.fn) throw UsageError("propagate_front: control law is empty");
  if (dgamma == 0.0) return front;

  IsoCostFront next = front;
  next.gamma = front.gamma + dgamma;
  next.generation = front.generation + 1;

  const int n = static_cast<int>(next.agents.size());
  parallel_for(n, opts.workers, [&](int i) {
    FrontAgent& a = next.agents[i];
    if (!a.alive) return;
    VectorXd u;
    try {
      u = law(a.state);
    } catch (const NumericalError&) {
      a.alive = false;
      return;
    }
    const CheckedBackwardStep step = checked_backward_step(model, a.state, u, dgamma,
                                                            opts.backward);
    if (!step.valid) {
      a.alive = false;
      return;
    }
    a.state = step.state;
    a.control = u;
    a.gamma = next.gamma;
  });

  if (next.n_alive() < opts.min_alive) {
    std::ostringstream os;
    os << "front degenerated: " << next.n_alive() << " living agents (< " << opts.min_alive
       << ") at gamma = " << next.gamma;
    throw DegenerateFrontError(os.str());
  }
  return next;
}

double front_radius(const IsoCostFront& front) {
  double sum = 0.0;
  int n = 0;
  for (const auto& a : front.agents) {
    if (!a.alive) continue;
    sum += a.state.squaredNorm();
    ++n;
  }
  if (n == 0) throw DegenerateFrontError("front_radius: no living agents");
  return std::sqrt(sum / n);
}

double front_hypervolume(const IsoCostFront& front) {
  if (front.n_alive() < 3) throw UsageError("front_hypervolume: need at least 3 living agents");
  // Collinear (or otherwise direction-poor) agents form a flat polygon; its
  // area is simply 0.
  const auto poly = polygonize(front, /*require_polygon=*/false);
  if (poly.size() < 3) return 0.0;
  double twice_area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vector2d& p = poly[i].p;
    const Vector2d& q = poly[(i + 1) % poly.size()].p;
    twice_area += p(0) * q(1) - p(1) * q(0);
  }
  return 0.5 * std::abs(twice_area);
}

SurroundVerdict surrounds(const IsoCostFront& outer, const IsoCostFront& inner,
                          bool require_equal_gamma) {
  if (require_equal_gamma && std::abs(outer.gamma - inner.gamma) > 1e-9) {
    std::ostringstream os;
    os << "surrounds: fronts carry different cost levels (" << outer.gamma << " vs "
       << inner.gamma << "); pass require_equal_gamma = false to compare anyway";
    throw UsageError(os.str());
  }
  const auto poly = polygonize(outer);
  const double tol = 1e-6 * front_radius(outer);

  SurroundVerdict verdict;
  verdict.surrounds = true;
  for (const auto& a : inner.agents) {
    if (!a.alive) continue;
    if (a.state.size() != 2) throw UsageError("front geometry requires 2-D states");
    const double r = a.state.norm();
    if (r <= tol) continue;  // at the origin, inside by definition
    const double angle = std::atan2(a.state(1), a.state(0));
    const double rb = boundary_radius(poly, angle);
    if (r > rb + tol) {
      verdict.surrounds = false;
      verdict.violators.push_back(a.id);
    }
  }
  return verdict;
}

}  // namespace isocost
