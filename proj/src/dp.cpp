#include "isocost/dp.hpp"

#include "isocost/errors.hpp"
#include "isocost/integrate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

namespace isocost {

namespace {

std::vector<double> linspace(const GridAxis& ax) {
  std::vector<double> v(ax.points);
  if (ax.points == 1) {
    v[0] = 0.5 * (ax.lo + ax.hi);
    return v;
  }
  const double h = (ax.hi - ax.lo) / (ax.points - 1);
  for (int i = 0; i < ax.points; ++i) v[i] = ax.lo + h * i;
  v.back() = ax.hi;  // exact endpoint
  return v;
}

void validate(const SystemModel& model, const GridSpec& spec) {
  if (model.state_dim != 2 || model.control_dim != 1) {
    throw UsageError("solve_dp: baseline handles 2-state models with a scalar control");
  }
  auto check_state_axis = [](const GridAxis& ax, const char* name) {
    if (ax.points < 2 || !(ax.lo < ax.hi)) {
      throw UsageError(std::string("solve_dp: axis ") + name +
                       " needs lo < hi and at least 2 points");
    }
  };
  check_state_axis(spec.x1, "x1");
  check_state_axis(spec.x2, "x2");
  if (spec.u.points < 1 || !(spec.u.lo <= spec.u.hi)) {
    throw UsageError("solve_dp: control axis needs lo <= hi and at least 1 point");
  }
  if (!(spec.dt > 0.0)) throw UsageError("solve_dp: dt must be > 0");
  if (!(spec.decay > 0.0 && spec.decay < 1.0)) {
    throw UsageError("solve_dp: decay must lie in (0, 1)");
  }
  if (!(spec.time_constant > 0.0)) throw UsageError("solve_dp: time_constant must be > 0");
  if (!(spec.tolerance > 0.0)) throw UsageError("solve_dp: tolerance must be > 0");
  if (spec.max_iterations < 1) throw UsageError("solve_dp: max_iterations must be >= 1");
  if (spec.workers < 1) throw UsageError("solve_dp: workers must be >= 1");
}

struct Bilerp {
  // Precomputed axis data for clamped bilinear interpolation.
  double lo1, h1, lo2, h2;
  int n1, n2;

  double operator()(const std::vector<double>& field, double x1, double x2) const {
    double f1 = (x1 - lo1) / h1;
    double f2 = (x2 - lo2) / h2;
    f1 = std::clamp(f1, 0.0, static_cast<double>(n1 - 1));
    f2 = std::clamp(f2, 0.0, static_cast<double>(n2 - 1));
    int i1 = std::min(static_cast<int>(f1), n1 - 2);
    int i2 = std::min(static_cast<int>(f2), n2 - 2);
    const double a = f1 - i1;
    const double b = f2 - i2;
    const double v00 = field[i1 * n2 + i2];
    const double v01 = field[i1 * n2 + i2 + 1];
    const double v10 = field[(i1 + 1) * n2 + i2];
    const double v11 = field[(i1 + 1) * n2 + i2 + 1];
    return (1.0 - a) * ((1.0 - b) * v00 + b * v01) + a * ((1.0 - b) * v10 + b * v11);
  }
};

Bilerp make_bilerp(const GridSpec& spec) {
  Bilerp bl;
  bl.lo1 = spec.x1.lo;
  bl.h1 = (spec.x1.hi - spec.x1.lo) / (spec.x1.points - 1);
  bl.lo2 = spec.x2.lo;
  bl.h2 = (spec.x2.hi - spec.x2.lo) / (spec.x2.points - 1);
  bl.n1 = spec.x1.points;
  bl.n2 = spec.x2.points;
  return bl;
}

}  // namespace

double dp_discount(const GridSpec& spec) {
  return std::pow(spec.decay, spec.dt / spec.time_constant);
}

std::string grid_spec_json(const GridSpec& spec) {
  nlohmann::ordered_json j;
  j["x1"] = {{"min", spec.x1.lo}, {"max", spec.x1.hi}, {"points", spec.x1.points}};
  j["x2"] = {{"min", spec.x2.lo}, {"max", spec.x2.hi}, {"points", spec.x2.points}};
  j["u"] = {{"min", spec.u.lo}, {"max", spec.u.hi}, {"points", spec.u.points}};
  j["dt"] = spec.dt;
  j["decay"] = spec.decay;
  j["time_constant"] = spec.time_constant;
  j["tolerance"] = spec.tolerance;
  j["max_iterations"] = spec.max_iterations;
  // Worker count deliberately unechoed: it cannot change the result.
  return j.dump();
}

double ValueField::value_at(double x1, double x2) const {
  return make_bilerp(spec)(value, x1, x2);
}

double ValueField::greedy_control_at(double x1, double x2) const {
  return make_bilerp(spec)(greedy_u, x1, x2);
}

void ValueField::write_csv(std::ostream& os) const {
  const auto xs1 = linspace(spec.x1);
  const auto xs2 = linspace(spec.x2);
  os << "x1,x2,V,u_greedy\n";
  for (int i = 0; i < spec.x1.points; ++i) {
    for (int j = 0; j < spec.x2.points; ++j) {
      const int at = i * spec.x2.points + j;
      os << format_double(xs1[i]) << ',' << format_double(xs2[j]) << ','
         << format_double(value[at]) << ',' << format_double(greedy_u[at]) << '\n';
    }
  }
}

ValueField solve_dp(const SystemModel& model, const GridSpec& spec) {
  validate(model, spec);
  const auto xs1 = linspace(spec.x1);
  const auto xs2 = linspace(spec.x2);
  const auto us = linspace(spec.u);
  const int n1 = spec.x1.points;
  const int n2 = spec.x2.points;
  const int nu = static_cast<int>(us.size());
  const int n_nodes = n1 * n2;
  const double beta = dp_discount(spec);

  // Successor states, stage costs and clip flags are control-law independent,
  // so compute them once up front.
  std::vector<double> succ1(static_cast<std::size_t>(n_nodes) * nu);
  std::vector<double> succ2(succ1.size());
  std::vector<double> stage(succ1.size());
  std::vector<char> clipped(succ1.size(), 0);

  parallel_for(n1, spec.workers, [&](int i) {
    VectorXd x(2), u(1);
    std::vector<double> g_row(nu);
    for (int j = 0; j < n2; ++j) {
      const std::size_t base = (static_cast<std::size_t>(i) * n2 + j) * nu;
      double g_max = 0.0;
      for (int k = 0; k < nu; ++k) {
        x << xs1[i], xs2[j];
        u << us[k];
        g_row[k] = eval_cost_rate(model, x, u);
        g_max = std::max(g_max, g_row[k]);
        const VectorXd xn = rk4_step(model, x, u, spec.dt);
        const double s1 = xn(0);
        const double s2 = xn(1);
        const double c1 = std::clamp(s1, spec.x1.lo, spec.x1.hi);
        const double c2 = std::clamp(s2, spec.x2.lo, spec.x2.hi);
        if (c1 != s1 || c2 != s2) clipped[base + k] = 1;
        succ1[base + k] = c1;
        succ2[base + k] = c2;
      }
      // Escaping the box costs one step at the node's worst cost rate on top
      // of the regular stage cost, so leaving is never the cheap option.
      const double penalty = g_max * spec.dt;
      for (int k = 0; k < nu; ++k) {
        stage[base + k] = g_row[k] * spec.dt + (clipped[base + k] ? penalty : 0.0);
      }
    }
  });

  ValueField field;
  field.spec = spec;
  field.value.assign(n_nodes, 0.0);
  field.greedy.assign(n_nodes, -1);
  field.greedy_u.assign(n_nodes, 0.0);
  field.boundary_clipped =
      std::any_of(clipped.begin(), clipped.end(), [](char c) { return c != 0; });

  const Bilerp bilerp = make_bilerp(spec);
  std::vector<double> next(n_nodes, 0.0);
  std::vector<double> row_residual(n1, 0.0);

  for (int it = 1; it <= spec.max_iterations; ++it) {
    parallel_for(n1, spec.workers, [&](int i) {
      double worst = 0.0;
      for (int j = 0; j < n2; ++j) {
        const int node = i * n2 + j;
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (int k = 0; k < nu; ++k) {
          const std::size_t at = static_cast<std::size_t>(node) * nu + k;
          const double q = stage[at] + beta * bilerp(field.value, succ1[at], succ2[at]);
          if (q < best) {
            best = q;
            best_k = k;
          }
        }
        next[node] = best;
        field.greedy[node] = best_k;
        field.greedy_u[node] = us[best_k];
        worst = std::max(worst, std::abs(best - field.value[node]));
      }
      row_residual[i] = worst;
    });
    field.value.swap(next);
    field.iterations = it;
    field.final_residual = *std::max_element(row_residual.begin(), row_residual.end());
    field.residual_history.push_back(field.final_residual);
    if (field.final_residual <= spec.tolerance) {
      field.converged = true;
      break;
    }
  }
  return field;
}

ValueField load_value_field(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("load_value_field: empty input");
  if (line != "x1,x2,V,u_greedy") {
    throw UsageError("load_value_field: unexpected header '" + line + "'");
  }
  std::vector<double> x1s, x2s, vs, us;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double a, b, v, u;
    char c1, c2, c3;
    if (!(row >> a >> c1 >> b >> c2 >> v >> c3 >> u) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw UsageError("load_value_field: malformed row '" + line + "'");
    }
    x1s.push_back(a);
    x2s.push_back(b);
    vs.push_back(v);
    us.push_back(u);
  }
  if (vs.empty()) throw UsageError("load_value_field: no rows");

  auto unique_sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const std::vector<double> ax1 = unique_sorted(x1s);
  const std::vector<double> ax2 = unique_sorted(x2s);
  const int n1 = static_cast<int>(ax1.size());
  const int n2 = static_cast<int>(ax2.size());
  if (n1 < 2 || n2 < 2 || static_cast<std::size_t>(n1) * n2 != vs.size()) {
    throw UsageError("load_value_field: nodes do not form a complete 2-D lattice");
  }
  auto check_uniform = [](const std::vector<double>& ax, const char* name) {
    const double h = (ax.back() - ax.front()) / (ax.size() - 1);
    for (std::size_t i = 0; i < ax.size(); ++i) {
      if (std::abs(ax[i] - (ax.front() + h * i)) > 1e-9 * std::max(1.0, std::abs(ax.back()))) {
        throw UsageError(std::string("load_value_field: axis ") + name + " is not uniform");
      }
    }
  };
  check_uniform(ax1, "x1");
  check_uniform(ax2, "x2");

  ValueField field;
  field.spec.x1 = {ax1.front(), ax1.back(), n1};
  field.spec.x2 = {ax2.front(), ax2.back(), n2};
  field.spec.u = {0.0, 0.0, 0};  // not recorded in the file
  field.value.assign(static_cast<std::size_t>(n1) * n2, 0.0);
  field.greedy.assign(field.value.size(), -1);
  field.greedy_u.assign(field.value.size(), 0.0);
  field.converged = true;  // files are written from finished solves
  field.iterations = -1;

  auto index_of = [](const std::vector<double>& ax, double v) {
    const auto it = std::lower_bound(ax.begin(), ax.end(), v - 1e-12);
    return static_cast<int>(it - ax.begin());
  };
  std::vector<char> seen(field.value.size(), 0);
  for (std::size_t r = 0; r < vs.size(); ++r) {
    const int i = index_of(ax1, x1s[r]);
    const int j = index_of(ax2, x2s[r]);
    const int node = i * n2 + j;
    if (seen[node]) throw UsageError("load_value_field: duplicate node in input");
    seen[node] = 1;
    field.value[node] = vs[r];
    field.greedy_u[node] = us[r];
  }
  return field;
}

ControlLaw dp_policy(const ValueField& field, bool accept_unconverged) {
  if (!field.converged && !accept_unconverged) {
    throw UsageError(
        "dp_policy: value iteration did not converge; pass accept_unconverged to use it anyway");
  }
  auto shared = std::make_shared<ValueField>(field);
  ControlLaw law;
  law.label = "dp_grid";
  law.fn = [shared](const VectorXd& x) {
    if (x.size() != 2) throw UsageError("dp_policy: expected a 2-vector state");
    VectorXd u(1);
    u(0) = shared->greedy_control_at(x(0), x(1));
    return u;
  };
  return law;
}

}  // namespace isocost
