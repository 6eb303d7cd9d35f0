#include "isocost/policy.hpp"

#include "isocost/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace isocost {

namespace {

constexpr double kExactHit = 1e-10;

void build_index(PolicyTable& table) {
  const int n = static_cast<int>(table.states.size());
  double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1;
  double lo2 = lo1, hi2 = -lo1;
  for (const auto& s : table.states) {
    lo1 = std::min(lo1, s(0));
    hi1 = std::max(hi1, s(0));
    lo2 = std::min(lo2, s(1));
    hi2 = std::max(hi2, s(1));
  }
  const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
  table.grid1 = side;
  table.grid2 = side;
  table.bbox_lo1 = lo1;
  table.bbox_lo2 = lo2;
  table.cell1 = std::max((hi1 - lo1) / side, 1e-300);
  table.cell2 = std::max((hi2 - lo2) / side, 1e-300);
  table.buckets.assign(static_cast<std::size_t>(side) * side, {});
  for (int i = 0; i < n; ++i) {
    const auto& s = table.states[i];
    const int c1 = std::clamp(static_cast<int>((s(0) - lo1) / table.cell1), 0, side - 1);
    const int c2 = std::clamp(static_cast<int>((s(1) - lo2) / table.cell2), 0, side - 1);
    table.buckets[static_cast<std::size_t>(c1) * side + c2].push_back(i);
  }
}

void check_not_degenerate(const PolicyTable& table) {
  const int n = static_cast<int>(table.states.size());
  if (n < 3) {
    throw GeometryError("policy table needs at least 3 distinct states for interpolation");
  }
  Vector2d mean = Vector2d::Zero();
  for (const auto& s : table.states) mean += s;
  mean /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& s : table.states) {
    const Vector2d d = s - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (hi <= 0.0 || lo / hi < 1e-24) {
    throw GeometryError(
        "policy table states are collinear; interpolation needs samples spanning the plane");
  }
}

// k nearest sample indices by squared distance, ties broken by index.
std::vector<int> nearest(const PolicyTable& table, const Vector2d& q, int k) {
  const int n = static_cast<int>(table.states.size());
  k = std::min(k, n);
  const int side = table.grid1;
  const int q1 = std::clamp(static_cast<int>((q(0) - table.bbox_lo1) / table.cell1), 0, side - 1);
  const int q2 = std::clamp(static_cast<int>((q(1) - table.bbox_lo2) / table.cell2), 0, side - 1);

  std::vector<std::pair<double, int>> cand;
  const double min_cell = std::min(table.cell1, table.cell2);
  for (int ring = 0; ring < 2 * side; ++ring) {
    const int lo1 = q1 - ring, hi1 = q1 + ring;
    const int lo2 = q2 - ring, hi2 = q2 + ring;
    for (int a = lo1; a <= hi1; ++a) {
      if (a < 0 || a >= side) continue;
      for (int b = lo2; b <= hi2; ++b) {
        if (b < 0 || b >= side) continue;
        if (ring > 0 && a != lo1 && a != hi1 && b != lo2 && b != hi2) continue;  // interior done
        for (int idx : table.buckets[static_cast<std::size_t>(a) * side + b]) {
          cand.emplace_back((table.states[idx] - q).squaredNorm(), idx);
        }
      }
    }
    if (static_cast<int>(cand.size()) >= k) {
      std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
      const double dk = std::sqrt(cand[k - 1].first);
      // Any sample outside the searched rings is at least (ring * min_cell)
      // away; once that exceeds the kth distance the set is final.
      if (static_cast<double>(ring) * min_cell >= dk) break;
    }
  }
  std::sort(cand.begin(), cand.end());
  cand.resize(std::min<std::size_t>(cand.size(), k));
  std::vector<int> out;
  out.reserve(cand.size());
  for (const auto& [d, i] : cand) out.push_back(i);
  return out;
}

bool barycentric(const Vector2d& a, const Vector2d& b, const Vector2d& c, const Vector2d& q,
                 double* w) {
  const double det = (b(0) - a(0)) * (c(1) - a(1)) - (c(0) - a(0)) * (b(1) - a(1));
  if (std::abs(det) < 1e-14) return false;  // degenerate triangle
  const double w1 = ((b(0) - q(0)) * (c(1) - q(1)) - (c(0) - q(0)) * (b(1) - q(1))) / det;
  const double w2 = ((c(0) - q(0)) * (a(1) - q(1)) - (a(0) - q(0)) * (c(1) - q(1))) / det;
  const double w3 = 1.0 - w1 - w2;
  const double tol = -1e-10;
  if (w1 < tol || w2 < tol || w3 < tol) return false;
  w[0] = std::max(w1, 0.0);
  w[1] = std::max(w2, 0.0);
  w[2] = std::max(w3, 0.0);
  const double sum = w[0] + w[1] + w[2];
  w[0] /= sum;
  w[1] /= sum;
  w[2] /= sum;
  return true;
}

}  // namespace

std::shared_ptr<PolicyTable> build_policy_table(const PolicySolution& solution) {
  auto table = std::make_shared<PolicyTable>();
  table->model = solution.provenance.model;

  // Exact duplicates keep the lowest cost level: if the solver labelled the
  // same state twice, the cheaper label is the tighter optimality estimate.
  std::map<std::pair<double, double>, int> seen;
  for (const auto& s : solution.samples) {
    if (s.state.size() != 2) throw UsageError("policy samples must have 2-D states");
    const std::pair<double, double> key{s.state(0), s.state(1)};
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, static_cast<int>(table->states.size()));
      table->states.emplace_back(s.state(0), s.state(1));
      table->controls.push_back(s.control);
      table->gammas.push_back(s.gamma);
    } else if (s.gamma < table->gammas[it->second]) {
      table->controls[it->second] = s.control;
      table->gammas[it->second] = s.gamma;
    }
  }
  check_not_degenerate(*table);
  build_index(*table);
  return table;
}

VectorXd policy_query(const PolicyTable& table, const VectorXd& x, int k_candidates) {
  if (x.size() != 2) throw UsageError("policy_query: expected a 2-vector state");
  if (k_candidates < 3) throw UsageError("policy_query: k_candidates must be >= 3");
  if (table.states.empty()) throw UsageError("policy_query: table is empty");
  const Vector2d q(x(0), x(1));

  const std::vector<int> near = nearest(table, q, k_candidates);
  if ((table.states[near[0]] - q).norm() <= kExactHit) {
    return table.controls[near[0]];
  }

  const int k = static_cast<int>(near.size());
  double w[3];
  for (int i = 0; i < k - 2; ++i) {
    for (int j = i + 1; j < k - 1; ++j) {
      for (int l = j + 1; l < k; ++l) {
        if (barycentric(table.states[near[i]], table.states[near[j]], table.states[near[l]], q,
                        w)) {
          return w[0] * table.controls[near[i]] + w[1] * table.controls[near[j]] +
                 w[2] * table.controls[near[l]];
        }
      }
    }
  }

  // No triangle among the neighbours contains the query (outside the sampled
  // band or on its rim): inverse-squared-distance blend of the neighbours.
  table.fallback_count.fetch_add(1, std::memory_order_relaxed);
  double wsum = 0.0;
  VectorXd u = VectorXd::Zero(table.controls[near[0]].size());
  for (int idx : near) {
    const double d2 = std::max((table.states[idx] - q).squaredNorm(), 1e-300);
    const double wi = 1.0 / d2;
    wsum += wi;
    u += wi * table.controls[idx];
  }
  return u / wsum;
}

ControlLaw policy_law(std::shared_ptr<const PolicyTable> table, int k_candidates) {
  if (!table) throw UsageError("policy_law: table is null");
  ControlLaw law;
  law.label = "policy:" + table->model;
  law.fn = [table, k_candidates](const VectorXd& x) {
    return policy_query(*table, x, k_candidates);
  };
  return law;
}

void write_policy_csv(const PolicyTable& table, std::ostream& os) {
  os << "x1,x2,gamma,u\n";
  for (std::size_t i = 0; i < table.states.size(); ++i) {
    if (table.controls[i].size() != 1) {
      throw UsageError("write_policy_csv: only scalar-control tables serialize to this format");
    }
    os << format_double(table.states[i](0)) << ',' << format_double(table.states[i](1)) << ','
       << format_double(table.gammas[i]) << ',' << format_double(table.controls[i](0)) << '\n';
  }
}

std::string policy_metadata_json(const PolicyTable& table) {
  nlohmann::ordered_json j;
  j["model"] = table.model;
  j["n_samples"] = table.states.size();
  double glo = std::numeric_limits<double>::infinity(), ghi = -glo;
  for (double g : table.gammas) {
    glo = std::min(glo, g);
    ghi = std::max(ghi, g);
  }
  j["gamma_min"] = glo;
  j["gamma_max"] = ghi;
  j["control_dim"] = table.controls.empty() ? 0 : table.controls.front().size();
  return j.dump(2);
}

std::shared_ptr<PolicyTable> load_policy_csv(std::istream& is, const std::string& model_label) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("load_policy_csv: empty input");
  if (line != "x1,x2,gamma,u") {
    throw UsageError("load_policy_csv: unexpected header '" + line + "'");
  }
  auto table = std::make_shared<PolicyTable>();
  table->model = model_label;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double a, b, g, u;
    char c1, c2, c3;
    if (!(row >> a >> c1 >> b >> c2 >> g >> c3 >> u) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw UsageError("load_policy_csv: malformed row '" + line + "'");
    }
    table->states.emplace_back(a, b);
    VectorXd uu(1);
    uu << u;
    table->controls.push_back(uu);
    table->gammas.push_back(g);
  }
  check_not_degenerate(*table);
  build_index(*table);
  return table;
}

}  // namespace isocost
