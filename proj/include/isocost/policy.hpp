#pragma once

#include "isocost/idp.hpp"
#include "isocost/model.hpp"
#include "isocost/types.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace isocost {

// Scattered-data feedback policy: every sample is a state with the control
// the solver chose there (and the cost level it was found at). Queries
// interpolate between nearby samples. Not copyable (it carries a live
// fallback counter); share it through shared_ptr.
struct PolicyTable {
  std::string model;
  std::string source;  // free-text provenance (config echo of the producing run)
  std::vector<Vector2d> states;
  std::vector<VectorXd> controls;
  std::vector<double> gammas;
  int merged = 0;  // samples dropped/overwritten as near-duplicates at build time

  // Spatial bucket index, built once by build_policy_table / load.
  double bbox_lo1 = 0.0, bbox_lo2 = 0.0, cell1 = 1.0, cell2 = 1.0;
  int grid1 = 1, grid2 = 1;
  std::vector<std::vector<int>> buckets;

  // Number of queries that fell back to inverse-distance weighting because
  // no surrounding triangle was found among the nearest samples.
  mutable std::atomic<std::uint64_t> fallback_count{0};

  PolicyTable() = default;
  PolicyTable(const PolicyTable&) = delete;
  PolicyTable& operator=(const PolicyTable&) = delete;

  std::size_t size() const { return states.size(); }
};

// Collects the solution's samples into a queryable table. States that repeat
// exactly keep the sample with the lowest cost level (the tighter estimate).
// Requires at least 3 distinct states not all on one line, otherwise
// GeometryError: a degenerate sample cloud cannot support interpolation.
std::shared_ptr<PolicyTable> build_policy_table(const PolicySolution& solution);

// Interpolated control at x. An exact sample hit returns that control. Else
// the k nearest samples are searched for a triangle containing x and the
// control is blended with barycentric weights (nonnegative, summing to 1,
// exact for affine-in-state controls). With no containing triangle the k
// nearest blend by inverse squared distance and the table's fallback counter
// ticks up.
VectorXd policy_query(const PolicyTable& table, const VectorXd& x, int k_candidates = 12);

// Wraps policy_query as a control law sharing ownership of the table.
ControlLaw policy_law(std::shared_ptr<const PolicyTable> table, int k_candidates = 12);

// Columns: x1, x2, gamma, u (scalar-control tables only).
void write_policy_csv(const PolicyTable& table, std::ostream& os);

// Companion metadata (model name, sample count, cost-level range).
std::string policy_metadata_json(const PolicyTable& table);

// Rebuilds a table written by write_policy_csv; model_label may come from the
// metadata file if the caller parsed it.
std::shared_ptr<PolicyTable> load_policy_csv(std::istream& is,
                                             const std::string& model_label = "");

}  // namespace isocost
