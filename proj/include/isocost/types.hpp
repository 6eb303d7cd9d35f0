#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace isocost {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

// Closed interval [lo, hi], used for control bounds and state domains.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// SplitMix64 finalizer, used to derive independent RNG streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream seed for (master, generation, agent id). Stable across worker counts.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return mix64(master ^ mix64(a ^ mix64(b)));
}

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so
// the outcome is identical for any worker count. workers <= 1 runs inline.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Shortest-round-trip-safe decimal rendering for CSV output.
std::string format_double(double v);

}  // namespace isocost
