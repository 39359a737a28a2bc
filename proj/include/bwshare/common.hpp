#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>

namespace bwshare {

// Per-route rate vector.
using AllocationVector = Eigen::VectorXd;

// Documents in transfer per route.
using FlowState = Eigen::VectorXi;

// Maps a nonzero flow state to a feasible rate vector.
using AllocationPolicy = std::function<AllocationVector(const FlowState&)>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Numerical failure: divergence, non-convergence, instability. CLI maps this
// to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation requested outside a potential's precomputed domain box.
class OutsideDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Total population |n| = sum_r n_r.
inline std::int64_t population(const FlowState& n) {
  std::int64_t total = 0;
  for (Eigen::Index r = 0; r < n.size(); ++r) total += n[r];
  return total;
}

// Lexicographic order, usable as a map comparator for flow states.
struct FlowStateLess {
  bool operator()(const FlowState& a, const FlowState& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }
};

}  // namespace bwshare
