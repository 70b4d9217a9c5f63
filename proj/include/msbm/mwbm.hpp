#pragma once

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "msbm/instance.hpp"
#include "msbm/oracle.hpp"
#include "msbm/streaming.hpp"

namespace msbm {

// Stack phase of the linear-objective variant: Algorithm 1 with a linear
// oracle, C = 1+ε/2, q = 1, stopped before the unwind.
struct WeightedStack {
  double eps = 0.0;
  std::vector<StackEntry> stack;                    // push order
  std::unordered_map<VertexId, double> potentials;  // final φ_v^{(|E|)}
  std::vector<double> edge_weights;                 // w_e per instance edge
  RunRecord run;                                    // full certify-mode record

  double weight_of(std::span<const int> edge_idxs) const;
  std::vector<int> stack_edge_idxs() const;
};

WeightedStack run_stack_phase(const Instance& inst, const std::vector<double>& weights,
                              double eps);
WeightedStack run_stack_phase(const Instance& inst, const LinearOracle& oracle, double eps);

// Exact maximum-weight b-matching over the given edges: branch and bound
// with weight-sorted branching and capacity pruning. Parallel stack edges
// are distinct entities; at most one copy of each edge index is chosen.
// Throws TooLargeError beyond the limit.
std::vector<int> exact_mwbm(const Instance& inst, std::span<const int> edge_idxs,
                            std::span<const double> weights, int limit = 24);

struct MwbmReport {
  std::vector<int> matching;  // arrival-sorted
  double weight_matching = 0.0;
  bool exact = true;  // false when the solver limit forced a greedy fallback
  double eps = 0.0;
  double sum_capacity_potentials = 0.0;  // Σ_v b_v·φ_v with φ_v = C·φ_v^{(|E|)}

  // Lower-bound certificates:
  //   w(M) ≥ (1/(2+ε))·Σ_v b_v·φ_v            (potential route)
  bool phi_route_ok = false;
  // dual (0, φ⃗, w⃗) constraint C·Σ_{v∈e} φ_v ≥ w_e on every non-stack edge
  bool dual_feasible_off_stack = false;
  double dual_worst_slack = 0.0;  // min over non-stack edges of lhs − rhs

  // Filled when an optimum is supplied:
  std::optional<double> opt_weight;
  std::optional<double> opt_in_stack_weight;  // w(OPT ∩ S)
  bool stack_route_ok = true;                 // w(M) ≥ w(OPT∩S)
  std::optional<double> ratio;                // w(OPT)/w(M)

  WeightedStack stack;
};

MwbmReport run_mwbm(const Instance& inst, const std::vector<double>& weights, double eps,
                    int exact_limit = 24);
MwbmReport run_mwbm(const Instance& inst, const LinearOracle& oracle, double eps,
                    int exact_limit = 24);

// Attaches the OPT-side certificates given a maximum-weight b-matching of
// the full instance.
void attach_opt(MwbmReport& report, const Instance& inst, std::span<const int> opt_edges);

}  // namespace msbm
