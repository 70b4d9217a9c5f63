#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "msbm/common.hpp"
#include "msbm/instance.hpp"
#include "msbm/oracle.hpp"
#include "msbm/preemptive.hpp"
#include "msbm/streaming.hpp"

namespace msbm {

// Dual solution (μ, φ⃗, λ⃗) fitted to a run, per the LP pair for g^S(T) = f(S∪T):
//   stack mode:       μ = f(S), φ_v = C·φ_v^{(|E|)}, λ_e = f(e:S) off the
//                     stack and 0 on it;
//   preemptive mode:  φ_v = C·max_t{f(e:M^{(t)}) : v ∈ e ∈ M^{(t)}};
//   linear mode:      (0, C·φ⃗^{(|E|)}, w⃗).
struct DualCertificate {
  enum class Mode { stack, preemptive, linear };
  Mode mode = Mode::stack;
  double C = 0.0;
  double mu = 0.0;
  std::unordered_map<VertexId, double> phi;  // dual values (slack already applied)
  std::vector<double> lambda;                // per edge index
  std::vector<Key> stack_keys;               // S (admitted set in preemptive mode)

  double phi_of(VertexId v) const {
    auto it = phi.find(v);
    return it == phi.end() ? 0.0 : it->second;
  }
  double dual_cost(const Instance& inst) const;  // μ + Σ_v b_v·φ_v
};

DualCertificate build_dual(const Instance& inst, const RunRecord& run,
                           const SubmodularOracle& oracle);
DualCertificate build_dual(const Instance& inst, const PreemptiveRecord& run,
                           const SubmodularOracle& oracle);
// (0, C·φ⃗, w⃗) for the linear objective; feasible on every edge outside the
// stack (the skip test covers them), which is what the w(OPT∖S) route needs.
DualCertificate build_linear_dual(const Instance& inst,
                                  const std::vector<StackEntry>& stack,
                                  const std::unordered_map<VertexId, double>& potentials,
                                  const std::vector<double>& weights, double eps);

struct ConstraintVerdict {
  int edge_idx;
  double lhs;  // Σ_{v∈e} φ_v
  double rhs;  // λ_e
  bool pass;
};

struct SubsetVerdict {
  bool pass = true;
  std::string mode;  // "exhaustive" or "sufficient"
  // worst subset (exhaustive) or worst edge (sufficient), with the two numbers
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<int> witness_edges;
};

struct FeasibilityReport {
  std::vector<ConstraintVerdict> edge_constraints;
  SubsetVerdict subset;
  int violations = 0;
  bool all_pass() const { return violations == 0 && subset.pass; }
};

enum class SubsetMode { exhaustive, sufficient };

FeasibilityReport check_feasibility(const DualCertificate& cert, const Instance& inst,
                                    const SubmodularOracle& oracle, SubsetMode mode,
                                    int exhaustive_limit = 20);

struct RatioVerdict {
  std::string name;
  double lhs;
  double rhs;
  bool pass;
};

struct RatioReport {
  std::vector<RatioVerdict> checks;
  double combined_factor = 0.0;
  bool all_pass() const;
  const RatioVerdict* find(const std::string& name) const;
};

// Stack-mode primal-dual ratio lemmas, asserted on the realized run:
//   f(M) ≥ ½·Σ_{e∈S} Σ_{v∈e} b_v·w_ev
//   f(M) ≥ (1/2C)·Σ_v b_v·φ_v
//   f(M) ≥ (1−1/C)·μ                    (q = 1 runs only)
//   (2C + C/(C−1))·f(M) ≥ Σ_v b_v·φ_v + μ
RatioReport check_ratios(const Instance& inst, const RunRecord& run,
                         const DualCertificate& cert);

// Preemptive analogues: w(M) = f(M) − f(∅), w(P) ≤ w(M)/(C−1),
// f(M) ≥ (1−1/C)·μ, (2C + C/(C−1))·f(M) ≥ Σ_v φ_v,
// (2C + 2C/(C−1))·f(M) ≥ Σ_v φ_v + μ, and the admission threshold chain.
RatioReport check_ratios(const Instance& inst, const PreemptiveRecord& run,
                         const DualCertificate& cert, const SubmodularOracle& oracle);

// Exhaustive maximum of f over feasible b-matchings. DFS over arrival order
// (include branch first, strict improvements only), so ties break toward the
// lexicographically smallest arrival-index set. Prunes with the
// submodularity-sound bound f(A∪R) ≤ f(A) + Σ_{e∈R} max(0, f_∅(e)).
struct OptResult {
  std::vector<int> edges;
  double value = 0.0;
};
OptResult brute_force_opt(const Instance& inst, const SubmodularOracle& oracle,
                          int limit = 22);

// Maximum-cardinality greedy b-matching; a lower bound on M_max used by the
// resource checks.
int greedy_maximal_size(const Instance& inst);

// Monte-Carlo check of expected dual feasibility, E[Σ_{v∈e} φ_v] ≥ E[λ_e]
// per edge. An edge is flagged when the empirical means violate the
// inequality by more than 3 combined standard errors.
struct McEdgeStat {
  int edge_idx;
  double mean_phi, se_phi;
  double mean_lambda, se_lambda;
  bool flagged;
};

struct McReport {
  int trials = 0;
  bool q_in_lemma_range = true;  // q ∈ [1/(2C+1), 1/2]
  std::vector<McEdgeStat> edges;
  int flagged_count = 0;
};

McReport mc_expected_feasibility(const Instance& inst, const SubmodularOracle& oracle,
                                 double C, double q, int trials, std::uint64_t seed);

// Sub-sampling lemma estimate: B ⊆ base by independent inclusion w.p. q;
// checks mean of h(B) = f(B ∪ anchor) against (1−q)·h(∅) − 3·SE.
struct SubsampleReport {
  int trials = 0;
  double mean = 0.0;
  double se = 0.0;
  double h_empty = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

SubsampleReport subsample_lemma_check(const SubmodularOracle& oracle,
                                      std::span<const Key> base,
                                      std::span<const Key> anchor, double q, int trials,
                                      std::uint64_t seed);

// Report serialization (JSON text): per-constraint arrays {edge, lhs, rhs,
// pass}, ratio block {factor, f_M, dual_cost, pass}, OPT block {value, edges}.
std::string feasibility_report_json(const FeasibilityReport& report);
std::string ratio_report_json(const RatioReport& report, double f_matching,
                              double dual_cost);
std::string opt_result_json(const OptResult& opt);

}  // namespace msbm
