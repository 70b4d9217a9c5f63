#pragma once

#include <unordered_map>
#include <vector>

#include "msbm/common.hpp"
#include "msbm/instance.hpp"
#include "msbm/oracle.hpp"
#include "msbm/streaming.hpp"

namespace msbm {

struct PreemptiveParams {
  double C = 2.0;
  double q = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

PreemptiveParams preemptive_monotone_preset();     // C = 2, q = 1, factor 8
PreemptiveParams preemptive_nonmonotone_preset();  // C = 1 + √6/2, q = 1/(2C+1)

// Guarantee factors: 2C + 2C/(C−1) (deterministic monotone, 8 at C=2) and
// (2C² + C)/(C−1) (randomized non-monotone, 5+2√6 at its minimizer).
double preemptive_bound(double C);
double randomized_preemptive_bound(double C);

enum class PreemptiveDecision { skipped, admitted, sampled_out };

// One admitted edge: while in M its effective weight for B(·) is its current
// stream-marginal against M; on preemption the weight freezes at the value it
// contributed to the eviction test, f(e : M^{(t-1)}).
struct AdmittedEdge {
  int edge_idx = -1;
  double weight = 0.0;       // current marginal while alive; frozen after eviction
  bool alive = true;         // e ∈ M
  int evicted_at = -1;       // 1-based arrival index of the evicting edge
  std::vector<int> evicted;  // edge idxs this edge evicted on admission
};

struct PreemptiveRecord {
  PreemptiveParams params;
  bool certify = false;

  std::vector<int> matching;  // final M, arrival-sorted
  double f_matching = 0.0;
  double f_admitted = 0.0;  // f(S), S = every edge ever admitted (certify)
  std::vector<AdmittedEdge> admitted;        // admission order
  std::vector<SkippedEntry> skipped;         // certify mode: λ_e = f(e:S) at arrival
  std::unordered_map<VertexId, double> phi;  // certify: max_t f(e:M^{(t)}) per vertex
  std::size_t peak_matching_size = 0;
  std::uint64_t oracle_queries = 0;

  double matched_weight() const;    // w(M) = Σ_{e∈M} w_e
  double preempted_weight() const;  // w(P)
};

class PreemptiveRun {
 public:
  PreemptiveRun(const Instance& inst, const SubmodularOracle& oracle,
                PreemptiveParams params, bool certify);

  bool done() const { return next_ == inst_->num_edges(); }
  PreemptiveDecision step();
  PreemptiveRecord finish();

  int matching_size() const { return matching_size_; }

 private:
  void refresh_matching_marginals();

  const Instance* inst_;
  const SubmodularOracle* oracle_;
  bool certify_;
  Rng rng_;
  int next_ = 0;
  int matching_size_ = 0;

  std::vector<int> occupant_;      // vertex -> admitted-slot index, or -1
  StreamState matching_state_;     // state over current M, rebuilt on change
  StreamState admitted_state_;     // state over S (certify mode)
  PreemptiveRecord record_;
  std::uint64_t queries_at_start_ = 0;
};

PreemptiveRecord run_preemptive(const Instance& inst, const SubmodularOracle& oracle,
                                const PreemptiveParams& params, bool certify = false);

}  // namespace msbm
